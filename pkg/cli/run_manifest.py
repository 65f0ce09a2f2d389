"""
Run manifests: everything needed to reproduce one CLI invocation.
"""

import os
import platform
import time
from dataclasses import asdict, dataclass, field
from importlib import metadata
from typing import Any, Dict, List, Optional

from cli.cli_config import MANIFEST_NAME
from cli.emitters import write_json
from graphs.metric_graph import MetricGraph, graph_hash

PACKAGE_NAME = 'fatgraph-spectra'


def toolkit_version() -> str:
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return 'unknown'


@dataclass
class RunManifest:
    """
    Provenance record written next to the CSV outputs of one run.

    Attributes:
        command: Subcommand name
        argv: Full argument vector
        graph_hash: SHA-256 of the canonical graph description (None without a graph)
        parameters: Effective numeric parameters after flag overrides
        seeds: Random seeds used by the run
        tolerances: Tolerances requested or achieved per stage
        outputs: Artifact paths, relative to the output directory
        flags: Soft-assertion messages collected during the run
    """

    command: str
    argv: List[str]
    graph_hash: Optional[str] = None
    parameters: Dict[str, Any] = field(default_factory=dict)
    seeds: Dict[str, int] = field(default_factory=dict)
    tolerances: Dict[str, Any] = field(default_factory=dict)
    outputs: List[str] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)
    version: str = field(default_factory=toolkit_version)
    python: str = field(default_factory=platform.python_version)
    started: float = field(default_factory=time.time)
    wall_clock: float = 0.0

    @classmethod
    def start(cls, command: str, argv: List[str], graph: Optional[MetricGraph] = None, **parameters) -> 'RunManifest':
        return cls(command, list(argv), graph_hash(graph) if graph is not None else None, dict(parameters))

    def add_output(self, path: str, outdir: str) -> None:
        self.outputs.append(os.path.relpath(path, outdir))

    def finish(self, outdir: str) -> str:
        """Stamp the wall-clock time and write the manifest; returns its path."""
        self.wall_clock = time.time() - self.started
        return write_json(os.path.join(outdir, MANIFEST_NAME), asdict(self))
