"""
CSV and JSON artifacts, written atomically.

Every file is first written to a temporary sibling and then moved over the
target with os.replace, so a reader never sees a half-written table.
"""

import json
import logging
import math
import os
import tempfile
from typing import Any, Iterable, List, Optional, Sequence

import numpy as np

from cli.cli_config import CSV_DIGITS, JSON_INDENT
from manifold.fat_mesh import FatGraphMesh

logger = logging.getLogger(__name__)


def format_field(value: Any) -> str:
    """Render one CSV field; floats use CSV_DIGITS significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return f"{value:.{CSV_DIGITS}g}"
    text = str(value)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def render_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    lines = [','.join(header)]
    lines.extend(','.join(format_field(v) for v in row) for row in rows)
    return '\n'.join(lines) + '\n'


def atomic_write(path: str, text: str) -> None:
    """Write text to path through a temporary file in the same directory."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle, temp_path = tempfile.mkstemp(dir=directory, prefix='.' + os.path.basename(path) + '.', suffix='.tmp')
    try:
        with os.fdopen(handle, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(temp_path, path)
    except BaseException:
        if os.path.exists(temp_path):
            os.remove(temp_path)
        raise


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """
    Write a CSV table atomically.

    Returns:
        The path written
    """
    atomic_write(path, render_csv(header, rows))
    logger.debug(f"Emitter: wrote {path}")
    return path


def _json_default(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def _json_safe(value):
    """Replace nan and inf (not valid JSON) by None, recursively."""
    if isinstance(value, dict):
        return {str(k): _json_safe(v) for k, v in value.items()}
    if isinstance(value, np.ndarray):
        return _json_safe(value.tolist())
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    if isinstance(value, (float, np.floating)) and not math.isfinite(float(value)):
        return None
    return value


def write_json(path: str, data: Any) -> str:
    """Write a JSON document atomically (nan and inf become null)."""
    text = json.dumps(_json_safe(data), indent=JSON_INDENT, default=_json_default, sort_keys=False)
    atomic_write(path, text + '\n')
    logger.debug(f"Emitter: wrote {path}")
    return path


class TableWriter:
    """
    CSV table that grows row by row; each append rewrites the file atomically.

    Used as an event-hook target so a study leaves a readable table behind
    even when it aborts halfway.
    """

    def __init__(self, path: str, header: Sequence[str]):
        self.path = path
        self.header = list(header)
        self.rows: List[Sequence[Any]] = []

    def append(self, rows: Iterable[Sequence[Any]]) -> None:
        self.rows.extend(rows)
        write_csv(self.path, self.header, self.rows)

    def flush(self) -> None:
        write_csv(self.path, self.header, self.rows)


def dump_mesh_csv(mesh: FatGraphMesh, outdir: str, prefix: Optional[str] = None) -> List[str]:
    """
    Node, triangle and region tables of a fat-graph mesh.

    Nodes use the broken numbering; the `conforming` column gives the merged
    index, so interface copies of one node share it.

    Returns:
        Paths of the three CSV files
    """
    prefix = prefix or f"mesh_eps{mesh.eps:g}"
    nodes, triangles, regions = mesh.tables()
    return [
        write_csv(os.path.join(outdir, f"{prefix}_nodes.csv"), ('node', 'region', 'conforming', 'x', 'y'), nodes),
        write_csv(os.path.join(outdir, f"{prefix}_triangles.csv"), ('triangle', 'a', 'b', 'c', 'region'), triangles),
        write_csv(os.path.join(outdir, f"{prefix}_regions.csv"), ('region', 'kind', 'name', 'area'), regions),
    ]
