"""
Container for computed spectra of graphs and fat graphs.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

METHODS = ('secular', 'fd-oracle', 'fem')


@dataclass
class SpectralResult:
    """
    Ordered eigenvalues with multiplicities.

    Attributes:
        eigenvalues: (lambda, multiplicity) pairs, nondecreasing
        method: 'secular', 'fd-oracle' or 'fem'
        eigenfunctions: Optional GraphFunctions (graph methods)
        vectors: Optional discrete eigenvectors as columns, one per counted eigenvalue
        mass: Optional mass matrix defining the inner product of `vectors`
        residuals: Optional relative residual per column of `vectors`
        flags: Warnings raised while computing the result
    """

    eigenvalues: List[Tuple[float, int]]
    method: str
    eigenfunctions: Optional[list] = None
    vectors: Optional[np.ndarray] = None
    mass: Optional[object] = None
    residuals: Optional[np.ndarray] = None
    flags: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"SpectralResult: unknown method {self.method!r}")
        previous = -np.inf
        for value, multiplicity in self.eigenvalues:
            if multiplicity < 1:
                raise ValueError("SpectralResult: multiplicities must be >= 1")
            if value < previous:
                raise ValueError("SpectralResult: eigenvalues must be nondecreasing")
            previous = value

    def values(self) -> np.ndarray:
        """Eigenvalues repeated according to multiplicity."""
        return np.array([v for v, m in self.eigenvalues for _ in range(m)], dtype=float)

    def count(self) -> int:
        return int(sum(m for _, m in self.eigenvalues))

    def distinct(self) -> np.ndarray:
        return np.array([v for v, _ in self.eigenvalues], dtype=float)

    def below(self, limit: float) -> 'SpectralResult':
        """Eigenvalues <= limit; vectors are kept only when they line up."""
        kept = [(v, m) for v, m in self.eigenvalues if v <= limit]
        n = sum(m for _, m in kept)
        vectors = self.vectors[:, :n] if self.vectors is not None else None
        residuals = self.residuals[:n] if self.residuals is not None else None
        functions = self.eigenfunctions[:n] if self.eigenfunctions is not None else None
        return SpectralResult(kept, self.method, functions, vectors, self.mass, residuals, list(self.flags))

    def rows(self) -> List[Tuple[int, float, int]]:
        """(index, lambda, multiplicity) rows, index counting from 1 with multiplicity."""
        rows, index = [], 1
        for value, multiplicity in self.eigenvalues:
            rows.append((index, value, multiplicity))
            index += multiplicity
        return rows
