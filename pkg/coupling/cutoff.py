"""
Smooth cutoff used by the vertex correction of the averaging map.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Cutoff:
    """
    Cubic smoothstep rho(r) = 1 - 3s^2 + 2s^3, s = clamp(2r/l0, 0, 1).

    rho(0) = 1, rho(r) = 0 for r >= l0/2, and rho'(0) = rho'(l0/2) = 0.
    """

    l0: float

    def __post_init__(self):
        if not self.l0 > 0:
            raise ValueError(f"Cutoff: l0 = {self.l0} must be positive")

    def _s(self, r):
        return np.clip(2.0 * np.asarray(r, dtype=float) / self.l0, 0.0, 1.0)

    def __call__(self, r):
        s = self._s(r)
        return 1.0 - 3.0 * s ** 2 + 2.0 * s ** 3

    def derivative(self, r):
        s = self._s(r)
        return (-6.0 * s + 6.0 * s ** 2) * 2.0 / self.l0

    @property
    def support(self) -> float:
        return 0.5 * self.l0
