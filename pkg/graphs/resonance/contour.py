"""
Resonance search in a rectangle of the complex k-plane.

Roots of det S(k) are counted by the argument principle on the rectangle
boundary, isolated by recursive bisection and polished by Newton steps on
log det S(k).
"""

import logging
import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import List, Optional, Tuple

import numpy as np

from graphs.errors import SolverConvergenceError
from graphs.metric_graph import MetricGraph
from graphs.resonance.outgoing import log_derivative, outgoing_system
from graphs.resonance.resonance_config import (BORDERLINE_TOL, CONTOUR_CLEARANCE, CONTOUR_LIFT, COUNT_TOL,
                                               EMBEDDED_TOL, ISOLATION_DIAMETER, MAX_CONTOUR_RETRIES,
                                               NEWTON_MAXITER, NEWTON_TOL, PERTURBATION, QUAD_NODES,
                                               RESIDUAL_ACCEPT, SPLIT_OFFSETS)
from graphs.secular import SecularSystem

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class KWindow:
    """Closed rectangle [re_min, re_max] x [im_min, im_max] in the k-plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"KWindow: degenerate rectangle {self}")

    @classmethod
    def parse(cls, text: str) -> 'KWindow':
        """Parse 're_min,re_max,im_min,im_max'."""
        parts = [float(p) for p in text.split(',')]
        if len(parts) != 4:
            raise ValueError(f"KWindow: expected four comma-separated numbers, got {text!r}")
        return cls(*parts)

    @property
    def diameter(self) -> float:
        return math.hypot(self.re_max - self.re_min, self.im_max - self.im_min)

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    def contains(self, k: complex, tol: float = 0.0) -> bool:
        return (self.re_min - tol <= k.real <= self.re_max + tol
                and self.im_min - tol <= k.imag <= self.im_max + tol)

    def shifted(self, dk: float) -> 'KWindow':
        return KWindow(self.re_min + dk, self.re_max + dk, self.im_min, self.im_max)

    def corners(self) -> List[complex]:
        """Counter-clockwise corners starting bottom-left."""
        return [complex(self.re_min, self.im_min), complex(self.re_max, self.im_min),
                complex(self.re_max, self.im_max), complex(self.re_min, self.im_max)]


@dataclass(frozen=True)
class Resonance:
    """
    Root of the outgoing secular determinant.

    kind is 'embedded' (|Im lambda| <= EMBEDDED_TOL), 'resonance', or
    'borderline' when |Im lambda| is too small to decide.
    """

    k: complex
    multiplicity: int
    residual: float
    theta_used: Optional[complex] = None
    kind: str = 'resonance'
    method: str = 'secular'

    @property
    def lam(self) -> complex:
        return self.k * self.k


def classify(k: complex) -> str:
    im_lambda = abs((k * k).imag)
    if im_lambda <= EMBEDDED_TOL:
        return 'embedded'
    if im_lambda <= BORDERLINE_TOL:
        return 'borderline'
    return 'resonance'


class _ContourTrouble(Exception):
    """The contour passes too close to a root; the count is unreliable."""


@lru_cache(maxsize=4)
def _gauss_legendre(n: int) -> Tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


class ArgumentPrincipleSolver:
    """
    Counts and isolates roots of det S(k) for one graph.

    Search windows whose top edge is near the real axis are lifted to
    Im k = +lift before counting: the outgoing determinant has no roots in the
    open upper half-plane, so the count is unchanged while embedded roots stay
    off the contour.
    """

    def __init__(self, system: SecularSystem, nodes: int = QUAD_NODES, lift: float = CONTOUR_LIFT):
        self.system = system
        self.nodes = nodes
        self.lift = lift

    def lifted(self, rect: KWindow) -> KWindow:
        if rect.im_max > -self.lift:
            return replace(rect, im_max=self.lift)
        return rect

    def count(self, rect: KWindow) -> int:
        """
        Number of roots inside rect, counted with multiplicity.

        Raises:
            _ContourTrouble: near-singular node or non-integer count
        """
        t, w = _gauss_legendre(self.nodes)
        corners = rect.corners()
        total = 0.0 + 0.0j
        for start, end in zip(corners, corners[1:] + corners[:1]):
            half = 0.5 * (end - start)
            points = start + half * (t + 1.0)
            s = np.linalg.svd(self.system.matrices(points), compute_uv=False)
            if np.any(s[:, -1] < CONTOUR_CLEARANCE * s[:, 0]):
                raise _ContourTrouble()
            try:
                total += half * np.sum(w * log_derivative(self.system, points))
            except np.linalg.LinAlgError as e:
                raise _ContourTrouble() from e
        value = total / (2j * math.pi)
        nearest = round(value.real)
        if abs(value - nearest) > COUNT_TOL:
            raise _ContourTrouble()
        return int(nearest)

    def count_with_retries(self, rect: KWindow) -> Tuple[int, KWindow]:
        """Count, enlarging the rectangle slightly after each failure."""
        size = max(rect.re_max - rect.re_min, rect.im_max - rect.im_min)
        for attempt in range(MAX_CONTOUR_RETRIES + 1):
            shift = PERTURBATION * size * attempt
            trial = KWindow(rect.re_min - 0.7 * shift, rect.re_max + 1.1 * shift,
                            rect.im_min - 0.9 * shift, rect.im_max + (0.0 if rect.im_max >= 0 else 0.3 * shift))
            try:
                return self.count(trial), trial
            except _ContourTrouble:
                logger.debug(f"ArgumentPrinciple: root near contour of {trial}, perturbing (attempt {attempt + 1})")
        raise SolverConvergenceError(f"ArgumentPrinciple: root on contour of {rect} after "
                                     f"{MAX_CONTOUR_RETRIES} perturbations")

    def newton(self, start: complex, multiplicity: int, rect: KWindow) -> Optional[complex]:
        """Newton on log det S; None if it leaves rect or stalls."""
        k = start
        for _ in range(NEWTON_MAXITER):
            try:
                g = log_derivative(self.system, [k])[0]
            except np.linalg.LinAlgError:
                return k
            if not np.isfinite(g):
                return k
            if g == 0:
                return None
            step = -multiplicity / g
            k = k + step
            if not rect.contains(k, tol=1e-12):
                return None
            if abs(step) <= NEWTON_TOL:
                return k
        return None

    def isolate(self, rect: KWindow, count: int, depth: int = 0) -> List[Tuple[complex, int]]:
        """Recursive bisection until each piece holds one root or is small enough."""
        if count == 0:
            return []
        if count == 1:
            root = self.newton(rect.center, 1, rect)
            if root is not None:
                return [(root, 1)]
        if rect.diameter < ISOLATION_DIAMETER:
            root = self.newton(rect.center, count, rect)
            if root is None:
                raise SolverConvergenceError(f"ArgumentPrinciple: Newton failed in {rect}")
            return [(root, count)]

        for offset in SPLIT_OFFSETS:
            halves = self._split(rect, 0.5 + offset)
            try:
                counts = [self.count(h) for h in halves]
            except _ContourTrouble:
                continue
            if sum(counts) != count:
                continue
            roots = []
            for half, n in zip(halves, counts):
                roots.extend(self.isolate(half, n, depth + 1))
            return roots
        raise SolverConvergenceError(f"ArgumentPrinciple: count mismatch while bisecting {rect}")

    @staticmethod
    def _split(rect: KWindow, fraction: float) -> Tuple[KWindow, KWindow]:
        if rect.re_max - rect.re_min >= rect.im_max - rect.im_min:
            cut = rect.re_min + fraction * (rect.re_max - rect.re_min)
            return replace(rect, re_max=cut), replace(rect, re_min=cut)
        cut = rect.im_min + fraction * (rect.im_max - rect.im_min)
        return replace(rect, im_max=cut), replace(rect, im_min=cut)


def residual_of(system: SecularSystem, k: complex) -> float:
    """sigma_min / sigma_max of S(k)."""
    s = np.linalg.svd(system.matrix(k), compute_uv=False)
    return float(s[-1] / s[0])


def find_resonances(graph: MetricGraph, window: KWindow, theta_used: Optional[complex] = None,
                    nodes: int = QUAD_NODES) -> List[Resonance]:
    """
    Resonances and embedded eigenvalues with k in the window.

    Args:
        graph: Admissible graph with at least one lead
        window: Rectangle with re_min > 0 and im_max <= 0
        theta_used: Dilation parameter recorded on the results
        nodes: Gauss-Legendre nodes per side

    Returns:
        Resonances sorted by Re k, then Im k

    Raises:
        ValueError: window reaches k = 0 or the upper half-plane
        SolverConvergenceError: contour could not be placed, bisection or
            Newton failed, or the refined roots do not match the count
    """
    if window.re_min <= 0:
        raise ValueError("find_resonances: window must avoid k = 0 (re_min > 0)")
    if window.im_max > 0:
        raise ValueError("find_resonances: window must lie in the closed lower half-plane")
    system = outgoing_system(graph)
    solver = ArgumentPrincipleSolver(system, nodes)

    total, rect = solver.count_with_retries(solver.lifted(window))
    logger.info(f"ArgumentPrinciple: {total} roots enclosed by {rect}")
    roots = solver.isolate(rect, total)
    if sum(m for _, m in roots) != total:
        raise SolverConvergenceError("ArgumentPrinciple: count mismatch after refinement")

    results = []
    for k, multiplicity in roots:
        if abs(k.imag) < 1e-14:
            k = complex(k.real, 0.0)
        if not window.contains(k, tol=1e-8):
            continue
        residual = residual_of(system, k)
        if residual > RESIDUAL_ACCEPT:
            raise SolverConvergenceError(f"ArgumentPrinciple: residual {residual:.2e} at k = {k}")
        kind = classify(k)
        if kind == 'borderline':
            logger.warning(f"ArgumentPrinciple: |Im lambda| = {abs((k * k).imag):.2e} at k = {k}; "
                           f"embedded eigenvalue or narrow resonance")
        results.append(Resonance(k, multiplicity, residual, theta_used, kind))
    results.sort(key=lambda r: (round(r.k.real, 8), r.k.imag))
    return results
