"""Globally adaptive Gauss-Legendre quadrature with interval halving.

Each panel is integrated with a fixed-order Gauss-Legendre rule; the error
estimate of a panel is the difference between the panel rule and the sum of
the rules on its two halves.  The panel with the largest estimate is halved
until the total estimate meets the requested tolerance.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

__all__ = ["QuadratureSpec", "QuadratureError", "integrate", "geometric_breakpoints"]

PANEL_ORDER = 20
ROUNDING_FLOOR = 64 * np.finfo(float).eps


@dataclass(frozen=True)
class QuadratureSpec:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_subdivisions: int = 4000
    # |x| below which the series tail switches to its analytic correction
    series_switch_eps: float = 1e-6

    def __post_init__(self):
        if not self.rel_tol > 0 or not self.abs_tol > 0:
            raise ValueError("rel_tol and abs_tol must be positive")
        if self.max_subdivisions < 1:
            raise ValueError("max_subdivisions must be >= 1")
        if not self.series_switch_eps > 0:
            raise ValueError("series_switch_eps must be positive")

    def halved(self) -> "QuadratureSpec":
        return QuadratureSpec(self.rel_tol / 2, self.abs_tol / 2,
                              2 * self.max_subdivisions, self.series_switch_eps)


class QuadratureError(RuntimeError):
    """Raised when the adaptive rule does not converge.

    Carries the partial value and error estimate reached before giving up.
    """

    def __init__(self, message, value=math.nan, error=math.inf, component=None):
        super().__init__(message)
        self.value = value
        self.error = error
        self.component = component


@lru_cache(maxsize=None)
def _gauss_legendre(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def _panel(f, a, b, order):
    x, w = _gauss_legendre(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = np.asarray(f(mid + half * x), dtype=float)
    if not np.all(np.isfinite(vals)):
        raise FloatingPointError(f"non-finite integrand on [{a}, {b}]")
    return half * float(np.dot(w, vals))


def _split(f, a, b, order):
    m = 0.5 * (a + b)
    left = _panel(f, a, m, order)
    right = _panel(f, m, b, order)
    return left, right


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    breakpoints: Sequence[float],
    spec: QuadratureSpec = QuadratureSpec(),
    *,
    abs_tol: float | None = None,
    order: int = PANEL_ORDER,
) -> tuple[float, float]:
    """Integrate a vectorised ``f`` over ``[breakpoints[0], breakpoints[-1]]``.

    The breakpoints seed the initial panels; they should resolve every scale
    on which the integrand varies, otherwise a panel whose nodes all miss a
    narrow peak reports a spurious zero.  ``abs_tol`` overrides
    ``spec.abs_tol`` for integrals whose natural size is far from one.

    Returns ``(value, error_estimate)`` and raises :class:`QuadratureError`
    when ``spec.max_subdivisions`` halvings do not reach
    ``max(rel_tol * |value|, abs_tol)``.
    """
    atol = spec.abs_tol if abs_tol is None else abs_tol
    pts = [float(p) for p in breakpoints]
    if len(pts) < 2 or any(b <= a for a, b in zip(pts, pts[1:])):
        raise ValueError("breakpoints must be strictly increasing, at least two")

    # heap entries: (-err, counter, a, b, refined, halves); counter breaks ties
    heap = []
    counter = 0
    for a, b in zip(pts, pts[1:]):
        coarse = _panel(f, a, b, order)
        halves = _split(f, a, b, order)
        fine = halves[0] + halves[1]
        heapq.heappush(heap, (-abs(fine - coarse), counter, a, b, fine, halves))
        counter += 1

    def totals():
        value = math.fsum(entry[4] for entry in heap)
        # discretisation estimate plus a floor for rounding in the panel sums
        error = math.fsum(-entry[0] for entry in heap)
        error += ROUNDING_FLOOR * math.fsum(abs(entry[4]) for entry in heap)
        return value, error

    value, error = totals()
    for _ in range(spec.max_subdivisions):
        if error <= max(spec.rel_tol * abs(value), atol):
            return value, error
        _, _, a, b, _, parent_halves = heapq.heappop(heap)
        m = 0.5 * (a + b)
        for (lo, hi), coarse in zip(((a, m), (m, b)), parent_halves):
            halves = _split(f, lo, hi, order)
            refined = halves[0] + halves[1]
            heapq.heappush(heap, (-abs(refined - coarse), counter, lo, hi, refined, halves))
            counter += 1
        value, error = totals()
    if error <= max(spec.rel_tol * abs(value), atol):
        return value, error
    raise QuadratureError(
        f"no convergence after {spec.max_subdivisions} subdivisions "
        f"(value={value!r}, error={error!r})",
        value=value,
        error=error,
    )


def geometric_breakpoints(lo: float, hi: float, first: float) -> list[float]:
    """``lo, lo+first, lo+2*first, lo+4*first, ..., hi``."""
    pts = [lo]
    step = first
    while lo + step < hi:
        pts.append(lo + step)
        step *= 2.0
    pts.append(hi)
    return pts
