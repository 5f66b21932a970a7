"""Decay exponents, two-parameter Novikov-Shubin numbers and their algebra.

Heat-trace decay theta(t) ~ t^{-beta} gives the exponent alpha = 2 beta.
On top of that live the combinatorial rules: the product (Kunneth) formula
for NS profiles, Hodge duality on the Heisenberg example, the
Bass-Guivarc'h growth degree, and a comparator for dilatational equivalence
of sampled two-parameter functions.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .heat_kernel import DomainError, HeatTraceSample, ScaledMetricPoint, eval_theta0, eval_theta1
from .quadrature import QuadratureSpec

__all__ = [
    "INF",
    "InfPlus",
    "ScalingPath",
    "NSProfile",
    "DecayEstimate",
    "TwoParamFunction",
    "EquivalenceResult",
    "UnsupportedCaseError",
    "worker_count",
    "default_t_grid",
    "heat_trace_curve",
    "fit_decay_exponent",
    "alpha_from_beta",
    "alpha_formula",
    "two_param_alpha",
    "product_alpha",
    "product_sdf_pointwise",
    "growth_degree",
    "dilatational_equiv_check",
    "hodge_dual_alpha",
]


class UnsupportedCaseError(ValueError):
    """The input falls outside the documented limitations of a rule."""


class InfPlus:
    """The absorbing value infinity-plus for out-of-range degrees.

    Adding a finite number or scaling by a non-negative factor leaves it
    unchanged; it compares greater than every real number.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __str__(self):
        return "inf"

    def __add__(self, other):
        return self

    __radd__ = __add__

    def __mul__(self, other):
        if other < 0:
            raise ValueError("INF can only be scaled by non-negative factors")
        return self

    __rmul__ = __mul__

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("InfPlus")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True

    def __reduce__(self):
        return (InfPlus, ())


INF = InfPlus()


def worker_count() -> int:
    """Parallel workers, capped by the TPNSI_THREADS environment variable."""
    cap = os.environ.get("TPNSI_THREADS")
    n = os.cpu_count() or 1
    if cap:
        n = min(n, max(1, int(cap)))
    return n


def _pmap(fn, items):
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# --------------------------------------------------------------------------
# data types
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingPath:
    """mu(lambda) = lambda^r, nu(lambda) = lambda^s."""

    r: float
    s: float

    def __post_init__(self):
        if self.r < 0 or self.s < 0 or (self.r == 0 and self.s == 0):
            raise ValueError("need r >= 0, s >= 0, not both zero")

    @classmethod
    def from_zeta(cls, zeta: float) -> "ScalingPath":
        return cls(1.0, 1.0 + zeta)

    @property
    def zeta(self) -> float:
        return self.s - 1.0


@dataclass
class NSProfile:
    """Per-degree Novikov-Shubin exponents and L2-Betti numbers of a space."""

    top_degree: int
    alpha: dict = field(default_factory=dict)
    betti: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.top_degree < 0:
            raise ValueError("top_degree must be >= 0")
        for k, b in self.betti.items():
            if b < 0:
                raise ValueError(f"negative L2-Betti number in degree {k}")
        for k, a in self.alpha.items():
            if a is not INF and not a > 0:
                raise ValueError(f"alpha in degree {k} must be positive or INF")

    def alpha_at(self, k: int):
        if 0 <= k < self.top_degree:
            return self.alpha.get(k, INF)
        return INF

    def betti_at(self, k: int) -> float:
        return self.betti.get(k, 0.0)

    def dumps(self) -> str:
        lines = [f"top_degree = {self.top_degree}"]
        for k in sorted(set(self.alpha) | set(self.betti)):
            if k in self.alpha:
                a = self.alpha[k]
                lines.append(f"degree.{k}.alpha = {'inf' if a is INF else repr(float(a))}")
            if k in self.betti:
                lines.append(f"degree.{k}.betti = {float(self.betti[k])!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> "NSProfile":
        top = None
        alpha, betti = {}, {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = (part.strip() for part in line.partition("="))
            if not sep:
                raise ValueError(f"line {lineno}: expected 'key = value'")
            if key == "top_degree":
                top = int(value)
                continue
            parts = key.split(".")
            if len(parts) != 3 or parts[0] != "degree" or parts[2] not in ("alpha", "betti"):
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            k = int(parts[1])
            if parts[2] == "alpha":
                alpha[k] = INF if value.lower() == "inf" else float(value)
            else:
                betti[k] = float(value)
        if top is None:
            top = max(alpha, default=-1) + 1
        return cls(top, alpha, betti)

    def __eq__(self, other):
        if not isinstance(other, NSProfile):
            return NotImplemented
        return (self.top_degree, self.alpha, self.betti) == (other.top_degree, other.alpha, other.betti)


@dataclass(frozen=True)
class DecayEstimate:
    """Fitted decay exponent of theta ~ t^{-beta}.

    ``beta_hat`` is the minimum secant slope over the sliding windows (the
    liminf convention); ``beta_ls`` is the least-squares slope over the last
    two decades, the smoother estimator used for reporting.
    """

    beta_hat: float
    window_slopes: tuple
    max_residual: float
    beta_ls: float


@dataclass(frozen=True)
class TwoParamFunction:
    mu_grid: np.ndarray
    nu_grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        mu = np.asarray(self.mu_grid, dtype=float)
        nu = np.asarray(self.nu_grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (mu.size, nu.size):
            raise ValueError("values must have shape (len(mu_grid), len(nu_grid))")
        if np.any(mu <= 0) or np.any(nu <= 0):
            raise ValueError("grids must be positive")
        object.__setattr__(self, "mu_grid", mu)
        object.__setattr__(self, "nu_grid", nu)
        object.__setattr__(self, "values", vals)

    def is_monotone(self) -> bool:
        v = self.values
        return bool(np.all(np.diff(v, axis=0) >= 0) and np.all(np.diff(v, axis=1) >= 0))


@dataclass(frozen=True)
class EquivalenceResult:
    admissible: bool
    C: float | None
    violation: tuple | None = None


# --------------------------------------------------------------------------
# curves and fits
# --------------------------------------------------------------------------


def default_t_grid(t_min: float = 1e3, t_max: float = 1e7, points: int = 41) -> np.ndarray:
    return np.logspace(math.log10(t_min), math.log10(t_max), points)


def _check_zeta(degree: int, zeta: float):
    if degree in (0, 2):
        if not zeta >= -0.5:
            raise DomainError(f"degree {degree} requires zeta >= -1/2, got {zeta}")
    elif degree == 1:
        if not -0.5 < zeta < 1.0:
            raise DomainError(f"degree 1 requires -1/2 < zeta < 1, got {zeta}")
    else:
        raise DomainError(f"degree must be 0, 1 or 2, got {degree}")


def heat_trace_curve(
    degree: int,
    zeta: float,
    t_grid: Sequence[float],
    quad: QuadratureSpec = QuadratureSpec(),
    *,
    variant: str = "exact",
) -> list[HeatTraceSample]:
    """Samples of theta_degree(t, t^zeta); degree 2 is served by degree 0."""
    _check_zeta(degree, zeta)
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size > 1 and np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be increasing")
    if degree == 1:
        def fn(t):
            return eval_theta1(ScaledMetricPoint.on_path(t, zeta), quad, variant=variant)
    else:
        def fn(t):
            return eval_theta0(ScaledMetricPoint.on_path(t, zeta), quad)
    return _pmap(fn, t_grid)


def fit_decay_exponent(
    samples: Sequence[HeatTraceSample] | tuple[Sequence[float], Sequence[float]],
    window_decades: float = 1.0,
    *,
    offset: float = 0.0,
) -> DecayEstimate:
    """Estimate beta in theta ~ t^{-beta} from samples at increasing t.

    ``samples`` is a list of :class:`HeatTraceSample` or a pair of arrays
    ``(t, theta)``.  ``offset`` is subtracted from theta first (an L2-Betti
    contribution, zero for the Heisenberg traces).
    """
    if isinstance(samples, tuple) and len(samples) == 2 and not isinstance(samples[0], HeatTraceSample):
        t = np.asarray(samples[0], dtype=float)
        theta = np.asarray(samples[1], dtype=float)
    else:
        t = np.array([s.point.t for s in samples], dtype=float)
        theta = np.array([s.theta for s in samples], dtype=float)
    theta = theta - offset
    if t.size < 8:
        raise ValueError(f"need at least 8 samples, got {t.size}")
    if np.any(theta <= 0):
        raise DomainError("theta minus offset must be positive")
    lt, lth = np.log10(t), np.log10(theta)
    if np.any(np.diff(lt) <= 0):
        raise ValueError("samples must be ordered by increasing t")
    if lt[-1] - lt[0] < 3.0 - 1e-9:
        raise ValueError("samples must span at least three decades")

    slopes = []
    for j in range(lt.size - 1, 0, -1):
        i = np.searchsorted(lt, lt[j] - window_decades + 1e-9, side="right") - 1
        if i < 0:
            break
        slopes.append(-(lth[j] - lth[i]) / (lt[j] - lt[i]))

    tail = lt >= lt[-1] - 2.0 - 1e-9
    coef = np.polyfit(lt[tail], lth[tail], 1)
    resid = lth[tail] - np.polyval(coef, lt[tail])
    return DecayEstimate(
        beta_hat=float(min(slopes)),
        window_slopes=tuple(float(s) for s in slopes),
        max_residual=float(np.max(np.abs(resid))),
        beta_ls=float(-coef[0]),
    )


def alpha_from_beta(beta: float) -> float:
    """theta(t) ~ t^{-alpha/2}  <=>  alpha."""
    if beta < 0:
        raise DomainError("beta must be non-negative")
    return 2.0 * beta


def alpha_formula(degree: int, zeta: float) -> float:
    """Closed-form exponents of the Heisenberg group along (lambda, lambda^{1+zeta})."""
    _check_zeta(degree, zeta)
    return 2.0 - 2.0 * zeta if degree == 1 else 4.0 + 2.0 * zeta


def hodge_dual_alpha(alpha_0_value: float) -> float:
    """alpha_2 = alpha_0 on the three-dimensional Heisenberg example."""
    return alpha_0_value


def two_param_alpha(
    degree: int,
    path: ScalingPath,
    t_grid: Sequence[float] | None = None,
    quad: QuadratureSpec = QuadratureSpec(),
    *,
    estimator: str = "ls",
    variant: str = "exact",
) -> float:
    """alpha_degree of the Heisenberg group along the power path (lambda, lambda^s).

    ``estimator`` selects the least-squares slope (``"ls"``) or the liminf
    over sliding windows (``"liminf"``).
    """
    if path.r != 1.0:
        raise DomainError("only paths with r = 1 are supported")
    zeta = path.zeta
    _check_zeta(degree, zeta)
    if t_grid is None:
        t_grid = default_t_grid()
    src = 0 if degree == 2 else degree
    est = fit_decay_exponent(heat_trace_curve(src, zeta, t_grid, quad, variant=variant))
    if estimator == "ls":
        beta = est.beta_ls
    elif estimator == "liminf":
        beta = est.beta_hat
    else:
        raise ValueError(f"unknown estimator {estimator!r}")
    alpha = alpha_from_beta(beta)
    return hodge_dual_alpha(alpha) if degree == 2 else alpha


# --------------------------------------------------------------------------
# products and growth
# --------------------------------------------------------------------------


def product_alpha(k: int, F: NSProfile, B: NSProfile, path: ScalingPath):
    """alpha_k of a product F x B along (lambda^r, lambda^s).

    min over 0 <= p <= k of  s alpha_p(F) + r alpha_{k-p}(B)  and
    s alpha_{p+1}(F) + r alpha_{k-p}(B),  with F scaled by nu = lambda^s.
    Only valid when every L2-Betti number vanishes.
    """
    for name, prof in (("F", F), ("B", B)):
        if any(b != 0 for b in prof.betti.values()):
            raise UnsupportedCaseError(f"profile {name} has non-zero L2-Betti numbers")
    if k < 0:
        raise ValueError("degree must be non-negative")
    r, s = path.r, path.s
    best = INF
    for p in range(k + 1):
        base = r * B.alpha_at(k - p)
        for fib in (F.alpha_at(p), F.alpha_at(p + 1)):
            cand = s * fib + base
            if cand < best:
                best = cand
    return best


def product_sdf_pointwise(
    k: int,
    F_sdf: Sequence[Callable[[float], float]],
    B_sdf: Sequence[Callable[[float], float]],
    mu: float,
    nu: float,
) -> float:
    """sum_{p+q=k} F_p(nu) B_q(mu); missing degrees count as zero."""
    total = []
    for p in range(k + 1):
        q = k - p
        if p < len(F_sdf) and q < len(B_sdf):
            total.append(F_sdf[p](nu) * B_sdf[q](mu))
    return math.fsum(total)


def growth_degree(graded_ranks: Iterable[tuple[int, int]]) -> int:
    """Bass-Guivarc'h: sum of weight times rank over the graded pieces."""
    total = 0
    for weight, rank in graded_ranks:
        if rank < 0 or weight < 1:
            raise ValueError("weights must be >= 1 and ranks >= 0")
        total += weight * rank
    return total


# --------------------------------------------------------------------------
# dilatational equivalence
# --------------------------------------------------------------------------


def _grid_ratio(grid):
    if grid.size < 2:
        raise ValueError("grids need at least two points")
    ratios = grid[1:] / grid[:-1]
    if not np.allclose(ratios, ratios[0], rtol=1e-9, atol=0):
        raise ValueError("grids must be log-uniform")
    return float(ratios[0])


def dilatational_equiv_check(
    G: TwoParamFunction,
    H: TwoParamFunction,
    C_candidates: Sequence[float],
) -> EquivalenceResult:
    """Smallest C among the candidates with G(x/C) <= H(x) <= G(Cx) on the grid.

    Both grids must be log-uniform with one common ratio rho and every
    candidate an integer power rho^j, so shifted lookups land on grid
    points.  Each one-sided inequality is checked wherever its shifted
    lookup is defined; this keeps the verdict symmetric in (G, H).
    """
    if not (np.array_equal(G.mu_grid, H.mu_grid) and np.array_equal(G.nu_grid, H.nu_grid)):
        raise ValueError("G and H must share their grids")
    rho = _grid_ratio(G.mu_grid)
    if not math.isclose(rho, _grid_ratio(G.nu_grid), rel_tol=1e-9):
        raise ValueError("mu and nu grids must share one ratio")
    shifts = []
    for C in C_candidates:
        j = math.log(C) / math.log(rho)
        if C < 1 or abs(j - round(j)) > 1e-6:
            raise ValueError(f"candidate {C} is not a power rho^j, j >= 0, of the grid ratio {rho}")
        shifts.append((C, int(round(j))))
    if any(b[1] <= a[1] for a, b in zip(shifts, shifts[1:])):
        raise ValueError("candidates must be increasing")

    g, h = G.values, H.values
    nm, nn = g.shape
    violation = None
    for C, j in shifts:
        violation = None
        if j >= min(nm, nn):
            return EquivalenceResult(True, C)
        # lower: G(x - j) <= H(x) for x >= j; upper: H(x) <= G(x + j) for x + j in range
        low_bad = np.argwhere(g[: nm - j, : nn - j] > h[j:, j:])
        up_bad = np.argwhere(h[: nm - j, : nn - j] > g[j:, j:])
        if low_bad.size == 0 and up_bad.size == 0:
            return EquivalenceResult(True, C)
        if low_bad.size:
            i, l = low_bad[0]
            violation = ("lower", float(G.mu_grid[i + j]), float(G.nu_grid[l + j]))
        else:
            i, l = up_bad[0]
            violation = ("upper", float(G.mu_grid[i]), float(G.nu_grid[l]))
    return EquivalenceResult(False, None, violation)
