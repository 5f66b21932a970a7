"""Anisotropic Laplacians on finite Heisenberg quotients.

The group is (Z/n)^3 with (x,y,z)(x',y',z') = (x+x', y+y', z+z'+x y').
Right multiplication by X = (1,0,0), Y = (0,1,0), Z = (0,0,1) gives the
Cayley graph; base edges (X, Y) carry weight mu^-2 and fibre edges (Z)
weight nu^-2.  Normalised eigenvalue counts of the resulting Laplacian are
the finite stand-in for the von Neumann spectral density function of the
continuous group; they are a surrogate, not the trace itself.

Since Z is central, characters e^{2 pi i k z / n} block-diagonalise the
operator, and a Fourier transform in y reduces each character to n
magnetic-translation (Harper) blocks of size n.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg

from .asymptotics import TwoParamFunction, _pmap

__all__ = [
    "DENSE_CAP",
    "HARPER_CAP",
    "WINDOW_C1",
    "WINDOW_C2",
    "UnsupportedCombinationError",
    "ResourceCapError",
    "WindowError",
    "HeisenbergQuotient",
    "AnisotropicLaplacian",
    "CountingResult",
    "PathSlope",
    "LatticeSlopeReport",
    "build_heisenberg_quotient",
    "anisotropic_laplacian",
    "harper_blocks",
    "harper_spectrum_pairs",
    "harper_spectrum",
    "counting_function",
    "two_param_grid",
    "write_grid_csv",
    "rescale_lemma_check",
    "perturb_sandwich_check",
    "lattice_alpha_along_path",
]

DENSE_CAP = 12
HARPER_CAP = 64
# fit window [WINDOW_C1 / n, WINDOW_C2] in lambda, tuned once on n = 24, zeta = 0
WINDOW_C1 = 3.5 * math.pi
WINDOW_C2 = 2.5
TIE_REL = 1e-12
GENERATORS = ("X", "Y", "Z")


class UnsupportedCombinationError(ValueError):
    pass


class ResourceCapError(RuntimeError):
    pass


class WindowError(ValueError):
    pass


@dataclass(frozen=True)
class HeisenbergQuotient:
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be >= 2")

    @property
    def size(self) -> int:
        return self.n**3

    def index(self, g) -> int:
        x, y, z = (v % self.n for v in g)
        return (x * self.n + y) * self.n + z

    def element(self, i: int) -> tuple[int, int, int]:
        n = self.n
        return i // (n * n), (i // n) % n, i % n

    def elements(self):
        return [self.element(i) for i in range(self.size)]

    def mul(self, g, h):
        n = self.n
        return ((g[0] + h[0]) % n, (g[1] + h[1]) % n, (g[2] + h[2] + g[0] * h[1]) % n)

    def inverse(self, g):
        n = self.n
        return ((-g[0]) % n, (-g[1]) % n, (g[0] * g[1] - g[2]) % n)

    identity = (0, 0, 0)

    def generator(self, name: str):
        return {"X": (1, 0, 0), "Y": (0, 1, 0), "Z": (0, 0, 1)}[name]

    @lru_cache(maxsize=None)
    def right_table(self, name: str) -> np.ndarray:
        """table[i] = index of element(i) * S."""
        s = self.generator(name)
        idx = np.arange(self.size)
        x, y, z = idx // (self.n**2), (idx // self.n) % self.n, idx % self.n
        x2, y2, z2 = (x + s[0]) % self.n, (y + s[1]) % self.n, (z + s[2] + x * s[1]) % self.n
        return (x2 * self.n + y2) * self.n + z2


def build_heisenberg_quotient(n: int) -> HeisenbergQuotient:
    return HeisenbergQuotient(n)


@dataclass(frozen=True)
class AnisotropicLaplacian:
    """mu^-2 (L_X + L_Y) + nu^-2 L_Z, optionally with perturbed edge weights.

    ``operator`` is a dense float array, or with ``exact=True`` a dict
    {(row, col): Fraction} of the non-zero entries.  ``perturbation`` maps
    each generator to an array of per-edge factors, edge (g, gS) at
    position index(g).
    """

    q: HeisenbergQuotient
    mu: float
    nu: float
    operator: object
    perturbation: dict | None = None
    K: float = 1.0
    exact: bool = False

    @property
    def n(self) -> int:
        return self.q.n

    @property
    def norm_bound(self) -> float:
        """Maximum absolute row sum, an upper bound for the spectral norm."""
        if self.exact:
            rows = {}
            for (r, _), v in self.operator.items():
                rows[r] = rows.get(r, 0) + abs(v)
            return float(max(rows.values()))
        return float(np.max(np.sum(np.abs(self.operator), axis=1)))

    @property
    def tie_tol(self) -> float:
        return TIE_REL * self.norm_bound


def _edge_weights(q, mu, nu, perturbation):
    base = {"X": mu**-2, "Y": mu**-2, "Z": nu**-2}
    out = {}
    for s in GENERATORS:
        w = np.full(q.size, float(base[s]))
        if perturbation is not None:
            w = w * perturbation[s]
        out[s] = w
    return out


def random_perturbation(q: HeisenbergQuotient, K: float, seed: int) -> dict:
    """Per-edge factors drawn uniformly from [1/K, K]."""
    if K < 1:
        raise ValueError("K must be >= 1")
    rng = np.random.default_rng(seed)
    return {s: rng.uniform(1.0 / K, K, size=q.size) for s in GENERATORS}


def anisotropic_laplacian(
    q: HeisenbergQuotient,
    mu,
    nu,
    perturbation: dict | None = None,
    *,
    K: float | None = None,
    exact: bool = False,
) -> AnisotropicLaplacian:
    if not (mu > 0 and nu > 0):
        raise ValueError("mu and nu must be positive")
    if perturbation is not None:
        if exact:
            raise UnsupportedCombinationError("exact mode does not take perturbations")
        if K is None:
            raise ValueError("give the bound K of the perturbation factors")
        lo = min(float(np.min(f)) for f in perturbation.values())
        hi = max(float(np.max(f)) for f in perturbation.values())
        if lo < 1.0 / K * (1 - 1e-12) or hi > K * (1 + 1e-12):
            raise ValueError(f"perturbation factors leave [1/K, K] = [{1 / K}, {K}]")
    if exact:
        mu, nu = Fraction(mu), Fraction(nu)
        ops = {}
        base = {"X": 1 / mu**2, "Y": 1 / mu**2, "Z": 1 / nu**2}
        for s in GENERATORS:
            table = q.right_table(s)
            w = base[s]
            for i in range(q.size):
                j = int(table[i])
                for r, c, v in ((i, i, w), (j, j, w), (i, j, -w), (j, i, -w)):
                    ops[(r, c)] = ops.get((r, c), 0) + v
        ops = {k: v for k, v in ops.items() if v != 0}
        return AnisotropicLaplacian(q, mu, nu, ops, None, 1.0, True)

    weights = _edge_weights(q, float(mu), float(nu), perturbation)
    A = np.zeros((q.size, q.size))
    idx = np.arange(q.size)
    for s in GENERATORS:
        j = q.right_table(s)
        w = weights[s]
        # quadratic form sum_g w (f(g) - f(gS))^2
        np.add.at(A, (idx, idx), w)
        np.add.at(A, (j, j), w)
        np.add.at(A, (idx, j), -w)
        np.add.at(A, (j, idx), -w)
    return AnisotropicLaplacian(q, float(mu), float(nu), A, perturbation, 1.0 if K is None else K)


# --------------------------------------------------------------------------
# Harper reduction
# --------------------------------------------------------------------------


def _harper_base(n, k, p):
    """Unweighted base part (2I - T - T^T) + diag(2 - 2cos(2 pi (k x + p)/n))."""
    x = np.arange(n)
    T = np.roll(np.eye(n), 1, axis=1)
    return 2 * np.eye(n) - T - T.T + np.diag(2 - 2 * np.cos(2 * np.pi * (k * x + p) / n))


def harper_blocks(op_or_q, mu=None, nu=None) -> list[np.ndarray]:
    """The n^2 blocks, indexed by central character k and y-momentum p."""
    if isinstance(op_or_q, AnisotropicLaplacian):
        if op_or_q.perturbation is not None:
            raise UnsupportedCombinationError("perturbed weights break the symmetry; use the dense path")
        q, mu, nu = op_or_q.q, float(op_or_q.mu), float(op_or_q.nu)
    else:
        q = op_or_q
    n = q.n
    blocks = []
    for k in range(n):
        fibre = 2 - 2 * math.cos(2 * math.pi * k / n)
        for p in range(n):
            blocks.append(_harper_base(n, k, p) / mu**2 + (fibre / nu**2) * np.eye(n))
    return blocks


@lru_cache(maxsize=8)
def harper_spectrum_pairs(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Arrays (a, b) with spectrum of the (mu, nu) operator = a/mu^2 + b/nu^2."""
    if n < 2:
        raise ValueError("n must be >= 2")
    if n > HARPER_CAP:
        raise ResourceCapError(f"n = {n} exceeds the Harper cap {HARPER_CAP}")

    def block(kp):
        k, p = kp
        return np.linalg.eigvalsh(_harper_base(n, k, p))

    keys = [(k, p) for k in range(n) for p in range(n)]
    a = np.concatenate(_pmap(block, keys))
    b = np.repeat([2 - 2 * math.cos(2 * math.pi * k / n) for k in range(n)], n * n)
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b


def harper_spectrum(n: int, mu: float, nu: float) -> np.ndarray:
    a, b = harper_spectrum_pairs(n)
    return np.sort(a / mu**2 + b / nu**2)


def _unperturbed_norm_bound(mu, nu):
    return 4.0 * (2.0 / mu**2 + 1.0 / nu**2)


# --------------------------------------------------------------------------
# counting
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CountingResult:
    lam: float
    count: int
    normalized: float
    method: str = "dense"
    retries: int = 0


def _inertia_count(A, shift, tie):
    """#eigenvalues of A below ``shift`` from the LDL^T inertia; retries on breakdown."""
    retries = 0
    n = A.shape[0]
    while True:
        _, D, _ = scipy.linalg.ldl(A - shift * np.eye(n), lower=True)
        neg = 0
        zero = False
        i = 0
        while i < n:
            if i + 1 < n and D[i + 1, i] != 0:
                ev = np.linalg.eigvalsh(D[i:i + 2, i:i + 2])
                neg += int(np.sum(ev < 0))
                zero |= bool(np.any(np.abs(ev) <= tie * 1e-3))
                i += 2
            else:
                neg += int(D[i, i] < 0)
                zero |= abs(D[i, i]) <= tie * 1e-3
                i += 1
        if not zero or retries >= 5:
            return neg, retries
        shift += tie
        retries += 1


def counting_function(op: AnisotropicLaplacian, lam: float, *, method: str = "auto") -> CountingResult:
    """#{eigenvalues <= lam + tie} with tie = 1e-12 * norm bound.

    ``method`` is "dense" (n <= 12), "harper" (unperturbed only),
    "inertia" (LDL^T of op - (lam + tie) I) or "auto".
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if op.exact:
        raise UnsupportedCombinationError("count on the floating-point operator")
    n = op.n
    if method == "auto":
        method = "dense" if n <= DENSE_CAP else "harper"
    tie = op.tie_tol
    retries = 0
    if method == "dense":
        if n > DENSE_CAP:
            raise ResourceCapError(f"dense path capped at n = {DENSE_CAP}")
        ev = np.linalg.eigvalsh(op.operator)
        count = int(np.count_nonzero(ev <= lam + tie))
    elif method == "harper":
        if op.perturbation is not None:
            raise UnsupportedCombinationError("perturbed weights break the symmetry; use dense or inertia")
        ev = harper_spectrum(n, op.mu, op.nu)
        count = int(np.count_nonzero(ev <= lam + tie))
    elif method == "inertia":
        count, retries = _inertia_count(op.operator, lam + tie, tie)
    else:
        raise ValueError(f"unknown method {method!r}")
    return CountingResult(lam, count, count / op.q.size, method, retries)


def _count_unperturbed(n, mu, nu, lam0, method):
    if method == "harper":
        ev = harper_spectrum(n, mu, nu)
        tie = TIE_REL * _unperturbed_norm_bound(mu, nu)
        return int(np.count_nonzero(ev <= lam0 + tie))
    op = anisotropic_laplacian(build_heisenberg_quotient(n), mu, nu)
    return counting_function(op, lam0, method=method).count


def two_param_grid(n: int, mu_grid, nu_grid, lambda0: float = 1.0, *, method: str = "auto") -> TwoParamFunction:
    """values[i, j] = normalised count of eigenvalues of Delta^{mu_i, nu_j} <= lambda0."""
    mu_grid = np.asarray(mu_grid, dtype=float)
    nu_grid = np.asarray(nu_grid, dtype=float)
    if method == "auto":
        method = "dense" if n <= DENSE_CAP else "harper"
    if method == "dense" and n > DENSE_CAP:
        raise ResourceCapError(f"dense path capped at n = {DENSE_CAP}; use the Harper path")
    if method == "harper" and n > HARPER_CAP:
        raise ResourceCapError(f"Harper path capped at n = {HARPER_CAP}")
    points = [(m, v) for m in mu_grid for v in nu_grid]
    counts = _pmap(lambda mv: _count_unperturbed(n, mv[0], mv[1], lambda0, method), points)
    values = np.array(counts, dtype=float).reshape(mu_grid.size, nu_grid.size) / n**3
    return TwoParamFunction(mu_grid, nu_grid, values)


def write_grid_csv(grid: TwoParamFunction, fh) -> None:
    fh.write("mu,nu,normalized_count\n")
    for i, m in enumerate(grid.mu_grid):
        for j, v in enumerate(grid.nu_grid):
            fh.write(f"{m:.17g},{v:.17g},{grid.values[i, j]:.17g}\n")


# --------------------------------------------------------------------------
# invariance checks
# --------------------------------------------------------------------------


def rescale_lemma_check(n: int, mu, nu, lambda0) -> bool:
    """count(Delta^{mu,nu} <= lambda0) == count(Delta^{sqrt(l0) mu, sqrt(l0) nu} <= 1)."""
    if not (mu > 0 and nu > 0 and lambda0 > 0):
        raise ValueError("scales must be positive")
    q = build_heisenberg_quotient(n)
    s = math.sqrt(lambda0)
    left = counting_function(anisotropic_laplacian(q, mu, nu), lambda0, method="dense").count
    right = counting_function(anisotropic_laplacian(q, s * mu, s * nu), 1.0, method="dense").count
    return left == right


@dataclass(frozen=True)
class SandwichWitness:
    lower: int
    middle: int
    upper: int
    C: float


def perturb_sandwich_check(n: int, K: float, seed: int, mu, nu, lambda0) -> tuple[bool, SandwichWitness]:
    """count_g(mu/sqrt K, nu/sqrt K) <= count_g'(mu, nu) <= count_g(sqrt K mu, sqrt K nu).

    g' has edge factors drawn from [1/K, K]; the witness carries the three
    counts and C = sqrt K.
    """
    q = build_heisenberg_quotient(n)
    pert = random_perturbation(q, K, seed)
    s = math.sqrt(K)
    middle = counting_function(anisotropic_laplacian(q, mu, nu, pert, K=K), lambda0, method="dense").count
    lower = counting_function(anisotropic_laplacian(q, mu / s, nu / s), lambda0, method="dense").count
    upper = counting_function(anisotropic_laplacian(q, mu * s, nu * s), lambda0, method="dense").count
    return lower <= middle <= upper, SandwichWitness(lower, middle, upper, s)


def perturbed_grid(n: int, K: float, seed: int, mu_grid, nu_grid, lambda0: float = 1.0) -> TwoParamFunction:
    """two_param_grid for the perturbed weights of perturb_sandwich_check."""
    q = build_heisenberg_quotient(n)
    pert = random_perturbation(q, K, seed)
    mu_grid = np.asarray(mu_grid, dtype=float)
    nu_grid = np.asarray(nu_grid, dtype=float)
    values = np.empty((mu_grid.size, nu_grid.size))
    for i, m in enumerate(mu_grid):
        for j, v in enumerate(nu_grid):
            op = anisotropic_laplacian(q, m, v, pert, K=K)
            values[i, j] = counting_function(op, lambda0, method="dense").normalized
    return TwoParamFunction(mu_grid, nu_grid, values)


# --------------------------------------------------------------------------
# slopes along a path
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PathSlope:
    n: int
    slope: float
    lambdas: tuple
    counts: tuple


@dataclass(frozen=True)
class LatticeSlopeReport:
    zeta: float
    per_n: tuple
    extrapolated: float | None
    deviations: tuple = field(default=())


def lattice_alpha_along_path(
    n_list,
    zeta: float,
    lambda_grid=None,
    *,
    points: int = 25,
    c1: float = WINDOW_C1,
    c2: float = WINDOW_C2,
) -> LatticeSlopeReport:
    """Slope of log(G_0(lam, lam^{1+zeta}) - 1/n^3) against log lam for each n.

    The fit uses lambdas in [c1/n, c2]; points where the count has saturated
    at the constants are dropped too.  ``extrapolated`` is the intercept of
    a linear fit of slope against 1/n.
    """
    n_list = list(n_list)
    if any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise ValueError("n_list must be increasing")
    per_n = []
    for n in n_list:
        lo, hi = c1 / n, c2
        if lambda_grid is None:
            if lo >= hi:
                raise WindowError(f"fit window [{lo:.4g}, {hi:.4g}] is empty for n = {n}; use a larger n")
            lams = np.logspace(math.log10(lo), math.log10(hi), points)
        else:
            lams = np.asarray(lambda_grid, dtype=float)
            lams = lams[(lams >= lo) & (lams <= hi)]
        a, b = harper_spectrum_pairs(n)
        counts = []
        for lam in lams:
            mu, nu = lam, lam ** (1 + zeta)
            tie = TIE_REL * _unperturbed_norm_bound(mu, nu)
            counts.append(int(np.count_nonzero(a / mu**2 + b / nu**2 <= 1.0 + tie)))
        counts = np.array(counts)
        keep = counts > 1
        if keep.sum() < 3:
            raise WindowError(f"fewer than three resolvable points for n = {n}; use a larger n")
        y = np.log(counts[keep] / n**3 - 1.0 / n**3)
        slope = float(np.polyfit(np.log(lams[keep]), y, 1)[0])
        per_n.append(PathSlope(n, slope, tuple(float(v) for v in lams), tuple(int(c) for c in counts)))
    extrap = None
    if len(per_n) >= 2:
        inv = np.array([1.0 / p.n for p in per_n])
        extrap = float(np.polyfit(inv, [p.slope for p in per_n], 1)[1])
    target = 4.0 + 2.0 * zeta
    return LatticeSlopeReport(zeta, tuple(per_n), extrap, tuple(abs(p.slope - target) for p in per_n))
