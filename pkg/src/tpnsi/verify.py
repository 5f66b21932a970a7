"""Verification suites: named checks with a pass/fail status and a detail."""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import bigraded as bg
from . import heat_kernel as hk
from . import lattice as lt
from .asymptotics import INF, NSProfile, ScalingPath, growth_degree, product_alpha

__all__ = ["Check", "SUITES", "run_suite", "brute_force_product_alpha", "random_profile",
           "BOUNDS_T_GRID", "BOUNDS_ZETAS", "bound_checks"]

BOUNDS_T_GRID = tuple(10.0**e for e in range(2, 8))
BOUNDS_ZETAS = (-0.4, 0.0, 0.5)
BOUNDS_SLACK = 1e-9


@dataclass(frozen=True)
class Check:
    suite: str
    name: str
    passed: bool
    detail: str = ""


def identity_checks():
    out = []
    for name in bg.library_names():
        lie = bg.load_library(name)
        d = bg.build_ce_complex(lie)
        split = bg.split_differential(d, bg.build_basis(lie), allow_residual=True)
        out.append(Check("identities", f"{name}: residual", not split.residual_entries()))
        for ident, mats in bg.verify_identities(split).items():
            nonzero = sum(1 for m in mats for v in m if v != 0)
            out.append(Check("identities", f"{name}: {ident}", nonzero == 0, f"nonzero entries={nonzero}"))
    return out


def bound_checks(t_grid=BOUNDS_T_GRID, zetas=BOUNDS_ZETAS, quad=hk.QuadratureSpec()):
    K = hk.constant_K()
    out = []
    for zeta, t in itertools.product(zetas, t_grid):
        p = hk.ScaledMetricPoint.on_path(t, zeta)
        tag = f"t={t:.0e} zeta={zeta:g}"
        i1 = hk.eval_I1(p, "-", quad)
        b1 = hk.bounds_I1minus(p)
        out.append(Check("bounds", f"I1- in sandwich, {tag}", b1.contains(i1, BOUNDS_SLACK),
                         f"{b1.lower!r} <= {i1!r} <= {b1.upper!r}"))
        i4 = hk.eval_I4(p, quad, scaled=True)
        b4 = hk.bounds_I4(p, scaled=True)
        out.append(Check("bounds", f"I4 in [U/5, U], {tag}", b4.contains(i4, BOUNDS_SLACK),
                         f"scaled by e^(tc^2): {b4.lower!r} <= {i4!r} <= {b4.upper!r}"))
        i5 = hk.eval_I5(p, quad)
        b5 = hk.bounds_I5(p, K)
        out.append(Check("bounds", f"I5 in [lower, 0], {tag}", b5.contains(i5, BOUNDS_SLACK),
                         f"{b5.lower!r} <= {i5!r} <= 0"))
    return out


def invariance_checks(trials: int = 20, seed: int = 0):
    rng = random.Random(seed)
    out = []
    ok = True
    for _ in range(trials):
        n = rng.randint(2, 6)
        mu, nu = rng.uniform(0.3, 3), rng.uniform(0.3, 3)
        lam0 = rng.uniform(0.1, 10)
        ok &= lt.rescale_lemma_check(n, mu, nu, lam0)
    out.append(Check("invariance", "right-endpoint rescaling", ok, f"{trials} trials"))
    ok = True
    for i in range(trials):
        n = rng.randint(2, 6)
        K = rng.choice((1.5, 2.0, 4.0))
        passed, _ = lt.perturb_sandwich_check(n, K, seed + i, rng.uniform(0.3, 3), rng.uniform(0.3, 3),
                                              rng.uniform(0.1, 10))
        ok &= passed
    out.append(Check("invariance", "perturbation sandwich", ok, f"{trials} trials"))
    worst = 0.0
    for n in range(2, 7):
        for mu, nu in itertools.product((0.5, 1.0, 2.0), repeat=2):
            op = lt.anisotropic_laplacian(lt.build_heisenberg_quotient(n), mu, nu)
            worst = max(worst, float(np.max(np.abs(np.linalg.eigvalsh(op.operator)
                                                   - lt.harper_spectrum(n, mu, nu)))))
    out.append(Check("invariance", "Harper blocks match dense spectrum", worst <= 1e-10, f"max diff={worst:.3g}"))
    lam = Fraction(rng.randint(1, 9), rng.randint(1, 9))
    q = lt.build_heisenberg_quotient(3)
    a = lt.anisotropic_laplacian(q, Fraction(2, 3), Fraction(5, 4), exact=True).operator
    b = lt.anisotropic_laplacian(q, lam * Fraction(2, 3), lam * Fraction(5, 4), exact=True).operator
    out.append(Check("invariance", "lattice uniform scaling (exact)",
                     b == {k: v / lam**2 for k, v in a.items()}, f"lambda={lam}"))
    lie = bg.load_library("h3")
    d = bg.build_ce_complex(lie)
    basis = bg.build_basis(lie)
    g1 = bg.scaled_gram(basis, Fraction(2, 3), Fraction(5, 4))
    g2 = bg.scaled_gram(basis, lam * Fraction(2, 3), lam * Fraction(5, 4))
    same = all(bg.up_laplacian(k, d, g2) == bg.up_laplacian(k, d, g1) / lam**2 for k in range(lie.dim + 1))
    out.append(Check("invariance", "CE uniform scaling (exact)", same, f"lambda={lam}"))
    return out


def random_profile(rng: random.Random, max_dim: int = 4) -> NSProfile:
    top = rng.randint(0, max_dim)
    return NSProfile(top, {k: rng.uniform(0.5, 8.0) for k in range(top)})


def brute_force_product_alpha(k, F: NSProfile, B: NSProfile, r, s):
    """Every (p, bracket) pair enumerated with float infinities."""
    def a(prof, j):
        v = prof.alpha.get(j) if 0 <= j < prof.top_degree else None
        return math.inf if v is None or v is INF else v
    values = []
    for p in range(k + 1):
        for shift in (0, 1):
            fib, base = a(F, p + shift), a(B, k - p)
            values.append(math.inf if math.isinf(fib) or math.isinf(base) else s * fib + r * base)
    best = min(values)
    return INF if math.isinf(best) else best


def product_checks(trials: int = 200, seed: int = 0):
    rng = random.Random(seed)
    bad = 0
    for _ in range(trials):
        F, B = random_profile(rng), random_profile(rng)
        path = ScalingPath(rng.uniform(0.1, 3), rng.uniform(0.1, 3))
        k = rng.randint(0, F.top_degree + B.top_degree)
        got = product_alpha(k, F, B, path)
        want = brute_force_product_alpha(k, F, B, path.r, path.s)
        if not (got is want or (got is not INF and want is not INF and math.isclose(got, want, rel_tol=1e-15))):
            bad += 1
    out = [Check("product", "product_alpha vs brute force", bad == 0, f"{trials} trials, {bad} mismatches")]
    r3 = product_alpha(0, NSProfile(1, {0: 1.0}), NSProfile(2, {0: 2.0, 1: 2.0}), ScalingPath(1, 1))
    out.append(Check("product", "R x R^2 in degree 0", r3 == 3, f"alpha_0={r3}"))
    g = growth_degree([(1, 2), (2, 1)])
    out.append(Check("product", "growth degree of H^3", g == 4, f"N={g}"))
    g = growth_degree(bg.lower_central_ranks(bg.load_library("h3")))
    out.append(Check("product", "growth degree of H^3 from structure constants", g == 4, f"N={g}"))
    return out


SUITES = {
    "identities": identity_checks,
    "bounds": bound_checks,
    "invariance": invariance_checks,
    "product": product_checks,
}


def run_suite(name: str) -> list[Check]:
    if name == "all":
        return [c for suite in SUITES.values() for c in suite()]
    return SUITES[name]()
