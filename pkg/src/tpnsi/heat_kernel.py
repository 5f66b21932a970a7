"""Heat traces of the three-dimensional Heisenberg group with metric g^{1,c}.

The diagonal heat kernels on functions and on one-forms are expressed as
one-dimensional integrals (after Lott).  This module evaluates them by
adaptive quadrature, together with the integral pieces I1-, I1+ = I4 + I5,
I2, I3 and the closed-form sandwich bounds that give their decay rates.

Two facts about these formulas are encoded below:

* After the substitution k -> v, the k-integral for I1+ covers only
  v >= 1.  Integrating from v = 0 adds a piece over [0, 1], called I5.  On
  (0, 1) the bracketed series is negative and changes sign against
  (v - 1/2), so I5 comes out positive.
* The closed form c^2/(2t) e^{-c^2 t} + sqrt(pi) c^3/sqrt(t) erfc(c sqrt t)
  for I3 differs from its defining integral, whose value is
  c^2/(2t) e^{-c^2 t} - (sqrt(pi)/2) c^3/sqrt(t) erfc(c sqrt t).

``eval_theta1(..., variant="exact")`` uses the defining integrals;
``variant="substituted"`` uses I1+ = I4 + I5 and the closed form of I3.
Both decay like c/t.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np

from .quadrature import QuadratureError, QuadratureSpec, geometric_breakpoints, integrate
from .special import erfc, erfc_times_exp, erfcx, polygamma

__all__ = [
    "ScaledMetricPoint",
    "HeatTraceSample",
    "IntegralBounds",
    "DomainError",
    "u_over_sinh",
    "theta0_integral",
    "eval_theta0",
    "eval_I2",
    "eval_I3",
    "eval_I3_exact",
    "series_S",
    "eval_I1",
    "eval_I4",
    "eval_I5",
    "bounds_I1minus",
    "bounds_I4",
    "bounds_I5",
    "constant_K",
    "eval_theta1",
]

SQRT_PI = math.sqrt(math.pi)
ORACLE_TERMS = 10**7

Sign = Literal["+", "-"]


class DomainError(ValueError):
    """An argument lies outside the range where a formula is valid."""


@dataclass(frozen=True)
class ScaledMetricPoint:
    """Time t and fibre scale c of the metric g^{1,c}."""

    t: float
    c: float
    zeta: float | None = None

    def __post_init__(self):
        if not (self.t > 0 and self.c > 0):
            raise DomainError(f"need t > 0 and c > 0, got t={self.t}, c={self.c}")

    @classmethod
    def on_path(cls, t: float, zeta: float) -> "ScaledMetricPoint":
        """The point (t, t^zeta) on the path c = t^zeta."""
        return cls(t, t**zeta, zeta)

    @property
    def a(self) -> float:
        """The Gaussian rate t c^2."""
        return self.t * self.c * self.c


@dataclass(frozen=True)
class HeatTraceSample:
    point: ScaledMetricPoint
    degree: int
    theta: float
    est_abs_error: float


@dataclass(frozen=True)
class IntegralBounds:
    lower: float
    upper: float

    def __post_init__(self):
        if self.lower > self.upper:
            raise ValueError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    def contains(self, value: float, rel_slack: float = 0.0) -> bool:
        lo = self.lower - rel_slack * abs(self.lower)
        hi = self.upper + rel_slack * abs(self.upper)
        return lo <= value <= hi


def _internal(quad):
    # half the tolerance goes to the quadrature, the rest covers truncated tails
    return QuadratureSpec(0.5 * quad.rel_tol, quad.abs_tol, quad.max_subdivisions, quad.series_switch_eps)


def _sign_value(sign: Sign) -> int:
    if sign == "+":
        return 1
    if sign == "-":
        return -1
    raise ValueError(f"sign must be '+' or '-', got {sign!r}")


# --------------------------------------------------------------------------
# functions: theta_0
# --------------------------------------------------------------------------


def u_over_sinh(u):
    """u / sinh(u), with the removable singularity at 0 set to its limit 1."""
    u = np.asarray(u, dtype=float)
    out = np.empty_like(u)
    small = u < 1e-3
    us = u[small]
    u2 = us * us
    out[small] = 1.0 - u2 / 6.0 + 7.0 * u2 * u2 / 360.0
    ul = u[~small]
    out[~small] = 2.0 * ul * np.exp(-ul) / -np.expm1(-2.0 * ul)
    return out


def _theta0_tail(U, s):
    """Bound on the integral of e^{-u^2/s^2} u/sinh(u) over [U, inf)."""
    exp_bound = 2.0 * (U + 1.0) * math.exp(-U) / -math.expm1(-2.0 * U)
    gauss_bound = 0.5 * SQRT_PI * s * float(erfc(U / s))
    return min(exp_bound, gauss_bound)


def theta0_integral(s2: float, quad: QuadratureSpec = QuadratureSpec()) -> tuple[float, float]:
    """The integral of e^{-u^2/s2} u/sinh(u) over [0, inf), with error estimate.

    ``s2`` is c^2 t.  The infinite range is truncated at U where a rigorous
    tail bound drops below a tenth of the relative tolerance.
    """
    if not s2 > 0:
        raise DomainError("c^2 t must be positive")
    s = math.sqrt(s2)
    # u/sinh(u) >= 1/sinh(1) on [0, 1]
    lower = 0.5 * SQRT_PI * s * math.erf(1.0 / s) / math.sinh(1.0)
    target = 0.1 * quad.rel_tol * lower
    U = 1.0
    while _theta0_tail(U, s) > target:
        U *= 1.25
    tail = _theta0_tail(U, s)

    def f(u):
        return np.exp(-u * u / s2) * u_over_sinh(u)

    pts = geometric_breakpoints(0.0, U, 0.5 * min(1.0, s))
    value, err = integrate(f, pts, _internal(quad), abs_tol=quad.abs_tol * lower)
    return value, err + tail


def eval_theta0(point: ScaledMetricPoint, quad: QuadratureSpec = QuadratureSpec()) -> HeatTraceSample:
    """e^{-t Delta_0}(0,0) = (1/4 pi^2) (1/(c t^2)) int e^{-u^2/(c^2 t)} u/sinh(u) du."""
    try:
        value, err = theta0_integral(point.a, quad)
    except QuadratureError as exc:
        exc.component = "theta0"
        raise
    pref = 1.0 / (4.0 * math.pi**2 * point.c * point.t**2)
    return HeatTraceSample(point, 0, pref * value, pref * err)


# --------------------------------------------------------------------------
# closed forms: I2, I3
# --------------------------------------------------------------------------


def eval_I2(point: ScaledMetricPoint) -> float:
    return point.c**2 / (2.0 * point.t)


def eval_I3(point: ScaledMetricPoint) -> float:
    """I3 by the closed form c^2/(2t) e^{-c^2 t} + sqrt(pi) c^3/sqrt(t) erfc(c sqrt t).

    Beyond c sqrt(t) = 26 the common factor e^{-c^2 t} is pulled out and the
    scaled erfc is used.  See :func:`eval_I3_exact` for the value of the
    defining integral.
    """
    t, c = point.t, point.c
    x = c * math.sqrt(t)
    if x > 26.0:
        return math.exp(-point.a) * (c * c / (2 * t) + SQRT_PI * c**3 / math.sqrt(t) * float(erfcx(x)))
    return c * c / (2 * t) * math.exp(-point.a) + SQRT_PI * c**3 / math.sqrt(t) * float(erfc(x))


def _one_minus_sqrtpi_x_erfcx(x):
    """1 - sqrt(pi) x erfcx(x), cancellation-free for large x."""
    if x < 12.0:
        return 1.0 - SQRT_PI * x * float(erfcx(x))
    # asymptotic series: sum_{k>=1} (-1)^{k+1} (2k-1)!! / (2x^2)^k
    y = 1.0 / (2.0 * x * x)
    term, total = 1.0, 0.0
    for k in range(1, 12):
        term *= (2 * k - 1) * y if k > 1 else y
        total += term if k % 2 else -term
    return total


def eval_I3_exact(point: ScaledMetricPoint) -> float:
    """The integral of e^{-(2k + k^2/c^2 + c^2) t} k dk over [0, inf), in closed form."""
    t, c = point.t, point.c
    x = c * math.sqrt(t)
    return c * c / (2 * t) * math.exp(-point.a) * _one_minus_sqrtpi_x_erfcx(x)


# --------------------------------------------------------------------------
# the inner series
# --------------------------------------------------------------------------


def _series_terms(x):
    # 1 - (1 + x)^{-1/2}, without cancellation
    r = np.sqrt(1.0 + x)
    return x / (r * (1.0 + r))


def _series_from_w(w, eps, oracle=False):
    """sum_{m>=1} [1 - (1 + w/(m+1/2)^2)^{-1/2}] for an array of w."""
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if np.any(w <= -2.25 + 1e-15):
        raise DomainError("negative radicand in the inner series")
    wmax = float(np.max(np.abs(w))) if w.size else 0.0
    if oracle:
        M = ORACLE_TERMS
    else:
        # first m with |w|/(m+1/2)^2 < eps
        M = max(1, int(math.floor(math.sqrt(wmax / eps) - 0.5)) + 1)
        while wmax / (M + 0.5) ** 2 >= eps:
            M += 1
    total = np.zeros_like(w)
    chunk = max(1, min(M, 2_000_000 // max(1, w.size)))
    for start in range(1, M + 1, chunk):
        stop = min(M, start + chunk - 1)
        m = np.arange(start, stop + 1, dtype=float) + 0.5
        x = w[:, None] / (m * m)[None, :]
        total += _series_terms(x).sum(axis=1)
    # tail over m > M: w/2 sum (m+1/2)^-2 - 3 w^2/8 sum (m+1/2)^-4
    x0 = M + 1.5
    tail = 0.5 * w * polygamma(1, x0) - 0.375 * w * w * polygamma(3, x0) / 6.0
    return total + tail


def series_S(v, sign: Sign, quad: QuadratureSpec = QuadratureSpec(), *, oracle: bool = False):
    """sum_{m>=1} [1 - (1 + ((v -+ 1/2)^2 - 1/4)/(m + 1/2)^2)^{-1/2}].

    ``sign='+'`` uses (v - 1/2), ``sign='-'`` uses (v + 1/2).  Terms are summed
    explicitly up to the first m where |w|/(m+1/2)^2 < ``series_switch_eps``
    and the remainder is replaced by its first two analytic orders in terms
    of polygamma functions.  ``oracle=True`` sums 10^7 terms explicitly
    before applying the same correction.
    """
    s = _sign_value(sign)
    v_arr = np.asarray(v, dtype=float)
    if np.any(v_arr < 0):
        raise DomainError("series_S requires v >= 0")
    w = v_arr * (v_arr - s)  # (v - s/2)^2 - 1/4
    out = _series_from_w(w.ravel(), quad.series_switch_eps, oracle=oracle).reshape(w.shape)
    return float(out) if out.ndim == 0 else out


# --------------------------------------------------------------------------
# I1-, I4, I5
# --------------------------------------------------------------------------


def _gauss_moments_tail(a, V):
    """int_V^inf (v^2 + 1.5 v + 0.5) e^{-a v^2} dv."""
    e = math.exp(-a * V * V)
    ec = float(erfc(math.sqrt(a) * V))
    return (V + 1.5) * e / (2 * a) + SQRT_PI / (4 * a**1.5) * ec + SQRT_PI / (4 * math.sqrt(a)) * ec


def _I1minus(point, quad):
    """I1- with error estimate (quadrature + truncated tail)."""
    a, c4 = point.a, point.c**4
    sigma = 1.0 / math.sqrt(a)
    lower = bounds_I1minus(point).lower
    target = 0.1 * quad.rel_tol * lower
    V = 1.0 + 8.0 * sigma
    while c4 * _gauss_moments_tail(a, V) > target:
        V *= 1.5
    tail = c4 * _gauss_moments_tail(a, V)
    eps = quad.series_switch_eps

    def f(v):
        return c4 * (v + 0.5) * np.exp(-a * v * v) * _series_from_w(v * (v + 1.0), eps)

    pts = geometric_breakpoints(0.0, V, 0.5 * min(sigma, 1.0))
    value, err = integrate(f, pts, _internal(quad), abs_tol=quad.abs_tol * lower)
    return value, err + tail


def _I4_scaled(point, quad):
    """e^{tc^2} I4 with error estimate, integrated in y = v - 1."""
    a, c4 = point.a, point.c**4
    sigma = 1.0 / math.sqrt(a)
    lower = bounds_I4(point, scaled=True).lower
    target = 0.1 * quad.rel_tol * lower

    def tail_bound(Y):
        # |(1/2 + y) S| <= (1/2 + y) y and e^{-2ay} <= e^{-2aY} on [Y, inf)
        return c4 * math.exp(-2 * a * Y) * _gauss_moments_tail(a, Y)

    Y = 8.0 * sigma
    while tail_bound(Y) > target:
        Y *= 1.5
    tail = tail_bound(Y)
    eps = quad.series_switch_eps

    def f(y):
        return c4 * (0.5 + y) * np.exp(-a * y * (y + 2.0)) * _series_from_w(y * (1.0 + y), eps)

    pts = geometric_breakpoints(0.0, Y, 0.5 * min(sigma, 0.5 / a, 1.0))
    value, err = integrate(f, pts, _internal(quad), abs_tol=quad.abs_tol * lower)
    return value, err + tail


def _I5(point, quad):
    a, c4 = point.a, point.c**4
    sigma = 1.0 / math.sqrt(a)
    eps = quad.series_switch_eps
    scale = min(c4, point.c**2 / point.t)

    def f(v):
        return c4 * (v - 0.5) * np.exp(-a * v * v) * _series_from_w(v * (v - 1.0), eps)

    pts = sorted(set(geometric_breakpoints(0.0, 1.0, 0.5 * min(sigma, 1.0)) + [0.5]))
    return integrate(f, pts, _internal(quad), abs_tol=quad.abs_tol * scale)


def eval_I4(point: ScaledMetricPoint, quad: QuadratureSpec = QuadratureSpec(), *, scaled: bool = False) -> float:
    """The v >= 1 part of the substituted I1+; equal to the k-integral I1+.

    With ``scaled=True`` returns e^{tc^2} I4, which stays representable
    when I4 itself underflows.
    """
    v, _ = _I4_scaled(point, quad)
    return v if scaled else math.exp(-point.a) * v


def eval_I5(point: ScaledMetricPoint, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """The 0 <= v <= 1 part of the substituted I1+."""
    return _I5(point, quad)[0]


def eval_I1(point: ScaledMetricPoint, sign: Sign, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """The substituted form c^4 int_0^inf (v -+ 1/2) e^{-tc^2 v^2} S(v) dv.

    For ``sign='+'`` the range is split at v = 1 and the result is I4 + I5.
    """
    s = _sign_value(sign)
    if s < 0:
        return _I1minus(point, quad)[0]
    return eval_I4(point, quad) + eval_I5(point, quad)


# --------------------------------------------------------------------------
# sandwich bounds
# --------------------------------------------------------------------------


def bounds_I1minus(point: ScaledMetricPoint) -> IntegralBounds:
    t, c = point.t, point.c
    upper = SQRT_PI / 4 * c / math.sqrt(t**3) + c * c / (4 * t)
    return IntegralBounds(upper / 5.0, upper)


def bounds_I4(point: ScaledMetricPoint, *, scaled: bool = False) -> IntegralBounds:
    """[U/5, U] with U = -c^2/(4t) e^{-tc^2} + sqrt(pi)/4 (c/t^{3/2} + c^3/sqrt(t)) erfc(c sqrt t).

    ``scaled=True`` returns both bounds multiplied by e^{tc^2}.
    """
    t, c = point.t, point.c
    x = c * math.sqrt(t)
    coef = SQRT_PI / 4 * (c / math.sqrt(t**3) + c**3 / math.sqrt(t))
    if scaled:
        upper = -c * c / (4 * t) + coef * float(erfcx(x))
    else:
        upper = -c * c / (4 * t) * math.exp(-point.a) + coef * float(erfc(x))
    upper = max(upper, 0.0)
    return IntegralBounds(upper / 5.0, upper)


def bounds_I5(point: ScaledMetricPoint, K: float) -> IntegralBounds:
    """[-K (c^2/(2t) e^{-tc^2} - sqrt(pi)/4 c^3/sqrt(t) erfc(c sqrt t)), 0]."""
    if not K > 0:
        raise ValueError("K must be positive")
    t, c = point.t, point.c
    x = c * math.sqrt(t)
    inner = c * c / (2 * t) * math.exp(-point.a) - SQRT_PI / 4 * c**3 / math.sqrt(t) * erfc_times_exp(x, 0.0)
    return IntegralBounds(min(-K * inner, 0.0), 0.0)


def constant_K(terms: int = 10**6) -> float:
    """|sum_{m>=1} [1 - (1 - 1/(4(m+1/2)^2))^{-1/2}]|.

    Sums ``terms`` terms explicitly and corrects the remainder analytically.
    """
    m = np.arange(1, terms + 1, dtype=float) + 0.5
    x = -0.25 / (m * m)
    head = math.fsum(_series_terms(x))
    x0 = terms + 1.5
    w = -0.25
    tail = 0.5 * w * polygamma(1, x0) - 0.375 * w * w * polygamma(3, x0) / 6.0
    return -(head + tail)


# --------------------------------------------------------------------------
# theta_1
# --------------------------------------------------------------------------


def eval_theta1(
    point: ScaledMetricPoint,
    quad: QuadratureSpec = QuadratureSpec(),
    *,
    variant: Literal["exact", "substituted"] = "exact",
) -> HeatTraceSample:
    """e^{-t Delta_1}(0,0) = (1/(2 pi^2 c)) [I1+ + I1- + I2 + I3].

    ``variant="exact"`` evaluates the defining integrals (I1+ = I4, exact I3);
    ``variant="substituted"`` uses I1+ = I4 + I5 and the closed-form I3.
    """
    if variant not in ("exact", "substituted"):
        raise ValueError(f"unknown variant {variant!r}")
    parts = {}
    for name, fn in (("I1-", _I1minus), ("I4", _I4_scaled)):
        try:
            parts[name] = fn(point, quad)
        except QuadratureError as exc:
            exc.component = name
            raise
    i1m, e1m = parts["I1-"]
    damp = math.exp(-point.a)
    i4, e4 = damp * parts["I4"][0], damp * parts["I4"][1]
    total = [i1m, i4, eval_I2(point)]
    errs = [e1m, e4]
    if variant == "exact":
        total.append(eval_I3_exact(point))
    else:
        try:
            i5, e5 = _I5(point, quad)
        except QuadratureError as exc:
            exc.component = "I5"
            raise
        total += [i5, eval_I3(point)]
        errs.append(e5)
    pref = 1.0 / (2.0 * math.pi**2 * point.c)
    theta = pref * math.fsum(total)
    return HeatTraceSample(point, 1, theta, pref * math.fsum(errs))
