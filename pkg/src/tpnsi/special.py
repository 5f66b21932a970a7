"""Special functions used by the heat-trace integrals."""
from __future__ import annotations

import math

from scipy import special as _sp

__all__ = ["erfc", "erfcx", "erfc_times_exp", "polygamma"]


def erfc(x):
    return _sp.erfc(x)


def erfcx(x):
    """e^{x^2} erfc(x), accurate where erfc itself underflows."""
    return _sp.erfcx(x)


def erfc_times_exp(x, log_factor):
    """erfc(x) * exp(log_factor) without intermediate underflow.

    For x > 5 the product is formed as erfcx(x) * exp(log_factor - x^2).
    """
    if x > 5.0:
        return float(_sp.erfcx(x)) * math.exp(log_factor - x * x)
    return float(_sp.erfc(x)) * math.exp(log_factor)


def polygamma(n: int, x: float) -> float:
    return float(_sp.polygamma(n, x))
