"""Deep-tail power laws and cross-family parameter matching.

Near the origin the distribution function of a squared kappa-mu
shadowed channel follows a single power law,

    F(x) ~ (a / t!) * (x / xbar)^(t+1) / (t+1),   t = mu - 1,

so outage in the high-SNR regime is controlled by just the diversity
slope ``mu`` and a scalar offset.  Two channels whose offsets coincide
are indistinguishable in the deep tail, which gives a principled way to
translate a kappa-mu (Rician-like) K-factor into the kappa of a
shadowed channel with a prescribed finite ``m``: solve

    (1 + K) exp(-K) = (1 + kappa) * (m / (mu kappa + m))^(m / mu)

for ``kappa``.  The right side is strictly decreasing in ``kappa`` when
``m > mu`` and the solution exceeds ``K``: finite-m shadowing must be
compensated by a stronger dominant component.
"""

import math

import numpy as np
from scipy.optimize import brentq

from .errors import NoRootError
from .mixture import ShadowedParams
from .specfun import ln_gamma_int

__all__ = [
    "tail_offset",
    "tail_offset_kappa_mu",
    "asym_cdf",
    "asym_cdf_kappa_mu",
    "match_kappa",
]

#: Required accuracy, in absolute terms, of the matching identity at the
#: returned root.
MATCH_RESIDUAL_TOL = 1e-12


def tail_offset(params):
    """Leading-order offset of the shadowed power law at the origin.

    ``f(x) -> offset * (x / xbar)^(mu-1) / xbar`` in the limit, with
    ``offset = (mu (1+kappa))^mu (m / (kappa mu + m))^m / (mu-1)!``,
    so that the distribution function reads
    ``offset / mu * (x/xbar)^mu`` -- see :func:`asym_cdf`.
    """
    if not isinstance(params, ShadowedParams):
        params = ShadowedParams(*params)
    mu, m, kap = params.mu, params.m, params.kappa
    return math.exp(
        mu * math.log(mu)
        + mu * math.log1p(kap)
        - ln_gamma_int(mu)
        + m * (math.log(m) - math.log(kap * mu + m))
    )


def tail_offset_kappa_mu(k_factor, mu):
    """Same offset for the unshadowed kappa-mu law (m -> infinity)."""
    k_factor = float(k_factor)
    if not np.isfinite(k_factor) or k_factor < 0.0:
        raise ValueError("k_factor must be finite and >= 0")
    mu = int(mu)
    if mu < 1:
        raise ValueError("mu must be >= 1")
    return math.exp(
        mu * math.log(mu)
        + mu * math.log1p(k_factor)
        - k_factor * mu
        - ln_gamma_int(mu)
    )


def _power_law(offset, slope_plus_one, mean_power, x):
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    if not np.all(np.isfinite(x)) or np.any(x <= 0.0):
        raise ValueError("asymptote requires finite x > 0")
    out = (offset / slope_plus_one) * (x / mean_power) ** slope_plus_one
    return float(out[0]) if scalar else out


def asym_cdf(params, x):
    """First-order small-argument approximation of the shadowed cdf.

    ``F(x) ~ offset/(t+1) * (x/xbar)^(t+1)`` with ``t + 1 = mu``;
    elementwise over ``x > 0``.  Only meaningful for ``x << xbar``.
    """
    if not isinstance(params, ShadowedParams):
        params = ShadowedParams(*params)
    return _power_law(tail_offset(params), params.mu, params.mean_power, x)


def asym_cdf_kappa_mu(k_factor, mu, mean_power, x):
    """Small-argument cdf approximation of the unshadowed kappa-mu law."""
    mean_power = float(mean_power)
    if not np.isfinite(mean_power) or mean_power <= 0.0:
        raise ValueError("mean_power must be finite and > 0")
    return _power_law(tail_offset_kappa_mu(k_factor, mu), int(mu), mean_power, x)


def match_kappa(k_factor, mu, m, infinite_m=False):
    """kappa of the shadowed channel whose deep tail matches a given K.

    Solves the offset-equality identity for ``kappa`` at fixed integer
    ``mu`` and ``m > mu``.  The root always satisfies
    ``kappa >= k_factor``, with equality only at ``k_factor = 0``.

    Parameters
    ----------
    k_factor : float
        K-factor of the reference kappa-mu channel, >= 0.
    mu : int
        Common number of clusters, >= 1.
    m : int
        Shadowing order of the target channel; must exceed ``mu``.
    infinite_m : bool
        Treat ``m`` as infinite, in which case the families coincide
        and ``kappa = k_factor`` exactly (``m`` is still validated).

    Raises
    ------
    NoRootError
        If bracket expansion fails to straddle the root (defensive;
        not reachable for valid inputs).
    """
    k_factor = float(k_factor)
    if not np.isfinite(k_factor) or k_factor < 0.0:
        raise ValueError("k_factor must be finite and >= 0")
    mu = int(mu)
    m = int(m)
    if mu < 1:
        raise ValueError("mu must be >= 1")
    if m <= mu:
        raise ValueError(
            "matching requires m > mu (no finite root otherwise); got m=%d, mu=%d"
            % (m, mu)
        )
    if infinite_m or k_factor == 0.0:
        return k_factor

    # In logs: g(kappa) = ln(1+kappa) + (m/mu) ln(m/(mu kappa + m))
    #                     - [ln(1+K) - K];  g(K) > 0, g decreasing.
    rhs = math.log1p(k_factor) - k_factor

    def g(kap):
        return math.log1p(kap) + (m / mu) * (math.log(m) - math.log(mu * kap + m)) - rhs

    lo = k_factor
    hi = max(2.0 * k_factor, 1.0)
    for _ in range(200):
        if g(hi) < 0.0:
            break
        hi *= 4.0
    else:
        raise NoRootError("bracket expansion exhausted", lo=lo, hi=hi)

    root = brentq(g, lo, hi, xtol=1e-13, rtol=4.0 * np.finfo(float).eps)

    lhs = (1.0 + k_factor) * math.exp(-k_factor)
    val = (1.0 + root) * math.exp((m / mu) * (math.log(m) - math.log(mu * root + m)))
    if abs(lhs - val) > MATCH_RESIDUAL_TOL:
        raise ArithmeticError(
            "matched kappa fails the defining identity: residual %g" % (lhs - val,)
        )
    return float(root)
