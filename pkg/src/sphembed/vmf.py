"""von Mises-Fisher density on S^{p-1} and the special functions behind it.

The trainer never needs any of this (the normalizer cancels inside the
max-margin loss), but it documents and checks the claim that the generative
model's conditionals are vMF with unit concentration. Everything is kept in
log space because c_p(kappa) underflows quickly as p grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

_SERIES_REL_TOL = 1e-16
_SERIES_MAX_TERMS = 10_000


@dataclass(frozen=True)
class VmfParams:
    mu: np.ndarray
    kappa: float
    p: int

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.shape != (self.p,):
            raise ValueError(f"mean direction has shape {mu.shape}, expected ({self.p},)")
        if self.p < 2:
            raise ValueError("p must be >= 2")
        if abs(np.linalg.norm(mu) - 1.0) > 1e-9:
            raise ValueError("mean direction must be unit-norm")
        if self.kappa < 0:
            raise ValueError("kappa must be non-negative")
        object.__setattr__(self, "mu", mu)


def log_gamma(x: float) -> float:
    if x <= 0:
        raise ValueError(f"log_gamma is defined here for x > 0 only, got {x}")
    return math.lgamma(x)


def log_bessel_i(r: float, kappa: float) -> float:
    """log I_r(kappa) from the ascending power series.

    Terms are ``(kappa/2)^(2m+r) / (m! Gamma(m+r+1))``; they are summed relative
    to the largest term so that large orders do not underflow.
    """
    if r < 0 or kappa < 0:
        raise ValueError("bessel_i needs r >= 0 and kappa >= 0")
    if kappa == 0.0:
        return 0.0 if r == 0 else -math.inf
    log_half = math.log(kappa / 2.0)
    quarter_sq = (kappa / 2.0) ** 2
    log_t0 = r * log_half - log_gamma(r + 1.0)
    # Work with term ratios: t_{m+1}/t_m = (kappa/2)^2 / ((m+1)(m+r+1)).
    total = 1.0
    term = 1.0
    for m in range(_SERIES_MAX_TERMS):
        ratio = quarter_sq / ((m + 1.0) * (m + r + 1.0))
        term *= ratio
        total += term
        if ratio < 1.0 and term < _SERIES_REL_TOL * total:
            break
        if total > 1e280:
            # rescale to stay finite for large kappa
            log_t0 += math.log(total)
            term /= total
            total = 1.0
    return log_t0 + math.log(total)


def bessel_i(r: float, kappa: float) -> float:
    """Modified Bessel function of the first kind, I_r(kappa)."""
    lv = log_bessel_i(r, kappa)
    return 0.0 if lv == -math.inf else math.exp(lv)


def log_norm_const(p: int, kappa: float) -> float:
    """log c_p(kappa) = (p/2-1) log kappa - (p/2) log 2pi - log I_{p/2-1}(kappa)."""
    if p < 2:
        raise ValueError("p must be >= 2")
    if kappa <= 0:
        raise ValueError("kappa must be > 0 (the uniform limit is not handled)")
    nu = p / 2.0 - 1.0
    return nu * math.log(kappa) - (p / 2.0) * math.log(2.0 * math.pi) - log_bessel_i(nu, kappa)


def vmf_log_density(params: VmfParams, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (params.p,):
        raise ValueError(f"point has shape {x.shape}, expected ({params.p},)")
    return log_norm_const(params.p, params.kappa) + params.kappa * float(np.dot(x, params.mu))


def sin_power_integral(p: int) -> float:
    """Closed form of the integral of sin(x)^p over [0, pi]."""
    if p < 0:
        raise ValueError("p must be >= 0")
    return math.sqrt(math.pi) * math.exp(log_gamma((1 + p) / 2.0) - log_gamma(1 + p / 2.0))


def numeric_normalization_oracle(p: int, kappa: float) -> float:
    """Surface integral of exp(kappa cos theta_1) over S^{p-1} by quadrature.

    Only the polar angle is integrated numerically; the remaining angles
    contribute the surface area factor 2 pi^{(p-1)/2} / Gamma((p-1)/2).
    """
    if not 2 <= p <= 8:
        raise ValueError("quadrature oracle supports 2 <= p <= 8")
    if kappa <= 0:
        raise ValueError("kappa must be > 0")
    val, _ = integrate.quad(
        lambda t: math.exp(kappa * math.cos(t)) * math.sin(t) ** (p - 2),
        0.0,
        math.pi,
        epsabs=0.0,
        epsrel=1e-12,
        limit=200,
    )
    area = 2.0 * math.pi ** ((p - 1) / 2.0) / math.gamma((p - 1) / 2.0)
    return area * val
