"""Special functions and noncentral chi-square mixture kernels.

Everything here is overflow-safe on the ranges the estimators hit: the
exponentially scaled Bessel term, the order-zero upper incomplete gamma, and
the product exp(x) * Gamma(0, x) that shows up inside the beamforming test.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special as _special

from .channel import complex_gaussian

__all__ = [
    "MixtureSpec",
    "bessel_i0_scaled",
    "gamma0",
    "expx_gamma0",
    "sample_ncx2",
    "mgf_mixture",
    "log_mgf_mixture",
]

WEIGHT_SUM_TOL = 1e-12

# Switch point beyond which exp(x) * exp1(x) is replaced by the divergent
# asymptotic series sum_k (-1)^k k! / x^(k+1); at x = 500 the truncation error
# of the ten-term tail is ~1e-20 relative.
_ASYMPTOTIC_SWITCH = 500.0
_ASYMPTOTIC_COEFFS = (
    -362880.0,
    40320.0,
    -5040.0,
    720.0,
    -120.0,
    24.0,
    -6.0,
    2.0,
    -1.0,
    1.0,
)


def _as_positive_array(x, name, allow_zero=False):
    arr = np.asarray(x, dtype=np.float64)
    bad = (arr < 0.0) if allow_zero else (arr <= 0.0)
    if np.any(bad):
        bound = ">= 0" if allow_zero else "> 0"
        raise ValueError(f"{name} requires x {bound}")
    return arr


def _match_scalar(out, x):
    return float(out) if np.ndim(x) == 0 else out


def bessel_i0_scaled(x):
    """exp(-x) * I0(x) for x >= 0; decreasing from 1, free of overflow."""
    arr = _as_positive_array(x, "bessel_i0_scaled", allow_zero=True)
    return _match_scalar(_special.i0e(arr), x)


def gamma0(x):
    """Order-zero upper incomplete gamma, integral of exp(-t)/t over [x, inf)."""
    arr = _as_positive_array(x, "gamma0")
    return _match_scalar(_special.exp1(arr), x)


def expx_gamma0(x):
    """exp(x) * Gamma(0, x) for x > 0, without forming the overflowing product.

    Strictly decreasing with x * expx_gamma0(x) pinned inside
    (x / (x + 1), 1).
    """
    arr = _as_positive_array(x, "expx_gamma0")
    scalar = np.ndim(x) == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    small = arr <= _ASYMPTOTIC_SWITCH
    if np.any(small):
        xs = arr[small]
        out[small] = np.exp(xs) * _special.exp1(xs)
    if np.any(~small):
        y = 1.0 / arr[~small]
        acc = np.full_like(y, _ASYMPTOTIC_COEFFS[0])
        for coeff in _ASYMPTOTIC_COEFFS[1:]:
            acc = acc * y + coeff
        out[~small] = acc * y
    if scalar:
        return float(out[0])
    return out


def sample_ncx2(noncentrality, rng: np.random.Generator, size=None):
    """Draws of |g + sqrt(c)|^2 with g a unit complex Gaussian.

    Mean is 1 + c and variance 1 + 2c.
    """
    c = float(noncentrality)
    if c < 0.0 or not np.isfinite(c):
        raise ValueError("noncentrality must be finite and >= 0")
    shape = () if size is None else size
    draws = np.abs(complex_gaussian(rng, shape) + np.sqrt(c)) ** 2
    if np.ndim(draws) == 0:
        return float(draws)
    return draws


@dataclass(frozen=True)
class MixtureSpec:
    """Weighted sum of independent noncentral chi-square(2) variables.

    ``W = sum_i weights[i] * X_i`` where ``X_i = |g_i + sqrt(c_i)|^2`` with
    unit complex Gaussian g_i, so E X_i = 1 + noncentralities[i].
    """

    weights: np.ndarray
    noncentralities: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        c = np.array(self.noncentralities, dtype=np.float64).reshape(-1)
        if w.size == 0 or w.size != c.size:
            raise ValueError("weights and noncentralities must have equal nonzero length")
        if np.any(w < 0.0) or np.any(c < 0.0):
            raise ValueError("weights and noncentralities must be >= 0")
        if abs(float(w.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1 (got {float(w.sum())!r})")
        w.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "noncentralities", c)

    @property
    def m(self) -> int:
        return self.weights.size

    def mean(self) -> float:
        return float(np.sum(self.weights * (1.0 + self.noncentralities)))

    def evaluate(self, g) -> np.ndarray:
        """Mixture values for given unit complex Gaussian draws of shape (..., m)."""
        g = np.asarray(g)
        if g.shape[-1] != self.m:
            raise ValueError("draw dimension does not match the mixture size")
        x = np.abs(g + np.sqrt(self.noncentralities)) ** 2
        return x @ self.weights

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.evaluate(complex_gaussian(rng, (int(n), self.m)))


def log_mgf_mixture(spec: MixtureSpec, s):
    """log E{exp(-s W)} for a mixture W, evaluated in log space.

    Equals ``-sum_i [log(1 + w_i s) + c_i w_i s / (1 + w_i s)]`` term by term.
    """
    s_arr = _as_positive_array(s, "mgf_mixture")
    t = np.multiply.outer(spec.weights, s_arr)
    c = spec.noncentralities.reshape(spec.noncentralities.shape + (1,) * (t.ndim - 1))
    terms = np.log1p(t) + c * t / (1.0 + t)
    out = -terms.sum(axis=0)
    return _match_scalar(out, s)


def mgf_mixture(spec: MixtureSpec, s):
    """E{exp(-s W)}; product of per-component factors, computed via logs."""
    out = np.exp(log_mgf_mixture(spec, s))
    return _match_scalar(out, s)
