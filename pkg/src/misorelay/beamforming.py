"""Rank-one (beamforming) optimality test under Rayleigh forward fading.

Whether putting all transmit power on the mean direction is capacity-optimal
reduces to the sign of a scalar function of the transmit SNR.  The function
is built from expectations of an auxiliary ratio variable Z supported on
(0, d1]; its density has an essential singularity at the origin, so the
quadrature splits the interval and maps the lower piece through u = 1/z
(rescaled to the scatter variable, where the integrand is a unit-width bump).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .channel import ChannelMeanModel, LinkParams
from .specfun import bessel_i0_scaled, expx_gamma0, sample_ncx2

__all__ = [
    "BeamformingInstance",
    "BfExpectations",
    "pz_density",
    "bf_expectations",
    "f_gamma",
    "bf_threshold",
    "sample_z",
]

_D1_TOL = 1e-12
_D2_TOL = 1e-10
_SUPPORT_SLACK = 1.0 + 1e-12
_MASS_GUARD = 1e-5


@dataclass(frozen=True)
class BeamformingInstance:
    """Frozen per-(model, params) constants of the beamforming test.

    d1 is the upper support endpoint of Z; d2 the closed-form offset term.
    Both are recomputed and checked on construction.
    """

    model: ChannelMeanModel
    params: LinkParams
    d1: float
    d2: float

    def __post_init__(self):
        if self.model.alpha <= 0.0:
            raise ValueError("beamforming test requires alpha > 0")
        d1, d2 = _bf_constants(self.model, self.params)
        if abs(d1 - self.d1) > _D1_TOL * max(1.0, abs(d1)):
            raise ValueError("stored d1 does not match its defining formula")
        if abs(d2 - self.d2) > _D2_TOL * max(1.0, abs(d2)):
            raise ValueError("stored d2 does not match its defining formula")
        object.__setattr__(self, "d1", float(self.d1))
        object.__setattr__(self, "d2", float(self.d2))

    @classmethod
    def from_parameters(cls, model: ChannelMeanModel, params: LinkParams) -> "BeamformingInstance":
        d1, d2 = _bf_constants(model, params)
        return cls(model, params, d1, d2)

    @property
    def noncentrality(self) -> float:
        return self.model.mu_norm_sq / self.model.alpha


def _bf_constants(model: ChannelMeanModel, params: LinkParams):
    alpha, gamma, g_relay = model.alpha, params.gamma, params.g_relay
    mu_sq = model.mu_norm_sq
    d1 = (alpha * gamma + 1.0 + gamma * mu_sq) / g_relay
    d2 = (d1 / (alpha * gamma + 1.0)) * (
        1.0 - (gamma * mu_sq / g_relay) * expx_gamma0(d1)
    )
    return float(d1), float(d2)


def pz_density(z, inst: BeamformingInstance):
    """Density of Z on (0, d1]; raises outside the support.

    Written with the exponentially scaled Bessel factor so the value never
    overflows: the combined exponent is -(sqrt(x) - sqrt(c))^2 with
    x = (d1/z - 1) / (alpha gamma) and c = ||mu||^2 / alpha.
    """
    z_arr = np.asarray(z, dtype=np.float64)
    if np.any(z_arr <= 0.0) or np.any(z_arr > inst.d1 * _SUPPORT_SLACK):
        raise ValueError(f"z outside the support (0, {inst.d1!r}]")
    alpha = inst.model.alpha
    gamma = inst.params.gamma
    c = inst.noncentrality
    x = np.maximum(inst.d1 / z_arr - 1.0, 0.0) / (alpha * gamma)
    root = np.sqrt(x)
    bessel_arg = 2.0 * np.sqrt(c) * root
    out = (
        inst.d1
        / (alpha * gamma * z_arr**2)
        * np.exp(-((root - np.sqrt(c)) ** 2))
        * bessel_i0_scaled(bessel_arg)
    )
    return float(out) if np.ndim(z) == 0 else out


def _quad_piece(fun, lo, hi, epsrel):
    value, err = integrate.quad(fun, lo, hi, epsabs=0.0, epsrel=epsrel, limit=300)
    return value, err


def _integrate_weighted(inst: BeamformingInstance, weight, rel_tol: float):
    """Integral of weight(z) * pz_density(z) over (0, d1], split at d1 / 10.

    The upper piece is integrated in z directly.  The essential singularity of
    the lower piece is removed by substituting u = 1/z and rescaling linearly
    to t = sqrt((d1 u - 1) / (alpha gamma)): the integrand becomes
    2t exp(-(t - sqrt(c))^2) i0e(2 sqrt(c) t) weight(z), a unit-width bump
    whose location does not drift with gamma or the relay gain, so adaptive
    quadrature resolves it in every regime.
    """
    split = inst.d1 / 10.0
    inner_rel = min(rel_tol * 1e-2, 1e-8)
    alpha_gamma = inst.model.alpha * inst.params.gamma
    sqrt_c = math.sqrt(inst.noncentrality)

    def upper(zv):
        return weight(zv) * pz_density(zv, inst)

    def lower(t):
        x = t * t
        zv = inst.d1 / (1.0 + alpha_gamma * x)
        dens = math.exp(-((t - sqrt_c) ** 2)) * bessel_i0_scaled(2.0 * sqrt_c * t)
        return 2.0 * t * dens * weight(zv)

    t_lo = 3.0 / math.sqrt(alpha_gamma)  # image of z = d1 / 10
    t_hi = max(sqrt_c + 12.0, t_lo + 12.0)  # Gaussian tail < 1e-60 beyond this

    val_hi, err_hi = _quad_piece(upper, split, inst.d1, inner_rel)
    val_lo, err_lo = _quad_piece(lower, t_lo, t_hi, inner_rel)
    total = val_hi + val_lo
    err = err_hi + err_lo
    scale = max(abs(total), np.finfo(float).tiny)
    if err > rel_tol * scale:
        raise RuntimeError(
            f"quadrature achieved relative error {err / scale:.3e}, wanted {rel_tol:.1e}"
        )
    return total


@dataclass(frozen=True)
class BfExpectations:
    """Quadrature expectations entering the sign test, plus the density mass."""

    mass: float
    e_z: float
    e_z_eg: float
    e_z2_eg: float


def bf_expectations(inst: BeamformingInstance, rel_tol: float = 1e-6) -> BfExpectations:
    """E{Z}, E{Z e^Z Gamma(0, Z)}, E{Z^2 e^Z Gamma(0, Z)} and the total mass."""
    mass = _integrate_weighted(inst, lambda zv: 1.0, rel_tol)
    if abs(mass - 1.0) > _MASS_GUARD:
        raise RuntimeError(f"density mass {mass!r} deviates from 1; quadrature unreliable")
    e_z = _integrate_weighted(inst, lambda zv: zv, rel_tol)
    e_z_eg = _integrate_weighted(inst, lambda zv: zv * expx_gamma0(zv), rel_tol)
    e_z2_eg = _integrate_weighted(inst, lambda zv: zv * zv * expx_gamma0(zv), rel_tol)
    return BfExpectations(mass, e_z, e_z_eg, e_z2_eg)


def f_gamma(gamma: float, model: ChannelMeanModel, g_relay: float) -> float:
    """Decision function of the transmit SNR: <= 0 iff beamforming is optimal."""
    params = LinkParams(gamma, g_relay)
    inst = BeamformingInstance.from_parameters(model, params)
    exp = bf_expectations(inst)
    return exp.e_z + exp.e_z_eg / params.g_relay - exp.e_z2_eg - inst.d2


def bf_threshold(
    model: ChannelMeanModel,
    g_relay: float,
    bracket=(1e-2, 1e3),
    max_iter: int = 200,
) -> float:
    """Bisection root of f_gamma on a bracket where it changes sign.

    The bisection runs on log(gamma); the returned gamma satisfies
    |f(gamma)| <= 1e-6 * scale with scale set by the bracket endpoint values.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not (0.0 < lo < hi):
        raise ValueError("bracket must satisfy 0 < lo < hi")
    f_lo = f_gamma(lo, model, g_relay)
    f_hi = f_gamma(hi, model, g_relay)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if np.sign(f_lo) == np.sign(f_hi):
        raise ValueError(
            "f_gamma has one sign on the whole bracket: beamforming is "
            "optimal (or suboptimal) throughout; widen the bracket"
        )
    scale = max(abs(f_lo), abs(f_hi))
    log_lo, log_hi = np.log(lo), np.log(hi)
    mid = 0.5 * (log_lo + log_hi)
    for _ in range(max_iter):
        mid = 0.5 * (log_lo + log_hi)
        f_mid = f_gamma(float(np.exp(mid)), model, g_relay)
        if abs(f_mid) <= 1e-6 * scale:
            break
        if np.sign(f_mid) == np.sign(f_lo):
            log_lo = mid
        else:
            log_hi = mid
        if log_hi - log_lo < 1e-14:
            break
    return float(np.exp(mid))


def sample_z(inst: BeamformingInstance, rng: np.random.Generator, n: int) -> np.ndarray:
    """Monte Carlo draws of Z: d1 / (1 + alpha gamma X) with X noncentral chi-square.

    This is the sampling route used to cross-check the quadrature
    expectations; it matches pz_density by construction.
    """
    x = sample_ncx2(inst.noncentrality, rng, int(n))
    return inst.d1 / (1.0 + inst.model.alpha * inst.params.gamma * x)
