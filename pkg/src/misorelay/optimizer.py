"""Search over the mean-aligned covariance family and a fixed-basis baseline.

The optimal family is one-dimensional: a fraction ``phi`` of the transmit
power rides the mean direction and the rest spreads evenly over the
orthogonal complement.  ``optimize_phi`` runs a golden-section search on a
deterministic Monte Carlo surrogate (one frozen set of draws shared by every
evaluation), so reruns with the same config are bit-identical.
``optimize_suboptimal`` performs the analogous weight search inside an
arbitrary fixed eigenbasis for baseline comparisons.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .capacity import CapacityEstimate, estimate_capacity
from .channel import (
    ChannelMeanModel,
    FadingDistribution,
    LinkParams,
    SourceCovariance,
    complete_orthonormal_basis,
    complex_gaussian,
)

__all__ = [
    "SearchConfig",
    "OptimalStructure",
    "build_q_opt",
    "phi_objective",
    "optimize_phi",
    "optimize_suboptimal",
]

_ALIGN_TOL = 1e-8
_SURROGATE_CHUNK = 1 << 18


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the scalar power-split search."""

    tol: float = 1e-4
    n_samples: int = 10**6
    seed: int = 0
    bracket: tuple = (0.0, 1.0)
    workers: int = 1

    def __post_init__(self):
        lo, hi = (float(self.bracket[0]), float(self.bracket[1]))
        if not (0.0 <= lo < hi <= 1.0):
            raise ValueError("bracket must satisfy 0 <= lo < hi <= 1")
        if not (np.isfinite(self.tol) and self.tol > 0.0):
            raise ValueError("tol must be finite and > 0")
        if int(self.n_samples) < 2:
            raise ValueError("need at least two samples")
        object.__setattr__(self, "bracket", (lo, hi))
        object.__setattr__(self, "tol", float(self.tol))
        object.__setattr__(self, "n_samples", int(self.n_samples))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "workers", int(self.workers))


@dataclass(frozen=True)
class OptimalStructure:
    """Result of the power-split search over the mean-aligned family."""

    basis: np.ndarray
    phi: float
    achieved_capacity: CapacityEstimate
    direction_indifferent: bool = False

    def covariance(self) -> SourceCovariance:
        m = self.basis.shape[0]
        weights = np.full(m, (1.0 - self.phi) / (m - 1))
        weights[0] = self.phi
        return SourceCovariance.from_eigen(self.basis, weights)

    def to_json_dict(self) -> dict:
        return {
            "phi": float(self.phi),
            "direction_indifferent": bool(self.direction_indifferent),
            "capacity": self.achieved_capacity.to_json_dict(),
        }


def build_q_opt(model: ChannelMeanModel, phi: float) -> SourceCovariance:
    """Mean-aligned covariance with power split phi on the mean direction."""
    phi = float(phi)
    if not 0.0 <= phi <= 1.0:
        raise ValueError("phi must lie in [0, 1]")
    if model.mu_norm == 0.0:
        raise ValueError(
            "zero mean vector leaves no preferred direction; use the isotropic covariance"
        )
    basis = complete_orthonormal_basis(model.mu)
    m = model.m
    weights = np.full(m, (1.0 - phi) / (m - 1))
    weights[0] = phi
    return SourceCovariance.from_eigen(basis, weights)


class _PhiSurrogate:
    """Capacity of the aligned family as a deterministic function of phi.

    One frozen draw set (common random numbers) backs every evaluation, which
    is what makes golden-section search on a Monte Carlo objective stable.
    """

    def __init__(self, model, params, dist_f, n, seed):
        self.gamma = params.gamma
        self.alpha = model.alpha
        self.mu_norm_sq = model.mu_norm_sq
        self.m = model.m
        self.n = int(n)
        self.seed = int(seed)
        rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        gf_sq = np.empty(self.n)
        aligned = None
        spread = None
        if self.alpha > 0.0:
            aligned = np.empty(self.n)
            spread = np.empty(self.n)
        shift = np.sqrt(self.mu_norm_sq / self.alpha) if self.alpha > 0.0 else 0.0
        start = 0
        while start < self.n:
            size = min(_SURROGATE_CHUNK, self.n - start)
            stop = start + size
            gf_sq[start:stop] = params.g_relay * np.abs(dist_f.sample(rng, size)) ** 2
            if self.alpha > 0.0:
                g = complex_gaussian(rng, (size, self.m))
                aligned[start:stop] = np.abs(g[:, 0] + shift) ** 2
                spread[start:stop] = (np.abs(g[:, 1:]) ** 2).sum(axis=1)
            start = stop
        self.gf_sq = gf_sq
        self.aligned = aligned
        self.spread = spread

    def rates(self, phi: float) -> np.ndarray:
        phi = float(phi)
        mean_power = phi * self.mu_norm_sq
        denom = mean_power + self.alpha + (self.gf_sq + 1.0) / self.gamma
        if self.alpha > 0.0:
            rest = (1.0 - phi) / (self.m - 1)
            quad = self.alpha * (phi * self.aligned + rest * self.spread)
        else:
            quad = mean_power
        return 0.5 * np.log1p(self.gf_sq * quad / denom)

    def value(self, phi: float) -> float:
        return float(self.rates(phi).mean())

    def estimate(self, phi: float) -> CapacityEstimate:
        x = self.rates(phi)
        se = float(x.std(ddof=1) / np.sqrt(self.n))
        return CapacityEstimate(float(x.mean()), se, self.n, self.seed)


def phi_objective(
    phi: float,
    model: ChannelMeanModel,
    params: LinkParams,
    dist_f: FadingDistribution,
    n: int = 10**6,
    seed: int = 0,
) -> CapacityEstimate:
    """Capacity of the aligned family at power split phi (fresh seeded draws)."""
    if not 0.0 <= float(phi) <= 1.0:
        raise ValueError("phi must lie in [0, 1]")
    surrogate = _PhiSurrogate(model, params, dist_f, n, seed)
    return surrogate.estimate(phi)


def _golden_section_max(fun, lo: float, hi: float, tol: float) -> float:
    """Golden-section maximizer; assumes fun is unimodal on [lo, hi]."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    inv_phi_sq = (3.0 - np.sqrt(5.0)) / 2.0
    width = hi - lo
    if width <= tol:
        return 0.5 * (lo + hi)
    steps = int(np.ceil(np.log(tol / width) / np.log(inv_phi)))
    c = lo + inv_phi_sq * width
    d = lo + inv_phi * width
    yc = fun(c)
    yd = fun(d)
    for _ in range(steps - 1):
        if yc > yd:
            hi = d
            width *= inv_phi
            d, yd = c, yc
            c = lo + inv_phi_sq * width
            yc = fun(c)
        else:
            lo = c
            width *= inv_phi
            c, yc = d, yd
            d = lo + inv_phi * width
            yd = fun(d)
    return 0.5 * (lo + d) if yc > yd else 0.5 * (c + hi)


def optimize_phi(
    model: ChannelMeanModel,
    params: LinkParams,
    dist_f: FadingDistribution,
    config: SearchConfig = SearchConfig(),
) -> OptimalStructure:
    """Golden-section search for the best power split in the aligned family.

    A zero mean vector makes the direction irrelevant; that degenerate case
    returns the isotropic covariance with the flag set.
    """
    m = model.m
    if model.mu_norm == 0.0:
        est = estimate_capacity(
            SourceCovariance.isotropic(m), model, params, dist_f,
            n=config.n_samples, seed=config.seed, workers=config.workers,
        )
        return OptimalStructure(
            basis=np.eye(m, dtype=np.complex128),
            phi=1.0 / m,
            achieved_capacity=est,
            direction_indifferent=True,
        )
    surrogate = _PhiSurrogate(model, params, dist_f, config.n_samples, config.seed)
    lo, hi = config.bracket
    best = _golden_section_max(surrogate.value, lo, hi, config.tol)
    best_val = surrogate.value(best)
    for candidate in (lo, hi):
        val = surrogate.value(candidate)
        if val > best_val:
            best, best_val = candidate, val
    est = estimate_capacity(
        build_q_opt(model, best), model, params, dist_f,
        n=config.n_samples, seed=config.seed, workers=config.workers,
    )
    return OptimalStructure(
        basis=complete_orthonormal_basis(model.mu),
        phi=float(best),
        achieved_capacity=est,
    )


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    cumulative = np.cumsum(u)
    indices = np.arange(1, v.size + 1)
    mask = u + (1.0 - cumulative) / indices > 0.0
    rho = int(np.nonzero(mask)[0][-1])
    shift = (1.0 - cumulative[rho]) / (rho + 1)
    return np.maximum(v + shift, 0.0)


class _WeightSurrogate:
    """Deterministic weight-vector objective for a fixed eigenbasis."""

    def __init__(self, beta, model, params, dist_f, n, seed):
        self.gamma = params.gamma
        self.alpha = model.alpha
        self.beta_sq = np.abs(beta) ** 2
        self.m = beta.size
        self.n = int(n)
        self.seed = int(seed)
        rng = np.random.default_rng(np.random.SeedSequence(self.seed))
        gf_sq = np.empty(self.n)
        quad_parts = np.empty((self.n, self.m)) if self.alpha > 0.0 else None
        root_alpha = np.sqrt(self.alpha)
        start = 0
        while start < self.n:
            size = min(_SURROGATE_CHUNK, self.n - start)
            stop = start + size
            gf_sq[start:stop] = params.g_relay * np.abs(dist_f.sample(rng, size)) ** 2
            if self.alpha > 0.0:
                g = complex_gaussian(rng, (size, self.m))
                quad_parts[start:stop] = np.abs(beta + root_alpha * g) ** 2
            start = stop
        self.gf_sq = gf_sq
        self.quad_parts = quad_parts

    def rates(self, weights: np.ndarray) -> np.ndarray:
        mean_power = float(np.dot(weights, self.beta_sq))
        quad = self.quad_parts @ weights if self.alpha > 0.0 else mean_power
        denom = mean_power + self.alpha + (self.gf_sq + 1.0) / self.gamma
        return 0.5 * np.log1p(self.gf_sq * quad / denom)

    def value(self, weights: np.ndarray) -> float:
        return float(self.rates(weights).mean())

    def gradient(self, weights: np.ndarray) -> np.ndarray:
        if self.alpha == 0.0:
            # One-sided numerical gradient is enough for the degenerate case.
            base = self.value(weights)
            eps = 1e-7
            grad = np.empty(self.m)
            for j in range(self.m):
                bumped = weights.copy()
                bumped[j] += eps
                grad[j] = (self.value(bumped) - base) / eps
            return grad
        mean_power = float(np.dot(weights, self.beta_sq))
        quad = self.quad_parts @ weights
        denom = mean_power + self.alpha + (self.gf_sq + 1.0) / self.gamma
        ratio = self.gf_sq * quad / denom
        common = 0.5 * self.gf_sq / ((1.0 + ratio) * denom * denom)
        centered = self.quad_parts * denom[:, None] - quad[:, None] * self.beta_sq[None, :]
        return (common[:, None] * centered).mean(axis=0)


def _ascend_simplex(surrogate: _WeightSurrogate, max_iter: int = 300) -> np.ndarray:
    weights = np.full(surrogate.m, 1.0 / surrogate.m)
    value = surrogate.value(weights)
    step = 1.0
    for _ in range(max_iter):
        grad = surrogate.gradient(weights)
        improved = False
        while step > 1e-14:
            trial = _project_simplex(weights + step * grad)
            trial_value = surrogate.value(trial)
            if trial_value > value + 1e-14:
                moved = float(np.max(np.abs(trial - weights)))
                weights, value = trial, trial_value
                improved = True
                step *= 1.6
                if moved < 1e-8:
                    return weights
                break
            step *= 0.5
        if not improved:
            break
    return weights


def optimize_suboptimal(
    basis_u: np.ndarray,
    model: ChannelMeanModel,
    params: LinkParams,
    dist_f: FadingDistribution,
    config: SearchConfig = SearchConfig(),
):
    """Best weight vector inside a fixed eigenbasis that misses the mean direction.

    Returns (weights, CapacityEstimate).  For two antennas the search is a
    golden section on the first weight; otherwise projected-gradient ascent
    on the simplex, both over one frozen draw set.
    """
    basis_u = np.asarray(basis_u, dtype=np.complex128)
    m = model.m
    if basis_u.shape != (m, m):
        raise ValueError("basis shape does not match the channel mean")
    unitary_err = float(np.max(np.abs(basis_u.conj().T @ basis_u - np.eye(m))))
    if unitary_err > 1e-10:
        raise ValueError(f"basis not unitary (violation {unitary_err:.3e})")
    beta = basis_u.conj().T @ model.mu
    if model.mu_norm > 0.0:
        cosines = np.abs(beta) / model.mu_norm
        if np.any(cosines >= 1.0 - _ALIGN_TOL):
            raise ValueError(
                "a basis column is aligned with the channel mean; "
                "this instance belongs to the aligned optimal family"
            )
    surrogate = _WeightSurrogate(beta, model, params, dist_f, config.n_samples, config.seed)
    if m == 2:
        first = _golden_section_max(
            lambda w1: surrogate.value(np.array([w1, 1.0 - w1])),
            0.0, 1.0, config.tol,
        )
        candidates = [np.array([first, 1.0 - first])]
        for edge in (0.0, 1.0):
            candidates.append(np.array([edge, 1.0 - edge]))
        weights = max(candidates, key=surrogate.value)
    else:
        weights = _ascend_simplex(surrogate)
    weights = np.asarray(weights, dtype=np.float64)
    weights = weights / weights.sum()
    est = estimate_capacity(
        SourceCovariance.from_eigen(basis_u, weights), model, params, dist_f,
        n=config.n_samples, seed=config.seed, workers=config.workers,
    )
    return weights, est
