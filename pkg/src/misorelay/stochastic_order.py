"""Executable ordering checks behind the covariance-dominance argument.

An arbitrary unit-trace covariance with eigenvalues ``lam`` and mean
coordinates ``beta`` (the channel mean expressed in its eigenbasis) induces a
weighted noncentral chi-square mixture W1.  Its matched mean-aligned
competitor puts ``phi_hat1`` on the mean direction and spreads the remainder
evenly, inducing W2.  Ordering of the two mixtures in the Laplace-transform
sense is what makes the aligned family optimal, and this module turns that
into checkable numerics: the eigenvalue-profile term ``j_function``, the
mean-coordinate term ``r_function``, their combination ``log_mgf_ratio``
(equal to log mgf(W2) - log mgf(W1)), a grid check, a majorization check, and
a Monte Carlo check of the expected-log consequence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import complex_gaussian
from .specfun import MixtureSpec, log_mgf_mixture

__all__ = [
    "DEFAULT_S_GRID",
    "ORDER_TOL",
    "ComparisonInstance",
    "LtOrderReport",
    "Lemma1Report",
    "phi_hat_from_q1",
    "j_function",
    "r_function",
    "log_mgf_ratio",
    "lt_order_check",
    "majorization_check",
    "lemma1_check",
    "random_comparison_instance",
    "counterexample_instance",
]

# Geometric grid (s_min, s_max, n_points) on which transform ordering is checked.
DEFAULT_S_GRID = (1e-3, 1e3, 200)
ORDER_TOL = 1e-10
SIMPLEX_TOL = 1e-12


def _simplex_vector(values, name):
    arr = np.array(values, dtype=np.float64).reshape(-1)
    if arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if np.any(arr < -SIMPLEX_TOL):
        raise ValueError(f"{name} entries must be >= 0")
    if abs(float(arr.sum()) - 1.0) > SIMPLEX_TOL:
        raise ValueError(f"{name} must sum to 1 (got {float(arr.sum())!r})")
    return np.maximum(arr, 0.0)


@dataclass(frozen=True)
class ComparisonInstance:
    """Spectral data for one covariance-versus-aligned-competitor comparison.

    lam      eigenvalues of the arbitrary covariance (sums to 1)
    beta     channel mean expressed in that eigenbasis, so ||beta|| = ||mu||
    alpha    scatter power of the backward channel
    phi_hat1 power the competitor places on the mean direction
    """

    lam: np.ndarray
    beta: np.ndarray
    alpha: float
    phi_hat1: float

    def __post_init__(self):
        lam = _simplex_vector(self.lam, "lam")
        beta = np.array(self.beta, dtype=np.complex128).reshape(-1)
        if beta.size != lam.size:
            raise ValueError("lam and beta must have equal length")
        if lam.size < 2:
            raise ValueError("need at least two antennas")
        if not np.all(np.isfinite(beta)):
            raise ValueError("beta entries must be finite")
        alpha = float(self.alpha)
        if not np.isfinite(alpha) or alpha < 0.0:
            raise ValueError("alpha must be finite and >= 0")
        phi = float(self.phi_hat1)
        if not 0.0 <= phi <= 1.0:
            raise ValueError("phi_hat1 must lie in [0, 1]")
        lam.setflags(write=False)
        beta.setflags(write=False)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "phi_hat1", phi)

    @classmethod
    def matched(cls, lam, beta, alpha) -> "ComparisonInstance":
        """Instance whose phi_hat1 is the matching value for (lam, beta)."""
        return cls(lam, beta, alpha, phi_hat_from_q1(lam, beta))

    @property
    def m(self) -> int:
        return self.lam.size

    @property
    def beta_sq(self) -> np.ndarray:
        return np.abs(self.beta) ** 2

    @property
    def mu_norm_sq(self) -> float:
        return float(np.sum(self.beta_sq))

    def competitor_weights(self) -> np.ndarray:
        rest = (1.0 - self.phi_hat1) / (self.m - 1)
        weights = np.full(self.m, rest)
        weights[0] = self.phi_hat1
        return weights

    def w1_spec(self) -> MixtureSpec:
        """Mixture induced by the arbitrary covariance."""
        if self.alpha <= 0.0:
            raise ValueError("mixture form requires alpha > 0")
        return MixtureSpec(self.lam, self.beta_sq / self.alpha)

    def w2_spec(self) -> MixtureSpec:
        """Mixture induced by the matched mean-aligned competitor."""
        if self.alpha <= 0.0:
            raise ValueError("mixture form requires alpha > 0")
        noncentralities = np.zeros(self.m)
        noncentralities[0] = self.mu_norm_sq / self.alpha
        return MixtureSpec(self.competitor_weights(), noncentralities)


def phi_hat_from_q1(lam, beta) -> float:
    """Mean-direction power of the matched competitor.

    This is the lam-average weighted by the mean's energy split across the
    eigenbasis, so it always lies in [min(lam), max(lam)].
    """
    lam = np.asarray(lam, dtype=np.float64).reshape(-1)
    beta = np.asarray(beta, dtype=np.complex128).reshape(-1)
    if lam.size != beta.size:
        raise ValueError("lam and beta must have equal length")
    energy = np.abs(beta) ** 2
    total = float(energy.sum())
    if total == 0.0:
        raise ValueError("beta must be nonzero")
    value = float(np.dot(lam, energy) / total)
    return float(np.clip(value, lam.min(), lam.max()))


def _positive_grid(s):
    arr = np.asarray(s, dtype=np.float64)
    if np.any(arr <= 0.0):
        raise ValueError("transform argument s must be > 0")
    return arr


def j_function(inst: ComparisonInstance, s):
    """Log ratio of the eigenvalue products of the two mixtures.

    Nonpositive whenever the competitor's weight profile is majorized by lam.
    """
    s_arr = _positive_grid(s)
    rest = (1.0 - inst.phi_hat1) / (inst.m - 1)
    upper = np.log1p(np.multiply.outer(inst.lam, s_arr)).sum(axis=0)
    lower = np.log1p(inst.phi_hat1 * s_arr) + (inst.m - 1) * np.log1p(rest * s_arr)
    out = upper - lower
    return float(out) if np.ndim(s) == 0 else out


def r_function(inst: ComparisonInstance, s):
    """Mean-coordinate term of the transform comparison.

    Vanishes as s -> 0+ by construction of phi_hat1 and is >= 0 for matched
    instances (concavity of t -> t / (1 + t s)).
    """
    s_arr = _positive_grid(s)
    aligned = inst.phi_hat1 * inst.mu_norm_sq / (1.0 + inst.phi_hat1 * s_arr)
    t = np.multiply.outer(inst.lam, s_arr)
    weighted = inst.lam * inst.beta_sq
    spread = (weighted.reshape(weighted.shape + (1,) * (t.ndim - 1)) / (1.0 + t)).sum(axis=0)
    out = aligned - spread
    return float(out) if np.ndim(s) == 0 else out


def log_mgf_ratio(inst: ComparisonInstance, s):
    """log mgf(W2, s) - log mgf(W1, s) in closed form.

    Nonpositive on all s > 0 exactly when W1 dominates W2 in the
    Laplace-transform order.
    """
    if inst.alpha <= 0.0:
        raise ValueError("alpha = 0 makes the backward channel deterministic; no ordering to check")
    s_arr = _positive_grid(s)
    out = j_function(inst, s_arr) - (s_arr / inst.alpha) * r_function(inst, s_arr)
    return float(out) if np.ndim(s) == 0 else out


@dataclass(frozen=True)
class LtOrderReport:
    """Grid evaluation of the transform comparison for one instance."""

    s_grid: np.ndarray
    log_ratio: np.ndarray
    max_violation: float
    verdict: str

    @property
    def ordered(self) -> bool:
        return self.verdict == "ordered"

    def to_json_dict(self) -> dict:
        return {
            "s_grid": [float(v) for v in self.s_grid],
            "log_ratio": [float(v) for v in self.log_ratio],
            "max_violation": float(self.max_violation),
            "verdict": self.verdict,
        }


def lt_order_check(inst: ComparisonInstance, grid=DEFAULT_S_GRID) -> LtOrderReport:
    """Evaluate log_mgf_ratio on a geometric s-grid and report the verdict.

    ``ordered`` means the ratio never exceeds ORDER_TOL anywhere on the grid.
    """
    s_min, s_max, n_points = grid
    if not (0.0 < float(s_min) < float(s_max)) or int(n_points) < 2:
        raise ValueError("grid must satisfy 0 < s_min < s_max with >= 2 points")
    s_grid = np.geomspace(float(s_min), float(s_max), int(n_points))
    log_ratio = log_mgf_ratio(inst, s_grid)
    max_violation = float(log_ratio.max())
    verdict = "ordered" if max_violation <= ORDER_TOL else "violated"
    return LtOrderReport(s_grid, log_ratio, max_violation, verdict)


def majorization_check(a, b, tol: float = 1e-12) -> bool:
    """True when ``a`` is majorized by ``b`` (both summing to one).

    Sorted-descending prefix sums of ``a`` must never exceed those of ``b``
    beyond ``tol``.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1)
    b = np.asarray(b, dtype=np.float64).reshape(-1)
    if a.size != b.size:
        raise ValueError("majorization requires equal-length vectors")
    a_sorted = np.sort(a)[::-1]
    b_sorted = np.sort(b)[::-1]
    return bool(np.all(np.cumsum(a_sorted) <= np.cumsum(b_sorted) + tol))


@dataclass(frozen=True)
class Lemma1Report:
    """Monte Carlo check that E log(1 + d W1) <= E log(1 + d W2)."""

    mean1: float
    se1: float
    mean2: float
    se2: float
    combined_se: float
    passed: bool

    @property
    def gap(self) -> float:
        return self.mean2 - self.mean1


def lemma1_check(
    spec1: MixtureSpec,
    spec2: MixtureSpec,
    d: float,
    rng: np.random.Generator,
    n: int = 10**6,
) -> Lemma1Report:
    """Sample both mixtures with common random numbers and compare expected logs."""
    d = float(d)
    if d < 0.0 or not np.isfinite(d):
        raise ValueError("scale d must be finite and >= 0")
    if spec1.m != spec2.m:
        raise ValueError("mixtures must have equal dimension for shared draws")
    n = int(n)
    if n < 2:
        raise ValueError("need at least two samples")
    g = complex_gaussian(rng, (n, spec1.m))
    x1 = np.log1p(d * spec1.evaluate(g))
    x2 = np.log1p(d * spec2.evaluate(g))
    mean1 = float(x1.mean())
    mean2 = float(x2.mean())
    se1 = float(x1.std(ddof=1) / np.sqrt(n))
    se2 = float(x2.std(ddof=1) / np.sqrt(n))
    combined = float(np.hypot(se1, se2))
    passed = mean1 <= mean2 + 3.0 * combined
    return Lemma1Report(mean1, se1, mean2, se2, combined, passed)


def random_comparison_instance(
    rng: np.random.Generator,
    m: int | None = None,
    alpha_range=(0.1, 2.0),
    mu_norm_range=(0.5, 3.0),
) -> ComparisonInstance:
    """Random matched instance: Dirichlet eigenvalues, random mean coordinates."""
    if m is None:
        m = int(rng.integers(2, 7))
    lam = rng.dirichlet(np.ones(int(m)))
    beta = complex_gaussian(rng, int(m))
    norm = float(np.linalg.norm(beta))
    if norm == 0.0:  # vanishing probability; retry once for safety
        beta = complex_gaussian(rng, int(m))
        norm = float(np.linalg.norm(beta))
    beta = beta * (rng.uniform(*mu_norm_range) / norm)
    alpha = float(rng.uniform(*alpha_range))
    return ComparisonInstance.matched(lam, beta, alpha)


def counterexample_instance() -> ComparisonInstance:
    """Deliberately mismatched phi_hat1; the grid check must flag it violated."""
    return ComparisonInstance(
        lam=np.array([0.5, 0.5]),
        beta=np.array([1.0 + 0.0j, 0.0 + 0.0j]),
        alpha=1.0,
        phi_hat1=1.0,
    )
