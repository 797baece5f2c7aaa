"""Backward-channel model, source covariance containers, and the shared
linear-algebra helpers used by the capacity estimators.

The source-relay (backward) channel is a length-M complex vector
``h_B = mu + sqrt(alpha) * h_w`` where ``h_w`` has i.i.d. unit
circularly-symmetric complex Gaussian entries.  The transmitter knows the
mean ``mu`` and the scatter power ``alpha``; the relay-destination (forward)
channel is a scalar drawn from a :class:`FadingDistribution`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "HERMITIAN_TOL",
    "PSD_TOL",
    "TRACE_TOL",
    "UNITARY_TOL",
    "ChannelMeanModel",
    "LinkParams",
    "FadingDistribution",
    "SourceCovariance",
    "CovarianceReport",
    "complex_gaussian",
    "sample_backward_channel",
    "complete_orthonormal_basis",
    "quadratic_form",
    "validate_covariance",
    "db_to_linear",
]

HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-12
TRACE_TOL = 1e-12
UNITARY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-10


def db_to_linear(value_db: float) -> float:
    """Convert a power quantity from decibels to linear units."""
    return float(10.0 ** (float(value_db) / 10.0))


def complex_gaussian(rng: np.random.Generator, shape=()):
    """Unit circularly-symmetric complex Gaussian draws with E|g|^2 = 1."""
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) / np.sqrt(2.0)


@dataclass(frozen=True)
class ChannelMeanModel:
    """Statistics of the backward channel: mean vector and scatter power."""

    mu: np.ndarray
    alpha: float

    def __post_init__(self):
        mu = np.array(self.mu, dtype=np.complex128).reshape(-1)
        if mu.size < 2:
            raise ValueError("channel mean must have at least two antennas")
        if not np.all(np.isfinite(mu)):
            raise ValueError("channel mean entries must be finite")
        alpha = float(self.alpha)
        if not np.isfinite(alpha) or alpha < 0.0:
            raise ValueError("scatter power alpha must be finite and >= 0")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "alpha", alpha)

    @property
    def m(self) -> int:
        return self.mu.size

    @property
    def mu_norm(self) -> float:
        return float(np.linalg.norm(self.mu))

    @property
    def mu_norm_sq(self) -> float:
        return float(np.vdot(self.mu, self.mu).real)


@dataclass(frozen=True)
class LinkParams:
    """Transmit SNR ``gamma`` and relay power budget ``g_relay``, linear units."""

    gamma: float
    g_relay: float

    def __post_init__(self):
        gamma = float(self.gamma)
        g_relay = float(self.g_relay)
        if not np.isfinite(gamma) or gamma <= 0.0:
            raise ValueError("gamma must be finite and > 0")
        if not np.isfinite(g_relay) or g_relay <= 0.0:
            raise ValueError("g_relay must be finite and > 0")
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "g_relay", g_relay)

    @classmethod
    def from_db(cls, gamma_db: float, g_db: float) -> "LinkParams":
        return cls(db_to_linear(gamma_db), db_to_linear(g_db))


@dataclass(frozen=True)
class FadingDistribution:
    """Law of the scalar forward channel coefficient.

    Two built-in kinds: ``rayleigh`` is the unit circularly-symmetric complex
    Gaussian (so |h_F|^2 is unit-mean exponential) and ``constant`` is a
    deterministic complex value.
    """

    kind: str
    value: complex = 1.0 + 0.0j

    _KINDS = ("rayleigh", "constant")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown fading kind {self.kind!r}")
        object.__setattr__(self, "value", complex(self.value))

    @classmethod
    def rayleigh(cls) -> "FadingDistribution":
        return cls("rayleigh")

    @classmethod
    def constant(cls, value: complex = 1.0) -> "FadingDistribution":
        return cls("constant", value)

    def sample(self, rng: np.random.Generator, n: int | None = None):
        shape = () if n is None else (int(n),)
        if self.kind == "rayleigh":
            return complex_gaussian(rng, shape)
        return np.full(shape, self.value, dtype=np.complex128)


@dataclass(frozen=True)
class CovarianceReport:
    """Violation magnitudes for the source covariance contract."""

    hermitian_violation: float
    psd_violation: float
    trace_violation: float

    @property
    def hermitian_ok(self) -> bool:
        return self.hermitian_violation <= HERMITIAN_TOL

    @property
    def psd_ok(self) -> bool:
        return self.psd_violation <= PSD_TOL

    @property
    def trace_ok(self) -> bool:
        return self.trace_violation <= TRACE_TOL

    @property
    def all_ok(self) -> bool:
        return self.hermitian_ok and self.psd_ok and self.trace_ok


def validate_covariance(q) -> CovarianceReport:
    """Measure how far a square matrix is from a unit-trace Hermitian PSD one.

    Never raises on contract violations; callers inspect the report.
    """
    matrix = q.matrix if isinstance(q, SourceCovariance) else np.asarray(q, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError("covariance must be a square matrix")
    herm = float(np.max(np.abs(matrix - matrix.conj().T)))
    sym = 0.5 * (matrix + matrix.conj().T)
    eigs = np.linalg.eigvalsh(sym)
    psd = float(max(0.0, -float(eigs.min())))
    trace = float(abs(np.trace(matrix).real - 1.0))
    return CovarianceReport(herm, psd, trace)


class SourceCovariance:
    """Unit-trace Hermitian PSD transmit covariance.

    May carry an explicit eigenbasis/weight factorization, in which case the
    Monte Carlo estimators sample in the reduced (eigen) frame.
    """

    __slots__ = ("matrix", "basis", "weights")

    def __init__(self, matrix, basis=None, weights=None):
        matrix = np.array(matrix, dtype=np.complex128)
        report = validate_covariance(matrix)
        if not report.hermitian_ok:
            raise ValueError(
                f"covariance not Hermitian (violation {report.hermitian_violation:.3e})"
            )
        if not report.psd_ok:
            raise ValueError(
                f"covariance not positive semidefinite (violation {report.psd_violation:.3e})"
            )
        if not report.trace_ok:
            raise ValueError(f"covariance trace != 1 (violation {report.trace_violation:.3e})")
        if (basis is None) != (weights is None):
            raise ValueError("eigen form needs both basis and weights")
        if basis is not None:
            basis = np.array(basis, dtype=np.complex128)
            weights = np.array(weights, dtype=np.float64).reshape(-1)
            m = matrix.shape[0]
            if basis.shape != (m, m) or weights.size != m:
                raise ValueError("eigen form dimensions do not match the matrix")
            unitary_err = float(np.max(np.abs(basis.conj().T @ basis - np.eye(m))))
            if unitary_err > UNITARY_TOL:
                raise ValueError(f"basis not unitary (violation {unitary_err:.3e})")
            recon = (basis * weights) @ basis.conj().T
            recon_err = float(np.max(np.abs(recon - matrix)))
            if recon_err > RECONSTRUCTION_TOL:
                raise ValueError(
                    f"eigen form does not reproduce the matrix (violation {recon_err:.3e})"
                )
            basis.setflags(write=False)
            weights.setflags(write=False)
        matrix.setflags(write=False)
        self.matrix = matrix
        self.basis = basis
        self.weights = weights

    @classmethod
    def from_matrix(cls, matrix) -> "SourceCovariance":
        return cls(matrix)

    @classmethod
    def from_eigen(cls, basis, weights) -> "SourceCovariance":
        basis = np.asarray(basis, dtype=np.complex128)
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        matrix = (basis * weights) @ basis.conj().T
        return cls(matrix, basis=basis, weights=weights)

    @classmethod
    def isotropic(cls, m: int) -> "SourceCovariance":
        m = int(m)
        return cls.from_eigen(np.eye(m, dtype=np.complex128), np.full(m, 1.0 / m))

    @property
    def m(self) -> int:
        return self.matrix.shape[0]

    @property
    def has_eigen(self) -> bool:
        return self.basis is not None

    def __repr__(self) -> str:
        tag = "eigen" if self.has_eigen else "matrix"
        return f"SourceCovariance(m={self.m}, form={tag})"


def sample_backward_channel(model: ChannelMeanModel, rng: np.random.Generator, size=None):
    """Draw ``mu + sqrt(alpha) * h_w``; shape (M,) or (size, M)."""
    shape = (model.m,) if size is None else (int(size), model.m)
    if model.alpha == 0.0:
        draws = np.broadcast_to(model.mu, shape).copy()
        return draws
    return model.mu + np.sqrt(model.alpha) * complex_gaussian(rng, shape)


def complete_orthonormal_basis(mu) -> np.ndarray:
    """Unitary matrix whose first column is mu / ||mu||.

    Built from a single Householder reflector, so the result is deterministic
    and exactly unitary up to rounding.  Raises on a zero vector because the
    mean direction is undefined there.
    """
    mu = np.asarray(mu, dtype=np.complex128).reshape(-1)
    norm = float(np.linalg.norm(mu))
    if norm == 0.0 or not np.isfinite(norm):
        raise ValueError("mean direction undefined for a zero vector")
    u = mu / norm
    m = u.size
    sigma = u[0] / abs(u[0]) if u[0] != 0 else 1.0 + 0.0j
    v = u.copy()
    v[0] += sigma
    reflector = np.eye(m, dtype=np.complex128)
    reflector -= (2.0 / float(np.vdot(v, v).real)) * np.outer(v, v.conj())
    # The reflector maps e1 to -conj(sigma) * u; the phase flip below puts
    # mu / ||mu|| in the first column exactly.
    return -sigma * reflector


def quadratic_form(h, q):
    """h^H Q h as a nonnegative real; ``h`` may be one vector or a batch (n, M)."""
    qm = q.matrix if isinstance(q, SourceCovariance) else np.asarray(q, dtype=np.complex128)
    if qm.ndim != 2 or qm.shape[0] != qm.shape[1]:
        raise ValueError("covariance must be a square matrix")
    h = np.asarray(h, dtype=np.complex128)
    if h.shape[-1] != qm.shape[0]:
        raise ValueError(
            f"vector length {h.shape[-1]} does not match covariance size {qm.shape[0]}"
        )
    values = np.einsum("...i,ij,...j->...", h.conj(), qm, h).real
    values = np.maximum(values, 0.0)
    if values.ndim == 0:
        return float(values)
    return values
