"""Small-dimension quantum states, measurements and two-state discrimination."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

MAX_DIM = 8
HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
EIG_TOL = 1e-12
PURITY_TOL = 1e-10
CLAMP_TOL = 1e-12
RANK_CUTOFF = 1e-10

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)


class DimensionError(ValueError):
    """Operands live on Hilbert spaces of different dimension."""


def as_matrix(entries) -> np.ndarray:
    """Validate and freeze a square complex matrix of dimension <= MAX_DIM."""
    m = np.array(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not 1 <= m.shape[0] <= MAX_DIM:
        raise ValueError(f"dimension must be in [1, {MAX_DIM}], got {m.shape[0]}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    m.setflags(write=False)
    return m


def _is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def hermitian_eigenvalues(m: np.ndarray) -> np.ndarray:
    """Ascending real eigenvalues of a Hermitian matrix."""
    return np.linalg.eigvalsh((m + m.conj().T) / 2)


@dataclass(frozen=True)
class QuantumState:
    """Density matrix with a purity flag.

    ``is_pure`` is derived from Tr(rho^2) when not given; a given flag must
    agree with it.
    """

    rho: np.ndarray
    is_pure: bool | None = None

    def __post_init__(self) -> None:
        rho = as_matrix(self.rho)
        if not _is_hermitian(rho):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho)
        if abs(tr - 1) > TRACE_TOL:
            raise ValueError(f"density matrix trace is {tr.real:.3g}, expected 1")
        if hermitian_eigenvalues(rho)[0] < -EIG_TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        pure = abs(np.trace(rho @ rho).real - 1) <= PURITY_TOL
        if self.is_pure is not None and bool(self.is_pure) != pure:
            raise ValueError(f"is_pure={self.is_pure} contradicts Tr(rho^2)")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "is_pure", pure)

    @property
    def dim(self) -> int:
        return self.rho.shape[0]

    @classmethod
    def from_vector(cls, psi: Sequence[complex]) -> "QuantumState":
        v = np.asarray(psi, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def maximally_mixed(cls, dim: int = 2) -> "QuantumState":
        return cls(np.eye(dim, dtype=complex) / dim)

    def bloch_vector(self) -> np.ndarray:
        """Real Bloch vector (qubits only)."""
        if self.dim != 2:
            raise DimensionError("Bloch vector is defined for qubits only")
        return np.array(
            [np.trace(self.rho @ s).real for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
        )


@dataclass(frozen=True)
class Measurement:
    """Ordered POVM; outcome ``k`` is ``effects[k]``."""

    effects: tuple[np.ndarray, ...]

    def __post_init__(self) -> None:
        effects = tuple(as_matrix(e) for e in self.effects)
        if len(effects) < 2:
            raise ValueError("a measurement needs at least two effects")
        dim = effects[0].shape[0]
        if any(e.shape[0] != dim for e in effects):
            raise DimensionError("effects have different dimensions")
        for k, e in enumerate(effects):
            if not _is_hermitian(e):
                raise ValueError(f"effect {k} is not Hermitian")
            if hermitian_eigenvalues(e)[0] < -EIG_TOL:
                raise ValueError(f"effect {k} is not positive semidefinite")
        if np.max(np.abs(sum(effects) - np.eye(dim))) > TRACE_TOL:
            raise ValueError("effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def num_outcomes(self) -> int:
        return len(self.effects)

    @property
    def labels(self) -> range:
        return range(len(self.effects))

    def bloch_direction(self, outcome: int = 0) -> np.ndarray:
        """Unit Bloch direction of a rank-one qubit effect."""
        if self.dim != 2:
            raise DimensionError("Bloch direction is defined for qubits only")
        e = self.effects[outcome]
        r = np.array([np.trace(e @ s).real for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)])
        norm = np.linalg.norm(r)
        if norm < RANK_CUTOFF:
            raise ValueError(f"effect {outcome} has no Bloch direction")
        return r / norm


@dataclass(frozen=True)
class BlochVector:
    theta: float
    phi: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.theta <= np.pi:
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        if not 0.0 <= self.phi < 2 * np.pi:
            raise ValueError(f"phi={self.phi} outside [0, 2pi)")

    @classmethod
    def normalized(cls, theta: float, phi: float = 0.0) -> "BlochVector":
        """Fold arbitrary angles onto the canonical ranges."""
        theta = float(np.mod(theta, 2 * np.pi))
        if theta > np.pi:
            theta = 2 * np.pi - theta
            phi = phi + np.pi
        phi = float(np.mod(phi, 2 * np.pi))
        if phi >= 2 * np.pi:
            phi = 0.0
        return cls(min(theta, np.pi), phi)

    @classmethod
    def from_cartesian(cls, r: Sequence[float]) -> "BlochVector":
        x, y, z = np.asarray(r, dtype=float) / np.linalg.norm(r)
        return cls.normalized(float(np.arccos(np.clip(z, -1, 1))), float(np.arctan2(y, x)))

    def cartesian(self) -> np.ndarray:
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])


def _ket(b: BlochVector) -> np.ndarray:
    return np.array([np.cos(b.theta / 2), np.exp(1j * b.phi) * np.sin(b.theta / 2)])


def pure_state_from_bloch(b: BlochVector) -> QuantumState:
    """|psi><psi| with psi = (cos(theta/2), e^{i phi} sin(theta/2))."""
    return QuantumState.from_vector(_ket(b))


def projective_from_direction(b: BlochVector) -> Measurement:
    """Two-outcome measurement of n.sigma; outcome 0 is the +1 eigenprojector."""
    up = _ket(b)
    p0 = np.outer(up, up.conj())
    return Measurement((p0, IDENTITY_2 - p0))


def born_probability(state: QuantumState, meas: Measurement, outcome: int) -> float:
    """Tr(rho M_k), clamped onto [0, 1] when within float noise of the boundary."""
    if state.dim != meas.dim:
        raise DimensionError(f"state dim {state.dim} != measurement dim {meas.dim}")
    if not 0 <= outcome < meas.num_outcomes:
        raise IndexError(f"outcome {outcome} out of range for {meas.num_outcomes} effects")
    p = float(np.trace(state.rho @ meas.effects[outcome]).real)
    if p < 0.0:
        if p < -CLAMP_TOL:
            raise ValueError(f"negative Born probability {p}")
        return 0.0
    if p > 1.0:
        if p > 1.0 + CLAMP_TOL:
            raise ValueError(f"Born probability {p} exceeds 1")
        return 1.0
    return p


def is_rank_one(meas: Measurement) -> bool:
    """True iff every effect has numerical rank <= 1."""
    for e in meas.effects:
        sv = np.linalg.svd(e, compute_uv=False)
        if int(np.sum(sv > RANK_CUTOFF)) > 1:
            return False
    return True


def trace_distance(s0: QuantumState, s1: QuantumState) -> float:
    if s0.dim != s1.dim:
        raise DimensionError(f"dims {s0.dim} and {s1.dim} differ")
    ev = hermitian_eigenvalues(s0.rho - s1.rho)
    return float(min(1.0, 0.5 * np.sum(np.abs(ev))))


def helstrom_two_state(s0: QuantumState, s1: QuantumState) -> float:
    """Optimal equal-prior success probability for discriminating two states."""
    return 0.5 + 0.5 * trace_distance(s0, s1)


# named qubit states used throughout
KET_0 = QuantumState.from_vector([1, 0])
KET_1 = QuantumState.from_vector([0, 1])
KET_PLUS = QuantumState.from_vector([1, 1])
KET_MINUS = QuantumState.from_vector([1, -1])
