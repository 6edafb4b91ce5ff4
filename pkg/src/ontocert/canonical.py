"""Builders for standard ontological models of qubit fragments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ontocert.ontology import EpistemicState, FiniteOntModel, OnticSpace, ResponseFunction
from ontocert.quantum import (
    BlochVector,
    KET_0,
    KET_1,
    KET_MINUS,
    KET_PLUS,
    Measurement,
    QuantumState,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    is_rank_one,
    projective_from_direction,
    pure_state_from_bloch,
)

DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class SphereMesh:
    """Latitude-longitude mesh: ``n`` polar bands times ``n`` azimuthal sectors.

    Cell order is latitude index first, then longitude index. Weights are the
    exact solid angles of the cells, so they sum to 4*pi.
    """

    n: int
    centers: np.ndarray
    weights: np.ndarray

    @classmethod
    def latlon(cls, n: int) -> "SphereMesh":
        if n < 2:
            raise ValueError("mesh resolution must be >= 2")
        th = np.linspace(0.0, np.pi, n + 1)
        ph = np.linspace(0.0, 2 * np.pi, n + 1)
        tc = (th[:-1] + th[1:]) / 2
        pc = (ph[:-1] + ph[1:]) / 2
        t, p = np.meshgrid(tc, pc, indexing="ij")
        centers = np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1)
        weights = np.outer(np.cos(th[:-1]) - np.cos(th[1:]), np.diff(ph))
        centers = centers.reshape(-1, 3)
        weights = weights.ravel()
        centers.setflags(write=False)
        weights.setflags(write=False)
        return cls(n, centers, weights)

    def __len__(self) -> int:
        return len(self.weights)

    def labels(self) -> list[str]:
        return [f"cell_{i // self.n}_{i % self.n}" for i in range(len(self))]


def _require_pure_qubits(preps: Sequence[QuantumState]) -> None:
    for y, s in enumerate(preps):
        if s.dim != 2:
            raise ValueError(f"preparation {y} is not a qubit state")
        if not s.is_pure:
            raise ValueError(f"preparation {y} is not pure")


def _require_rank_one(meass: Sequence[Measurement]) -> None:
    for x, m in enumerate(meass):
        if m.dim != 2:
            raise ValueError(f"measurement {x} does not act on a qubit")
        if not is_rank_one(m):
            raise ValueError(f"measurement {x} is not rank-one projective")


def _distinct_points(preps: Sequence[QuantumState]) -> tuple[np.ndarray, list[int]]:
    """Distinct Bloch points of the preparations and each preparation's point index."""
    points: list[np.ndarray] = []
    owner: list[int] = []
    for s in preps:
        r = s.bloch_vector()
        for i, q in enumerate(points):
            if np.max(np.abs(q - r)) <= DEDUP_TOL:
                owner.append(i)
                break
        else:
            owner.append(len(points))
            points.append(r)
    return np.array(points), owner


def _born_on_points(points: np.ndarray, meas: Measurement) -> np.ndarray:
    """Born probabilities [point, outcome] for pure states at Bloch points.

    Uses Tr(rho E) = (Tr E + r . e) / 2 with e the Bloch components of E.
    """
    cols = []
    for e in meas.effects:
        comps = np.array([np.trace(e @ s).real for s in (SIGMA_X, SIGMA_Y, SIGMA_Z)])
        cols.append((np.trace(e).real + points @ comps) / 2)
    return np.clip(np.stack(cols, axis=1), 0.0, 1.0)


def _state_ids(n: int) -> list[str]:
    return [f"P{y}" for y in range(n)]


def _meas_ids(n: int) -> list[str]:
    return [f"M{x}" for x in range(n)]


def build_bb_model(
    preps: Sequence[QuantumState],
    meass: Sequence[Measurement],
    mesh: SphereMesh | None = None,
    prep_ids: Sequence[str] | None = None,
) -> FiniteOntModel:
    """Psi-complete model: the ontic state is the pure state itself.

    Cells: one exact cell per distinct preparation, then the mesh cells.
    All cells carry unit weight; each preparation is a point mass on its own
    cell and responses are Born probabilities of the cell's state.
    """
    _require_pure_qubits(preps)
    _require_rank_one(meass)
    points, owner = _distinct_points(preps)
    mesh_pts = np.zeros((0, 3)) if mesh is None else np.asarray(mesh.centers)
    labels = [f"psi_{i}" for i in range(len(points))] + ([] if mesh is None else mesh.labels())
    all_pts = np.vstack([points, mesh_pts])
    space = OnticSpace(tuple(labels))
    ids = list(prep_ids) if prep_ids is not None else _state_ids(len(preps))
    states = []
    for y, i in enumerate(owner):
        mu = np.zeros(len(space))
        mu[i] = 1.0
        states.append(EpistemicState(space, mu, ids[y], pure=True))
    responses = tuple(
        ResponseFunction(space, _born_on_points(all_pts, m), mid)
        for m, mid in zip(meass, _meas_ids(len(meass)))
    )
    return FiniteOntModel(space, tuple(states), responses, "beltrametti-bugajski")


def build_bell_model(
    preps: Sequence[QuantumState],
    meass: Sequence[Measurement],
    mesh: SphereMesh | None = None,
    hidden_bins: int = 1000,
    prep_ids: Sequence[str] | None = None,
) -> FiniteOntModel:
    """Pure state plus a uniform hidden variable u in [0, 1), binned.

    Outcome k fires when the bin midpoint u falls in the k-th cumulative
    Born interval [F_{k-1}, F_k) of the cell's state. Every bin has unit
    weight and a preparation is uniform over its cell's bins.
    """
    if hidden_bins < 2:
        raise ValueError("hidden_bins must be >= 2")
    _require_pure_qubits(preps)
    _require_rank_one(meass)
    points, owner = _distinct_points(preps)
    mesh_pts = np.zeros((0, 3)) if mesh is None else np.asarray(mesh.centers)
    base_labels = [f"psi_{i}" for i in range(len(points))] + ([] if mesh is None else mesh.labels())
    all_pts = np.vstack([points, mesh_pts])
    n_base = len(all_pts)
    labels = tuple(f"{b}|u{j}" for b in base_labels for j in range(hidden_bins))
    space = OnticSpace(labels)
    ids = list(prep_ids) if prep_ids is not None else _state_ids(len(preps))
    states = []
    for y, i in enumerate(owner):
        mu = np.zeros(len(space))
        mu[i * hidden_bins:(i + 1) * hidden_bins] = 1.0 / hidden_bins
        states.append(EpistemicState(space, mu, ids[y], pure=True))
    mid = (np.arange(hidden_bins) + 0.5) / hidden_bins
    responses = []
    for m, mid_id in zip(meass, _meas_ids(len(meass))):
        born = _born_on_points(all_pts, m)
        xi = np.zeros((n_base, hidden_bins, m.num_outcomes))
        for b in range(n_base):
            cum = np.cumsum(born[b])
            k = np.searchsorted(cum, mid, side="right")
            k = np.minimum(k, m.num_outcomes - 1)
            xi[b, np.arange(hidden_bins), k] = 1.0
        responses.append(ResponseFunction(space, xi.reshape(n_base * hidden_bins, -1), mid_id))
    return FiniteOntModel(space, tuple(states), tuple(responses), "bell")


def build_ks_model(
    preps: Sequence[QuantumState],
    meass: Sequence[Measurement],
    mesh: SphereMesh,
    prep_ids: Sequence[str] | None = None,
) -> FiniteOntModel:
    """Hemisphere model: cosine densities and hemisphere-indicator responses.

    mu(lambda|psi) is proportional to max(psi.lambda, 0), evaluated at cell
    centers and renormalized on the mesh. Outcome 0 fires on the closed
    hemisphere around the outcome-0 Bloch direction, so equator ties go to
    outcome 0.
    """
    for y, s in enumerate(preps):
        if s.dim != 2:
            raise ValueError(f"preparation {y}: the hemisphere model is qubit-only")
    _require_pure_qubits(preps)
    for x, m in enumerate(meass):
        if m.dim != 2 or m.num_outcomes != 2:
            raise ValueError(f"measurement {x}: the hemisphere model needs two-outcome qubit measurements")
    _require_rank_one(meass)
    space = OnticSpace(tuple(mesh.labels()), mesh.weights)
    ids = list(prep_ids) if prep_ids is not None else _state_ids(len(preps))
    states = []
    for s, pid in zip(preps, ids):
        dens = np.maximum(mesh.centers @ s.bloch_vector(), 0.0) / np.pi
        dens = dens / float(dens @ mesh.weights)
        states.append(EpistemicState(space, dens, pid, pure=True))
    responses = []
    for m, mid in zip(meass, _meas_ids(len(meass))):
        up = mesh.centers @ m.bloch_direction(0) >= 0.0
        xi = np.stack([up, ~up], axis=1).astype(float)
        responses.append(ResponseFunction(space, xi, mid))
    return FiniteOntModel(space, tuple(states), tuple(responses), "kochen-specker")


# toy-model preparation and measurement identifiers, in model order
TOY_PREPARATIONS = ("0", "1", "+", "-", "mixed", "mix_z", "mix_x")
TOY_MEASUREMENTS = ("Z", "X")
TOY_QUANTUM_ANALOGUES = {
    "0": KET_0,
    "1": KET_1,
    "+": KET_PLUS,
    "-": KET_MINUS,
    "mixed": QuantumState.maximally_mixed(2),
    "mix_z": QuantumState.maximally_mixed(2),
    "mix_x": QuantumState.maximally_mixed(2),
}
TOY_MEASUREMENT_ANALOGUES = {
    "Z": projective_from_direction(BlochVector(0.0, 0.0)),
    "X": projective_from_direction(BlochVector(np.pi / 2, 0.0)),
}


def build_toy_model() -> FiniteOntModel:
    """Four-state knowledge-balanced toy model of the Z/X qubit fragment.

    Ontic states 1..4. Pure analogues are uniform over a pair; ``mixed``,
    ``mix_z`` (equal mixture of 0 and 1) and ``mix_x`` (equal mixture of
    + and -) are uniform over all four states.
    """
    space = OnticSpace(("1", "2", "3", "4"))
    dists = {
        "0": ([0.5, 0.5, 0, 0], True),
        "1": ([0, 0, 0.5, 0.5], True),
        "+": ([0.5, 0, 0.5, 0], True),
        "-": ([0, 0.5, 0, 0.5], True),
        "mixed": ([0.25] * 4, False),
        "mix_z": ([0.25] * 4, False),
        "mix_x": ([0.25] * 4, False),
    }
    preps = tuple(EpistemicState(space, dists[p][0], p, dists[p][1]) for p in TOY_PREPARATIONS)
    z = np.array([[1, 0], [1, 0], [0, 1], [0, 1]], dtype=float)
    x = np.array([[1, 0], [0, 1], [1, 0], [0, 1]], dtype=float)
    meass = (ResponseFunction(space, z, "Z"), ResponseFunction(space, x, "X"))
    return FiniteOntModel(space, preps, meass, "toy")


def eigenstates(meas: Measurement) -> list[QuantumState]:
    """Pure states certain of each outcome of a rank-one qubit measurement."""
    out = []
    for k in meas.labels:
        out.append(pure_state_from_bloch(BlochVector.from_cartesian(meas.bloch_direction(k))))
    return out
