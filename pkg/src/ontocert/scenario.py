"""The two-preparation / two-measurement game and its quantum strategies."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from ontocert.quantum import (
    BlochVector,
    Measurement,
    QuantumState,
    born_probability,
    is_rank_one,
    projective_from_direction,
    pure_state_from_bloch,
)

NORMALIZATION_TOL = 1e-10
GRID_STEP = np.pi / 64


@dataclass(frozen=True)
class CoefficientTable:
    """Nonnegative rational weights c[a, x, y]; missing keys weigh zero."""

    entries: Mapping[tuple[int, int, int], Fraction]

    def __post_init__(self) -> None:
        clean = {}
        for key, w in self.entries.items():
            w = Fraction(w)
            if w < 0:
                raise ValueError(f"negative coefficient at {key}")
            if w != 0:
                clean[tuple(int(i) for i in key)] = w
        object.__setattr__(self, "entries", dict(sorted(clean.items())))

    def __getitem__(self, key: tuple[int, int, int]) -> Fraction:
        return self.entries.get(tuple(key), Fraction(0))

    def support(self) -> list[tuple[int, int, int]]:
        return list(self.entries)


@dataclass(frozen=True)
class BehaviorTable:
    """Conditional probabilities p(a | x, y) stored as ``probs[x, y, a]``.

    Rows for measurements with fewer outcomes than the widest one are
    zero-padded; ``outcome_counts[x]`` gives the real cardinality.
    """

    probs: np.ndarray
    outcome_counts: tuple[int, ...]

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 3:
            raise ValueError("probs must have shape (measurements, preparations, outcomes)")
        counts = tuple(int(c) for c in self.outcome_counts)
        if len(counts) != probs.shape[0]:
            raise ValueError("one outcome count per measurement required")
        if any(c < 2 or c > probs.shape[2] for c in counts):
            raise ValueError(f"invalid outcome counts {counts}")
        if np.any(probs < -NORMALIZATION_TOL) or np.any(probs > 1 + NORMALIZATION_TOL):
            raise ValueError("probabilities outside [0, 1]")
        for x, c in enumerate(counts):
            if np.any(probs[x, :, c:] != 0):
                raise ValueError(f"measurement {x} has mass beyond its {c} outcomes")
        sums = probs.sum(axis=2)
        if np.max(np.abs(sums - 1)) > NORMALIZATION_TOL:
            raise ValueError("behavior rows are not normalized")
        probs = np.clip(probs, 0.0, 1.0)
        probs.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "outcome_counts", counts)

    @property
    def num_measurements(self) -> int:
        return self.probs.shape[0]

    @property
    def num_preparations(self) -> int:
        return self.probs.shape[1]

    def p(self, a: int, x: int, y: int) -> float:
        if not (0 <= x < self.num_measurements and 0 <= y < self.num_preparations):
            raise KeyError((a, x, y))
        if not 0 <= a < self.outcome_counts[x]:
            raise KeyError((a, x, y))
        return float(self.probs[x, y, a])

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[Sequence[float]]]) -> "BehaviorTable":
        """Build from nested ``rows[x][y] = [p(0|x,y), p(1|x,y), ...]``."""
        counts = [len(rows[x][0]) for x in range(len(rows))]
        width = max(counts)
        probs = np.zeros((len(rows), len(rows[0]), width))
        for x, per_prep in enumerate(rows):
            for y, dist in enumerate(per_prep):
                probs[x, y, : len(dist)] = dist
        return cls(probs, tuple(counts))

    @classmethod
    def uniform(cls, n_meas: int = 2, n_preps: int = 2, outcomes: int = 2) -> "BehaviorTable":
        return cls(np.full((n_meas, n_preps, outcomes), 1.0 / outcomes), (outcomes,) * n_meas)

    def mix(self, other: "BehaviorTable", alpha: float) -> "BehaviorTable":
        """Convex combination alpha*self + (1-alpha)*other."""
        if self.probs.shape != other.probs.shape or self.outcome_counts != other.outcome_counts:
            raise ValueError("behaviors have different shapes")
        return BehaviorTable(alpha * self.probs + (1 - alpha) * other.probs, self.outcome_counts)

    def select(self, measurements: Sequence[int], preparations: Sequence[int]) -> "BehaviorTable":
        """Sub-table restricted to the given measurement and preparation indices."""
        sub = self.probs[np.ix_(list(measurements), list(preparations))]
        counts = tuple(self.outcome_counts[x] for x in measurements)
        return BehaviorTable(sub[:, :, : max(counts)], counts)


@dataclass(frozen=True)
class QuantumStrategy:
    preparations: tuple[QuantumState, ...]
    measurements: tuple[Measurement, ...]

    def __post_init__(self) -> None:
        preps = tuple(self.preparations)
        meass = tuple(self.measurements)
        if len(preps) != 2 or len(meass) != 2:
            raise ValueError("the game uses exactly two preparations and two measurements")
        for x, m in enumerate(meass):
            if not is_rank_one(m):
                raise ValueError(f"measurement {x} is not rank-one")
        object.__setattr__(self, "preparations", preps)
        object.__setattr__(self, "measurements", meass)


def task_coefficients() -> CoefficientTable:
    """Weight 1/4 on outcome a = x*y for x, y in {0, 1}."""
    return CoefficientTable(
        {(x * y, x, y): Fraction(1, 4) for x in (0, 1) for y in (0, 1)}
    )


def success_probability(behavior: BehaviorTable, coeffs: CoefficientTable | None = None) -> float:
    if coeffs is None:
        coeffs = task_coefficients()
    total = 0.0
    for (a, x, y), w in coeffs.entries.items():
        try:
            p = behavior.p(a, x, y)
        except KeyError:
            raise KeyError(f"behavior has no entry for (a={a}, x={x}, y={y})") from None
        total += float(w) * p
    return total


def quantum_behavior(strategy: QuantumStrategy) -> BehaviorTable:
    rows = [
        [
            [born_probability(rho, m, a) for a in m.labels]
            for rho in strategy.preparations
        ]
        for m in strategy.measurements
    ]
    return BehaviorTable.from_rows(rows)


# Outcome 0 of the second measurement is the -1 eigenprojector of (sz - sx)/sqrt2,
# i.e. the +1 eigenprojector along (x - z)/sqrt2; with this labeling all four
# winning probabilities equal cos^2(pi/8).
REFERENCE_ANGLES = (
    BlochVector(np.pi / 2, 0.0),  # preparation y=0: |+>
    BlochVector(0.0, 0.0),  # preparation y=1: |0>
    BlochVector(np.pi / 4, 0.0),  # measurement x=0: (sz + sx)/sqrt2
    BlochVector(3 * np.pi / 4, 0.0),  # measurement x=1: eigenbasis of (sz - sx)/sqrt2
)


def strategy_from_angles(angles: Sequence[BlochVector]) -> QuantumStrategy:
    """Strategy from (prep0, prep1, meas0, meas1) Bloch directions."""
    p0, p1, m0, m1 = angles
    return QuantumStrategy(
        (pure_state_from_bloch(p0), pure_state_from_bloch(p1)),
        (projective_from_direction(m0), projective_from_direction(m1)),
    )


def reference_strategy() -> QuantumStrategy:
    return strategy_from_angles(REFERENCE_ANGLES)


def _game_value_from_vectors(p0, p1, m0, m1) -> float:
    # P_S = 1/2 + (p0.m0 + p0.m1 + p1.m0 - p1.m1)/8 for pure qubit states and
    # rank-one projective qubit measurements
    return 0.5 + (p0 @ m0 + p0 @ m1 + p1 @ m0 - p1 @ m1) / 8.0


@dataclass(frozen=True)
class OptimizationResult:
    strategy: QuantumStrategy
    value: float
    angles: tuple[BlochVector, ...]
    grid_value: float
    sweeps: int


def _grid_directions(step: float, full_phase: bool) -> tuple[np.ndarray, list[tuple[float, float]]]:
    """Grid of Bloch directions as (cartesian array, (theta, phi) list)."""
    n_theta = int(round(np.pi / step))
    thetas = [i * step for i in range(n_theta + 1)]
    if full_phase:
        n_phi = int(round(2 * np.pi / step))
        phis = [j * step for j in range(n_phi)]
    else:
        phis = [0.0, np.pi]
    pts: list[tuple[float, float]] = []
    seen: set[tuple[float, float, float]] = set()
    for th in thetas:
        for ph in phis:
            b = BlochVector(th, ph)
            key = tuple(np.round(b.cartesian(), 12))
            if key in seen:
                continue
            seen.add(key)
            pts.append((th, ph))
    cart = np.array([BlochVector(th, ph).cartesian() for th, ph in pts])
    return cart, pts


def optimize_quantum_qubit(
    budget: int = 20,
    seed: int = 0,
    *,
    full_phase: bool = False,
    grid_step: float = GRID_STEP,
) -> OptimizationResult:
    """Grid search over Bloch angles followed by coordinate refinement.

    The coarse stage is exhaustive over the grid: for fixed measurement
    directions the objective separates over the two preparations, so the
    best preparation for every measurement pair is found by a max over the
    grid. Ties go to the first maximum found, scanning measurement 0, then
    measurement 1, then the preparations in grid order.
    ``budget`` is the number of refinement sweeps; ``seed`` fixes the order
    in which coordinates are visited. With ``full_phase`` the azimuth is a
    free coordinate and the coarse grid uses step pi/16.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if full_phase:
        grid_step = max(grid_step, np.pi / 16)
    cart, pts = _grid_directions(grid_step, full_phase)
    n = len(pts)
    best = (-np.inf, None)
    for i in range(n):
        m0 = cart[i]
        plus = cart + m0  # m0 + m1 for every m1
        minus = m0 - cart  # m0 - m1
        s_plus = cart @ plus.T  # [prep, m1]
        s_minus = cart @ minus.T
        best_p0 = np.argmax(s_plus, axis=0)
        best_p1 = np.argmax(s_minus, axis=0)
        vals = 0.5 + (s_plus[best_p0, np.arange(n)] + s_minus[best_p1, np.arange(n)]) / 8.0
        j = int(np.argmax(vals))
        if vals[j] > best[0] + 1e-15:
            best = (float(vals[j]), (int(best_p0[j]), int(best_p1[j]), i, j))
    grid_value, idx = best
    coords = [list(pts[k]) for k in idx]

    def value_of(c) -> float:
        vs = [BlochVector.normalized(th, ph).cartesian() for th, ph in c]
        return float(_game_value_from_vectors(*vs))

    current = value_of(coords)
    rng = np.random.default_rng(seed)
    free = [(v, 0) for v in range(4)] + ([(v, 1) for v in range(4)] if full_phase else [])
    step = grid_step / 2
    sweeps = 0
    for _ in range(budget):
        sweeps += 1
        improved = False
        for pos in rng.permutation(len(free)):
            v, c = free[pos]
            for delta in (step, -step):
                trial = [list(t) for t in coords]
                trial[v][c] += delta
                val = value_of(trial)
                if val > current + 1e-15:
                    coords, current, improved = trial, val, True
                    break
        if not improved:
            step /= 2
    angles = tuple(BlochVector.normalized(th, ph) for th, ph in coords)
    strategy = strategy_from_angles(angles)
    value = success_probability(quantum_behavior(strategy))
    return OptimizationResult(strategy, value, angles, grid_value, sweeps)


def sweep_rows(kind: str, start: float, stop: float, step: float) -> Iterable[dict]:
    """Game value along a one-parameter family of qubit strategies.

    ``measurement``: preparations fixed to |+>, |0>; measurement directions at
    pi/2 -/+ t/2 in the xz-plane (t = separation). ``preparation``:
    measurements fixed to the optimal pair, preparation y=0 at angle t from |0>.
    """
    if step <= 0 or stop < start:
        raise ValueError("need step > 0 and stop >= start")
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    for i in range(n):
        t = start + i * step
        if kind == "measurement":
            angles = (
                REFERENCE_ANGLES[0],
                REFERENCE_ANGLES[1],
                BlochVector.normalized(np.pi / 2 - t / 2, 0.0),
                BlochVector.normalized(np.pi / 2 + t / 2, 0.0),
            )
        elif kind == "preparation":
            angles = (BlochVector.normalized(t, 0.0),) + REFERENCE_ANGLES[1:]
        else:
            raise ValueError(f"unknown sweep kind {kind!r}")
        value = success_probability(quantum_behavior(strategy_from_angles(angles)))
        yield {
            "t": t,
            "prep0_theta": angles[0].theta,
            "prep0_phi": angles[0].phi,
            "prep1_theta": angles[1].theta,
            "prep1_phi": angles[1].phi,
            "meas0_theta": angles[2].theta,
            "meas0_phi": angles[2].phi,
            "meas1_theta": angles[3].theta,
            "meas1_phi": angles[3].phi,
            "P_S": value,
            "classical_bound": 0.75,
        }
