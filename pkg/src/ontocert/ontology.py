"""Finite ontological models and the assumption predicates evaluated on them.

Every integral over the ontic space becomes a weighted sum over cells:
a preparation is a density ``mu`` with ``sum(mu * weights) == 1`` and a
measurement is a row-stochastic response matrix ``xi[lambda, k]``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ontocert.scenario import BehaviorTable

NORM_TOL = 1e-10
SUPPORT_THRESHOLD = 1e-12
DEFAULT_TOL = 1e-9
FORMAT_NAME = "ontocert-model"
FORMAT_VERSION = 1


class SpaceMismatchError(ValueError):
    """Objects defined on different ontic spaces were combined."""


@dataclass(frozen=True, eq=False)
class OnticSpace:
    labels: tuple[str, ...]
    weights: np.ndarray | None = None

    def __post_init__(self) -> None:
        labels = tuple(str(label) for label in self.labels)
        if not labels:
            raise ValueError("ontic space must contain at least one state")
        if len(set(labels)) != len(labels):
            raise ValueError("ontic state labels must be unique")
        w = np.ones(len(labels)) if self.weights is None else np.array(self.weights, dtype=float)
        if w.shape != (len(labels),):
            raise ValueError("one weight per ontic state required")
        if np.any(~np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("cell weights must be finite and positive")
        w.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "weights", w)

    def __len__(self) -> int:
        return len(self.labels)

    def same_as(self, other: "OnticSpace") -> bool:
        return self is other or (
            self.labels == other.labels and np.array_equal(self.weights, other.weights)
        )


@dataclass(frozen=True, eq=False)
class EpistemicState:
    """Distribution over ontic states induced by one preparation."""

    space: OnticSpace
    mu: np.ndarray
    preparation_id: str = ""
    pure: bool = False

    def __post_init__(self) -> None:
        mu = np.array(self.mu, dtype=float)
        if mu.shape != (len(self.space),):
            raise ValueError(f"mu has shape {mu.shape}, expected ({len(self.space)},)")
        if np.any(~np.isfinite(mu)) or np.any(mu < 0):
            raise ValueError(f"mu for {self.preparation_id!r} must be finite and nonnegative")
        total = float(mu @ self.space.weights)
        if abs(total - 1) > NORM_TOL:
            raise ValueError(f"mu for {self.preparation_id!r} integrates to {total}, not 1")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @property
    def mass(self) -> np.ndarray:
        """Probability mass per cell (density times cell weight)."""
        return self.mu * self.space.weights


@dataclass(frozen=True, eq=False)
class ResponseFunction:
    """Outcome probabilities ``xi[lambda, k]`` for one measurement."""

    space: OnticSpace
    xi: np.ndarray
    measurement_id: str = ""
    projective: bool = True

    def __post_init__(self) -> None:
        xi = np.array(self.xi, dtype=float)
        if xi.ndim != 2 or xi.shape[0] != len(self.space) or xi.shape[1] < 2:
            raise ValueError(f"xi must have shape ({len(self.space)}, >=2), got {xi.shape}")
        if np.any(~np.isfinite(xi)) or np.any(xi < 0):
            raise ValueError(f"xi for {self.measurement_id!r} must be finite and nonnegative")
        if np.max(np.abs(xi.sum(axis=1) - 1)) > NORM_TOL:
            raise ValueError(f"xi for {self.measurement_id!r} is not normalized on every state")
        xi.setflags(write=False)
        object.__setattr__(self, "xi", xi)

    @property
    def num_outcomes(self) -> int:
        return self.xi.shape[1]


@dataclass(frozen=True)
class SupportSet:
    members: np.ndarray
    threshold: float

    def __len__(self) -> int:
        return int(self.members.sum())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.members)


@dataclass(frozen=True, eq=False)
class FiniteOntModel:
    space: OnticSpace
    preparations: tuple[EpistemicState, ...]
    measurements: tuple[ResponseFunction, ...]
    name: str = ""

    def __post_init__(self) -> None:
        preps = tuple(self.preparations)
        meass = tuple(self.measurements)
        for obj in preps + meass:
            if not obj.space.same_as(self.space):
                raise SpaceMismatchError("all preparations and measurements must share one ontic space")
        object.__setattr__(self, "preparations", preps)
        object.__setattr__(self, "measurements", meass)

    @property
    def outcome_counts(self) -> tuple[int, ...]:
        return tuple(m.num_outcomes for m in self.measurements)

    def preparation_index(self, prep_id: str) -> int:
        for y, p in enumerate(self.preparations):
            if p.preparation_id == prep_id:
                return y
        raise KeyError(prep_id)

    def measurement_index(self, meas_id: str) -> int:
        for x, m in enumerate(self.measurements):
            if m.measurement_id == meas_id:
                return x
        raise KeyError(meas_id)

    def mu_matrix(self) -> np.ndarray:
        return np.stack([p.mu for p in self.preparations])

    # -- serialization -------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "name": self.name,
            "space": {
                "labels": list(self.space.labels),
                "weights": [float(w) for w in self.space.weights],
            },
            "preparations": [
                {"id": p.preparation_id, "pure": bool(p.pure), "mu": [float(v) for v in p.mu]}
                for p in self.preparations
            ],
            "measurements": [
                {
                    "id": m.measurement_id,
                    "projective": bool(m.projective),
                    "outcomes": m.num_outcomes,
                    "xi": [float(v) for v in m.xi.ravel()],
                }
                for m in self.measurements
            ],
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "FiniteOntModel":
        if doc.get("format") != FORMAT_NAME:
            raise ValueError(f"not an {FORMAT_NAME} document")
        if doc.get("version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {doc.get('version')!r}")
        space = OnticSpace(tuple(doc["space"]["labels"]), doc["space"].get("weights"))
        preps = tuple(
            EpistemicState(space, p["mu"], p.get("id", f"P{y}"), bool(p.get("pure", False)))
            for y, p in enumerate(doc["preparations"])
        )
        meass = []
        for x, m in enumerate(doc["measurements"]):
            k = int(m["outcomes"])
            xi = np.asarray(m["xi"], dtype=float)
            if xi.size != len(space) * k:
                raise ValueError(f"measurement {x}: xi has {xi.size} entries, expected {len(space) * k}")
            meass.append(
                ResponseFunction(space, xi.reshape(len(space), k), m.get("id", f"M{x}"),
                                 bool(m.get("projective", True)))
            )
        return cls(space, preps, tuple(meass), doc.get("name", ""))

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def loads(cls, text: str) -> "FiniteOntModel":
        return cls.from_dict(json.loads(text))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps() + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "FiniteOntModel":
        return cls.loads(Path(path).read_text())


@dataclass(frozen=True)
class Verdict:
    passed: bool
    witness: dict[str, Any] | None = None
    details: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {"passed": self.passed, "witness": self.witness, **self.details}


def reconstruct_probability(model: FiniteOntModel, y: int, x: int, k: int) -> float:
    """p(k | M_x, P_y) as the weighted sum of xi(k|lambda) mu(lambda|P_y)."""
    if not 0 <= y < len(model.preparations):
        raise IndexError(f"preparation {y} out of range")
    if not 0 <= x < len(model.measurements):
        raise IndexError(f"measurement {x} out of range")
    meas = model.measurements[x]
    if not 0 <= k < meas.num_outcomes:
        raise IndexError(f"outcome {k} out of range for measurement {x}")
    return float(model.preparations[y].mass @ meas.xi[:, k])


def behavior_of_model(
    model: FiniteOntModel,
    preparations: Sequence[int] | None = None,
    measurements: Sequence[int] | None = None,
) -> BehaviorTable:
    ys = range(len(model.preparations)) if preparations is None else list(preparations)
    xs = range(len(model.measurements)) if measurements is None else list(measurements)
    mass = np.stack([model.preparations[y].mass for y in ys])
    counts = tuple(model.measurements[x].num_outcomes for x in xs)
    probs = np.zeros((len(xs), len(ys), max(counts)))
    for i, x in enumerate(xs):
        xi = model.measurements[x].xi
        probs[i, :, : xi.shape[1]] = mass @ xi
    return BehaviorTable(np.clip(probs, 0.0, 1.0), counts)


def total_variation(mu1: EpistemicState, mu2: EpistemicState) -> float:
    if not mu1.space.same_as(mu2.space):
        raise SpaceMismatchError("epistemic states live on different ontic spaces")
    return float(0.5 * np.sum(np.abs(mu1.mu - mu2.mu) * mu1.space.weights))


def support(mu: EpistemicState, threshold: float = SUPPORT_THRESHOLD) -> SupportSet:
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    members = mu.mu > threshold
    members.setflags(write=False)
    return SupportSet(members, threshold)


def check_no_overlap(
    model: FiniteOntModel, pure_preps: Sequence[int], tol: float = DEFAULT_TOL
) -> Verdict:
    """Pairwise total variation 1 between the listed pure preparations."""
    for y in pure_preps:
        if not model.preparations[y].pure:
            raise ValueError(f"preparation {y} ({model.preparations[y].preparation_id!r}) is not flagged pure")
    pairs = []
    witness = None
    for i, j in combinations(range(len(pure_preps)), 2):
        a, b = pure_preps[i], pure_preps[j]
        tv = total_variation(model.preparations[a], model.preparations[b])
        overlap = 1.0 - tv
        pairs.append({"pair": [a, b], "total_variation": tv, "overlap_mass": overlap})
        if witness is None and overlap > tol:
            witness = {
                "pair": [a, b],
                "ids": [model.preparations[a].preparation_id, model.preparations[b].preparation_id],
                "overlap_mass": overlap,
            }
    return Verdict(witness is None, witness, {"pairs": pairs, "tol": tol})


def check_strong_duality(
    model: FiniteOntModel,
    tol: float = DEFAULT_TOL,
    threshold: float = SUPPORT_THRESHOLD,
) -> Verdict:
    """Responses of certain outcomes must be the indicator of the shared support.

    For each projective measurement and outcome, collect the pure
    preparations that yield the outcome with probability 1 (within ``tol``).
    If any exist, the response must be 1 on the intersection of their
    supports and 0 elsewhere. Outcomes no pure preparation is certain of
    impose nothing.
    """
    pure = [y for y, p in enumerate(model.preparations) if p.pure]
    checked = []
    for x, meas in enumerate(model.measurements):
        if not meas.projective:
            continue
        mass = np.stack([model.preparations[y].mass for y in pure]) if pure else np.zeros((0, len(model.space)))
        probs = mass @ meas.xi
        for k in range(meas.num_outcomes):
            certain = [pure[i] for i in np.flatnonzero(np.abs(probs[:, k] - 1) <= tol)]
            if not certain:
                continue
            inter = np.ones(len(model.space), dtype=bool)
            for y in certain:
                inter &= support(model.preparations[y], threshold).members
            target = inter.astype(float)
            bad = np.flatnonzero(np.abs(meas.xi[:, k] - target) > tol)
            checked.append({"measurement": x, "outcome": k, "certain_preparations": certain,
                            "intersection_size": int(inter.sum())})
            if bad.size:
                lam = int(bad[0])
                witness = {
                    "measurement": x,
                    "measurement_id": meas.measurement_id,
                    "outcome": k,
                    "ontic_state": model.space.labels[lam],
                    "response": float(meas.xi[lam, k]),
                    "expected": float(target[lam]),
                    "certain_preparations": certain,
                    "violations": int(bad.size),
                }
                return Verdict(False, witness, {"checked": checked, "tol": tol, "threshold": threshold})
    return Verdict(True, None, {"checked": checked, "tol": tol, "threshold": threshold})


def check_convexity(
    model: FiniteOntModel,
    target: int,
    components: Sequence[int],
    weights: Sequence[float],
    tol: float = NORM_TOL,
) -> Verdict:
    w = np.asarray(weights, dtype=float)
    if len(components) != len(w):
        raise ValueError("one weight per component required")
    if np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("mixture weights must be nonnegative and sum to 1")
    for y in (target, *components):
        if not 0 <= y < len(model.preparations):
            raise IndexError(f"preparation {y} out of range")
    mix = sum(wi * model.preparations[c].mu for wi, c in zip(w, components))
    diff = np.abs(model.preparations[target].mu - mix)
    worst = int(np.argmax(diff))
    passed = bool(diff[worst] <= tol)
    witness = None if passed else {"ontic_state": model.space.labels[worst], "deviation": float(diff[worst])}
    return Verdict(passed, witness, {"max_deviation": float(diff.max())})


def check_rank_one_operational(extended: BehaviorTable, tol: float = NORM_TOL) -> Verdict:
    """Preparations sharing a certain outcome must be operationally identical.

    ``extended`` lists p(k|M,P) for every measurement and preparation of
    interest; "identical" is judged on exactly those rows.
    """
    probs = extended.probs  # [x, y, k]
    n_preps = extended.num_preparations
    for x in range(extended.num_measurements):
        for k in range(extended.outcome_counts[x]):
            certain = [y for y in range(n_preps) if abs(probs[x, y, k] - 1) <= tol]
            for a, b in combinations(certain, 2):
                diff = np.abs(probs[:, a, :] - probs[:, b, :])
                if diff.max() > tol:
                    xx, kk = np.unravel_index(int(np.argmax(diff)), diff.shape)
                    return Verdict(False, {
                        "measurement": x, "outcome": k, "preparations": [a, b],
                        "distinguishing_measurement": int(xx), "distinguishing_outcome": int(kk),
                        "difference": float(diff.max()),
                    })
    return Verdict(True)
