"""Classical-bound certificates and checks against related classicality notions."""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Any, Sequence

import numpy as np

from ontocert import lp
from ontocert.canonical import build_bb_model, build_toy_model
from ontocert.ontology import (
    DEFAULT_TOL,
    EpistemicState,
    FiniteOntModel,
    OnticSpace,
    ResponseFunction,
    Verdict,
    behavior_of_model,
    support,
)
from ontocert.quantum import KET_0, KET_PLUS, helstrom_two_state
from ontocert.scenario import (
    BehaviorTable,
    reference_strategy,
    quantum_behavior,
    success_probability,
    task_coefficients,
)

CLASSICAL_BOUND = Fraction(3, 4)
VIOLATION_TOL = 1e-12
BOD_TOL = 1e-10
DEFAULT_CONFIG_CAP = 2 * 10**9


class ResourceCapExceeded(RuntimeError):
    """The requested enumeration is larger than the configured cap."""


def worker_count() -> int:
    """Worker threads allowed by ONTOCERT_THREADS (default: CPU count)."""
    env = os.environ.get("ONTOCERT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ValueError(f"ONTOCERT_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


@dataclass(frozen=True)
class MassMatrix:
    """p[i][j]: mass that preparation j puts on pure support region i."""

    p: tuple[tuple[Fraction, Fraction], tuple[Fraction, Fraction]]

    def __post_init__(self) -> None:
        p = tuple(tuple(Fraction(v) for v in row) for row in self.p)
        if len(p) != 2 or any(len(row) != 2 for row in p):
            raise ValueError("mass matrix is 2x2")
        if any(not 0 <= v <= 1 for row in p for v in row):
            raise ValueError("masses must lie in [0, 1]")
        object.__setattr__(self, "p", p)

    def feasible_disjoint(self) -> bool:
        """Each preparation's masses on two disjoint regions sum to at most 1."""
        return all(self.p[0][j] + self.p[1][j] <= 1 for j in (0, 1))

    def objective(self) -> Fraction:
        (p00, p01), (p10, p11) = self.p
        return p00 + p01 + p10 - p11

    def to_dict(self) -> dict[str, str]:
        return {f"p{i}{j}": str(self.p[i][j]) for i in (0, 1) for j in (0, 1)}


@dataclass(frozen=True)
class BoundCertificate:
    bound: Fraction
    regime: str
    mass_matrix: MassMatrix
    lp_optimum: Fraction
    metadata: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "bound": str(self.bound),
            "bound_float": float(self.bound),
            "regime": self.regime,
            "lp_optimum": str(self.lp_optimum),
            "mass_matrix": self.mass_matrix.to_dict(),
            "metadata": self.metadata,
        }


def proof_lp_bound() -> BoundCertificate:
    """Exact certificate of the 3/4 bound from the two support regimes.

    Distinct pure supports: maximize p00 + p01 + p10 - p11 subject to
    p00 + p10 <= 1, p01 + p11 <= 1 and 0 <= p_ij <= 1. Equal supports: the
    combination collapses to 2*p00 with p00 <= 1. The game value is at most
    (optimum + 1) / 4.
    """
    # variable order: p00, p01, p10, p11
    c = [1, 1, 1, -1]
    A = [
        [1, 0, 1, 0],
        [0, 1, 0, 1],
        [1, 0, 0, 0],
        [0, 1, 0, 0],
        [0, 0, 1, 0],
        [0, 0, 0, 1],
    ]
    b = [1, 1, 1, 1, 1, 1]
    distinct = lp.maximize(c, A, b)
    distinct.check(c, A, b)
    equal = lp.maximize([2], [[1]], [1])
    equal.check([2], [[1]], [1])

    p00, p01, p10, p11 = distinct.x
    mm = MassMatrix(((p00, p01), (p10, p11)))
    regimes = {
        "distinct-supports": {
            "lp_optimum": str(distinct.value),
            "mass_matrix": mm.to_dict(),
            "dual": [str(v) for v in distinct.dual],
            "pivots": distinct.pivots,
        },
        "equal-supports": {
            "lp_optimum": str(equal.value),
            "p00": str(equal.x[0]),
            "dual": [str(v) for v in equal.dual],
        },
    }
    opt = max(distinct.value, equal.value)
    bound = (opt + 1) / 4
    regime = "distinct-supports" if distinct.value >= equal.value else "equal-supports"
    return BoundCertificate(bound, regime, mm, opt, {"method": "exact-simplex", "regimes": regimes})


def _compositions(total: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length ``parts`` summing to ``total``."""
    rows = []
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        row = []
        for bar in bars:
            row.append(bar - prev - 1)
            prev = bar
        row.append(total + parts - 1 - prev - 1)
        rows.append(row)
    return np.array(rows, dtype=np.int64).reshape(-1, parts)


def _support_partitions(cells: int):
    """Yield (regime, omega0 mask, omega1 mask) over labelings of the cells.

    Distinct regime: each cell goes to omega0, omega1 or neither, with both
    regions nonempty. Equal regime: one nonempty region serves as both.
    """
    for labels in itertools.product((0, 1, 2), repeat=cells):
        lab = np.array(labels)
        o0, o1 = lab == 0, lab == 1
        if o0.any() and o1.any():
            yield "distinct-supports", o0, o1
    for labels in itertools.product((0, 1), repeat=cells):
        o = np.array(labels) == 1
        if o.any():
            yield "equal-supports", o, o


def _grid_denominator(grid_step) -> int:
    step = Fraction(grid_step).limit_denominator(10**6) if isinstance(grid_step, float) else Fraction(grid_step)
    if step <= 0 or step > 1 or step.numerator != 1:
        raise ValueError(f"grid_step must be 1/N for a positive integer N, got {step}")
    return step.denominator


def _best_in_partition(args) -> tuple[int, int, int, int]:
    """(best scaled value, mu0 index, mu1 index, pairs examined) for one support choice."""
    comps, o0, o1, N = args
    m0 = comps @ o0.astype(np.int64)  # mass on omega0 per grid distribution
    m1 = comps @ o1.astype(np.int64)
    f = m0 + m1  # p(0|0,0) + p(0|1,0), scaled by N
    g = m0 + (N - m1)  # p(0|0,1) + p(1|1,1), scaled by N
    # exhaustive over all (mu0, mu1) pairs, chunked to bound memory
    best = (-1, 0, 0)
    chunk = max(1, 4_000_000 // max(1, len(g)))
    for start in range(0, len(f), chunk):
        block = f[start:start + chunk, None] + g[None, :]
        flat = int(np.argmax(block))
        i, j = divmod(flat, len(g))
        v = int(block[i, j])
        if v > best[0]:
            best = (v, start + i, j)
    return best[0], best[1], best[2], len(f) * len(g)


def classical_bound_bruteforce(
    max_cells: int = 4,
    grid_step: Fraction | str | float = Fraction(1, 20),
    *,
    config_cap: int = DEFAULT_CONFIG_CAP,
) -> BoundCertificate:
    """Exhaustive search for the best game value under the two assumptions.

    For every ontic space size up to ``max_cells`` and every choice of pure
    supports (disjoint or identical), the responses are fixed to support
    indicators (outcome 0 of measurement x on omega_x, outcome 1 on the
    rest), and both preparations range over every distribution on the grid
    {0, step, ..., 1}. Values are exact integers scaled by 4N, so the
    returned bound is an exact rational.
    """
    if max_cells < 2:
        raise ValueError("max_cells must be >= 2")
    N = _grid_denominator(Fraction(grid_step) if isinstance(grid_step, str) else grid_step)
    jobs = []
    n_configs = 0
    for cells in range(1, max_cells + 1):
        n_dist = comb(N + cells - 1, cells - 1)
        n_parts = (3**cells - 2 * 2**cells + 1) + (2**cells - 1)
        n_configs += n_parts * n_dist * n_dist
    if n_configs > config_cap:
        raise ResourceCapExceeded(f"{n_configs} configurations exceed the cap of {config_cap}")
    for cells in range(1, max_cells + 1):
        comps = _compositions(N, cells)
        for regime, o0, o1 in _support_partitions(cells):
            jobs.append((cells, regime, o0, o1, comps))

    with ThreadPoolExecutor(max_workers=min(worker_count(), len(jobs))) as pool:
        results = list(pool.map(lambda j: _best_in_partition((j[4], j[2], j[3], N)), jobs))

    best_value, best_job, best_pair = -1, None, None
    counted = 0
    for job, (v, i0, i1, count) in zip(jobs, results):
        counted += count
        if v > best_value:  # first maximum in enumeration order wins
            best_value, best_job, best_pair = v, job, (i0, i1)
    cells, regime, o0, o1, comps = best_job
    mu0 = comps[best_pair[0]]
    mu1 = comps[best_pair[1]]
    mass = MassMatrix((
        (Fraction(int(mu0[o0].sum()), N), Fraction(int(mu1[o0].sum()), N)),
        (Fraction(int(mu0[o1].sum()), N), Fraction(int(mu1[o1].sum()), N)),
    ))
    bound = Fraction(best_value, 4 * N)
    return BoundCertificate(
        bound,
        regime,
        mass,
        4 * bound - 1,
        {
            "method": "exhaustive-grid",
            "max_cells": max_cells,
            "grid_step": str(Fraction(1, N)),
            "configurations": counted,
            "support_partitions": len(jobs),
            "achieving": {
                "cells": cells,
                "omega0": [int(i) for i in np.flatnonzero(o0)],
                "omega1": [int(i) for i in np.flatnonzero(o1)],
                "mu0": [str(Fraction(int(v), N)) for v in mu0],
                "mu1": [str(Fraction(int(v), N)) for v in mu1],
            },
            "exceeds_bound": bound > CLASSICAL_BOUND,
        },
    )


def mass_matrix_of_model(model: FiniteOntModel, pure_preps: Sequence[int], game_preps: Sequence[int]) -> np.ndarray:
    """Float mass matrix p[i, j] = mass of game preparation j on the support of pure preparation i."""
    out = np.zeros((len(pure_preps), len(game_preps)))
    for i, a in enumerate(pure_preps):
        members = support(model.preparations[a]).members
        for j, y in enumerate(game_preps):
            out[i, j] = float(model.preparations[y].mass[members].sum())
    return out


def best_game_value(model: FiniteOntModel) -> dict[str, Any]:
    """Best game value over every choice the model offers.

    Enumerates ordered preparation pairs, ordered measurement pairs and every
    relabeling of each measurement's outcomes. Only the outcome read as 0 of
    the first measurement and the outcomes read as 0 and 1 of the second one
    enter the game, so relabelings reduce to those choices.
    """
    beh = behavior_of_model(model)
    probs = beh.probs  # [x, y, k]
    first = [(x, a) for x, k in enumerate(beh.outcome_counts) for a in range(k)]
    second = [(x, a, b) for x, k in enumerate(beh.outcome_counts)
              for a in range(k) for b in range(k) if a != b]
    u = np.stack([probs[x, :, a] for x, a in first])  # [v0, y]: outcome read as 0
    w0 = np.stack([probs[x, :, a] for x, a, _ in second])  # [v1, y]
    w1 = np.stack([probs[x, :, b] for x, _, b in second])
    # value[v0, v1, y0, y1] = (p(0|0,y0) + p(0|1,y0) + p(0|0,y1) + p(1|1,y1)) / 4
    value = (u[:, None, :, None] + w0[None, :, :, None] + u[:, None, None, :] + w1[None, :, None, :]) / 4
    v0, v1, y0, y1 = np.unravel_index(int(np.argmax(value)), value.shape)
    x0, a0 = first[v0]
    x1, a1, b1 = second[v1]
    return {
        "value": float(value[v0, v1, y0, y1]),
        "preparations": [model.preparations[y0].preparation_id, model.preparations[y1].preparation_id],
        "measurements": [model.measurements[x0].measurement_id, model.measurements[x1].measurement_id],
        "outcome_readings": [{"0": int(a0)}, {"0": int(a1), "1": int(b1)}],
    }


@dataclass(frozen=True)
class ViolationReport:
    value: float
    bound: Fraction
    margin: float
    violation: bool

    def to_dict(self) -> dict[str, Any]:
        return {
            "success_probability": self.value,
            "classical_bound": float(self.bound),
            "classical_bound_exact": str(self.bound),
            "margin": self.margin,
            "violation": self.violation,
        }


def violation_report(behavior: BehaviorTable) -> ViolationReport:
    value = success_probability(behavior, task_coefficients())
    margin = value - float(CLASSICAL_BOUND)
    return ViolationReport(value, CLASSICAL_BOUND, margin, margin > VIOLATION_TOL)


class NotOperationallyEquivalent(ValueError):
    """pnc_check was given preparations that some measurement distinguishes."""


def pnc_check(model: FiniteOntModel, pair: tuple[int, int], tol: float = DEFAULT_TOL) -> Verdict:
    a, b = pair
    beh = behavior_of_model(model, preparations=[a, b])
    gap = float(np.max(np.abs(beh.probs[:, 0, :] - beh.probs[:, 1, :])))
    if gap > tol:
        raise NotOperationallyEquivalent(
            f"preparations {a} and {b} differ by {gap:.3g} on some measurement"
        )
    diff = np.abs(model.preparations[a].mu - model.preparations[b].mu)
    worst = int(np.argmax(diff))
    passed = bool(diff[worst] <= tol)
    witness = None if passed else {
        "ontic_state": model.space.labels[worst],
        "mu": [float(model.preparations[a].mu[worst]), float(model.preparations[b].mu[worst])],
    }
    return Verdict(passed, witness, {
        "pair": [a, b],
        "ids": [model.preparations[a].preparation_id, model.preparations[b].preparation_id],
        "operational_gap": gap,
    })


@dataclass(frozen=True)
class BODReport:
    operational_value: float
    ontological_value: float
    holds: bool
    preparations: tuple[int, ...]
    best_measurement: int | None = None
    guess_map: tuple[int, ...] | None = None

    def to_dict(self) -> dict[str, Any]:
        return {
            "operational_value": self.operational_value,
            "ontological_value": self.ontological_value,
            "optimal_response_value": self.ontological_value,
            "holds": self.holds,
            "preparations": list(self.preparations),
            "best_measurement": self.best_measurement,
            "guess_map": None if self.guess_map is None else list(self.guess_map),
        }


def bod_check(model: FiniteOntModel, preps: Sequence[int]) -> BODReport:
    """Ontological versus operational distinguishability of ``preps``.

    The ontological value (1/n) sum_lambda max_x mass(lambda|P_x) is also
    the best value any response function can reach (pointwise argmax). The
    operational value is the best the model's declared measurements reach,
    with every outcome assigned to a guessed preparation; the property
    holds when the two agree.
    """
    preps = tuple(int(p) for p in preps)
    n = len(preps)
    if n < 2:
        raise ValueError("bod_check needs at least two preparations")
    mass = np.stack([model.preparations[y].mass for y in preps])
    ontological = float(mass.max(axis=0).sum() / n)
    best = (-1.0, None, None)
    for x, meas in enumerate(model.measurements):
        probs = mass @ meas.xi  # [prep, outcome]
        for guess in itertools.product(range(n), repeat=meas.num_outcomes):
            val = sum(float(probs[g, k]) for k, g in enumerate(guess)) / n
            if val > best[0] + 1e-15:
                best = (val, x, guess)
    operational = best[0] if best[1] is not None else 1.0 / n
    holds = abs(ontological - operational) <= BOD_TOL
    return BODReport(operational, ontological, holds, preps, best[1], best[2])


def contextual_counterexample() -> FiniteOntModel:
    """Two preparations with identical statistics but different ontic distributions."""
    space = OnticSpace(("1", "2", "3", "4"))
    preps = (
        EpistemicState(space, [0.5, 0, 0.5, 0], "A"),
        EpistemicState(space, [0, 0.5, 0, 0.5], "B"),
    )
    z = np.array([[1, 0], [1, 0], [0, 1], [0, 1]], dtype=float)
    return FiniteOntModel(space, preps, (ResponseFunction(space, z, "Z"),), "contextual-counterexample")


HIERARCHY_CHAIN = (
    {"from": "universal classicality", "to": "bounded ontological distinctness (preparations)",
     "condition": None, "status": "documented implication (assumes convexity); demonstrated on models"},
    {"from": "bounded ontological distinctness (preparations)", "to": "preparation noncontextuality",
     "condition": None, "status": "documented implication; demonstrated on models"},
    {"from": "preparation noncontextuality", "to": "Kochen-Specker noncontextuality",
     "condition": "QT", "status": "conditioned implication; not verified"},
    {"from": "Kochen-Specker noncontextuality", "to": "Bell local causality",
     "condition": "NS", "status": "conditioned implication; not verified"},
)


def hierarchy_report() -> dict[str, Any]:
    """Bundle of demonstrations alongside the implication chain (no proofs)."""
    strat = reference_strategy()
    violation = violation_report(quantum_behavior(strat))

    bb = build_bb_model([KET_0, KET_PLUS], list(strat.measurements), prep_ids=["0", "+"])
    bb_bod = bod_check(bb, [0, 1])
    helstrom = helstrom_two_state(KET_0, KET_PLUS)

    toy = build_toy_model()
    toy_bod = bod_check(toy, [toy.preparation_index("0"), toy.preparation_index("+")])
    toy_pnc = pnc_check(toy, (toy.preparation_index("mix_z"), toy.preparation_index("mix_x")))
    ctx_pnc = pnc_check(contextual_counterexample(), (0, 1))

    return {
        "preamble": (
            "Demonstration report. Inputs are assumed to be chosen freely and "
            "independently; that assumption is structural and not tested. The "
            "implication chain is reproduced as documented, not proven."
        ),
        "universal_classicality": {
            "test": "game value of the qubit strategy against the classical bound",
            **violation.to_dict(),
            "violated_by_quantum_theory": violation.violation,
        },
        "bounded_ontological_distinctness": {
            "bb_model_0_plus": {
                **bb_bod.to_dict(),
                "helstrom": helstrom,
                "quantum_operational_optimum": helstrom,
                "holds_against_quantum": abs(bb_bod.ontological_value - helstrom) <= BOD_TOL,
            },
            "toy_model_0_plus": toy_bod.to_dict(),
        },
        "preparation_noncontextuality": {
            "toy_uniform_mixtures": toy_pnc.to_dict(),
            "contextual_counterexample": ctx_pnc.to_dict(),
        },
        "chain": [dict(step) for step in HIERARCHY_CHAIN],
    }
