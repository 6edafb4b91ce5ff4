"""Acceptance criteria, each checked at its stated tolerance and runtime budget."""

import io
import json
import math
import time
from contextlib import redirect_stdout
from fractions import Fraction

import numpy as np

from _models import random_compliant_model
from ontocert.canonical import (
    SphereMesh,
    build_bb_model,
    build_bell_model,
    build_ks_model,
    build_toy_model,
)
from ontocert.certify import (
    best_game_value,
    bod_check,
    classical_bound_bruteforce,
    contextual_counterexample,
    pnc_check,
    proof_lp_bound,
)
from ontocert.cli import main
from ontocert.ontology import EpistemicState, OnticSpace, behavior_of_model, total_variation
from ontocert.quantum import KET_0, KET_PLUS, helstrom_two_state
from ontocert.scenario import (
    BehaviorTable,
    quantum_behavior,
    reference_strategy,
    success_probability,
)

COS2_PI_8 = math.cos(math.pi / 8) ** 2


def cli_json(*argv):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = main(list(argv))
    return code, json.loads(buf.getvalue())


def test_criterion_1_quantum_value(acceptance_line):
    t0 = time.perf_counter()
    code, doc = cli_json("quantum-task")
    elapsed = time.perf_counter() - t0
    res = doc["results"]
    ps_err = abs(res["P_S"] - COS2_PI_8)
    p_err = max(abs(p["value"] - COS2_PI_8) for p in res["probabilities"])
    ok = code == 0 and ps_err <= 1e-12 and p_err <= 1e-12 and len(res["probabilities"]) == 4 and elapsed < 1
    acceptance_line("1 quantum value", ok, f"P_S={res['P_S']!r} |dP_S|={ps_err:.1e} max|dp|={p_err:.1e} t={elapsed:.2f}s")
    assert ok


def test_criterion_2_exact_bound(acceptance_line):
    t0 = time.perf_counter()
    cert = proof_lp_bound()
    elapsed = time.perf_counter() - t0
    mm = cert.mass_matrix
    saturated = all(mm.p[0][j] + mm.p[1][j] == 1 for j in (0, 1))
    ok = (cert.bound == Fraction(3, 4) and isinstance(cert.bound, Fraction) and cert.lp_optimum == 2
          and mm.objective() == 2 and saturated and elapsed < 1)
    acceptance_line("2 classical bound, exact", ok,
                    f"bound={cert.bound} optimum={cert.lp_optimum} mass={mm.to_dict()} t={elapsed:.2f}s")
    assert ok


def test_criterion_3_search_bound(acceptance_line):
    t0 = time.perf_counter()
    cert = classical_bound_bruteforce(max_cells=4, grid_step=Fraction(1, 20))
    elapsed = time.perf_counter() - t0
    ok = (cert.bound == Fraction(3, 4) and float(cert.bound) <= 0.75 + 1e-12
          and not cert.metadata["exceeds_bound"] and elapsed < 120)
    acceptance_line("3 classical bound, search", ok,
                    f"bound={cert.bound} configurations={cert.metadata['configurations']} t={elapsed:.2f}s")
    assert ok


def test_criterion_4_model_matrix(acceptance_line):
    expected = {"bb": ("pass", "fail"), "bell": ("pass", "fail"), "ks": ("fail", "pass"), "toy": ("fail", "pass")}
    t0 = time.perf_counter()
    runs = {
        "bb": cli_json("model-check", "bb"),
        "bell": cli_json("model-check", "bell", "--hidden-bins", "1000"),
        "ks": cli_json("model-check", "ks", "--mesh", "100"),
        "toy": cli_json("model-check", "toy"),
    }
    elapsed = time.perf_counter() - t0
    got, ok = {}, elapsed < 30
    for name, (code, doc) in runs.items():
        m = doc["results"]["assumption_matrix"]
        got[name] = (m["no_overlap"], m["strong_duality"])
        ok &= code == 0 and got[name] == expected[name]
    ks_overlap = runs["ks"][1]["results"]["no_overlap"]["witness"]["overlap_mass"]
    toy_overlap = runs["toy"][1]["results"]["no_overlap"]["witness"]["overlap_mass"]
    ok &= ks_overlap > 0.1 and toy_overlap == 0.5
    acceptance_line("4 model matrix", ok,
                    f"{got} ks_overlap={ks_overlap:.4f} toy_overlap={toy_overlap} t={elapsed:.2f}s")
    assert ok


def test_criterion_5_born_reconstruction(acceptance_line):
    strat = reference_strategy()
    preps, meass = list(strat.preparations), list(strat.measurements)
    target = quantum_behavior(strat).probs

    def err(model):
        return float(np.max(np.abs(behavior_of_model(model).probs - target)))

    bb_err = err(build_bb_model(preps, meass, SphereMesh.latlon(8)))
    ks_errs = [err(build_ks_model(preps, meass, SphereMesh.latlon(n))) for n in (25, 50, 100)]
    bell_errs = {b: err(build_bell_model(preps, meass, hidden_bins=b)) for b in (10, 100, 1000)}
    ok = (bb_err <= 1e-10
          and ks_errs[2] <= 2e-3 and ks_errs[0] > ks_errs[1] > ks_errs[2]
          and all(e <= 1 / b for b, e in bell_errs.items()))
    acceptance_line("5 Born reconstruction", ok,
                    f"bb={bb_err:.1e} ks(25,50,100)={[f'{e:.2e}' for e in ks_errs]} "
                    f"bell={ {b: f'{e:.1e}' for b, e in bell_errs.items()} }")
    assert ok


def test_criterion_6_property_suite(acceptance_line):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()

    worst_game = max(best_game_value(random_compliant_model(rng))["value"] for _ in range(1000))

    worst_lin = 0.0
    for _ in range(1000):
        b1, b2 = (BehaviorTable(rng.dirichlet([1, 1], size=(2, 2)), (2, 2)) for _ in range(2))
        alpha = rng.uniform()
        lhs = success_probability(b1.mix(b2, alpha))
        rhs = alpha * success_probability(b1) + (1 - alpha) * success_probability(b2)
        worst_lin = max(worst_lin, abs(lhs - rhs))

    metric_ok = True
    for _ in range(1000):
        n = int(rng.integers(2, 10))
        space = OnticSpace(tuple(str(i) for i in range(n)), rng.uniform(0.1, 3, size=n))
        a, b, c = (EpistemicState(space, rng.dirichlet(np.full(n, 0.5)) / space.weights) for _ in range(3))
        ab, ba, bc, ac = total_variation(a, b), total_variation(b, a), total_variation(b, c), total_variation(a, c)
        metric_ok &= (abs(total_variation(a, a)) <= 1e-12 and abs(ab - ba) <= 1e-12
                      and ac <= ab + bc + 1e-12 and ab >= 0)
    elapsed = time.perf_counter() - t0

    ok = worst_game <= 0.75 + 1e-10 and worst_lin <= 1e-12 and metric_ok and elapsed < 60
    acceptance_line("6 property suite", ok,
                    f"max game={worst_game:.12f} max linearity err={worst_lin:.1e} "
                    f"tv axioms={'ok' if metric_ok else 'broken'} t={elapsed:.2f}s")
    assert ok


def test_criterion_7_hierarchy(acceptance_line):
    t0 = time.perf_counter()
    toy = build_toy_model()
    toy_bod = bod_check(toy, [toy.preparation_index("0"), toy.preparation_index("+")])
    bb = build_bb_model([KET_0, KET_PLUS], list(reference_strategy().measurements))
    bb_bod = bod_check(bb, [0, 1])
    helstrom = helstrom_two_state(KET_0, KET_PLUS)
    toy_pnc = pnc_check(toy, (toy.preparation_index("mix_z"), toy.preparation_index("mix_x")))
    ctx_pnc = pnc_check(contextual_counterexample(), (0, 1))
    elapsed = time.perf_counter() - t0
    ok = (toy_bod.ontological_value == 0.75
          and bb_bod.ontological_value == 1.0
          and abs(helstrom - (0.5 + 1 / (2 * math.sqrt(2)))) <= 1e-12
          and toy_pnc.passed and not ctx_pnc.passed and elapsed < 5)
    acceptance_line("7 hierarchy demonstrations", ok,
                    f"toy ont={toy_bod.ontological_value} bb ont={bb_bod.ontological_value} "
                    f"helstrom={helstrom:.12f} pnc toy={toy_pnc.passed} counterexample={ctx_pnc.passed} "
                    f"t={elapsed:.2f}s")
    assert ok
