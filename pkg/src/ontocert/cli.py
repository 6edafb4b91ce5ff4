"""Command-line entry point: every command emits a JSON (or CSV) report.

Exit codes: 0 success / verdicts as expected, 1 verdict mismatch,
2 usage error, 3 resource cap exceeded, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from ontocert import __version__
from ontocert.canonical import (
    TOY_MEASUREMENT_ANALOGUES,
    TOY_MEASUREMENTS,
    TOY_PREPARATIONS,
    TOY_QUANTUM_ANALOGUES,
    SphereMesh,
    build_bb_model,
    build_bell_model,
    build_ks_model,
    build_toy_model,
    eigenstates,
)
from ontocert.certify import (
    CLASSICAL_BOUND,
    ResourceCapExceeded,
    best_game_value,
    classical_bound_bruteforce,
    hierarchy_report,
    proof_lp_bound,
    violation_report,
)
from ontocert.ontology import (
    DEFAULT_TOL,
    FiniteOntModel,
    behavior_of_model,
    check_convexity,
    check_no_overlap,
    check_rank_one_operational,
    check_strong_duality,
)
from ontocert.quantum import born_probability
from ontocert.scenario import (
    optimize_quantum_qubit,
    reference_strategy,
    quantum_behavior,
    success_probability,
    sweep_rows,
)

SCHEMA_VERSION = "1.0"
EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_CAP, EXIT_IO = 0, 1, 2, 3, 4
MODEL_NAMES = ("bb", "bell", "ks", "toy")
DEFAULT_MESH = {"ks": 100, "bb": 8, "bell": 8}
# (no_overlap passes, strong_duality passes)
EXPECTED_VERDICTS = {
    "bb": (True, False),
    "bell": (True, False),
    "ks": (False, True),
    "toy": (False, True),
}
COS2_PI_8 = math.cos(math.pi / 8) ** 2


def _fmt(v: Any) -> str:
    if isinstance(v, bool) or v is None:
        return str(v).lower()
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.12g}"
    return str(v)


def _flatten(prefix: str, obj: Any, out: list[tuple[str, Any]]) -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, (list, tuple)) and any(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    elif isinstance(obj, (list, tuple)):
        out.append((prefix, " ".join(_fmt(v) for v in obj)))
    else:
        out.append((prefix, obj))


def to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_default(obj: Any) -> Any:
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_output(text: str, out: str | None) -> None:
    """Write to stdout, or atomically to ``out`` via a temp file and rename."""
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _config(args: argparse.Namespace) -> dict[str, Any]:
    skip = {"func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _envelope(args: argparse.Namespace, results: dict, provenance: dict | None = None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "command": args.command,
        "config": _config(args),
        "results": results,
        "provenance": provenance or {},
    }


def _emit_report(args: argparse.Namespace, report: dict, csv_rows=None) -> None:
    if args.format == "csv":
        if csv_rows is None:
            flat: list[tuple[str, Any]] = []
            _flatten("", report["results"], flat)
            text = to_csv(("key", "value"), flat)
        else:
            text = to_csv(*csv_rows)
    else:
        text = json.dumps(report, indent=2, default=_json_default) + "\n"
    write_output(text, args.out)


# -- commands -----------------------------------------------------------

def cmd_quantum_task(args: argparse.Namespace) -> int:
    behavior = quantum_behavior(reference_strategy())
    keys = [(0, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 1)]
    probs = [{"a": a, "x": x, "y": y, "value": behavior.p(a, x, y)} for a, x, y in keys]
    ps = success_probability(behavior)
    results: dict[str, Any] = {
        "probabilities": probs,
        "P_S": ps,
        "P_S_rounded": round(ps, 10),
        **{k: v for k, v in violation_report(behavior).to_dict().items() if k != "success_probability"},
    }
    if args.optimize:
        opt = optimize_quantum_qubit(args.budget, args.seed, full_phase=args.full_phase)
        results["optimizer"] = {
            "value": opt.value,
            "grid_value": opt.grid_value,
            "sweeps": opt.sweeps,
            "angles": [{"theta": b.theta, "phi": b.phi} for b in opt.angles],
        }
    provenance = {
        "reference_values": {
            "winning_probability_each": {"expression": "cos^2(pi/8)", "value": COS2_PI_8},
            "P_S": {"expression": "1/2 + 1/(2*sqrt(2))", "value": 0.5 + 1 / (2 * math.sqrt(2))},
        }
    }
    rows = [("p", r["a"], r["x"], r["y"], r["value"]) for r in probs]
    rows.append(("P_S", "", "", "", ps))
    if args.optimize:
        rows.append(("P_S_optimized", "", "", "", results["optimizer"]["value"]))
    _emit_report(args, _envelope(args, results, provenance), (("quantity", "a", "x", "y", "value"), rows))
    return EXIT_OK


def cmd_classical_bound(args: argparse.Namespace) -> int:
    lp_cert = proof_lp_bound()
    bf_cert = classical_bound_bruteforce(args.max_cells, args.grid_step)
    ok = lp_cert.bound == CLASSICAL_BOUND and bf_cert.bound == CLASSICAL_BOUND
    results = {
        "proof_lp": lp_cert.to_dict(),
        "bruteforce": bf_cert.to_dict(),
        "agree": lp_cert.bound == bf_cert.bound,
        "certified_bound": str(CLASSICAL_BOUND) if ok else None,
    }
    provenance = {"reference_values": {"classical_bound": {"expression": "3/4", "value": 0.75}}}
    rows = [
        ("proof_lp", lp_cert.regime, str(lp_cert.bound), float(lp_cert.bound), str(lp_cert.lp_optimum)),
        ("bruteforce", bf_cert.regime, str(bf_cert.bound), float(bf_cert.bound), str(bf_cert.lp_optimum)),
    ]
    _emit_report(args, _envelope(args, results, provenance),
                 (("engine", "regime", "bound", "bound_float", "optimum"), rows))
    return EXIT_OK if ok else EXIT_MISMATCH


def _qubit_fragment():
    """Game preparations plus the eigenstates of both measurements."""
    strat = reference_strategy()
    preps = list(strat.preparations)
    ids = ["+", "0"]
    for x, m in enumerate(strat.measurements):
        for k, s in enumerate(eigenstates(m)):
            preps.append(s)
            ids.append(f"M{x}:{k}")
    return preps, ids, list(strat.measurements)


def build_named_model(name: str, mesh_n: int | None = None, hidden_bins: int = 1000) -> FiniteOntModel:
    if name == "toy":
        return build_toy_model()
    preps, ids, meass = _qubit_fragment()
    mesh = SphereMesh.latlon(mesh_n or DEFAULT_MESH[name])
    if name == "bb":
        return build_bb_model(preps, meass, mesh, prep_ids=ids)
    if name == "bell":
        return build_bell_model(preps, meass, mesh, hidden_bins, prep_ids=ids)
    if name == "ks":
        return build_ks_model(preps, meass, mesh, prep_ids=ids)
    raise ValueError(f"unknown model {name!r}")


def model_check_results(name: str, model: FiniteOntModel, tol: float) -> dict[str, Any]:
    if name == "toy":
        pair = [model.preparation_index("0"), model.preparation_index("+")]
        analogues = [TOY_QUANTUM_ANALOGUES[p] for p in TOY_PREPARATIONS]
        meas_analogues = [TOY_MEASUREMENT_ANALOGUES[m] for m in TOY_MEASUREMENTS]
        convexity = check_convexity(
            model, model.preparation_index("mixed"),
            [model.preparation_index("0"), model.preparation_index("1")], [0.5, 0.5],
        ).to_dict()
        game = best_game_value(model)
        game_result = {"mode": "best over toy fragment", **game}
    else:
        pair = [0, 1]
        preps, _, meas_analogues = _qubit_fragment()
        analogues = preps
        convexity = None
        beh = behavior_of_model(model, preparations=[0, 1], measurements=[0, 1])
        game_result = {"mode": "qubit strategy", "value": success_probability(beh)}

    behavior = behavior_of_model(model)
    born = np.array([
        [[born_probability(s, m, k) for k in m.labels] for s in analogues] for m in meas_analogues
    ])
    born_err = float(np.max(np.abs(behavior.probs[:, :, : born.shape[2]] - born)))
    no_overlap = check_no_overlap(model, pair, tol)
    duality = check_strong_duality(model, tol)
    rank_one = check_rank_one_operational(behavior, tol)
    game_result["exceeds_classical_bound"] = game_result["value"] > float(CLASSICAL_BOUND) + 1e-12
    expected = EXPECTED_VERDICTS[name]
    matrix = {
        "model": name,
        "no_overlap": "pass" if no_overlap.passed else "fail",
        "strong_duality": "pass" if duality.passed else "fail",
        "convexity": None if convexity is None else ("pass" if convexity["passed"] else "fail"),
        "rank_one_operational": "pass" if rank_one.passed else "fail",
    }
    return {
        "model": model.name,
        "ontic_states": len(model.space),
        "preparations": [p.preparation_id for p in model.preparations],
        "assumption_matrix": matrix,
        "expected": {"no_overlap": "pass" if expected[0] else "fail",
                     "strong_duality": "pass" if expected[1] else "fail"},
        "matches_expected": (no_overlap.passed, duality.passed) == expected,
        "no_overlap": {**no_overlap.to_dict(), "pair": pair},
        "strong_duality": duality.to_dict(),
        "convexity": convexity,
        "rank_one_operational": rank_one.to_dict(),
        "born_agreement": {"max_abs_error": born_err},
        "game": game_result,
    }


def cmd_model_check(args: argparse.Namespace) -> int:
    mesh_n = args.mesh if args.mesh is not None else DEFAULT_MESH.get(args.model)
    model = build_named_model(args.model, mesh_n, args.hidden_bins)
    if args.export:
        try:
            model.save(args.export)
        except OSError as exc:
            print(f"ontocert: cannot write model: {exc}", file=sys.stderr)
            return EXIT_IO
    results = model_check_results(args.model, model, args.tol)
    results["mesh"] = None if args.model == "toy" else mesh_n
    results["hidden_bins"] = args.hidden_bins if args.model == "bell" else None
    m = results["assumption_matrix"]
    rows = [(m["model"], m["no_overlap"], m["strong_duality"], m["convexity"] or "n/a",
             m["rank_one_operational"], results["born_agreement"]["max_abs_error"],
             results["game"]["value"])]
    header = ("model", "no_overlap", "strong_duality", "convexity", "rank_one_operational",
              "born_max_abs_error", "game_value")
    _emit_report(args, _envelope(args, results), (header, rows))
    return EXIT_OK if results["matches_expected"] else EXIT_MISMATCH


def cmd_check_file(args: argparse.Namespace) -> int:
    model = FiniteOntModel.load(args.path)
    pure = [y for y, p in enumerate(model.preparations) if p.pure]
    results = {
        "model": model.name,
        "ontic_states": len(model.space),
        "pure_preparations": pure,
        "no_overlap": check_no_overlap(model, pure, args.tol).to_dict(),
        "strong_duality": check_strong_duality(model, args.tol).to_dict(),
        "rank_one_operational": check_rank_one_operational(behavior_of_model(model), args.tol).to_dict(),
    }
    if len(model.preparations) >= 2 and len(model.measurements) >= 2:
        beh = behavior_of_model(model, preparations=[0, 1], measurements=[0, 1])
        results["game"] = violation_report(beh).to_dict()
    _emit_report(args, _envelope(args, results))
    return EXIT_OK


def cmd_hierarchy(args: argparse.Namespace) -> int:
    report = hierarchy_report()
    provenance = {"reference_values": {
        "P_S": {"expression": "1/2 + 1/(2*sqrt(2))", "value": 0.5 + 1 / (2 * math.sqrt(2))},
        "classical_bound": {"expression": "3/4", "value": 0.75},
    }}
    _emit_report(args, _envelope(args, report, provenance))
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    rows = list(sweep_rows(args.kind, args.start, args.stop, args.step))
    if args.format == "json":
        _emit_report(args, _envelope(args, {"rows": rows}))
    else:
        header = list(rows[0]) if rows else ["t", "P_S", "classical_bound"]
        write_output(to_csv(header, [[r[h] for h in header] for r in rows]), args.out)
    return EXIT_OK


# -- argument parsing -----------------------------------------------------

def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _grid_step(text: str) -> Fraction:
    try:
        step = Fraction(text).limit_denominator(10**6)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if step <= 0 or step > 1 or step.numerator != 1:
        raise argparse.ArgumentTypeError("grid step must be 1/N for a positive integer N")
    return step


def _tolerance(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("tolerance must lie in (0, 1)")
    return v


def _add_common(p: argparse.ArgumentParser, default_format: str = "json") -> argparse.ArgumentParser:
    p.add_argument("--mesh", type=_positive_int, default=None,
                   help="sphere mesh resolution N (default: 100 for ks, 8 for bb/bell)")
    p.add_argument("--hidden-bins", type=_positive_int, default=1000)
    p.add_argument("--max-cells", type=_positive_int, default=4)
    p.add_argument("--grid-step", type=_grid_step, default=Fraction(1, 20))
    p.add_argument("--tol", type=_tolerance, default=DEFAULT_TOL)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=("json", "csv"), default=default_format)
    p.add_argument("--out", default=None, help="output path (default: stdout)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ontocert", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = _add_common(sub.add_parser("quantum-task", help="evaluate the qubit strategy"))
    p.add_argument("--optimize", action="store_true", help="also run the qubit strategy optimizer")
    p.add_argument("--budget", type=_positive_int, default=20, help="optimizer refinement sweeps")
    p.add_argument("--full-phase", action="store_true", help="let the optimizer vary azimuths")
    p.set_defaults(func=cmd_quantum_task)

    p = _add_common(sub.add_parser("classical-bound", help="certify the classical bound"))
    p.set_defaults(func=cmd_classical_bound)

    p = _add_common(sub.add_parser("model-check", help="check a canonical ontological model"))
    p.add_argument("model", choices=MODEL_NAMES)
    p.add_argument("--export", default=None, help="also write the built model to this path")
    p.set_defaults(func=cmd_model_check)

    p = _add_common(sub.add_parser("check-file", help="check a serialized ontological model"))
    p.add_argument("path")
    p.set_defaults(func=cmd_check_file)

    p = _add_common(sub.add_parser("hierarchy", help="demonstration report for related notions"))
    p.set_defaults(func=cmd_hierarchy)

    p = _add_common(sub.add_parser("sweep", help="game value along a strategy family"), "csv")
    p.add_argument("--kind", choices=("measurement", "preparation"), default="measurement")
    p.add_argument("--start", type=float, default=0.0)
    p.add_argument("--stop", type=float, default=math.pi)
    p.add_argument("--step", type=float, default=math.pi / 64)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceCapExceeded as exc:
        print(f"ontocert: {exc}", file=sys.stderr)
        return EXIT_CAP
    except OSError as exc:
        print(f"ontocert: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"ontocert: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
