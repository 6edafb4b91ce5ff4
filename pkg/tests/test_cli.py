import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from ontocert.cli import main
from ontocert.ontology import FiniteOntModel

COS2_PI_8 = 0.8535533905932738


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def run_json(capsys, *argv):
    code, out, err = run(capsys, *argv)
    return code, json.loads(out)


def read_csv(text):
    return list(csv.reader(io.StringIO(text)))


class TestEntryPoint:
    def test_module_invocation(self):
        proc = subprocess.run([sys.executable, "-m", "ontocert", "quantum-task"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0
        doc = json.loads(proc.stdout)
        assert doc["results"]["P_S_rounded"] == 0.8535533906

    def test_version(self):
        proc = subprocess.run([sys.executable, "-m", "ontocert", "--version"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 0 and "0.1.0" in proc.stdout

    def test_usage_error(self):
        proc = subprocess.run([sys.executable, "-m", "ontocert", "model-check", "nope"],
                              capture_output=True, text=True, check=False)
        assert proc.returncode == 2


class TestQuantumTask:
    def test_json_report(self, capsys):
        code, doc = run_json(capsys, "quantum-task")
        assert code == 0
        assert doc["schema_version"] == "1.0"
        assert set(doc) == {"schema_version", "tool_version", "command", "config", "results", "provenance"}
        res = doc["results"]
        assert res["P_S"] == pytest.approx(COS2_PI_8, abs=1e-12)
        assert f"{res['P_S']:.10f}" == "0.8535533906"
        assert len(res["probabilities"]) == 4
        assert all(abs(p["value"] - COS2_PI_8) <= 1e-12 for p in res["probabilities"])
        assert res["violation"] is True
        assert doc["config"]["seed"] == 0

    def test_csv(self, capsys):
        code, out, _ = run(capsys, "quantum-task", "--format", "csv")
        rows = read_csv(out)
        assert rows[0] == ["quantity", "a", "x", "y", "value"]
        assert [r[0] for r in rows[1:]] == ["p"] * 4 + ["P_S"]
        assert rows[-1][-1] == "0.853553390593"  # 12 significant digits

    def test_optimize(self, capsys):
        code, doc = run_json(capsys, "quantum-task", "--optimize", "--budget", "3")
        assert code == 0
        assert doc["results"]["optimizer"]["value"] >= 0.853553


class TestClassicalBound:
    def test_coarse(self, capsys):
        code, doc = run_json(capsys, "classical-bound", "--max-cells", "2", "--grid-step", "0.5")
        assert code == 0
        res = doc["results"]
        assert res["proof_lp"]["bound"] == res["bruteforce"]["bound"] == "3/4"
        assert res["bruteforce"]["bound_float"] == 0.75
        assert res["proof_lp"]["mass_matrix"] == {"p00": "1", "p01": "1", "p10": "0", "p11": "0"}
        assert res["certified_bound"] == "3/4"

    def test_cap_exit_code(self, capsys):
        code, _, err = run(capsys, "classical-bound", "--max-cells", "9", "--grid-step", "1/40")
        assert code == 3
        assert "cap" in err

    @pytest.mark.parametrize("step", ["0.3", "0", "abc", "2"])
    def test_bad_grid_step(self, capsys, step):
        with pytest.raises(SystemExit) as exc:
            main(["classical-bound", "--grid-step", step])
        assert exc.value.code == 2


class TestModelCheck:
    @pytest.mark.parametrize(
        "model, no_overlap, duality",
        [("bb", "pass", "fail"), ("bell", "pass", "fail"), ("ks", "fail", "pass"), ("toy", "fail", "pass")],
    )
    def test_matrix(self, capsys, model, no_overlap, duality):
        code, doc = run_json(capsys, "model-check", model)
        assert code == 0
        m = doc["results"]["assumption_matrix"]
        assert (m["no_overlap"], m["strong_duality"]) == (no_overlap, duality)
        assert doc["results"]["matches_expected"]

    def test_toy_details(self, capsys):
        _, doc = run_json(capsys, "model-check", "toy")
        res = doc["results"]
        assert res["no_overlap"]["witness"]["overlap_mass"] == 0.5
        assert res["game"]["value"] <= 0.75 + 1e-12
        assert res["assumption_matrix"]["convexity"] == "pass"

    def test_csv_row(self, capsys):
        code, out, _ = run(capsys, "model-check", "ks", "--mesh", "20", "--format", "csv")
        rows = read_csv(out)
        assert len(rows) == 2
        assert rows[1][:3] == ["ks", "fail", "pass"]

    def test_mismatch_exit_code(self, capsys):
        # a tolerance above the ks overlap mass (about 0.29) flips its no-overlap verdict
        code, _, _ = run(capsys, "model-check", "ks", "--mesh", "10", "--tol", "0.5")
        assert code == 1

    def test_export_and_check_file(self, capsys, tmp_path):
        path = tmp_path / "toy.json"
        code, _ = run_json(capsys, "model-check", "toy", "--export", str(path))
        assert code == 0
        model = FiniteOntModel.load(path)
        assert model.name == "toy"
        code, doc = run_json(capsys, "check-file", str(path))
        assert code == 0
        assert doc["results"]["strong_duality"]["passed"]
        assert not doc["results"]["no_overlap"]["passed"]

    def test_export_unwritable(self, capsys, tmp_path):
        code, _, _ = run(capsys, "model-check", "toy", "--export", str(tmp_path / "missing" / "m.json"))
        assert code == 4


class TestCheckFile:
    def test_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "check-file", str(tmp_path / "nope.json"))
        assert code == 4

    def test_malformed(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"format": "something-else"}')
        code, _, err = run(capsys, "check-file", str(path))
        assert code == 2 and "ontocert-model" in err


class TestHierarchy:
    def test_report(self, capsys):
        code, doc = run_json(capsys, "hierarchy")
        assert code == 0
        bod = doc["results"]["bounded_ontological_distinctness"]["bb_model_0_plus"]
        assert bod["ontological_value"] == 1.0
        assert bod["helstrom"] == pytest.approx(0.8536, abs=1e-4)
        assert "preparation_noncontextuality" in doc["results"]


class TestSweep:
    def test_default_csv(self, capsys):
        code, out, _ = run(capsys, "sweep", "--step", "0.19634954084936207")  # pi/16
        rows = read_csv(out)
        header, body = rows[0], rows[1:]
        ps = [float(r[header.index("P_S")]) for r in body]
        assert all(v <= 1 for v in ps)
        assert {r[header.index("classical_bound")] for r in body} == {"0.75"}
        best = body[int(np.argmax(ps))]
        assert float(best[header.index("t")]) == pytest.approx(np.pi / 2, abs=1e-9)
        assert max(ps) == pytest.approx(0.853553, abs=1e-6)

    def test_json(self, capsys):
        code, doc = run_json(capsys, "sweep", "--kind", "preparation", "--format", "json", "--step", "0.5")
        assert code == 0 and doc["results"]["rows"]

    def test_bad_range(self, capsys):
        code, _, _ = run(capsys, "sweep", "--start", "2", "--stop", "1")
        assert code == 2


class TestOutput:
    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "r.json"
        assert main(["hierarchy", "--out", str(path)]) == 0
        assert capsys.readouterr().out == ""
        assert json.loads(path.read_text())["command"] == "hierarchy"
        assert [p.name for p in tmp_path.iterdir()] == ["r.json"]

    @pytest.mark.parametrize("argv", [
        ["quantum-task", "--optimize", "--budget", "2"],
        ["model-check", "bell", "--hidden-bins", "50"],
        ["hierarchy"],
        ["sweep"],
    ])
    def test_deterministic(self, capsys, argv):
        _, first, _ = run(capsys, *argv)
        _, second, _ = run(capsys, *argv)
        assert first == second
