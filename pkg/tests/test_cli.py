import json
from pathlib import Path

import pytest

from probinc.cli import main
from probinc.kb import load_kb
from probinc.measure import inc_star
from probinc.shapley import shapley_inconsistency

KBS = Path(__file__).resolve().parent.parent / "kbs"


def run(capsys, *argv):
    status = main([str(a) for a in argv])
    out = capsys.readouterr()
    return status, out.out, out.err


def run_json(capsys, *argv):
    status, out, _ = run(capsys, "--json", *argv)
    return status, json.loads(out)


def test_check_inconsistent_triple(capsys):
    status, report = run_json(capsys, "check", KBS / "no_model.kb")
    assert status == 1
    assert report["consistent"] is False
    assert "witness" not in report


def test_check_consistent_has_witness(tmp_path, capsys):
    path = tmp_path / "ok.kb"
    path.write_text("var A\nvar B\n(A | B)[0.5]\n(B)[0.5]\n")
    status, report = run_json(capsys, "check", path)
    assert status == 0 and report["consistent"] is True
    assert sum(w["p"] for w in report["witness"]) == pytest.approx(1.0)
    assert [w["world"] for w in report["witness"]] == ["A && B", "A && !B", "!A && B", "!A && !B"]


def test_measure_outlier(capsys):
    status, report = run_json(capsys, "measure", KBS / "outlier.kb")
    assert status == 0
    assert report["incStar"] == pytest.approx(0.5, abs=1e-6)
    assert report["incStarNormalized"] == pytest.approx(0.125, abs=1e-6)
    assert [r["label"] for r in report["perConstraint"]] == ["r1", "r2", "r3", "r4"]


def test_measure_text(capsys):
    status, out, _ = run(capsys, "measure", "--normalized", KBS / "outlier.kb")
    assert status == 0
    assert out.startswith("Inc*_0 = 0.125")


def test_measure_oracle(capsys):
    status, report = run_json(capsys, "measure", "--oracle", "--resolution", "20", KBS / "symmetric.kb")
    assert report["diagnostics"]["resolution"] == 20
    assert report["diagnostics"]["oracle"] == pytest.approx(1.0, abs=1e-6)


def test_blame_symmetric(capsys):
    status, report = run_json(capsys, "blame", KBS / "symmetric.kb")
    assert status == 0
    values = [r["shapley"] for r in report["perConstraint"]]
    assert values == pytest.approx([1 / 3] * 3, abs=1e-3)


def test_blame_text_sorted_descending(capsys):
    _, out, _ = run(capsys, "blame", KBS / "outlier.kb")
    labels = [line.split()[0] for line in out.splitlines()[2:6]]
    assert labels == ["r4", "r1", "r2", "r3"]


def test_json_matches_library_at_12_digits(capsys):
    _, report = run_json(capsys, "blame", KBS / "two_shifts.kb")
    kb = load_kb(KBS / "two_shifts.kb")
    result = inc_star(kb)
    blame = shapley_inconsistency(kb)
    assert report["incStar"] == float(f"{result.value:.12g}")
    for row, eta, tau, s in zip(report["perConstraint"], result.deviations.eta, result.deviations.tau, blame.values):
        assert row["eta"] == float(f"{eta:.12g}")
        assert row["tau"] == float(f"{tau:.12g}")
        assert row["shapley"] == float(f"{s:.12g}")


def test_repair_output_passes_check(tmp_path, capsys):
    out = tmp_path / "fixed.kb"
    status, report = run_json(capsys, "repair", "-o", out, KBS / "two_shifts.kb")
    assert status == 0
    assert out.read_text() == report["repaired"]
    assert main(["check", str(out)]) == 0
    capsys.readouterr()
    fixed = load_kb(out)
    assert [c.probability for c in fixed] == pytest.approx([0.7, 0.8, 0.35, 0.4, 0.5], abs=5e-3)


def test_mis(capsys):
    status, report = run_json(capsys, "mis", KBS / "symmetric.kb")
    assert status == 0
    assert report["mis"] == [["r1", "r2", "r3"]]
    assert report["diagnostics"]["free"] == [False, False, False]


def test_mis_text_consistent(tmp_path, capsys):
    path = tmp_path / "ok.kb"
    path.write_text("var A\n(A)[0.4]\n")
    status, out, _ = run(capsys, "mis", path)
    assert status == 0 and "no minimal inconsistent subsets" in out


def test_global_flags_either_side(capsys):
    _, before, _ = run(capsys, "--json", "--seed", "3", "--starts", "4", "measure", KBS / "outlier.kb")
    _, after, _ = run(capsys, "measure", KBS / "outlier.kb", "--json", "--seed", "3", "--starts", "4")
    assert before == after
    d = json.loads(after)["diagnostics"]
    assert d["seed"] == 3 and d["starts"] == 4


def test_auto_declare(tmp_path, capsys):
    path = tmp_path / "auto.kb"
    path.write_text("(X)[0.3]\n(X)[0.6]\n")
    assert run(capsys, "check", path)[0] == 2
    status, report = run_json(capsys, "--auto-declare", "measure", path)
    assert status == 0 and report["incStar"] == pytest.approx(0.3, abs=1e-6)


@pytest.mark.parametrize("command", ["check", "measure", "blame", "repair", "mis"])
def test_missing_file_exits_2(command, tmp_path, capsys):
    status, out, err = run(capsys, command, tmp_path / "nope.kb")
    assert status == 2 and out == "" and "error" in err


def test_syntax_error_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.kb"
    path.write_text("var A\n(A | )[0.5]\n")
    status, _, err = run(capsys, "measure", path)
    assert status == 2 and "2" in err


def test_world_cap_exits_2(capsys):
    status, _, err = run(capsys, "--max-worlds", "4", "check", KBS / "two_shifts.kb")
    assert status == 2
