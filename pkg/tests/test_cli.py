import json

import pytest

from dglakit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def records(text):
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def test_dims_structured(capsys):
    code, out, _ = run(capsys, "dims", "--cutoff", "3", "--format", "structured")
    assert code == 0
    dims = {r["degree"]: r["dim"] for r in records(out)}
    assert [dims[k] for k in (-1, -2, -3)] == [3, 6, 14]


def test_dims_with_extension(capsys):
    code, out, _ = run(capsys, "dims", "--cutoff", "3", "--poly", "killing", "--format",
                       "structured")
    assert code == 0
    dims = {r["degree"]: r["dim"] for r in records(out)}
    assert dims[-2] == 7


def test_verify_passes_with_exit_zero(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "cone")
    assert code == 0
    assert out.strip().endswith("3/3 checks passed")


def test_phi_suite_includes_low_degree(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "phi", "--cutoff", "3", "--format",
                       "structured")
    assert code == 0
    recs = records(out)
    assert {r["id"] for r in recs} == {"phi.identity", "phi.low_degree"}
    assert all(r["status"] == "pass" and r["anchor"] for r in recs)


def test_cutoff_zero_refuses(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "dg", "--cutoff", "0", "--format",
                       "structured")
    assert code == 1
    recs = records(out)
    assert len(recs) == 5
    assert all(r["status"] == "refused-by-cutoff" for r in recs)


def test_structured_output_is_deterministic(capsys):
    argv = ("verify", "--suite", "weil", "--format", "structured", "--seed", "7")
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second != ""
    assert all(r["micros"] == 0 for r in records(first))


def test_timing_records_micros(capsys):
    _, out, _ = run(capsys, "verify", "--suite", "cone", "--format", "structured", "--timing")
    assert any(r["micros"] > 0 for r in records(out))


def test_usage_errors_exit_two(capsys):
    assert run(capsys, "dims", "--algebra", "nope")[0] == 2
    assert run(capsys, "verify", "--suite", "nonsense")[0] == 2
    assert run(capsys, "dims", "--algebra-file", "/nonexistent/file.json")[0] == 2
    code, _, err = run(capsys, "cocycle", "n3", "--algebra", "sl3", "--alpha", "sin(w)",
                       "--alpha-dirs", "u")
    assert code == 2 and "2-form" in err


def test_km_cocycle(capsys):
    code, out, _ = run(capsys, "cocycle", "km", "--x", "e", "--y", "f", "--format", "structured")
    assert code == 0
    (rec,) = records(out)
    assert rec["value"] == "-4/1"
    assert rec["inputs"] == {"f": "cos(u)", "g": "sin(u)", "x": "e", "y": "f"}
    assert all(rec["checks"].values())


def test_n3_exact_alpha(capsys):
    code, out, _ = run(capsys, "cocycle", "n3", "--algebra", "sl3", "--alpha", "cos(w)",
                       "--alpha-dirs", "uw", "--f", "sin(v)", "--format", "structured")
    assert code == 0
    (rec,) = records(out)
    assert rec["value"] == "0/1"


def test_transgress_human(capsys):
    code, out, _ = run(capsys, "transgress", "--method", "via_phi_p")
    assert code == 0
    assert out.startswith("method=via_phi_p")


def test_cohomology_ce(capsys):
    code, out, _ = run(capsys, "cohomology", "--model", "ce", "--format", "structured")
    assert code == 0
    assert [r["dim"] for r in records(out)] == [1, 0, 0, 1]


def test_algebra_file(tmp_path, capsys):
    from importlib import resources
    path = tmp_path / "sl2.json"
    path.write_text(resources.files("dglakit").joinpath("data/sl2.json").read_text())
    code, out, _ = run(capsys, "dims", "--algebra-file", str(path), "--cutoff", "2",
                       "--format", "structured")
    assert code == 0
    assert {r["degree"]: r["dim"] for r in records(out)}[-2] == 6


@pytest.mark.parametrize("suite", ["cone", "weil", "transgression"])
def test_small_suites_pass(capsys, suite):
    code, out, _ = run(capsys, "verify", "--suite", suite, "--format", "structured")
    assert code == 0
    assert all(r["status"] == "pass" for r in records(out))
