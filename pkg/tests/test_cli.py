import json
import subprocess
import sys

import pytest

from jcrp.cli import main, rational
from jcrp.combinatorics import GroupIndexing, is_j_balanced, parse_partition
from jcrp.params import ModelParams
from jcrp.samplers import RngHandle, sample_labels, to_partition
from jcrp.verify import CheckRecord, SuiteReport, run_suite, suite_tasks


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sample_balanced_lines(capsys):
    code, out, _ = run(capsys, "sample", "--model", "balanced", "--n", "2", "--j", "2",
                       "--alpha", "1/2", "--theta", "1", "--seed", "7", "--samples", "3")
    assert code == 0
    lines = out.splitlines()
    assert len(lines) == 3
    assert all(is_j_balanced(parse_partition(line), GroupIndexing(2, 2)) for line in lines)


def test_sample_matches_library_call(capsys):
    code, out, _ = run(capsys, "sample", "--model", "even", "--n", "3", "--j", "2",
                       "--kappa", "1/2", "--m", "3", "--seed", "9", "--samples", "20")
    labels = sample_labels("even", 3, 2, ModelParams.negative_kappa("1/2", 3), RngHandle(9), 20)
    assert out.splitlines() == [to_partition(r).to_text() for r in labels]


def test_sample_crp_single_element(capsys):
    code, out, _ = run(capsys, "sample", "--model", "crp", "--n", "1", "--alpha", "1/2", "--theta", "1")
    assert code == 0 and out == "1\n"


def test_sample_structured_and_trace(capsys, tmp_path):
    trace = tmp_path / "trace.jsonl"
    code, out, _ = run(capsys, "sample", "--model", "even", "--n", "3", "--j", "2", "--alpha", "1/2",
                       "--theta", "1", "--samples", "4", "--format", "structured",
                       "--trace-out", str(trace))
    assert code == 0
    assert [json.loads(line)["partition"] for line in out.splitlines()]
    records = [json.loads(line) for line in trace.read_text().splitlines()]
    assert len(records) == 4 and len(records[0]["steps"]) == 2


def test_pmf_values(capsys):
    code, out, _ = run(capsys, "pmf", "--model", "even", "--n", "2", "--j", "2",
                       "--alpha", "1/2", "--theta", "1", "1 2 3 4")
    assert code == 0
    obj, prob, logp = out.strip().split("\t")
    assert prob == "1/2" and float(logp) == pytest.approx(-0.6931471805599453)
    code, out, _ = run(capsys, "pmf", "--model", "crp", "--n", "1", "--alpha", "1/2", "--theta", "1", "1")
    assert code == 0 and out.split("\t")[1] == "1/1"
    code, out, _ = run(capsys, "pmf", "--model", "ewens-integer", "--n", "3", "--lam", "1", "1^3")
    assert out.split("\t")[1] == "1/6"


def test_pmf_structured(capsys):
    code, out, _ = run(capsys, "pmf", "--model", "balanced", "--n", "2", "--j", "2", "--alpha", "1/2",
                       "--theta", "1", "--format", "structured", "1 4|2 3")
    rec = json.loads(out)
    assert rec["prob"] == "1/4" and rec["object"] == "1 4|2 3"


@pytest.mark.parametrize("argv", [
    ["pmf", "--model", "even", "--n", "2", "--j", "2", "--alpha", "1/2", "--theta", "1", "1|2 3 4"],
    ["pmf", "--model", "even", "--n", "2", "--j", "2", "--alpha", "0.5", "--theta", "1", "1 2 3 4"],
    ["pmf", "--model", "crp", "--n", "2", "--alpha", "3/2", "--theta", "1", "1 2"],
    ["pmf", "--model", "crp", "--n", "3", "--alpha", "1/2", "--theta", "1", "1 2"],
    ["pmf", "--model", "crp", "--n", "2", "--alpha", "1/2", "1 2"],
    ["pmf", "--model", "crp", "--n", "2", "--alpha", "1/2", "--theta", "1", "2|1"],
    ["sample", "--model", "crp", "--n", "0", "--alpha", "1/2", "--theta", "1"],
    ["sample", "--model", "crp", "--n", "2", "--alpha", "1/2", "--theta", "1", "--samples", "0"],
    ["sample", "--model", "crp", "--n", "2", "--kappa", "1/2", "--m", "3/2"],
    ["sample", "--model", "crp", "--n", "2", "--alpha", "1/2", "--theta", "1", "--trace-out", "x"],
])
def test_validation_errors_exit_2(capsys, argv):
    code, _, _ = run(capsys, *argv)
    assert code == 2


def test_budget_exit_3(capsys):
    code, _, err = run(capsys, "enumerate", "--model", "crp", "--n", "12", "--alpha", "1/2", "--theta", "1")
    assert code == 3 and "budget" in err
    code, _, _ = run(capsys, "enumerate", "--model", "crp", "--n", "7", "--alpha", "1/2", "--theta", "1",
                     "--max-objects", "100")
    assert code == 3


def test_enumerate_with_pmf(capsys):
    code, out, _ = run(capsys, "enumerate", "--model", "balanced", "--n", "2", "--j", "2",
                       "--alpha", "1/2", "--theta", "1", "--with-pmf")
    rows = [line.split("\t") for line in out.splitlines()]
    assert [r[0] for r in rows] == ["1 2 3 4", "1 2|3 4", "1 4|2 3"]
    assert [r[1] for r in rows] == ["1/2", "1/4", "1/4"]


def test_rational_parser():
    assert rational("-3/4") == -rational("3/4")
    for bad in ("0.5", "1e3", "1/0", "x"):
        with pytest.raises(Exception):
            rational(bad)


def test_verify_identity(capsys):
    code, out, _ = run(capsys, "verify", "--suite", "identity")
    assert code == 0
    assert "FAIL" not in out and out.strip().endswith("binding checks passed")


def test_verify_claims_audit_exit_zero(capsys, tmp_path):
    path = tmp_path / "audit.jsonl"
    code, out, _ = run(capsys, "verify", "--suite", "claims-audit", "--format", "structured", "--out", str(path))
    assert code == 0 and out == ""
    claims = {json.loads(line)["claim"] for line in path.read_text().splitlines()}
    assert "even-limit-display" in claims


def test_verify_reports_failure_with_exit_1(monkeypatch, capsys):
    import jcrp.verify as verify

    monkeypatch.setattr(verify, "run_suite", lambda *a, **k: SuiteReport(
        [CheckRecord("normalization", "x", {}, {}, passed=False)]))
    code, out, _ = run(capsys, "verify", "--suite", "normalization")
    assert code == 1 and "[FAIL]" in out


def test_worker_pool_keeps_order():
    serial = run_suite("limits", workers=1)
    pooled = run_suite("limits", workers=2)
    assert serial.to_jsonl() == pooled.to_jsonl()
    assert len(suite_tasks("limits")) > 1


def test_cli_subprocess_is_deterministic():
    argv = [sys.executable, "-m", "jcrp.cli", "sample", "--model", "two-step-even", "--n", "3", "--j", "2",
            "--alpha", "1/4", "--theta", "1/2", "--seed", "123", "--samples", "200"]
    a = subprocess.run(argv, capture_output=True, check=True).stdout
    b = subprocess.run(argv, capture_output=True, check=True).stdout
    assert a == b and len(a.splitlines()) == 200
