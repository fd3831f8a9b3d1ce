import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from sqss_sim import protocol
from sqss_sim.cli import main


def _run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_ir_with_solution1_exits_2(capsys, tmp_path):
    path = tmp_path / "r.json"
    code, _, _ = _run(capsys, "run", "--protocol", "randomization", "--adversary", "intercept-resend",
                      "--solution1", "--N", "64", "--runs", "3", "-o", str(path))
    assert code == 2
    doc = json.loads(path.read_text())
    assert {r["verdict"]["abort_reason"] for r in doc["runs"]} == {"Case3Deficient"}


def test_honest_measure_resend_exits_0(capsys):
    code, out, _ = _run(capsys, "run", "--protocol", "measure-resend", "--adversary", "none",
                        "--N", "500", "--runs", "3")
    assert code == 0
    doc = json.loads(out)
    assert all(r["verdict"]["error_rate"] == 0 for r in doc["runs"])
    assert doc["schema_version"] == 1 and "events" not in doc["runs"][0]


@pytest.mark.parametrize("argv", [
    ["run", "--N", "0"],
    ["run", "--runs", "0"],
    ["run", "--protocol", "bogus"],
    ["run", "--adversary", "trojan-horse"],
    ["run", "--protocol", "measure-resend", "--adversary", "intercept-resend"],
    ["run", "--share-probability", "2"],
    ["suite", "--scale", "0"],
    ["oracle", "nope"],
    [],
])
def test_usage_errors_exit_1(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        sys.exit(main(argv))
    assert exc.value.code == 1


def test_trace_includes_events(capsys):
    code, out, _ = _run(capsys, "run", "--N", "20", "--runs", "1", "--trace")
    events = json.loads(out)["runs"][0]["events"]
    assert code == 0 and events[0]["kind"] == "prepare"
    assert [e["seq"] for e in events] == list(range(len(events)))


def test_csv_matches_json(capsys):
    argv = ["run", "--protocol", "measure-resend", "--adversary", "trojan-horse", "--N", "64",
            "--runs", "4", "--seed", "7"]
    _, js, _ = _run(capsys, *argv)
    _, cs, _ = _run(capsys, *argv, "--format", "csv")
    doc = json.loads(js)
    rows = list(csv.DictReader(io.StringIO(cs)))
    assert len(rows) == len(doc["runs"]) == 4
    for row, run in zip(rows, doc["runs"]):
        assert row["pass"] == str(run["verdict"]["pass"])
        assert int(row["case1"]) == run["case_counts"]["1"]
        assert float(row["error_rate"]) == run["verdict"]["error_rate"]
        assert row["attack_succeeded"] == str(run["adversary"]["outcome"]["succeeded"])


def test_run_output_is_byte_identical(capsys, tmp_path):
    files = []
    for k in range(2):
        path = tmp_path / f"{k}.json"
        _run(capsys, "run", "--N", "100", "--runs", "3", "--trace", "--seed", "11", "-o", str(path))
        files.append(path.read_bytes())
    assert files[0] == files[1]


def test_oracle_outputs(capsys):
    assert json.loads(_run(capsys, "oracle", "ghz-like-zzz")[1]) == {
        "000": 0.25, "011": 0.25, "101": 0.25, "110": 0.25}
    assert json.loads(_run(capsys, "oracle", "case2-conditional")[1]) == {
        "(0,PhiPlus)": 0.5, "(1,PsiPlus)": 0.5}
    assert json.loads(_run(capsys, "oracle", "joint-on-psi-prime")[1]) == {"0": 1.0}


def test_suite_subset_passes_and_csv(capsys, tmp_path):
    code, out, err = _run(capsys, "suite", "--criteria", "1", "2", "--scale", "0.1")
    assert code == 0 and "[PASS] criterion 1" in err
    doc = json.loads(out)
    code, cs, _ = _run(capsys, "suite", "--criteria", "1", "2", "--scale", "0.1", "--format", "csv")
    rows = list(csv.DictReader(io.StringIO(cs)))
    assert [r["claim"] for r in rows] == [c["claim"] for c in doc["claims"]]
    assert [json.loads(r["observed"]) for r in rows] == [c["observed"] for c in doc["claims"]]


def test_suite_detects_inverted_bell_predicate(capsys, monkeypatch):
    original = protocol.consistency

    def inverted(table):
        ok = original(table)
        flip = np.isin(table.case, (2, 3))
        ok[flip] = 1 - ok[flip]
        return ok

    monkeypatch.setattr(protocol, "consistency", inverted)
    code, out, err = _run(capsys, "suite", "--criteria", "3", "4", "--scale", "0.02")
    assert code == 2
    assert json.loads(out)["failed"] > 0 and "[FAIL]" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "sqss_sim", "oracle", "joint-on-000"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["0"] == 0.25
