import json
import pathlib
import sys

import numpy as np
from hypothesis import given, strategies as st

# Ensure src/ is importable
REPO_ROOT = pathlib.Path(__file__).resolve().parents[2]
SRC_DIR = REPO_ROOT / "src"
sys.path.append(str(SRC_DIR))

import artifacts  # type: ignore
from errors import DiagnosticError  # type: ignore


def header(seed=1):
    return artifacts.build_header("0.1.0", "bound", {"r": 130, "a": 0.5}, seed)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_format_float_is_lossless(x):
    assert float(artifacts.format_float(x)) == x


def test_format_float_special_values():
    assert artifacts.format_float(0.1) == "0.10000000000000001"
    assert artifacts.format_float(float("inf")) == "inf"
    assert artifacts.format_float(float("-inf")) == "-inf"
    assert artifacts.format_float(float("nan")) == "nan"


def test_csv_has_header_comments_and_reads_back(tmp_path):
    out = tmp_path / "sub" / "t.csv"
    rows = [{"a": 1, "b": 0.5, "c": True, "d": None}, {"a": np.int64(2), "b": np.float64(1 / 3), "c": False, "d": [1, 2]}]
    artifacts.write_csv(str(out), ["a", "b", "c", "d"], rows, header(7))
    text = out.read_text(encoding="utf-8").splitlines()
    assert text[0] == "# tool: errw-recurrence-lab"
    assert "# seed: 7" in text
    assert any(line.startswith("# config: ") for line in text)
    back = artifacts.read_csv(str(out))
    assert back[0] == {"a": "1", "b": "0.5", "c": "true", "d": ""}
    assert float(back[1]["b"]) == 1 / 3
    assert back[1]["d"] == "1|2"


def test_csv_is_byte_identical_on_rewrite(tmp_path):
    rows = [{"x": k / 7.0} for k in range(20)]
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    artifacts.write_csv(str(p1), ["x"], rows, header())
    artifacts.write_csv(str(p2), ["x"], rows, header())
    assert p1.read_bytes() == p2.read_bytes()


def test_json_header_comes_first(tmp_path):
    out = tmp_path / "r.json"
    artifacts.write_json(str(out), {"value": np.float64(2.5), "vec": np.arange(3), "big": float("inf")}, header())
    raw = out.read_text(encoding="utf-8")
    doc = json.loads(raw)
    assert list(doc)[0] == "header"
    assert doc["header"]["subcommand"] == "bound"
    assert doc["vec"] == [0, 1, 2]
    assert doc["big"] == "inf"


def test_run_key_is_deterministic():
    k1 = artifacts.compute_run_key(header(1))
    assert k1.startswith("rk1|")
    assert k1 == artifacts.compute_run_key(header(1))
    assert k1 != artifacts.compute_run_key(header(2))


def test_jsonl_logger_uses_anchor(tmp_path, monkeypatch):
    monkeypatch.setenv("RUN_ANCHOR_TIMESTAMP_UTC", "2024-01-01T00:00:00Z")
    path = tmp_path / "logs" / "run_log.jsonl"
    log = artifacts.JsonlLogger(str(path))
    log.write({"event": "start", "n": np.int64(3)})
    log.write({"event": "done"})
    lines = path.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    first = json.loads(lines[0])
    assert first == {"ts": "2024-01-01T00:00:00+00:00", "event": "start", "n": 3}


def test_jsonl_logger_without_path_is_silent(tmp_path):
    artifacts.JsonlLogger(None).write({"event": "x"})
    assert list(tmp_path.iterdir()) == []


def test_diagnostic_error_record():
    exc = DiagnosticError("LOW_ESS", "too few", {"ess": 12.0})
    assert exc.to_record() == {"error": "LOW_ESS", "message": "too few", "details": {"ess": 12.0}}
