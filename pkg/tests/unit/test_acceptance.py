import json
import pathlib
import sys

# Ensure src/ is importable
REPO_ROOT = pathlib.Path(__file__).resolve().parents[2]
SRC_DIR = REPO_ROOT / "src"
sys.path.append(str(SRC_DIR))

import acceptance  # type: ignore
import artifacts  # type: ignore
from errors import DiagnosticError  # type: ignore


def test_small_connected_graphs():
    graphs = acceptance.small_connected_graphs(4)
    # connected graphs on 2, 3 and 4 vertices up to isomorphism: 1 + 2 + 6
    assert len(graphs) == 9
    assert all(g.n_edges >= g.n_vertices - 1 for g in graphs)


def test_fast_criteria_pass(cfg):
    for check in (acceptance.check_matrix_tree, acceptance.check_scaling, acceptance.check_reversibility, acceptance.check_bound_chain):
        res = check(cfg, 20090501)
        assert res.passed, res.detail


def test_path_frequency_table():
    import numpy as np

    paths = np.array([[0, 1, 2], [0, 1, 2], [0, 2, 1]])
    assert acceptance.path_frequency_table(paths, 3) == {(0, 1, 2): 2, (0, 2, 1): 1}


def test_run_acceptance_selects_and_logs(cfg, tmp_path):
    log_path = tmp_path / "run_log.jsonl"
    result = acceptance.run_acceptance(cfg, 5, only=[8], logger=artifacts.JsonlLogger(str(log_path)))
    assert [c.number for c in result.criteria] == [8]
    assert result.passed and result.failures == []
    assert list(result.criteria[0].to_row()) == acceptance.VERIFY_COLUMNS
    events = [json.loads(line) for line in log_path.read_text(encoding="utf-8").splitlines()]
    assert events[0]["event"] == "criterion" and events[0]["number"] == 8


def test_run_acceptance_reports_errors_as_failures(cfg, monkeypatch):
    def boom(cfg, seed):
        raise DiagnosticError("LOW_ESS", "too few effective samples")

    monkeypatch.setattr(acceptance, "check_reversibility", boom)
    result = acceptance.run_acceptance(cfg, 5, only=[2, 8])
    assert [c.number for c in result.criteria] == [2, 8]
    assert not result.passed
    assert [c.number for c in result.failures] == [8]
    assert result.failures[0].detail.startswith("LOW_ESS")
    assert result.failures[0].to_row()["status"] == "FAIL"
