import pathlib
import sys

import pytest

# Ensure src/ is importable
REPO_ROOT = pathlib.Path(__file__).resolve().parents[2]
SRC_DIR = REPO_ROOT / "src"
sys.path.append(str(SRC_DIR))

import acceptance  # type: ignore
import artifacts  # type: ignore
import reporting as rp  # type: ignore


def _header():
    return artifacts.build_header("0.1.0", "simulate", {"r": 130, "a": 0.001953125}, 7)


def _points():
    return [rp.PlotPoint(130, 0.4, 0.01), rp.PlotPoint(260, 0.2, 0.01), rp.PlotPoint(520, 0.1, 0.02)]


def test_plot_data_without_overlays_is_csv_only(tmp_path):
    paths = rp.emit_plot_data(_points(), None, str(tmp_path), _header())
    assert set(paths) == {"csv"}
    rows = artifacts.read_csv(paths["csv"])
    assert [r["series"] for r in rows] == ["estimate"] * 3
    assert rows[1]["norm"] == "260"
    assert not (tmp_path / "hitting_plot.svg").exists()


def test_plot_with_overlay_is_deterministic(tmp_path):
    xi = 0.0018833
    overlays = {"bound": rp.hitting_bound_overlay(130, xi, [130, 260, 520])}
    first = rp.emit_plot_data(_points(), overlays, str(tmp_path / "a"), _header())
    second = rp.emit_plot_data(_points(), overlays, str(tmp_path / "b"), _header())
    svg = pathlib.Path(first["svg"]).read_bytes()
    assert svg == pathlib.Path(second["svg"]).read_bytes()
    text = svg.decode("utf-8")
    assert "<!--" in text and "tool: errw-recurrence-lab" in text
    rows = artifacts.read_csv(first["csv"])
    bound_rows = [r for r in rows if r["series"] == "bound"]
    assert len(bound_rows) == 3 and bound_rows[0]["ci_halfwidth"] == ""
    assert float(bound_rows[0]["value"]) == pytest.approx(1.0)


def test_empty_results_rejected(tmp_path):
    with pytest.raises(ValueError):
        rp.emit_plot_data([], None, str(tmp_path))


def test_bound_overlays():
    curve = rp.boundary_bound_overlay(4, 0.5, [1, 4, 16])
    assert curve == [(4.0, 8.0), (16.0, 4.0), (64.0, 2.0)]
    hit = rp.hitting_bound_overlay(130, 0.1, [130, 1300, 13000])
    values = [y for _, y in hit]
    assert values == sorted(values, reverse=True)


def test_points_from_estimates():
    class Est:
        estimate = 0.25
        ci_halfwidth = 0.01

    pts = rp.points_from_estimates([Est(), Est()], [4, 8])
    assert pts[1] == rp.PlotPoint(8, 0.25, 0.01)
    with pytest.raises(ValueError):
        rp.points_from_estimates([Est()], [4, 8])


def test_verify_report(tmp_path):
    result = acceptance.VerifyResult(
        [
            acceptance.CriterionResult(1, "matrix_tree_vs_enumeration", True, "56 graphs, max rel diff 1e-14"),
            acceptance.CriterionResult(9, "bound_chain", False, "r=130 a|b: S_EXACT_LE_BOUND"),
        ]
    )
    header = artifacts.build_header("0.1.0", "verify", {"settings": {"seed": 3}}, 3)
    paths = rp.write_verify_report(result, str(tmp_path), header, "rk1|abc")
    md = pathlib.Path(paths["md"]).read_text(encoding="utf-8")
    assert "1 FAILED" in md
    assert "| 9 | bound_chain | FAIL | r=130 a\\|b: S_EXACT_LE_BOUND |" in md
    assert "`rk1|abc`" in md
    assert pathlib.Path(paths["pdf"]).read_bytes().startswith(b"%PDF")


def test_latin1_sanitize():
    assert rp._latin1_sanitize("γ ≤ −1 ± ξ") == "gamma <= -1 +/- xi"
    assert rp._latin1_sanitize("漢") == "?"
