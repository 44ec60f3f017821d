# src/reporting.py
"""Plot data and the verify report.

Functions:
- emit_plot_data: hitting estimates and bound curves as CSV, plus a log-log SVG
  when there is at least one overlay curve
- write_verify_report: Markdown table of the acceptance suite, plus a PDF via fpdf2

Determinism:
- SVGs are written with a fixed hash salt and no date metadata, so identical
  input gives identical bytes. Reports carry the run key, never a wall-clock time.
"""

from __future__ import annotations

import argparse
import io
import json
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import artifacts  # type: ignore  # noqa: E402
import potential  # type: ignore  # noqa: E402

PLOT_COLUMNS = ["series", "norm", "value", "ci_halfwidth"]
_SVG_HASH_SALT = "errw-recurrence-lab"


@dataclass(frozen=True)
class PlotPoint:
    norm: int  # |ell|_inf of the target, or r * level for shells
    estimate: float
    ci_halfwidth: float


def points_from_estimates(estimates: Sequence[Any], norms: Sequence[int]) -> List[PlotPoint]:
    if len(estimates) != len(norms):
        raise ValueError("points_from_estimates: one norm per estimate")
    return [PlotPoint(int(n), float(e.estimate), float(e.ci_halfwidth)) for e, n in zip(estimates, norms)]


def hitting_bound_overlay(r: int, xi: float, norms: Sequence[int]) -> List[Tuple[float, float]]:
    """(|ell|_inf, (r/|ell|_inf)^(1+xi)) per norm."""
    return [(float(n), potential.hitting_bound(r, n, xi)) for n in norms]


def boundary_bound_overlay(r: int, xi: float, levels: Sequence[int]) -> List[Tuple[float, float]]:
    """(r*l, 8 l^(-xi)) per level."""
    return [(float(r * l), potential.boundary_bound(l, xi)) for l in levels]


def _plot_rows(results: Sequence[PlotPoint], overlays: Mapping[str, Sequence[Tuple[float, float]]]) -> List[Dict[str, Any]]:
    rows = [{"series": "estimate", "norm": p.norm, "value": p.estimate, "ci_halfwidth": p.ci_halfwidth} for p in results]
    for name in sorted(overlays):
        rows.extend({"series": name, "norm": x, "value": y, "ci_halfwidth": None} for x, y in overlays[name])
    return rows


def _svg_bytes(results: Sequence[PlotPoint], overlays: Mapping[str, Sequence[Tuple[float, float]]], header: Optional[Mapping[str, Any]]) -> bytes:
    matplotlib.rcParams["svg.hashsalt"] = _SVG_HASH_SALT
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    try:
        pts = sorted((p for p in results if p.estimate > 0), key=lambda p: p.norm)
        if pts:
            ax.errorbar(
                [p.norm for p in pts],
                [p.estimate for p in pts],
                yerr=[min(p.ci_halfwidth, p.estimate * 0.999) for p in pts],
                fmt="o",
                color="black",
                label="estimate",
            )
        for name in sorted(overlays):
            curve = sorted((x, y) for x, y in overlays[name] if x > 0 and y > 0)
            if curve:
                ax.plot([x for x, _ in curve], [y for _, y in curve], label=name)
        ax.set_xscale("log")
        ax.set_yscale("log")
        ax.set_xlabel("|ell|_inf")
        ax.set_ylabel("hitting probability")
        ax.legend(loc="best")
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    finally:
        plt.close(fig)
    svg = buf.getvalue()
    if header is not None:
        comment = "<!--\n" + "\n".join(artifacts.header_comment_lines(header)).replace("--", "- -") + "\n-->\n"
        end_decl = svg.find("?>")
        cut = end_decl + 3 if end_decl >= 0 else 0
        svg = svg[:cut] + comment + svg[cut:]
    return svg.encode("utf-8")


def emit_plot_data(
    results: Sequence[PlotPoint],
    overlays: Optional[Mapping[str, Sequence[Tuple[float, float]]]],
    out_dir: str,
    header: Optional[Mapping[str, Any]] = None,
    stem: str = "hitting_plot",
) -> Dict[str, str]:
    """Write <stem>.csv always and <stem>.svg when there are overlays; returns the paths written."""
    if not results:
        raise ValueError("emit_plot_data: results must be non-empty")
    overlays = dict(overlays or {})
    paths = {"csv": os.path.join(out_dir, f"{stem}.csv")}
    artifacts.write_csv(paths["csv"], PLOT_COLUMNS, _plot_rows(results, overlays), header)
    if overlays:
        paths["svg"] = os.path.join(out_dir, f"{stem}.svg")
        artifacts._ensure_dir(paths["svg"])
        with open(paths["svg"], "wb") as f:
            f.write(_svg_bytes(results, overlays, header))
    return paths


# ------------------------------
# Verify report
# ------------------------------

def _latin1_sanitize(text: str) -> str:
    """FPDF core fonts are latin-1; map the common unicode symbols and drop the rest."""
    replacements = {
        "—": " - ",
        "–": "-",
        "−": "-",
        "≤": "<=",
        "≥": ">=",
        "γ": "gamma",
        "ξ": "xi",
        "φ": "phi",
        "±": "+/-",
        "‘": "'",
        "’": "'",
        "“": '"',
        "”": '"',
        " ": " ",
    }
    out = text
    for k, v in replacements.items():
        out = out.replace(k, v)
    return "".join(ch if ord(ch) <= 255 else "?" for ch in out)


def _write_text_pdf(text: str, out_path: str) -> Tuple[bool, str]:
    """Write a simple text PDF using fpdf2 if available."""
    try:
        from fpdf import FPDF  # type: ignore
    except ImportError:
        return (False, "fpdf2 not installed; skipping PDF (Markdown was written).")

    artifacts._ensure_dir(out_path)
    pdf = FPDF()
    pdf.set_auto_page_break(auto=True, margin=15)
    pdf.add_page()
    pdf.set_font("courier", size=9)
    pdf.set_text_color(0, 0, 0)
    for line in text.splitlines():
        if line.startswith("#"):
            line = line.lstrip("#").strip()
        pdf.multi_cell(0, 5, text=_latin1_sanitize(line), new_x="LMARGIN", new_y="NEXT", align="L")
    try:
        pdf.output(out_path)
        return (True, "PDF created.")
    except OSError as e:
        return (False, f"Failed to write PDF: {e}")


def _escape_cell(text: str) -> str:
    return str(text).replace("|", "\\|")


def build_verify_report_md(result: Any, header: Mapping[str, Any], run_key: str) -> str:
    lines = [
        "# Verify report",
        "",
        f"**Run key:** `{run_key}`",
        f"**Version:** {header.get('version', '')}  ",
        f"**Seed:** {header.get('seed', '')}",
        "",
        f"## Summary: {'ALL PASS' if result.passed else f'{len(result.failures)} FAILED'}",
        "",
        "| # | Criterion | Status | Detail |",
        "| ---: | --- | --- | --- |",
    ]
    for c in result.criteria:
        lines.append(f"| {c.number} | {c.name} | {'PASS' if c.passed else 'FAIL'} | {_escape_cell(c.detail)} |")
    lines += ["", "## Resolved configuration", "", "```json", json.dumps(artifacts.to_jsonable(header.get("config", {})), indent=2, sort_keys=True), "```", ""]
    return "\n".join(lines)


def write_verify_report(result: Any, out_dir: str, header: Mapping[str, Any], run_key: str) -> Dict[str, str]:
    """verify_report.md always; verify_report.pdf when fpdf2 is importable."""
    md = build_verify_report_md(result, header, run_key)
    paths = {"md": os.path.join(out_dir, "verify_report.md")}
    artifacts._ensure_dir(paths["md"])
    with open(paths["md"], "w", encoding="utf-8") as f:
        f.write(md)
    pdf_path = os.path.join(out_dir, "verify_report.pdf")
    ok, msg = _write_text_pdf(md, pdf_path)
    if ok:
        paths["pdf"] = pdf_path
    else:
        print(f"WARNING: {msg}", flush=True)
    return paths


def main() -> None:
    p = argparse.ArgumentParser(description="Plot a hitting CSV against the power-law bound.")
    p.add_argument("--hitting-csv", required=True, help="CSV written by the simulate subcommand")
    p.add_argument("--r", type=int, required=True)
    p.add_argument("--xi", type=float, required=True)
    p.add_argument("--out-dir", default="data/out")
    args = p.parse_args()
    rows = artifacts.read_csv(args.hitting_csv)
    pts = []
    for row in rows:
        target = row["target"]
        norm = args.r * int(target.split(":", 1)[1]) if target.startswith("level:") else max(abs(int(v)) for v in target.split(","))
        pts.append(PlotPoint(norm, float(row["estimate"]), float(row["ci_halfwidth"])))
    paths = emit_plot_data(pts, {"bound": hitting_bound_overlay(args.r, args.xi, [p.norm for p in pts])}, args.out_dir)
    print(f"Wrote {', '.join(paths.values())}")


if __name__ == "__main__":
    main()
