"""Benchmark report emission: CSV table, JSON dump, and an SVG cost chart.

All writers are deterministic: identical reports produce byte-identical
files, so runs can be diffed and hashed.  The SVG is emitted by hand to
keep the output free of plotting-library version drift.
"""

from __future__ import annotations

import hashlib
import json
import os

from .pipeline import BenchmarkReport, QueryRow

__all__ = ["emit_report"]

FAILED = "FAILED"

_PALETTE = [
    "#1f77b4",
    "#d62728",
    "#2ca02c",
    "#9467bd",
    "#ff7f0e",
    "#8c564b",
    "#17becf",
    "#7f7f7f",
    "#bcbd22",
    "#e377c2",
]


def _columns(report: BenchmarkReport) -> list[str]:
    cols = ["optimal"]
    for name in report.method_names:
        cols += [f"{name}_nominal", f"{name}_worst"]
    return cols


def _cell(row: QueryRow, column: str):
    if row.error is not None:
        return None
    if column == "optimal":
        return row.optimal
    name, _, kind = column.rpartition("_")
    outcome = row.methods.get(name)
    if outcome is None:
        return None
    return outcome.nominal if kind == "nominal" else outcome.worst


def _csv_text(report: BenchmarkReport) -> str:
    cols = _columns(report)
    lines = [",".join(["query_id"] + cols)]
    for row in report.sorted_rows():
        cells = [str(row.query_id)]
        for col in cols:
            value = _cell(row, col)
            cells.append(FAILED if value is None else repr(float(value)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _json_text(report: BenchmarkReport) -> str:
    payload = {
        "columns": _columns(report),
        "methods": report.method_names,
        "rows": [
            {
                "query_id": row.query_id,
                "optimal": row.optimal,
                "error": row.error,
                "methods": {
                    name: {
                        "nominal": out.nominal,
                        "worst": out.worst,
                        "strict_feasible": out.strict_feasible,
                    }
                    for name, out in sorted(row.methods.items())
                },
            }
            for row in report.sorted_rows()
        ],
        "config": report.config,
        "provenance": report.provenance,
    }
    return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _svg_text(report: BenchmarkReport) -> str:
    width, height = 960, 540
    left, right, top, bottom = 70, 240, 30, 50
    plot_w, plot_h = width - left - right, height - top - bottom
    rows = [r for r in report.sorted_rows() if r.error is None]
    series: list[tuple[str, list[float]]] = []
    for name in report.method_names:
        for kind in ("nominal", "worst"):
            values = [_cell(r, f"{name}_{kind}") for r in rows]
            if all(v is not None for v in values):
                series.append((f"{name} ({kind})", [float(v) for v in values]))
    flat = [v for _, vals in series for v in vals]
    lo, hi = (min(flat), max(flat)) if flat else (0.0, 1.0)
    if hi - lo < 1e-12:
        hi = lo + 1.0
    n = max(len(rows) - 1, 1)

    def sx(i: int) -> float:
        return left + plot_w * (i / n)

    def sy(v: float) -> float:
        return top + plot_h * (1.0 - (v - lo) / (hi - lo))

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + plot_h}" stroke="black"/>',
        f'<line x1="{left}" y1="{top + plot_h}" x2="{left + plot_w}" y2="{top + plot_h}" stroke="black"/>',
        f'<text x="{left - 8}" y="{top + 5}" text-anchor="end" font-size="11">{hi:.3f}</text>',
        f'<text x="{left - 8}" y="{top + plot_h}" text-anchor="end" font-size="11">{lo:.3f}</text>',
        f'<text x="{left + plot_w / 2:.1f}" y="{height - 12}" text-anchor="middle" font-size="12">'
        "queries sorted by optimal cost</text>",
        f'<text x="18" y="{top + plot_h / 2:.1f}" font-size="12" '
        f'transform="rotate(-90 18 {top + plot_h / 2:.1f})" text-anchor="middle">two-stage cost</text>',
    ]
    for k, (label, values) in enumerate(series):
        color = _PALETTE[k % len(_PALETTE)]
        dash = ' stroke-dasharray="5,3"' if label.endswith("(worst)") else ""
        pts = " ".join(f"{sx(i):.2f},{sy(v):.2f}" for i, v in enumerate(values))
        if len(values) == 1:
            parts.append(
                f'<circle cx="{sx(0):.2f}" cy="{sy(values[0]):.2f}" r="3" fill="{color}"/>'
            )
        else:
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>'
            )
        ly = top + 16 * k
        parts.append(
            f'<line x1="{left + plot_w + 12}" y1="{ly}" x2="{left + plot_w + 36}" y2="{ly}" '
            f'stroke="{color}" stroke-width="2"{dash}/>'
        )
        parts.append(
            f'<text x="{left + plot_w + 42}" y="{ly + 4}" font-size="11">{label}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(report: BenchmarkReport, out_dir, formats=("csv", "json", "svg")) -> dict:
    """Write the requested formats plus a manifest of hashes; returns the manifest."""
    unknown = set(formats) - {"csv", "json", "svg"}
    if unknown:
        raise ValueError(f"unknown report formats: {sorted(unknown)}")
    os.makedirs(out_dir, exist_ok=True)
    writers = {"csv": _csv_text, "json": _json_text, "svg": _svg_text}
    manifest: dict = {"files": []}
    for fmt in ("csv", "json", "svg"):
        if fmt not in formats:
            continue
        name = f"benchmark.{fmt}"
        text = writers[fmt](report)
        data = text.encode("utf-8")
        with open(os.path.join(out_dir, name), "wb") as fh:
            fh.write(data)
        manifest["files"].append(
            {"name": name, "sha256": hashlib.sha256(data).hexdigest(), "bytes": len(data)}
        )
    manifest_text = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        fh.write(manifest_text)
    return manifest
