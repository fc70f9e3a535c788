"""Report files for a finished sweep or study.

``records.csv`` and ``summary.json`` hold only deterministic content so that
re-running a manifest reproduces them byte for byte. Wall times and
timestamps live in ``manifest.json``.
"""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path
from typing import Optional, Sequence
from xml.sax.saxutils import escape

import numpy as np

from .harness import RunRecord, summarize

CSV_FIELDS = ("learner", "m", "trial", "seed", "metric", "value", "status", "reason")
PALETTE = ("#1b6ca8", "#d1495b", "#2e8b57", "#edae49", "#6a4c93", "#00798c", "#8d6e63")


def _fmt(x: float) -> str:
    return "nan" if math.isnan(x) else repr(float(x))


def write_records_csv(records: Sequence[RunRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)  # excel dialect: CRLF rows, minimal quoting
        w.writerow(CSV_FIELDS)
        for r in records:
            w.writerow([r.learner, r.m, r.trial, r.seed, r.metric, _fmt(r.value), r.status, r.reason])


def read_records_csv(path) -> list[RunRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return [RunRecord(row["learner"], int(row["m"]), int(row["trial"]), int(row["seed"]),
                      row["metric"], float(row["value"]), row["status"], row["reason"]) for row in rows]


def write_summary_json(records: Sequence[RunRecord], path) -> dict:
    summary = {"metric": records[0].metric, "learners": summarize(records)}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")
    return summary


def _curves(summary: dict) -> dict:
    out = {}
    for learner, by_m in summary["learners"].items():
        pts = [(int(m), s["mean"], s["std"]) for m, s in by_m.items() if s["mean"] is not None]
        out[learner] = sorted(pts)
    return out


def render_svg(summary: dict, width: int = 640, height: int = 400) -> str:
    """Mean metric against m on a log x axis, one polyline per learner."""
    curves = _curves(summary)
    ms = [m for pts in curves.values() for m, _, _ in pts] or [1]
    lo, hi = math.log10(min(ms)), math.log10(max(ms))
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    left, right, top, bottom = 70, width - 150, 30, height - 50

    def sx(m):
        return left + (math.log10(m) - lo) / (hi - lo) * (right - left)

    def sy(v):
        return bottom - v * (bottom - top)  # metrics live in [0, 1]

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>',
    ]
    for v in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = sy(v)
        parts.append(f'<line x1="{left - 4}" y1="{y:.2f}" x2="{left}" y2="{y:.2f}" stroke="black"/>')
        parts.append(f'<text x="{left - 8}" y="{y + 4:.2f}" font-size="11" text-anchor="end">{v:g}</text>')
    for m in sorted(set(ms)):
        x = sx(m)
        parts.append(f'<line x1="{x:.2f}" y1="{bottom}" x2="{x:.2f}" y2="{bottom + 4}" stroke="black"/>')
        parts.append(f'<text x="{x:.2f}" y="{bottom + 18}" font-size="11" text-anchor="middle">{m}</text>')
    parts.append(f'<text x="{(left + right) / 2:.0f}" y="{height - 12}" font-size="12" '
                 f'text-anchor="middle">training size m (log scale)</text>')
    parts.append(f'<text x="16" y="{(top + bottom) / 2:.0f}" font-size="12" text-anchor="middle" '
                 f'transform="rotate(-90 16 {(top + bottom) / 2:.0f})">{escape(summary["metric"])}</text>')
    for i, (learner, pts) in enumerate(sorted(curves.items())):
        color = PALETTE[i % len(PALETTE)]
        coords = " ".join(f"{sx(m):.2f},{sy(v):.2f}" for m, v, _ in pts)
        parts.append(f'<polyline id="curve-{escape(learner)}" fill="none" stroke="{color}" '
                     f'stroke-width="2" points="{coords}"/>')
        y = top + 16 * i + 8
        parts.append(f'<line x1="{right + 12}" y1="{y}" x2="{right + 32}" y2="{y}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{right + 38}" y="{y + 4}" font-size="11">{escape(learner)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_png(summary: dict, path) -> None:
    """Same curves as the SVG, with standard-deviation error bars."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    for i, (learner, pts) in enumerate(sorted(_curves(summary).items())):
        m, v, s = (np.array(col, dtype=float) for col in zip(*pts))
        ax.errorbar(m, v, yerr=s, marker="o", ms=4, capsize=3, color=PALETTE[i % len(PALETTE)], label=learner)
    ax.set_xscale("log")
    ax.set_ylim(-0.02, 1.02)
    ax.set_xlabel("training size m")
    ax.set_ylabel(summary["metric"])
    ax.spines["right"].set_visible(False)
    ax.spines["top"].set_visible(False)
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def emit_report(records: Sequence[RunRecord], out_dir, manifest: Optional[dict] = None,
                png: bool = True) -> dict:
    """Write records.csv, summary.json, curves.svg, curves.png and
    manifest.json (when given) into ``out_dir``; returns the paths."""
    if not records:
        raise ValueError("no records to report")
    out = Path(out_dir)
    os.makedirs(out, exist_ok=True)
    paths = {"records": out / "records.csv", "summary": out / "summary.json", "svg": out / "curves.svg"}
    write_records_csv(records, paths["records"])
    summary = write_summary_json(records, paths["summary"])
    paths["svg"].write_text(render_svg(summary), encoding="utf-8")
    if png:
        paths["png"] = out / "curves.png"
        render_png(summary, paths["png"])
    if manifest is not None:
        paths["manifest"] = out / "manifest.json"
        with open(paths["manifest"], "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return paths
