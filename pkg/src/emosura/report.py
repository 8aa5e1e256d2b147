"""Report emission: per-sample score table, summary statistics, scatter SVGs.

Outputs are deterministic: identical runs produce byte-identical files
(timestamps live only in the run manifest's timing block, never here).
Numbers render at 4 decimal places; undefined statistics render as "n/a".
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

from .errors import AllTied, LengthMismatch, ZeroVariance
from .stats import kendall_tau, length_stats, pearson_pvalue, spearman

SCORE_COLUMNS = [
    "sample_id", "system_id", "s_p", "s_r", "s_f", "s_f_prime", "final",
    "bleu4", "rouge_l", "cider_d", "mos_mean",
]

METRIC_COLUMNS = ["final", "s_f", "s_f_prime", "bleu4", "rouge_l", "cider_d"]


def _fmt(value) -> str:
    if value is None:
        return "n/a"
    if isinstance(value, float):
        return f"{value:.4f}"
    return str(value)


def write_scores_csv(rows: list[dict], path: str | Path) -> None:
    """Write the per-sample score table (RFC-4180)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SCORE_COLUMNS)
        for row in rows:
            writer.writerow([_fmt(row.get(col)) for col in SCORE_COLUMNS])


def correlation_block(metric_values: list[float], mos_values: list[float]) -> dict:
    """PCC (with p-value), Kendall tau-b and Spearman of one metric vs MOS.

    Undefined statistics (constant columns, full ties) come back as None so
    renderers can print "n/a" without special-casing exceptions.
    """
    block: dict = {}
    try:
        r, p = pearson_pvalue(metric_values, mos_values)
        block["pcc"] = r
        block["pcc_p_value"] = p
    except (ZeroVariance, LengthMismatch):
        block["pcc"] = None
        block["pcc_p_value"] = None
    try:
        block["kendall_tau"] = kendall_tau(metric_values, mos_values)
    except (AllTied, LengthMismatch):
        block["kendall_tau"] = None
    try:
        block["spearman_rho"] = spearman(metric_values, mos_values)
    except (ZeroVariance, LengthMismatch):
        block["spearman_rho"] = None
    return block


def build_summary(
    rows: list[dict],
    format_failure_rate: float | None = None,
    detection_rates: dict | None = None,
    samplewise_taus: dict | None = None,
    extra: dict | None = None,
) -> dict:
    """Assemble the summary structure from score rows.

    Correlations against MOS appear only when at least two rows carry a
    mos_mean; caption length statistics cover whatever captions are present.
    """
    summary: dict = {"n_rows": len(rows)}
    if format_failure_rate is not None:
        summary["format_failure_rate"] = format_failure_rate

    captions = [row["caption_text"] for row in rows if row.get("caption_text")]
    if captions:
        mean, std, longest = length_stats(captions)
        summary["caption_length"] = {"mean_chars": mean, "std_chars": std, "max_chars": longest}

    scored = [row for row in rows if row.get("mos_mean") is not None]
    if len(scored) >= 2:
        mos = [row["mos_mean"] for row in scored]
        correlations = {}
        for metric in METRIC_COLUMNS:
            values = [row.get(metric) for row in scored]
            if any(v is None for v in values):
                continue
            correlations[metric] = correlation_block(values, mos)
            if samplewise_taus and metric in samplewise_taus:
                correlations[metric]["samplewise_tau"] = samplewise_taus[metric]
        if correlations:
            summary["correlation_vs_mos"] = correlations

    if detection_rates:
        summary["detection_rates"] = detection_rates
    if extra:
        summary.update(extra)
    return summary


def write_summary_json(summary: dict, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


def scatter_svg(
    x: list[float], y: list[float],
    x_label: str, y_label: str,
    width: int = 480, height: int = 360,
) -> str:
    """Minimal scatter plot with axes and a least-squares trend line."""
    margin = 48
    plot_w = width - 2 * margin
    plot_h = height - 2 * margin
    xs = list(map(float, x))
    ys = list(map(float, y))
    x_min, x_max = min(xs), max(xs)
    y_min, y_max = min(ys), max(ys)
    x_span = (x_max - x_min) or 1.0
    y_span = (y_max - y_min) or 1.0

    def px(v: float) -> float:
        return margin + (v - x_min) / x_span * plot_w

    def py(v: float) -> float:
        return height - margin - (v - y_min) / y_span * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
        f'y2="{height - margin}" stroke="black"/>',
        f'<line x1="{margin}" y1="{margin}" x2="{margin}" y2="{height - margin}" stroke="black"/>',
        f'<text x="{width / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-size="12">{x_label}</text>',
        f'<text x="14" y="{height / 2:.1f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 14 {height / 2:.1f})">{y_label}</text>',
        f'<text x="{margin}" y="{height - margin + 16}" font-size="10" '
        f'text-anchor="middle">{x_min:.2f}</text>',
        f'<text x="{width - margin}" y="{height - margin + 16}" font-size="10" '
        f'text-anchor="middle">{x_max:.2f}</text>',
        f'<text x="{margin - 6}" y="{height - margin}" font-size="10" '
        f'text-anchor="end">{y_min:.2f}</text>',
        f'<text x="{margin - 6}" y="{margin + 4}" font-size="10" text-anchor="end">{y_max:.2f}</text>',
    ]
    for vx, vy in zip(xs, ys):
        parts.append(f'<circle cx="{px(vx):.2f}" cy="{py(vy):.2f}" r="3" fill="steelblue" '
                     f'fill-opacity="0.7"/>')
    # Least-squares trend line.
    n = len(xs)
    if n >= 2:
        mean_x = sum(xs) / n
        mean_y = sum(ys) / n
        sxx = sum((v - mean_x) ** 2 for v in xs)
        if sxx > 0:
            slope = sum((a - mean_x) * (b - mean_y) for a, b in zip(xs, ys)) / sxx
            intercept = mean_y - slope * mean_x
            y0 = slope * x_min + intercept
            y1 = slope * x_max + intercept
            parts.append(
                f'<line x1="{px(x_min):.2f}" y1="{py(y0):.2f}" x2="{px(x_max):.2f}" '
                f'y2="{py(y1):.2f}" stroke="crimson" stroke-width="1.5"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_report(
    rows: list[dict],
    out_dir: str | Path,
    format_failure_rate: float | None = None,
    detection_rates: dict | None = None,
    samplewise_taus: dict | None = None,
    extra: dict | None = None,
    scatter: bool = True,
) -> dict:
    """Write scores.csv, summary.json, and scatter SVGs where MOS is present.

    Returns the summary dict. SVGs pair each metric column against MOS; they
    are skipped when fewer than two rows carry a mos_mean.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_scores_csv(rows, out_dir / "scores.csv")
    summary = build_summary(
        rows,
        format_failure_rate=format_failure_rate,
        detection_rates=detection_rates,
        samplewise_taus=samplewise_taus,
        extra=extra,
    )
    write_summary_json(summary, out_dir / "summary.json")

    if scatter:
        scored = [row for row in rows if row.get("mos_mean") is not None]
        if len(scored) >= 2:
            mos = [row["mos_mean"] for row in scored]
            for metric in METRIC_COLUMNS:
                values = [row.get(metric) for row in scored]
                if any(v is None for v in values):
                    continue
                svg = scatter_svg(values, mos, metric, "MOS")
                (out_dir / f"scatter_{metric}.svg").write_text(svg, encoding="utf-8")
    return summary
