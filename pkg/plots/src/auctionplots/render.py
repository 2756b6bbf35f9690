"""The five figure kinds and their sidecar stats files.

Every render writes ``<out>.stats.txt`` next to the image with one
``key=value`` per line; tests assert the sidecar, never image bytes.
Curve kinds group rows by (variant, m) and draw means with symmetric
confidence bands; the scatter kind fits a line and reports slope, R^2 and
Pearson r (also printed to stdout).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .csvdata import Row, load_rows, per_run
from .stats import GroupSummary, least_squares, summarize

KINDS = (
    "logprob-vs-m",
    "reward-vs-m",
    "revenue-vs-m",
    "utility-vs-reward",
    "tv-vs-m",
)

# column accessor and whether the metric repeats across an auction's
# advertiser rows (run-level) or is a per-advertiser quantity
_CURVES = {
    "logprob-vs-m": (lambda r: r.log_prob_opt, True, "returned-reply log probability under the target"),
    "reward-vs-m": (lambda r: r.normalized_reward, False, "normalized advertiser reward"),
    "revenue-vs-m": (lambda r: r.revenue, True, "revenue"),
    "tv-vs-m": (lambda r: r.tv_to_opt, True, "batch TV distance to the target"),
}


@dataclass(frozen=True)
class FigureSpec:
    input_csv: str | Path
    kind: str
    output_image: str | Path
    ci_level: float = 0.95

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if not 0 < self.ci_level < 1:
            raise ValueError(f"ci level must lie in (0, 1), got {self.ci_level}")


def _write_sidecar(path: Path, lines: list[str]) -> None:
    path.with_name(path.name + ".stats.txt").write_text("\n".join(lines) + "\n")


def _render_curves(spec: FigureSpec, rows: list[Row]) -> list[str]:
    value_of, run_level, ylabel = _CURVES[spec.kind]
    pool = per_run(rows) if run_level else rows
    groups: dict[tuple[str, int], list[float]] = {}
    for row in pool:
        groups.setdefault((row.variant, row.m), []).append(value_of(row))

    summaries: dict[tuple[str, int], GroupSummary] = {
        key: summarize(vals, spec.ci_level) for key, vals in sorted(groups.items())
    }

    fig, ax = plt.subplots(figsize=(6, 4))
    for variant in sorted({v for v, _ in summaries}):
        ms = sorted(m for v, m in summaries if v == variant)
        means = [summaries[(variant, m)].mean for m in ms]
        halves = [summaries[(variant, m)].ci_half for m in ms]
        ax.errorbar(ms, means, yerr=halves, marker="o", capsize=3, label=variant)
    if spec.kind == "tv-vs-m":
        ax.set_xscale("log", base=2)
        ax.set_yscale("log")
    ax.set_xlabel("candidate replies m")
    ax.set_ylabel(ylabel)
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output_image, dpi=120)
    plt.close(fig)

    lines = [f"kind={spec.kind}", f"rows={len(pool)}", f"ci_level={spec.ci_level}"]
    for (variant, m), summary in summaries.items():
        lines.append(f"mean.{variant}.{m}={summary.mean:.12g}")
        lines.append(f"ci_half.{variant}.{m}={summary.ci_half:.12g}")
        lines.append(f"n.{variant}.{m}={summary.n}")
    return lines


def _render_scatter(spec: FigureSpec, rows: list[Row]) -> list[str]:
    xs = [r.normalized_reward for r in rows]
    ys = [r.expected_utility for r in rows]
    fit = least_squares(xs, ys)

    fig, ax = plt.subplots(figsize=(5, 5))
    ax.scatter(xs, ys, s=8, alpha=0.5)
    lo, hi = min(xs), max(xs)
    ax.plot(
        [lo, hi],
        [fit.slope * lo + fit.intercept, fit.slope * hi + fit.intercept],
        color="crimson",
        label=f"fit: slope {fit.slope:.3f}, R² {fit.r_squared:.3f}",
    )
    ax.set_xlabel("normalized reward")
    ax.set_ylabel("expected utility")
    ax.legend()
    fig.tight_layout()
    fig.savefig(spec.output_image, dpi=120)
    plt.close(fig)

    print(
        f"utility-vs-reward: slope={fit.slope:.6g} r_squared={fit.r_squared:.6g} "
        f"pearson_r={fit.pearson_r:.6g} n={fit.n}"
    )
    return [
        f"kind={spec.kind}",
        f"rows={len(rows)}",
        f"ci_level={spec.ci_level}",
        f"slope={fit.slope:.12g}",
        f"intercept={fit.intercept:.12g}",
        f"r_squared={fit.r_squared:.12g}",
        f"pearson_r={fit.pearson_r:.12g}",
        f"n={fit.n}",
    ]


def render(spec: FigureSpec) -> Path:
    """Render one figure and its sidecar; returns the image path."""
    rows = load_rows(spec.input_csv)
    if spec.kind == "utility-vs-reward":
        lines = _render_scatter(spec, rows)
    else:
        lines = _render_curves(spec, rows)
    out = Path(spec.output_image)
    _write_sidecar(out, lines)
    return out
