"""Report rendering: TSV tables plus matplotlib figures.

Every report path writes delimited output and a figure next to it, and
embeds the exact configuration and seed that produced the numbers.
"""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
import numpy as np  # noqa: E402


def write_tsv(path: Path, header: list[str], rows: list[tuple]):
    lines = ["\t".join(header)]
    for row in rows:
        lines.append("\t".join(str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_json(path: Path, payload: dict):
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def moving_average(values: list[float], window: int) -> list[float]:
    if window <= 1:
        return list(values)
    out = []
    acc = 0.0
    for i, v in enumerate(values):
        acc += v
        if i >= window:
            acc -= values[i - window]
        out.append(acc / min(i + 1, window))
    return out


def render_lines(path: Path, series: dict[str, tuple[list, list]], title: str,
                 xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(7, 4.2))
    for label, (xs, ys) in series.items():
        ax.plot(xs, ys, label=label, linewidth=1.2)
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if series:
        ax.legend(fontsize=8)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_scatter(path: Path, xs: list[float], ys: list[float], title: str,
                   xlabel: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(4.8, 4.8))
    ax.scatter(xs, ys, s=14, alpha=0.7)
    lo = min(min(xs, default=0.0), min(ys, default=0.0))
    hi = max(max(xs, default=1.0), max(ys, default=1.0))
    ax.plot([lo, hi], [lo, hi], color="gray", linewidth=0.8, linestyle="--")
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_grouped_bars(path: Path, groups: list[str],
                        series: dict[str, list[float]], title: str, ylabel: str):
    fig, ax = plt.subplots(figsize=(7, 4.2))
    positions = np.arange(len(groups), dtype=float)
    width = 0.8 / max(len(series), 1)
    for i, (label, values) in enumerate(series.items()):
        ax.bar(positions + i * width, values, width=width, label=label)
    ax.set_xticks(positions + width * (len(series) - 1) / 2)
    ax.set_xticklabels(groups, rotation=20, ha="right", fontsize=8)
    ax.set_title(title)
    ax.set_ylabel(ylabel)
    ax.legend(fontsize=8)
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
