"""Static SVG emission for the three stock figures: a per-beam RSRP heatmap,
accuracy versus UE speed, and reward over time. Hand-rolled markup, so plots
need no display server and rerun byte-identically."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .envs import make_env
from .errors import ConfigError, PlotDataError

PLOT_KINDS = ("rsrp-heatmap", "accuracy-vs-speed", "reward-curve")

MARGIN_LEFT, MARGIN_TOP, MARGIN_RIGHT, MARGIN_BOTTOM = 60, 30, 20, 45
PLOT_W, PLOT_H = 640, 360

# line colors cycle per solver
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _f(x: float) -> str:
    return f"{x:.2f}"


def _svg_open(width: float, height: float) -> list:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" '
        f'height="{_f(height)}" viewBox="0 0 {_f(width)} {_f(height)}">',
        '<rect width="100%" height="100%" fill="white"/>',
    ]


def _text(x, y, s, size=12, anchor="middle", rotate=None) -> str:
    transform = f' transform="rotate(-90 {_f(x)} {_f(y)})"' if rotate else ""
    return (
        f'<text x="{_f(x)}" y="{_f(y)}" font-family="sans-serif" '
        f'font-size="{size}" text-anchor="{anchor}"{transform}>{s}</text>'
    )


def _heat_color(u: float) -> str:
    """Dark blue (low) to yellow (high), u in [0, 1]."""
    u = float(np.clip(u, 0.0, 1.0))
    r = int(round(255 * u))
    g = int(round(32 + 190 * u))
    b = int(round(96 * (1.0 - u) + 64))
    return f"rgb({r},{g},{b})"


def _axes(parts, x_label, y_label, width, height):
    x0, y0 = MARGIN_LEFT, MARGIN_TOP
    x1, y1 = width - MARGIN_RIGHT, height - MARGIN_BOTTOM
    parts.append(
        f'<path d="M {_f(x0)} {_f(y0)} L {_f(x0)} {_f(y1)} L {_f(x1)} {_f(y1)}" '
        'fill="none" stroke="black" stroke-width="1"/>'
    )
    parts.append(_text((x0 + x1) / 2, height - 10, x_label))
    parts.append(_text(16, (y0 + y1) / 2, y_label, rotate=True))


def _scale(values, lo_px, hi_px):
    values = np.asarray(values, dtype=float)
    vmin, vmax = float(values.min()), float(values.max())
    if vmax - vmin < 1e-12:
        vmax = vmin + 1.0
    span = vmax - vmin

    def to_px(v):
        return lo_px + (v - vmin) / span * (hi_px - lo_px)

    return to_px, vmin, vmax


def _render_heatmap(summary: dict) -> str:
    env_cfg = summary.get("config", {}).get("env", {})
    if env_cfg.get("env") != "beamforming":
        raise PlotDataError("rsrp-heatmap needs a beamforming experiment summary")
    horizon = summary["config"].get("horizon", 100)
    seeds = summary["config"].get("seeds") or [0]
    env = make_env(env_cfg)
    env.reset(int(seeds[0]))
    field = env.rsrp_trace(horizon).values  # [n_beams, n_steps]
    n_beams, n_steps = field.shape

    width = MARGIN_LEFT + PLOT_W + MARGIN_RIGHT
    height = MARGIN_TOP + PLOT_H + MARGIN_BOTTOM
    cell_w = PLOT_W / n_steps
    cell_h = PLOT_H / n_beams
    vmin, vmax = float(field.min()), float(field.max())
    span = (vmax - vmin) or 1.0

    parts = _svg_open(width, height)
    for b in range(n_beams):
        for t in range(n_steps):
            u = (field[b, t] - vmin) / span
            x = MARGIN_LEFT + t * cell_w
            y = MARGIN_TOP + b * cell_h
            parts.append(
                f'<rect class="cell" x="{_f(x)}" y="{_f(y)}" width="{_f(cell_w)}" '
                f'height="{_f(cell_h)}" fill="{_heat_color(u)}"/>'
            )
    _axes(parts, "time step", "beam index", width, height)
    parts.append(
        _text(width - MARGIN_RIGHT, 18, f"RSRP {vmin:.0f}..{vmax:.0f} dB", anchor="end")
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _read_sweep_rows(path: Path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _render_accuracy_vs_speed(sweep_path: Path) -> str:
    rows = _read_sweep_rows(sweep_path)
    if not rows:
        raise PlotDataError("sweep CSV has no rows")
    if "accuracy" not in rows[0]:
        raise PlotDataError("accuracy-vs-speed needs an 'accuracy' series (beam profile)")
    solvers = sorted({r["solver"] for r in rows})
    speeds = []
    for r in rows:
        v = json.loads(r["value"])
        if v not in speeds:
            speeds.append(v)

    width = MARGIN_LEFT + PLOT_W + MARGIN_RIGHT
    height = MARGIN_TOP + PLOT_H + MARGIN_BOTTOM
    to_x, _, _ = _scale(speeds, MARGIN_LEFT + 20, width - MARGIN_RIGHT - 20)
    to_y_raw, _, _ = _scale([0.0, 1.0], height - MARGIN_BOTTOM, MARGIN_TOP)

    parts = _svg_open(width, height)
    for i, solver in enumerate(solvers):
        pts = [
            (json.loads(r["value"]), float(r["accuracy"]))
            for r in rows
            if r["solver"] == solver
        ]
        coords = " ".join(f"{_f(to_x(v))},{_f(to_y_raw(a))}" for v, a in pts)
        color = PALETTE[i % len(PALETTE)]
        parts.append(
            f'<polyline class="series" data-solver="{solver}" points="{coords}" '
            f'fill="none" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            _text(width - MARGIN_RIGHT - 4, MARGIN_TOP + 16 + 16 * i, solver, anchor="end")
        )
    for v in speeds:
        parts.append(_text(to_x(v), height - MARGIN_BOTTOM + 16, f"{v}"))
    _axes(parts, "UE speed", "accuracy", width, height)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _render_reward_curve(summary: dict, summary_path: Path) -> str:
    solvers = summary.get("solvers", {})
    if not solvers:
        raise PlotDataError("summary has no solver entries")
    series = {}
    for label in sorted(solvers):
        files = solvers[label].get("episode_files") or []
        if not files:
            raise PlotDataError(f"solver '{label}' has no episode files for a reward curve")
        with open(summary_path.parent / files[0], newline="") as fh:
            rewards = [float(row["reward"]) for row in csv.DictReader(fh)]
        if not rewards:
            raise PlotDataError(f"episode file for '{label}' has no reward series")
        series[label] = np.cumsum(rewards)

    width = MARGIN_LEFT + PLOT_W + MARGIN_RIGHT
    height = MARGIN_TOP + PLOT_H + MARGIN_BOTTOM
    longest = max(len(s) for s in series.values())
    all_vals = np.concatenate(list(series.values()))
    to_x, _, _ = _scale([0, max(longest - 1, 1)], MARGIN_LEFT, width - MARGIN_RIGHT)
    to_y, _, _ = _scale(all_vals, height - MARGIN_BOTTOM, MARGIN_TOP)

    parts = _svg_open(width, height)
    for i, (label, vals) in enumerate(series.items()):
        coords = " ".join(f"{_f(to_x(t))},{_f(to_y(v))}" for t, v in enumerate(vals))
        color = PALETTE[i % len(PALETTE)]
        parts.append(
            f'<polyline class="series" data-solver="{label}" points="{coords}" '
            f'fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            _text(width - MARGIN_RIGHT - 4, MARGIN_TOP + 16 + 16 * i, label, anchor="end")
        )
    _axes(parts, "time step", "cumulative reward", width, height)
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def emit_plot(input_path, kind: str, out_path) -> Path:
    """Render one plot kind to a self-contained SVG.

    rsrp-heatmap and reward-curve read an experiment summary.json;
    accuracy-vs-speed reads a sweep.csv produced with the beam profile.
    """
    if kind not in PLOT_KINDS:
        raise ConfigError(f"unknown plot kind {kind!r}; known: {list(PLOT_KINDS)}")
    input_path = Path(input_path)
    if not input_path.exists():
        raise ConfigError(f"plot input {input_path} does not exist")
    if kind == "accuracy-vs-speed":
        svg = _render_accuracy_vs_speed(input_path)
    else:
        try:
            summary = json.loads(input_path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{input_path} is not valid JSON: {exc}") from exc
        if kind == "rsrp-heatmap":
            svg = _render_heatmap(summary)
        else:
            svg = _render_reward_curve(summary, input_path)
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(svg)
    return out_path
