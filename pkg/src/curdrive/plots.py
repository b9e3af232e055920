"""Dependency-free SVG line charts for run metrics and the speed-reward curves.

Each series is one ``<polyline>`` drawn inside a group whose transform maps
data coordinates to the canvas, so the ``points`` attribute holds raw data
values (x = episode or speed, y = metric or reward).
"""

from __future__ import annotations

import json
from collections import defaultdict
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .harness import EVAL, TRAIN, read_records, smooth
from .rewards import RewardParams, speed_reward_original, speed_reward_revised

WIDTH, HEIGHT = 640, 400
MARGIN = dict(left=70, right=150, top=40, bottom=55)
COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"]

METRIC_CHARTS = [
    ("train_distance.svg", TRAIN, "distance_pct", "Training Metric: Distance Traveled", "Distance traveled (% of lap)"),
    ("train_speed.svg", TRAIN, "avg_speed_kmh", "Training Metric: Average Speed", "Average speed (km/h)"),
    ("eval_distance.svg", EVAL, "distance_pct", "Evaluation Metric: Distance Traveled", "Distance traveled (% of lap)"),
    ("eval_speed.svg", EVAL, "avg_speed_kmh", "Evaluation Metric: Average Speed", "Average speed (km/h)"),
]


def _num(x: float) -> str:
    return f"{float(x):.6g}"


def _nice_ticks(lo: float, hi: float, n: int = 5):
    span = hi - lo
    raw = span / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + step * 1e-9, step)


def line_chart(series, title: str, xlabel: str, ylabel: str, xlim=None, ylim=None, xticks=None,
               yticks=None, guides=()) -> str:
    """Render ``series`` (list of ``(label, xs, ys)``) as an SVG document string.

    ``guides`` are extra dashed segments ``((x0, y0), (x1, y1))`` in data units.
    """
    xs_all = np.concatenate([np.asarray(s[1], float) for s in series]) if series else np.array([0.0, 1.0])
    ys_all = np.concatenate([np.asarray(s[2], float) for s in series]) if series else np.array([0.0, 1.0])
    x0, x1 = xlim or (float(xs_all.min()), float(xs_all.max()))
    y0, y1 = ylim or (min(0.0, float(ys_all.min())), float(ys_all.max()))
    if x1 <= x0:
        x1 = x0 + 1.0
    if y1 <= y0:
        y1 = y0 + 1.0
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]
    sx, sy = pw / (x1 - x0), ph / (y1 - y0)

    def px(x):
        return MARGIN["left"] + (x - x0) * sx

    def py(y):
        return MARGIN["top"] + ph - (y - y0) * sy

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f"<title>{escape(title)}</title>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="22" text-anchor="middle" font-size="15">{escape(title)}</text>',
    ]
    left, bottom = MARGIN["left"], MARGIN["top"] + ph
    out.append(f'<line x1="{left}" y1="{bottom}" x2="{left + pw}" y2="{bottom}" stroke="black"/>')
    out.append(f'<line x1="{left}" y1="{MARGIN["top"]}" x2="{left}" y2="{bottom}" stroke="black"/>')
    for t in (xticks if xticks is not None else _nice_ticks(x0, x1)):
        out.append(f'<line x1="{px(t):.2f}" y1="{bottom}" x2="{px(t):.2f}" y2="{bottom + 5}" stroke="black"/>')
        out.append(f'<text x="{px(t):.2f}" y="{bottom + 18}" text-anchor="middle">{_num(t)}</text>')
    for t in (yticks if yticks is not None else _nice_ticks(y0, y1)):
        out.append(f'<line x1="{left - 5}" y1="{py(t):.2f}" x2="{left}" y2="{py(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py(t) + 4:.2f}" text-anchor="end">{_num(t)}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="18" y="{MARGIN["top"] + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 18 {MARGIN["top"] + ph / 2:.1f})">{escape(ylabel)}</text>')

    for (gx0, gy0), (gx1, gy1) in guides:
        out.append(f'<line x1="{px(gx0):.2f}" y1="{py(gy0):.2f}" x2="{px(gx1):.2f}" y2="{py(gy1):.2f}" '
                   f'stroke="gray" stroke-dasharray="4 3"/>')

    transform = f"translate({left} {bottom}) scale({sx:.9g} {-sy:.9g}) translate({-x0:.9g} {-y0:.9g})"
    out.append(f'<g class="data" transform="{transform}">')
    for i, (label, xs, ys) in enumerate(series):
        pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in zip(xs, ys))
        out.append(f'<polyline data-label="{escape(label)}" points="{pts}" fill="none" '
                   f'stroke="{COLORS[i % len(COLORS)]}" stroke-width="2" vector-effect="non-scaling-stroke"/>')
    out.append("</g>")

    lx = left + pw + 15
    for i, (label, _, _) in enumerate(series):
        ly = MARGIN["top"] + 10 + 20 * i
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{COLORS[i % len(COLORS)]}" '
                   f'stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}">{escape(label)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def reward_curve_svgs(params: RewardParams = RewardParams(), step: float = 0.5) -> dict[str, str]:
    """Speed-reward curves of the original and revised reward over [0, v_max]."""
    v = np.arange(0.0, params.v_max + step / 2, step)
    ticks_x = [0.0, params.v_min, params.v_target, params.v_max]
    orig = speed_reward_original(v, params)
    rev = speed_reward_revised(v, params)
    common = dict(xlabel="Speed (km/h)", ylabel="Reward", xlim=(0.0, 120.0), ylim=(0.0, 1.2),
                  xticks=ticks_x, yticks=[0.0, 0.5, 1.0])
    vm, vt = params.v_min, params.v_target
    return {
        "reward_original.svg": line_chart(
            [("original speed reward", v, orig)], "SCA Reward Function",
            guides=[((vm, 1.0), (vm, 0.0)), ((vt, 1.0), (vt, 0.0)), ((vm, 1.0), (0.0, 1.0))], **common),
        "reward_revised.svg": line_chart(
            [("revised speed reward", v, rev)], "CuRLA & One-Fold CL Reward Function",
            guides=[((vm, 0.5), (vm, 0.0)), ((vt, 1.0), (vt, 0.0)), ((vm, 0.5), (0.0, 0.5)),
                    ((vt, 1.0), (0.0, 1.0))], **common),
    }


def _run_label(path: Path) -> tuple[str, Path]:
    """(variant label, records.csv path) for a run directory or a bare CSV."""
    if path.is_dir():
        csv_path = path / "records.csv"
        cfg = path / "config.json"
        if cfg.is_file():
            return json.loads(cfg.read_text())["variant"]["kind"], csv_path
        return path.name, csv_path
    return path.stem, path


def emit_plots(runs, out_dir, smoothing: float = 0.999, params: RewardParams = RewardParams()) -> list[Path]:
    """Write the four metric charts (one smoothed line per variant, seeds averaged)
    and the two speed-reward curves into ``out_dir``."""
    runs = [Path(r) for r in runs]
    if not runs:
        raise ValueError("need at least one run")
    grouped = defaultdict(list)
    for r in runs:
        label, csv_path = _run_label(r)
        grouped[label].append(read_records(csv_path))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for fname, phase, metric, title, ylabel in METRIC_CHARTS:
        series = []
        for label in sorted(grouped):
            per_seed = []
            for recs in grouped[label]:
                per_seed.append({r.episode: getattr(r, metric) for r in recs if r.phase == phase})
            episodes = sorted(set.intersection(*(set(d) for d in per_seed)))
            if not episodes:
                continue
            mean = np.array([np.mean([d[e] for d in per_seed]) for e in episodes])
            series.append((label, np.array(episodes, float), smooth(mean, smoothing)))
        path = out / fname
        path.write_text(line_chart(series, title, "Episode", ylabel))
        written.append(path)
    for fname, text in reward_curve_svgs(params).items():
        path = out / fname
        path.write_text(text)
        written.append(path)
    return written
