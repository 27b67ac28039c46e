"""Deterministic report emission: JSON, CSV, and SVG figures.

JSON and CSV bytes depend only on the payload (floats serialize via their
shortest round-trip repr), so identical runs produce identical files.  SVG
figures are rendered with matplotlib into fixed layer groups: `domain` for the
outline, `punctures` for the removed points, `path` for witness polylines.
"""
from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

from .domains import Ball, Domain, HalfSpace, WholeSpace, domain_to_json
from .normed_space import Polyline, norm_many
from .sampling import sample_box

TOOL_VERSION = "0.1.0"


def make_report(command: str, scenario_echo: dict | None, seed: int,
                params: dict, payload: dict) -> dict:
    return {
        "tool": "qh",
        "version": TOOL_VERSION,
        "command": command,
        "seed": seed,
        "scenario": scenario_echo,
        "params": params,
        "payload": payload,
    }


def _jsonable(obj):
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, (np.floating,)):
        return _jsonable(float(obj))
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(x) for x in obj]
    return obj


def dump_json(report: dict) -> str:
    return json.dumps(_jsonable(report), indent=2, allow_nan=False) + "\n"


def write_json(path: str, report: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dump_json(report))


def _fmt_cell(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return repr(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt_cell(x) for x in row])
    return buf.getvalue()


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(csv_text(header, rows))


def fmt_point(x: np.ndarray) -> str:
    return ";".join(repr(float(v)) for v in x)


# ---------------------------------------------------------------------------
# figures
# ---------------------------------------------------------------------------


def _matplotlib():
    import matplotlib
    matplotlib.use("Agg", force=False)
    matplotlib.rcParams["svg.hashsalt"] = "qhmetric"
    import matplotlib.pyplot as plt
    return plt


def _norm_circle(domain: Domain, n: int = 512) -> np.ndarray:
    ball: Ball = domain.base
    ang = np.linspace(0.0, 2.0 * math.pi, n + 1)
    dirs = np.stack([np.cos(ang), np.sin(ang)], axis=1)
    dirs /= norm_many(domain.space, dirs)[:, None]
    return ball.center[None, :] + ball.radius * dirs


def render_domain_svg(domain: Domain, out_path: str,
                      paths: tuple[Polyline, ...] = (),
                      title: str | None = None) -> None:
    """2-d figure with layer groups `domain`, `punctures`, `path`."""
    if domain.space.dim != 2:
        raise ValueError("figure rendering requires a 2-d domain")
    plt = _matplotlib()
    from matplotlib.collections import LineCollection

    fig, ax = plt.subplots(figsize=(6, 6))
    lo, hi = sample_box(domain)

    if isinstance(domain.base, Ball):
        ring = _norm_circle(domain)
        outline, = ax.plot(ring[:, 0], ring[:, 1], color="black", lw=1.2)
    elif isinstance(domain.base, HalfSpace):
        nrm = domain.base.normal
        tang = np.array([-nrm[1], nrm[0]])
        tang = tang / math.sqrt(float(tang @ tang))
        foot = nrm * (domain.base.offset / float(nrm @ nrm))
        span = 2.0 * float(np.max(hi - lo))
        seg = np.stack([foot - span * tang, foot + span * tang])
        outline, = ax.plot(seg[:, 0], seg[:, 1], color="black", lw=1.2)
    else:
        box = np.array([[lo[0], lo[1]], [hi[0], lo[1]], [hi[0], hi[1]],
                        [lo[0], hi[1]], [lo[0], lo[1]]])
        outline, = ax.plot(box[:, 0], box[:, 1], color="black", lw=0.8,
                           linestyle="--")
    outline.set_gid("domain")

    pts = domain.punctures.points
    sc = ax.scatter(pts[:, 0] if len(pts) else [lo[0]],
                    pts[:, 1] if len(pts) else [lo[1]],
                    s=14, color="crimson", zorder=3,
                    alpha=1.0 if len(pts) else 0.0)
    sc.set_gid("punctures")

    segments = []
    for poly in paths:
        v = poly.vertices
        segments.extend(np.stack([v[i], v[i + 1]]) for i in range(len(v) - 1))
    lc = LineCollection(segments if segments
                        else [np.stack([lo, lo])],
                        colors="tab:blue", linewidths=1.4,
                        alpha=1.0 if segments else 0.0)
    lc.set_gid("path")
    ax.add_collection(lc)

    ax.set_aspect("equal")
    ax.set_xlim(lo[0] - 0.05 * (hi[0] - lo[0]), hi[0] + 0.05 * (hi[0] - lo[0]))
    ax.set_ylim(lo[1] - 0.05 * (hi[1] - lo[1]), hi[1] + 0.05 * (hi[1] - lo[1]))
    if title:
        ax.set_title(title)
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)


def render_profile_svg(ts: np.ndarray, k_ups: np.ndarray, out_path: str,
                       envelope: tuple[np.ndarray, np.ndarray] | None = None,
                       title: str | None = None) -> None:
    """Scatter of sampled (t, upper bound) values with the optional envelope."""
    plt = _matplotlib()
    fig, ax = plt.subplots(figsize=(7, 5))
    sc = ax.scatter(ts, k_ups, s=8, alpha=0.6, color="tab:blue")
    sc.set_gid("samples")
    if envelope is not None:
        edges, values = envelope
        step, = ax.step(edges, values, where="pre", color="crimson", lw=1.3)
        step.set_gid("envelope")
    ax.set_xscale("log")
    ax.set_xlabel("distance ratio t")
    ax.set_ylabel("distance upper bound")
    if title:
        ax.set_title(title)
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
