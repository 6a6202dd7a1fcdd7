"""Figure rendering for suite outputs: top-down trajectory views and score histograms."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ConfigError
from .scene import scene_from_dict

_MAX_TRAJECTORY_PLOTS = 8
_ROLE_COLORS = {"target": "tab:green", "context": "tab:brown", "obstacle": "tab:gray"}


def _hull_footprint(vertices: np.ndarray) -> np.ndarray:
    """Counterclockwise outline of the xy projection of hull vertices."""
    from scipy.spatial import ConvexHull as QHull

    xy = vertices[:, :2]
    try:
        hull = QHull(xy)
        return xy[hull.vertices]
    except Exception:
        return xy


def plot_trace(trace_path, out_path) -> Path:
    """Top-down view of one episode: object footprints and the vehicle path."""
    records = [json.loads(line) for line in Path(trace_path).read_text().splitlines() if line.strip()]
    if not records or records[0].get("type") != "header":
        raise ConfigError(f"{trace_path}: not a trace file")
    header = records[0]
    scene = scene_from_dict(header["scene"])
    ticks = [r for r in records if r.get("type") == "tick"]
    result = next((r for r in records if r.get("type") == "result"), None)

    fig, ax = plt.subplots(figsize=(6, 6))
    for obj in scene.objects:
        color = _ROLE_COLORS.get(obj.role, "tab:gray")
        for hull in obj.hulls:
            outline = _hull_footprint(hull.vertices)
            ax.fill(outline[:, 0], outline[:, 1], color=color, alpha=0.4, linewidth=0.5)
        centroid = obj.vertices().mean(axis=0)
        ax.annotate(obj.label, centroid[:2], fontsize=6, ha="center")

    if ticks:
        path_xy = np.array([r["position"][:2] for r in ticks])
        ax.plot(path_xy[:, 0], path_xy[:, 1], "b-", linewidth=1.0, label="vehicle path")
        ax.plot(path_xy[0, 0], path_xy[0, 1], "b^", markersize=8, label="spawn")
        ax.plot(path_xy[-1, 0], path_xy[-1, 1], "bs", markersize=6, label="final")

    title = header.get("cell", "episode")
    if result is not None:
        title += f" - {result.get('outcome')}"
    ax.set_title(title)
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=7)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, dpi=120)
    plt.close(fig)
    return out_path


def plot_results(results_dir, out_dir=None) -> list[Path]:
    """Render all figures for one suite output directory; returns written paths."""
    results_dir = Path(results_dir)
    out_dir = Path(out_dir) if out_dir else results_dir / "figures"
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    results_csv = results_dir / "results.csv"
    if results_csv.exists():
        with open(results_csv) as handle:
            rows = list(csv.DictReader(handle))
        errors = [100.0 * float(r["ga_m"]) for r in rows if r["ga_m"]]
        if errors:
            fig, ax = plt.subplots(figsize=(5, 4))
            ax.hist(errors, bins=20, color="tab:blue", edgecolor="black")
            ax.set_xlabel("grasp center error [cm]")
            ax.set_ylabel("episodes")
            ax.set_title("grasp accuracy distribution")
            fig.tight_layout()
            path = out_dir / "grasp_error_hist.png"
            fig.savefig(path, dpi=120)
            plt.close(fig)
            written.append(path)

        cells = sorted({r["cell"] for r in rows})
        outcomes = sorted({r["outcome"] for r in rows})
        fig, ax = plt.subplots(figsize=(max(5, 1.3 * len(cells)), 4))
        bottoms = np.zeros(len(cells))
        for outcome in outcomes:
            fractions = []
            for cell in cells:
                cell_rows = [r for r in rows if r["cell"] == cell]
                fractions.append(
                    sum(1 for r in cell_rows if r["outcome"] == outcome) / len(cell_rows)
                )
            ax.bar(cells, fractions, bottom=bottoms, label=outcome)
            bottoms += np.array(fractions)
        ax.set_ylabel("fraction")
        ax.set_title("outcomes by cell")
        ax.legend(fontsize=7)
        plt.setp(ax.get_xticklabels(), rotation=20, ha="right", fontsize=7)
        fig.tight_layout()
        path = out_dir / "outcomes_by_cell.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    traces = sorted((results_dir / "traces").glob("*.jsonl"))[:_MAX_TRAJECTORY_PLOTS]
    for trace in traces:
        written.append(plot_trace(trace, out_dir / f"{trace.stem}_topdown.png"))
    return written
