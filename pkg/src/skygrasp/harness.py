"""Benchmark suite runner: seeded episodes per cell, persisted traces, results table, summary.

Artifacts written to the output directory:
  * traces/<cell>_<episode>.jsonl - header record, one record per tick, final result
  * results.csv                   - one row per episode, byte-identical across reruns
  * summary.txt                   - per-cell metric report (includes wall-clock latency)

Every results row is replayable from its (scenario_seed, episode_seed) pair
plus the config; wall-clock timings are confined to traces and the summary so
the results table stays deterministic.
"""
from __future__ import annotations

import json
import logging
import os
from dataclasses import dataclass, replace
from pathlib import Path

from .config import (
    CellSpec,
    PipelineConfig,
    apply_ablation,
    config_from_dict,
    config_hash,
    load_config,
)
from .errors import ConfigError
from .metrics import MetricsReport, compute_metrics, format_report
from .mission import EpisodeResult, run_episode
from .scenarios import ScenarioSpec, instruction_for, scenario_dict
from .scene import scene_from_dict
from .seeding import derive_seed

logger = logging.getLogger(__name__)

RESULTS_SCHEMA_VERSION = 1
OUT_DIR_ENV = "SKYGRASP_OUT_DIR"

RESULTS_COLUMNS = (
    "schema",
    "cell",
    "scenario",
    "clutter",
    "ablation",
    "episode",
    "scenario_seed",
    "episode_seed",
    "config_hash",
    "outcome",
    "ga_m",
    "sgl_s",
    "ticks_to_decision",
    "total_ticks",
    "n_cycles",
)


@dataclass(frozen=True)
class EpisodeRow:
    cell: CellSpec
    episode: int
    scenario_seed: int
    episode_seed: int
    cfg_hash: str
    result: EpisodeResult

    def as_csv(self) -> str:
        r = self.result
        fields = [
            str(RESULTS_SCHEMA_VERSION),
            self.cell.name,
            self.cell.scenario,
            self.cell.clutter,
            self.cell.ablation,
            str(self.episode),
            str(self.scenario_seed),
            str(self.episode_seed),
            self.cfg_hash,
            r.outcome.value,
            "" if r.grasp_error is None else f"{r.grasp_error:.9f}",
            "" if r.decision_time_s is None else f"{r.decision_time_s:.6f}",
            "" if r.ticks_to_decision is None else str(r.ticks_to_decision),
            str(r.total_ticks),
            str(r.n_cycles),
        ]
        return ",".join(fields)


def episode_seeds(base_seed: int, cell: CellSpec, episode: int) -> tuple[int, int]:
    """(scenario_seed, episode_seed); identical across ablations so cells run paired scenes."""
    scenario_seed = derive_seed(base_seed, cell.scenario, cell.clutter, episode, "scene")
    mission_seed = derive_seed(base_seed, cell.scenario, cell.clutter, episode, "mission")
    return scenario_seed, mission_seed


class _TraceWriter:
    def __init__(self, path: Path):
        self._handle = open(path, "w")

    def write(self, record: dict) -> None:
        self._handle.write(json.dumps(record) + "\n")

    def close(self) -> None:
        self._handle.close()


def run_cell_episode(config: PipelineConfig, cell: CellSpec, episode: int,
                     trace_path: Path | None = None) -> EpisodeRow:
    """Run one (cell, episode) pair, optionally writing its trace file."""
    scenario_seed, mission_seed = episode_seeds(config.suite.base_seed, cell, episode)
    scene_doc = scenario_dict(ScenarioSpec(cell.scenario, cell.clutter, scenario_seed))
    scene = scene_from_dict(scene_doc)
    instruction = instruction_for(scene_doc)

    mission_cfg = apply_ablation(replace(config.mission, seed=mission_seed), cell.ablation)
    episode_cfg = replace(config, mission=mission_cfg)
    cfg_hash = config_hash(config)

    writer = None
    sink = None
    if trace_path is not None:
        writer = _TraceWriter(trace_path)
        writer.write(
            {
                "type": "header",
                "results_schema": RESULTS_SCHEMA_VERSION,
                "cell": cell.name,
                "episode": episode,
                "scenario_seed": scenario_seed,
                "episode_seed": mission_seed,
                "config_hash": cfg_hash,
                "instruction": instruction,
                "config": episode_cfg.to_dict(),
                "scene": scene_doc,
            }
        )
        sink = writer.write

    try:
        result = run_episode(scene, instruction, episode_cfg, trace_sink=sink)
    finally:
        if writer is not None:
            writer.close()

    return EpisodeRow(cell, episode, scenario_seed, mission_seed, cfg_hash, result)


def resolve_out_dir(config: PipelineConfig, override: str | None = None) -> Path:
    env = os.environ.get(OUT_DIR_ENV)
    if override:
        return Path(override)
    if env:
        return Path(env)
    return Path(config.suite.out_dir)


def run_suite(config, out_dir: str | None = None) -> dict[str, MetricsReport]:
    """Run every (cell x episode) combination and persist all artifacts.

    `config` is a PipelineConfig or a config file path. Returns the per-cell
    metric reports keyed by cell name.
    """
    if not isinstance(config, PipelineConfig):
        config = load_config(config) if isinstance(config, (str, Path)) else config_from_dict(config)

    target_dir = resolve_out_dir(config, out_dir)
    traces_dir = target_dir / "traces"
    traces_dir.mkdir(parents=True, exist_ok=True)

    rows: list[EpisodeRow] = []
    per_cell: dict[str, list[EpisodeResult]] = {}
    for cell in config.suite.cells:
        for episode in range(config.suite.n_episodes):
            trace_path = traces_dir / f"{cell.name}_{episode:03d}.jsonl"
            row = run_cell_episode(config, cell, episode, trace_path)
            rows.append(row)
            per_cell.setdefault(cell.name, []).append(row.result)
            logger.info("%s episode %d -> %s", cell.name, episode, row.result.outcome.value)

    rows.sort(key=lambda r: (r.cell.name, r.episode))
    results_path = target_dir / "results.csv"
    with open(results_path, "w") as handle:
        handle.write(",".join(RESULTS_COLUMNS) + "\n")
        for row in rows:
            handle.write(row.as_csv() + "\n")

    reports = {name: compute_metrics(results) for name, results in per_cell.items()}
    summary_path = target_dir / "summary.txt"
    with open(summary_path, "w") as handle:
        handle.write(f"config_hash: {config_hash(config)}\n")
        handle.write(f"episodes: {len(rows)}\n\n")
        for name in sorted(reports):
            handle.write(format_report(name, reports[name]) + "\n\n")
    return reports


# ---------------------------------------------------------------------------
# trace replay
# ---------------------------------------------------------------------------

_NONDETERMINISTIC_KEYS = {"compute_ms"}


def _strip_wallclock(record: dict) -> dict:
    return {k: v for k, v in record.items() if k not in _NONDETERMINISTIC_KEYS}


def replay_trace(trace_path) -> tuple[bool, str]:
    """Re-run the episode recorded in a trace and compare all deterministic fields.

    Returns (matched, message); wall-clock timings are ignored.
    """
    path = Path(trace_path)
    records = [json.loads(line) for line in path.read_text().splitlines() if line.strip()]
    if not records or records[0].get("type") != "header":
        raise ConfigError(f"{path}: not a trace file (missing header record)")
    header = records[0]
    original = records[1:]

    scene = scene_from_dict(header["scene"])
    config = config_from_dict(header["config"])
    replayed: list[dict] = []
    run_episode(scene, header["instruction"], config, trace_sink=replayed.append)

    if len(original) != len(replayed):
        return False, f"record count differs: {len(original)} recorded vs {len(replayed)} replayed"
    for i, (a, b) in enumerate(zip(original, replayed)):
        if _strip_wallclock(a) != _strip_wallclock(json.loads(json.dumps(b))):
            return False, f"record {i} differs:\n  recorded: {a}\n  replayed: {b}"
    return True, f"{len(replayed)} records match"
