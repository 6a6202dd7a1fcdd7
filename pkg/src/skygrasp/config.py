"""Configuration schema: per-module sections, JSON loading, validation, and hashing.

A config file is a JSON object with optional sections {guidance, grasp, arm,
collision, mission, suite}; omitted fields take the documented defaults. The
suite section drives the benchmark runner:

    {
      "mission": {"delta": 0.25, "max_ticks": 1500},
      "suite": {
        "out_dir": "runs/demo",
        "n_episodes": 50,
        "base_seed": 7,
        "cells": [
          {"scenario": "tabletop", "clutter": "dense", "ablation": "none"},
          {"scenario": "tabletop", "clutter": "dense", "ablation": "no_obstacle_awareness"}
        ]
      }
    }
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .collision import CollisionConfig
from .errors import ConfigError
from .grasping import GraspConfig
from .guidance import GuidanceConfig
from .kinematics import ArmModel

ABLATIONS = ("none", "no_obstacle_awareness", "open_loop", "brute_force_collision")
SCENARIOS = ("tabletop", "window", "shelf")
CLUTTER_LEVELS = ("sparse", "dense")


@dataclass(frozen=True)
class MissionConfig:
    delta: float = 0.25  # feasibility threshold on the best execution score
    tick_rate: float = 20.0  # Hz
    max_ticks: int = 4000
    reeval_period: int = 10  # ticks between grasp evaluations while repositioning
    min_mask_pixels: int = 20  # segmentation visibility threshold
    eval_min_pixels: int = 120  # object-mask size needed for a usable grasp-synthesis crop
    seed: int = 0
    no_obstacle_awareness: bool = False
    open_loop: bool = False
    brute_force_collision: bool = False

    def __post_init__(self):
        if self.delta < 0:
            raise ConfigError("mission.delta must be >= 0")
        if self.max_ticks <= 0:
            raise ConfigError("mission.max_ticks must be > 0")
        if self.tick_rate <= 0:
            raise ConfigError("mission.tick_rate must be > 0")
        if self.reeval_period < 1:
            raise ConfigError("mission.reeval_period must be >= 1")

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "tick_rate": self.tick_rate,
            "max_ticks": self.max_ticks,
            "reeval_period": self.reeval_period,
            "min_mask_pixels": self.min_mask_pixels,
            "eval_min_pixels": self.eval_min_pixels,
            "seed": self.seed,
            "no_obstacle_awareness": self.no_obstacle_awareness,
            "open_loop": self.open_loop,
            "brute_force_collision": self.brute_force_collision,
        }


@dataclass(frozen=True)
class CellSpec:
    scenario: str = "tabletop"
    clutter: str = "sparse"
    ablation: str = "none"

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {self.scenario!r}, expected one of {SCENARIOS}")
        if self.clutter not in CLUTTER_LEVELS:
            raise ConfigError(f"unknown clutter level {self.clutter!r}, expected one of {CLUTTER_LEVELS}")
        if self.ablation not in ABLATIONS:
            raise ConfigError(f"unknown ablation {self.ablation!r}, expected one of {ABLATIONS}")

    @property
    def name(self) -> str:
        return f"{self.scenario}-{self.clutter}-{self.ablation}"

    def to_dict(self) -> dict:
        return {"scenario": self.scenario, "clutter": self.clutter, "ablation": self.ablation}


@dataclass(frozen=True)
class SuiteConfig:
    out_dir: str = "runs/out"
    n_episodes: int = 10
    base_seed: int = 0
    cells: tuple[CellSpec, ...] = (CellSpec(),)

    def __post_init__(self):
        if self.n_episodes < 1:
            raise ConfigError("suite.n_episodes must be >= 1")
        if not self.cells:
            raise ConfigError("suite.cells must not be empty")

    def to_dict(self) -> dict:
        return {
            "out_dir": self.out_dir,
            "n_episodes": self.n_episodes,
            "base_seed": self.base_seed,
            "cells": [c.to_dict() for c in self.cells],
        }


@dataclass(frozen=True)
class PipelineConfig:
    guidance: GuidanceConfig = GuidanceConfig()
    grasp: GraspConfig = GraspConfig()
    arm: ArmModel = ArmModel()
    collision: CollisionConfig = CollisionConfig()
    mission: MissionConfig = MissionConfig()
    suite: SuiteConfig = SuiteConfig()

    def to_dict(self) -> dict:
        return {
            "guidance": self.guidance.to_dict(),
            "grasp": self.grasp.to_dict(),
            "arm": _arm_to_dict(self.arm),
            "collision": self.collision.to_dict(),
            "mission": self.mission.to_dict(),
            "suite": self.suite.to_dict(),
        }


def _arm_to_dict(arm: ArmModel) -> dict:
    return {
        "link_lengths": list(arm.link_lengths),
        "limits_deg": [[float(np.rad2deg(lo)), float(np.rad2deg(hi))] for lo, hi in arm.joint_limits],
        "mount_offset": arm.mount_offset,
        "rest_config": list(arm.rest_config),
        "standoff": arm.standoff,
    }


def _build_section(cls, data: dict, section: str, converters=None):
    converters = converters or {}
    known = {f for f in cls.__dataclass_fields__}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section} section: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in converters:
            value = converters[key](value)
        kwargs[key] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {section} section: {exc}") from exc


def _arm_from_dict(data: dict) -> ArmModel:
    kwargs = {}
    if "link_lengths" in data:
        kwargs["link_lengths"] = tuple(float(x) for x in data["link_lengths"])
    if "limits_deg" in data:
        kwargs["joint_limits"] = tuple(
            (np.deg2rad(float(lo)), np.deg2rad(float(hi))) for lo, hi in data["limits_deg"]
        )
    if "mount_offset" in data:
        kwargs["mount_offset"] = float(data["mount_offset"])
    if "rest_config" in data:
        kwargs["rest_config"] = tuple(float(x) for x in data["rest_config"])
    if "standoff" in data:
        kwargs["standoff"] = float(data["standoff"])
    unknown = set(data) - {"link_lengths", "limits_deg", "mount_offset", "rest_config", "standoff"}
    if unknown:
        raise ConfigError(f"unknown keys in arm section: {sorted(unknown)}")
    try:
        return ArmModel(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"invalid arm section: {exc}") from exc


def config_from_dict(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("config document must be a JSON object")
    known_sections = {"guidance", "grasp", "arm", "collision", "mission", "suite"}
    unknown = set(data) - known_sections
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")

    suite_data = dict(data.get("suite", {}))
    if "cells" in suite_data:
        cells = []
        for i, cell in enumerate(suite_data["cells"]):
            cells.append(_build_section(CellSpec, cell, f"suite.cells[{i}]"))
        suite_data["cells"] = tuple(cells)

    return PipelineConfig(
        guidance=_build_section(GuidanceConfig, data.get("guidance", {}), "guidance"),
        grasp=_build_section(GraspConfig, data.get("grasp", {}), "grasp"),
        arm=_arm_from_dict(data.get("arm", {})),
        collision=_build_section(CollisionConfig, data.get("collision", {}), "collision"),
        mission=_build_section(MissionConfig, data.get("mission", {}), "mission"),
        suite=_build_section(SuiteConfig, suite_data, "suite"),
    )


def load_config(path) -> PipelineConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(data)


def config_hash(config: PipelineConfig) -> str:
    """Stable short hash of the full configuration."""
    canonical = json.dumps(config.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def apply_ablation(mission: MissionConfig, ablation: str) -> MissionConfig:
    if ablation == "none":
        return replace(
            mission,
            no_obstacle_awareness=False,
            open_loop=False,
            brute_force_collision=False,
        )
    if ablation == "no_obstacle_awareness":
        return replace(mission, no_obstacle_awareness=True, open_loop=False, brute_force_collision=False)
    if ablation == "open_loop":
        return replace(mission, no_obstacle_awareness=False, open_loop=True, brute_force_collision=False)
    if ablation == "brute_force_collision":
        return replace(mission, no_obstacle_awareness=False, open_loop=False, brute_force_collision=True)
    raise ConfigError(f"unknown ablation {ablation!r}")
