"""Seeded scenario generators: tabletop clutter, window-constrained access, and shelf reach.

Each generator emits a scene document (see `scene.py` for the schema) plus the
natural-language instruction that names the scenario's target and context.
Layouts are reproducible from the spec seed; target placement is rejected
until it does not interpenetrate any distractor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GenerationError
from .geometry import build_hull, segment_intersects_hull
from .scene import Scene, scene_from_dict

_PLACEMENT_RETRIES = 200

TARGET_CATALOG = (
    ("green bottle", "prism", {"radius": 0.030, "height": 0.20}),
    ("blue mug", "prism", {"radius": 0.035, "height": 0.10}),
    ("red flask", "prism", {"radius": 0.028, "height": 0.16}),
    ("amber block", "box", {"dims": (0.06, 0.06, 0.12)}),
)


@dataclass(frozen=True)
class ScenarioSpec:
    kind: str  # "tabletop" | "window" | "shelf"
    clutter: str = "sparse"  # "sparse" | "dense"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("tabletop", "window", "shelf"):
            raise ValueError(f"unknown scenario kind {self.kind!r}")
        if self.clutter not in ("sparse", "dense"):
            raise ValueError(f"unknown clutter level {self.clutter!r}")


def _prism_vertices(radius: float, height: float, center_xy, base_z: float,
                    sides: int = 8) -> list[list[float]]:
    angles = np.arange(sides) * (2 * np.pi / sides)
    ring = np.column_stack([np.cos(angles) * radius, np.sin(angles) * radius])
    verts = []
    for z in (base_z, base_z + height):
        for x, y in ring:
            verts.append([float(center_xy[0] + x), float(center_xy[1] + y), float(z)])
    return verts


def _box_object(object_id, label, role, dims, center, yaw_deg=0.0) -> dict:
    return {
        "id": object_id,
        "label": label,
        "role": role,
        "shape": {
            "kind": "box",
            "dims": [float(d) for d in dims],
            "pose": {"position": [float(c) for c in center], "yaw_deg": float(yaw_deg)},
        },
    }


def _target_object(object_id, rng, center_xy, base_z) -> tuple[dict, str, float]:
    """Target spec, its label, and its horizontal circumradius."""
    label, kind, params = TARGET_CATALOG[int(rng.integers(0, len(TARGET_CATALOG)))]
    if kind == "prism":
        verts = _prism_vertices(params["radius"], params["height"], center_xy, base_z)
        spec = {"id": object_id, "label": label, "role": "target",
                "shape": {"kind": "hull", "vertices": verts}}
        return spec, label, params["radius"]
    dims = params["dims"]
    center = [center_xy[0], center_xy[1], base_z + dims[2] / 2]
    spec = _box_object(object_id, label, "target", dims, center, yaw_deg=float(rng.uniform(0, 90)))
    return spec, label, float(np.hypot(dims[0], dims[1]) / 2)


def _distractor_object(object_id, index, rng, center_xy, base_z) -> tuple[dict, float]:
    """Distractor spec and its horizontal circumradius."""
    if rng.random() < 0.5:
        dims = (float(rng.uniform(0.05, 0.12)), float(rng.uniform(0.05, 0.12)),
                float(rng.uniform(0.06, 0.16)))
        center = [center_xy[0], center_xy[1], base_z + dims[2] / 2]
        spec = _box_object(object_id, f"clutter box {index}", "obstacle", dims, center,
                           yaw_deg=float(rng.uniform(0, 90)))
        return spec, float(np.hypot(dims[0], dims[1]) / 2)
    radius = float(rng.uniform(0.02, 0.045))
    height = float(rng.uniform(0.06, 0.15))
    verts = _prism_vertices(radius, height, center_xy, base_z)
    spec = {"id": object_id, "label": f"clutter can {index}", "role": "obstacle",
            "shape": {"kind": "hull", "vertices": verts}}
    return spec, radius


def _camera_section() -> dict:
    return {"fov_deg": 90.0, "width": 160, "height": 120, "max_range_m": 10.0,
            "sigma_m": 0.02, "dropout": 0.05, "pitch_deg": 20.0}


def _spawn_section(position, look_at) -> dict:
    yaw = float(np.arctan2(look_at[1] - position[1], look_at[0] - position[0]))
    return {"position": [float(x) for x in position], "yaw_deg": float(np.rad2deg(yaw))}


def _place_distractors(rng, n, target_xy, target_radius, base_z, bounds, radial_range,
                       min_gap, first_id) -> list[dict]:
    objects = []
    for i in range(n):
        placed = False
        for _ in range(_PLACEMENT_RETRIES):
            angle = rng.uniform(0, 2 * np.pi)
            radial = rng.uniform(*radial_range)
            xy = (target_xy[0] + radial * np.cos(angle), target_xy[1] + radial * np.sin(angle))
            if not (bounds[0][0] <= xy[0] <= bounds[0][1] and bounds[1][0] <= xy[1] <= bounds[1][1]):
                continue
            spec, radius = _distractor_object(first_id + i, i + 1, rng, xy, base_z)
            separation = float(np.hypot(xy[0] - target_xy[0], xy[1] - target_xy[1]))
            if separation < target_radius + radius + min_gap:
                continue
            objects.append(spec)
            placed = True
            break
        if not placed:
            raise GenerationError(f"could not place distractor {i + 1} after {_PLACEMENT_RETRIES} tries")
    return objects


def _tabletop_dict(spec: ScenarioSpec) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 1]))
    table_top = 0.40
    objects = [_box_object(1, "wooden table", "context", (1.2, 0.8, table_top),
                           (0.0, 0.0, table_top / 2))]

    target_xy = (float(rng.uniform(-0.08, 0.08)), float(rng.uniform(-0.08, 0.08)))
    target_spec, target_label, target_radius = _target_object(2, rng, target_xy, table_top)
    objects.append(target_spec)

    dense = spec.clutter == "dense"
    n_distractors = 9 if dense else 4
    radial_range = (0.11, 0.22) if dense else (0.20, 0.34)
    min_gap = 0.02 if dense else 0.07
    bounds = ((-0.5, 0.5), (-0.32, 0.32))
    objects.extend(
        _place_distractors(rng, n_distractors, target_xy, target_radius, table_top,
                           bounds, radial_range, min_gap, first_id=3)
    )

    bearing = rng.uniform(0, 2 * np.pi)
    spawn = (2.2 * np.cos(bearing), 2.2 * np.sin(bearing), 1.1)
    return {
        "schema": 1,
        "gravity": [0.0, 0.0, -1.0],
        "camera": _camera_section(),
        "spawn": _spawn_section(spawn, (0.0, 0.0, table_top)),
        "objects": objects,
        "meta": {"scenario": "tabletop", "clutter": spec.clutter, "seed": spec.seed,
                 "instruction": f"grasp the {target_label} from the wooden table"},
    }


def _window_dict(spec: ScenarioSpec) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 2]))
    # Wall at x = 0 with a 0.6 x 0.5 m aperture; the target sits on a table behind it.
    wall_t = 0.10
    aperture_y = (-0.30, 0.30)
    aperture_z = (0.45, 0.95)
    wall_y = (-1.2, 1.2)
    wall_z = (0.0, 1.6)
    objects = [
        _box_object(1, "wall bottom", "obstacle",
                    (wall_t, wall_y[1] - wall_y[0], aperture_z[0] - wall_z[0]),
                    (0.0, 0.0, (aperture_z[0] + wall_z[0]) / 2)),
        _box_object(2, "wall top", "obstacle",
                    (wall_t, wall_y[1] - wall_y[0], wall_z[1] - aperture_z[1]),
                    (0.0, 0.0, (wall_z[1] + aperture_z[1]) / 2)),
        _box_object(3, "wall left", "obstacle",
                    (wall_t, aperture_y[0] - wall_y[0], aperture_z[1] - aperture_z[0]),
                    (0.0, (aperture_y[0] + wall_y[0]) / 2, (aperture_z[0] + aperture_z[1]) / 2)),
        _box_object(4, "wall right", "obstacle",
                    (wall_t, wall_y[1] - aperture_y[1], aperture_z[1] - aperture_z[0]),
                    (0.0, (wall_y[1] + aperture_y[1]) / 2, (aperture_z[0] + aperture_z[1]) / 2)),
    ]

    table_top = 0.55
    objects.append(_box_object(5, "side table", "context", (0.6, 1.2, table_top),
                               (0.6, 0.0, table_top / 2)))

    target_xy = (float(rng.uniform(0.5, 0.65)), float(rng.uniform(-0.12, 0.12)))
    target_spec, target_label, target_radius = _target_object(6, rng, target_xy, table_top)
    objects.append(target_spec)

    n_distractors = 3 if spec.clutter == "dense" else 1
    objects.extend(
        _place_distractors(rng, n_distractors, target_xy, target_radius, table_top,
                           ((0.42, 0.8), (-0.45, 0.45)), (0.12, 0.25), 0.03, first_id=7)
    )

    side = 1.0 if rng.random() < 0.5 else -1.0
    spawn = (-2.3, side * 2.2, 0.9)
    target_point = (target_xy[0], target_xy[1], table_top + 0.1)
    scene_dict = {
        "schema": 1,
        "gravity": [0.0, 0.0, -1.0],
        "camera": _camera_section(),
        "spawn": _spawn_section(spawn, target_point),
        "objects": objects,
        "meta": {"scenario": "window", "clutter": spec.clutter, "seed": spec.seed,
                 "instruction": f"grasp the {target_label} from the side table"},
    }

    # Construction guarantee: the straight spawn-to-target line must hit the wall.
    wall_hulls = [
        build_hull(np.asarray(v, dtype=np.float64))
        for v in _wall_vertex_sets(objects[:4])
    ]
    if not any(segment_intersects_hull(spawn, target_point, h) for h in wall_hulls):
        raise GenerationError("window layout failed: spawn has line of sight to the target")
    return scene_dict


def _wall_vertex_sets(box_specs) -> list[np.ndarray]:
    sets = []
    for spec in box_specs:
        dims = np.asarray(spec["shape"]["dims"])
        center = np.asarray(spec["shape"]["pose"]["position"])
        corners = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
        sets.append(center + corners * dims / 2)
    return sets


def _shelf_dict(spec: ScenarioSpec) -> dict:
    rng = np.random.default_rng(np.random.SeedSequence([spec.seed, 3]))
    tier_z = 0.35
    top_panel = (0.83, 0.85)
    depth = (0.0, 0.40)
    width = (-0.40, 0.40)
    recess = 0.25

    shelf_parts = [
        {"kind": "box", "dims": [depth[1] - depth[0], width[1] - width[0], tier_z],
         "pose": {"position": [0.20, 0.0, tier_z / 2], "yaw_deg": 0.0}},
        {"kind": "box", "dims": [depth[1] - depth[0], width[1] - width[0], top_panel[1] - top_panel[0]],
         "pose": {"position": [0.20, 0.0, (top_panel[0] + top_panel[1]) / 2], "yaw_deg": 0.0}},
        {"kind": "box", "dims": [0.02, width[1] - width[0], top_panel[1] - tier_z],
         "pose": {"position": [0.39, 0.0, (tier_z + top_panel[1]) / 2], "yaw_deg": 0.0}},
        {"kind": "box", "dims": [depth[1] - depth[0], 0.04, top_panel[1] - tier_z],
         "pose": {"position": [0.20, -0.38, (tier_z + top_panel[1]) / 2], "yaw_deg": 0.0}},
        {"kind": "box", "dims": [depth[1] - depth[0], 0.04, top_panel[1] - tier_z],
         "pose": {"position": [0.20, 0.38, (tier_z + top_panel[1]) / 2], "yaw_deg": 0.0}},
    ]
    objects = [{"id": 1, "label": "storage shelf", "role": "context",
                "shape": {"kind": "union", "parts": shelf_parts}}]

    target_xy = (recess, float(rng.uniform(-0.18, 0.18)))
    target_spec, target_label, target_radius = _target_object(2, rng, target_xy, tier_z)
    objects.append(target_spec)

    n_distractors = 3 if spec.clutter == "dense" else 1
    objects.extend(
        _place_distractors(rng, n_distractors, target_xy, target_radius, tier_z,
                           ((0.10, 0.32), (-0.30, 0.30)), (0.09, 0.2), 0.02, first_id=3)
    )

    side = 1.0 if rng.random() < 0.5 else -1.0
    spawn = (-1.7, side * 0.6, 1.0)
    return {
        "schema": 1,
        "gravity": [0.0, 0.0, -1.0],
        "camera": _camera_section(),
        "spawn": _spawn_section(spawn, (0.2, 0.0, 0.5)),
        "objects": objects,
        "meta": {"scenario": "shelf", "clutter": spec.clutter, "seed": spec.seed,
                 "instruction": f"grasp the {target_label} from the storage shelf"},
    }


def scenario_dict(spec: ScenarioSpec) -> dict:
    """Serializable scene document for a scenario spec."""
    if spec.kind == "tabletop":
        return _tabletop_dict(spec)
    if spec.kind == "window":
        return _window_dict(spec)
    return _shelf_dict(spec)


def build_scenario(spec: ScenarioSpec) -> Scene:
    """Generate and validate the scenario's scene."""
    return scene_from_dict(scenario_dict(spec))


def instruction_for(scene_or_dict) -> str:
    """The language command bundled with a generated scenario."""
    if isinstance(scene_or_dict, Scene):
        data = scene_or_dict.to_dict()
    else:
        data = scene_or_dict
    try:
        return data["meta"]["instruction"]
    except (KeyError, TypeError):
        raise ValueError("scene has no bundled instruction (not generated by a scenario spec)")
