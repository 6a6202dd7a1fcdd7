"""Synthetic 3-D scenes: labeled convex-hull objects, gravity, camera intrinsics, and scene files.

Scene files are JSON documents with a versioned schema:

    {
      "schema": 1,
      "gravity": [0, 0, -1],
      "spawn": {"position": [x, y, z], "yaw_deg": 0.0},
      "camera": {"fov_deg": 90, "width": 160, "height": 120, "max_range_m": 10,
                 "sigma_m": 0.02, "dropout": 0.05, "pitch_deg": 20},
      "objects": [
        {"id": 1, "label": "wooden table", "role": "context",
         "shape": {"kind": "box", "dims": [1.2, 0.8, 0.4],
                   "pose": {"position": [0, 0, 0.2], "yaw_deg": 0}}},
        {"id": 2, "label": "green bottle", "role": "target",
         "shape": {"kind": "hull", "vertices": [[...], ...]}},
        {"id": 3, "label": "shelf", "role": "obstacle",
         "shape": {"kind": "union", "parts": [{...}, {...}]}}
      ]
    }
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SceneError
from .geometry import (
    ConvexHull,
    PointCloud,
    Pose,
    SpatialIndex,
    box_hull,
    build_hull,
    sample_hull_surface,
    transform_hull,
)

SCENE_SCHEMA_VERSION = 1

# Ground-truth surface clouds are sampled once per object with a fixed stream
# so repeated loads of the same scene produce identical clouds.
_GT_SAMPLING_SEED = 20240915
GT_SURFACE_DENSITY = 1.0e4  # points per square meter (1 per cm^2)


@dataclass(frozen=True)
class CameraModel:
    """Pinhole depth camera with Gaussian range noise and pixel dropout."""

    fov: float = np.deg2rad(90.0)  # horizontal field of view, radians
    width: int = 160
    height: int = 120
    max_range: float = 10.0
    sigma: float = 0.02
    dropout: float = 0.05
    pitch: float = np.deg2rad(20.0)  # downward tilt of the optical axis

    def __post_init__(self):
        if not 0.0 < self.fov < np.pi:
            raise SceneError("camera fov must be in (0, pi)")
        if self.width < 1 or self.height < 1:
            raise SceneError("camera resolution must be positive")
        if self.sigma < 0.0:
            raise SceneError("camera noise sigma must be >= 0")
        if not 0.0 <= self.dropout <= 1.0:
            raise SceneError("camera dropout must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "fov_deg": float(np.rad2deg(self.fov)),
            "width": self.width,
            "height": self.height,
            "max_range_m": self.max_range,
            "sigma_m": self.sigma,
            "dropout": self.dropout,
            "pitch_deg": float(np.rad2deg(self.pitch)),
        }

    @staticmethod
    def from_dict(data: dict) -> "CameraModel":
        try:
            return CameraModel(
                fov=np.deg2rad(float(data.get("fov_deg", 90.0))),
                width=int(data.get("width", 160)),
                height=int(data.get("height", 120)),
                max_range=float(data.get("max_range_m", 10.0)),
                sigma=float(data.get("sigma_m", 0.02)),
                dropout=float(data.get("dropout", 0.05)),
                pitch=np.deg2rad(float(data.get("pitch_deg", 20.0))),
            )
        except (TypeError, ValueError) as exc:
            raise SceneError(f"invalid camera section: {exc}") from exc


@dataclass(frozen=True)
class SceneObject:
    """A labeled rigid object made of one or more convex hulls."""

    object_id: int
    label: str
    hulls: tuple[ConvexHull, ...]
    role: str = "obstacle"  # "target" | "context" | "obstacle"

    def __post_init__(self):
        if self.role not in ("target", "context", "obstacle"):
            raise SceneError(f"unknown object role {self.role!r}")
        if not self.hulls:
            raise SceneError(f"object {self.label!r} has no geometry")

    @property
    def is_target(self) -> bool:
        return self.role == "target"

    @property
    def is_context(self) -> bool:
        return self.role == "context"

    def vertices(self) -> np.ndarray:
        return np.vstack([h.vertices for h in self.hulls])

    def smallest_extent(self) -> float:
        verts = self.vertices()
        return float((verts.max(axis=0) - verts.min(axis=0)).min())


class Scene:
    """Immutable world snapshot: objects, gravity, the sensor, and the spawn pose."""

    def __init__(self, objects, gravity=(0.0, 0.0, -1.0), camera: CameraModel | None = None,
                 spawn: Pose | None = None, raw: dict | None = None):
        self.objects: tuple[SceneObject, ...] = tuple(objects)
        gravity = np.asarray(gravity, dtype=np.float64)
        norm = np.linalg.norm(gravity)
        if not np.isclose(norm, 1.0, atol=1e-6):
            raise SceneError("gravity must be a unit vector")
        gravity = gravity / norm
        gravity.setflags(write=False)
        self.gravity = gravity
        self.camera = camera if camera is not None else CameraModel()
        self.spawn = spawn if spawn is not None else Pose.from_yaw(0.0, (0.0, 0.0, 1.0))
        self._raw = raw
        self._gt_cloud: PointCloud | None = None
        self._gt_index: SpatialIndex | None = None

        labels = [obj.label for obj in self.objects]
        if len(set(labels)) != len(labels):
            raise SceneError("object labels must be unique per scene")
        ids = [obj.object_id for obj in self.objects]
        if len(set(ids)) != len(ids):
            raise SceneError("object ids must be unique per scene")

    def validate(self):
        targets = [o for o in self.objects if o.is_target]
        if len(targets) != 1:
            raise SceneError(f"scene must contain exactly one target object, found {len(targets)}")

    @property
    def target(self) -> SceneObject:
        for obj in self.objects:
            if obj.is_target:
                return obj
        raise SceneError("scene has no target object")

    @property
    def context(self) -> SceneObject | None:
        for obj in self.objects:
            if obj.is_context:
                return obj
        return None

    def object_by_label(self, label: str) -> SceneObject | None:
        wanted = label.strip().lower()
        for obj in self.objects:
            if obj.label.lower() == wanted:
                return obj
        return None

    def hulls_with_ids(self) -> list[tuple[ConvexHull, int]]:
        out = []
        for obj in self.objects:
            for hull in obj.hulls:
                out.append((hull, obj.object_id))
        return out

    def ground_truth_cloud(self) -> PointCloud:
        """Dense labeled surface samples of every object, fixed per scene."""
        if self._gt_cloud is None:
            points = []
            labels = []
            for obj in self.objects:
                rng = np.random.default_rng(
                    np.random.SeedSequence([_GT_SAMPLING_SEED, obj.object_id])
                )
                for hull in obj.hulls:
                    sampled = sample_hull_surface(hull, GT_SURFACE_DENSITY, rng)
                    points.append(sampled)
                    labels.append(np.full(len(sampled), obj.object_id, dtype=np.int64))
            pts = np.vstack(points) if points else np.zeros((0, 3))
            lbl = np.concatenate(labels) if labels else np.zeros(0, dtype=np.int64)
            self._gt_cloud = PointCloud(pts, lbl)
        return self._gt_cloud

    def ground_truth_index(self) -> SpatialIndex:
        if self._gt_index is None:
            self._gt_index = SpatialIndex(self.ground_truth_cloud().points)
        return self._gt_index

    def to_dict(self) -> dict:
        if self._raw is not None:
            return self._raw
        raise SceneError("scene was built programmatically without a serializable description")


# ---------------------------------------------------------------------------
# scene file I/O
# ---------------------------------------------------------------------------

def _shape_to_hulls(shape: dict, where: str) -> list[ConvexHull]:
    kind = shape.get("kind")
    if kind == "box":
        dims = shape.get("dims")
        if dims is None or len(dims) != 3 or min(dims) <= 0:
            raise SceneError(f"{where}: box dims must be 3 positive numbers")
        pose_spec = shape.get("pose", {})
        position = pose_spec.get("position", [0.0, 0.0, 0.0])
        yaw = np.deg2rad(float(pose_spec.get("yaw_deg", 0.0)))
        return [transform_hull(box_hull(dims), Pose.from_yaw(yaw, position))]
    if kind == "hull":
        vertices = shape.get("vertices")
        if vertices is None:
            raise SceneError(f"{where}: hull shape needs a vertices list")
        return [build_hull(np.asarray(vertices, dtype=np.float64))]
    if kind == "union":
        parts = shape.get("parts")
        if not parts:
            raise SceneError(f"{where}: union shape needs a non-empty parts list")
        hulls = []
        for i, part in enumerate(parts):
            hulls.extend(_shape_to_hulls(part, f"{where}.parts[{i}]"))
        return hulls
    raise SceneError(f"{where}: unknown shape kind {kind!r} (expected box, hull, or union)")


def scene_from_dict(data: dict) -> Scene:
    if not isinstance(data, dict):
        raise SceneError("scene document must be a JSON object")
    if data.get("schema") != SCENE_SCHEMA_VERSION:
        raise SceneError(
            f"unsupported scene schema {data.get('schema')!r}, expected {SCENE_SCHEMA_VERSION}"
        )
    objects_spec = data.get("objects")
    if not isinstance(objects_spec, list) or not objects_spec:
        raise SceneError("scene needs a non-empty objects list")

    objects = []
    for i, spec in enumerate(objects_spec):
        where = f"objects[{i}]"
        if "id" not in spec or "label" not in spec or "shape" not in spec:
            raise SceneError(f"{where}: object needs id, label, and shape")
        hulls = _shape_to_hulls(spec["shape"], f"{where}.shape")
        objects.append(
            SceneObject(
                object_id=int(spec["id"]),
                label=str(spec["label"]),
                hulls=tuple(hulls),
                role=str(spec.get("role", "obstacle")),
            )
        )

    spawn_spec = data.get("spawn", {})
    spawn = Pose.from_yaw(
        np.deg2rad(float(spawn_spec.get("yaw_deg", 0.0))),
        spawn_spec.get("position", [0.0, 0.0, 1.0]),
    )
    camera = CameraModel.from_dict(data.get("camera", {}))
    scene = Scene(
        objects,
        gravity=data.get("gravity", (0.0, 0.0, -1.0)),
        camera=camera,
        spawn=spawn,
        raw=data,
    )
    scene.validate()
    return scene


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SceneError(f"{path}: not valid JSON: {exc}") from exc
    return scene_from_dict(data)


def save_scene(scene_dict: dict, path) -> None:
    Path(path).write_text(json.dumps(scene_dict, indent=2, sort_keys=True))
