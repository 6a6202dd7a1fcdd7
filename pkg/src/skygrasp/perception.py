"""Perception oracles: noisy depth rendering, label-based segmentation, and instruction parsing.

These replace the learned perception stack with deterministic ground-truth
equivalents so episodes are exactly reproducible from a seed.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InstructionParseError
from .geometry import PointCloud, Pose, ray_hull_entry
from .scene import CameraModel, Scene

# Camera mount: slightly ahead of and below the base center, looking along the
# vehicle's +x axis and tilted down by the camera's pitch.
_CAMERA_OFFSET = np.array([0.10, 0.0, -0.03])

DEFAULT_MIN_MASK_PIXELS = 20

_COMMAND_RE = re.compile(
    r"^\s*(?:grasp|pick)\s+the\s+(?P<obj>.+?)\s+(?:from|on)\s+the\s+(?P<ctx>.+?)\s*[.!]?\s*$",
    re.IGNORECASE,
)


def parse_instruction(command: str) -> tuple[str, str]:
    """Split a pick-up command into (context_prompt, object_prompt).

    Accepts the template "grasp/pick the <object> from/on the <context>",
    case-insensitively, and returns both noun phrases verbatim.
    """
    match = _COMMAND_RE.match(command)
    if match is None:
        raise InstructionParseError(
            f"cannot parse {command!r}; expected 'grasp/pick the <object> from/on the <context>'"
        )
    return match.group("ctx"), match.group("obj")


def camera_pose(base: Pose, camera: CameraModel) -> Pose:
    """World pose of the optical frame (+z forward, +x image right, +y image down)."""
    pitch = camera.pitch
    rotation = np.array(
        [
            [0.0, -np.sin(pitch), np.cos(pitch)],
            [-1.0, 0.0, 0.0],
            [0.0, -np.cos(pitch), -np.sin(pitch)],
        ]
    )
    return base.compose(Pose.from_matrix(rotation, _CAMERA_OFFSET))


@lru_cache(maxsize=8)
def _pixel_rays(width: int, height: int, fov: float) -> np.ndarray:
    """Unit ray directions through pixel centers in the optical frame, shape (H*W, 3)."""
    focal = (width / 2.0) / np.tan(fov / 2.0)
    u = (np.arange(width) + 0.5 - width / 2.0) / focal
    v = (np.arange(height) + 0.5 - height / 2.0) / focal
    uu, vv = np.meshgrid(u, v)
    dirs = np.stack([uu, vv, np.ones_like(uu)], axis=-1).reshape(-1, 3)
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    dirs.setflags(write=False)
    return dirs


@dataclass(frozen=True)
class DepthFrame:
    """One rendered sensor frame: per-pixel range, world point, and object label.

    Invalid pixels (miss, out of range, or dropout) carry label -1 and NaN depth.
    """

    depth: np.ndarray  # (H, W) range along the ray, NaN where invalid
    points: np.ndarray  # (H, W, 3) world coordinates, NaN where invalid
    labels: np.ndarray  # (H, W) object id, -1 where invalid

    def cloud(self) -> PointCloud:
        """Valid pixels flattened in row-major order as a labeled point cloud."""
        rows, cols = np.nonzero(self.labels >= 0)
        return PointCloud(
            self.points[rows, cols],
            self.labels[rows, cols],
            np.column_stack([rows, cols]),
        )


def render_depth(scene: Scene, cam_pose: Pose, camera: CameraModel, rng_seed: int) -> DepthFrame:
    """Ray-cast the scene into a range image with Gaussian noise and dropout.

    Deterministic for a fixed (scene, pose, seed): noise and dropout draws are
    taken over the full pixel grid regardless of hits.
    """
    h, w = camera.height, camera.width
    dirs_cam = _pixel_rays(w, h, camera.fov)
    rot = cam_pose.matrix
    dirs_world = dirs_cam @ rot.T
    origin = cam_pose.translation

    best_t = np.full(h * w, np.inf)
    best_id = np.full(h * w, -1, dtype=np.int64)
    for hull, object_id in scene.hulls_with_ids():
        t = ray_hull_entry(origin, dirs_world, hull)
        closer = t < best_t
        best_t[closer] = t[closer]
        best_id[closer] = object_id

    rng = np.random.default_rng(rng_seed)
    noise = rng.normal(0.0, 1.0, size=h * w) * camera.sigma
    drop = rng.random(h * w) < camera.dropout

    valid = np.isfinite(best_t) & (best_t <= camera.max_range) & ~drop
    depth = np.where(valid, best_t + noise, np.nan)
    valid &= depth > 0.0

    depth = np.where(valid, depth, np.nan)
    labels = np.where(valid, best_id, -1)
    points = origin + depth[:, None] * dirs_world

    return DepthFrame(
        depth=depth.reshape(h, w),
        points=points.reshape(h, w, 3),
        labels=labels.reshape(h, w),
    )


@dataclass(frozen=True)
class SegmentationMask:
    """Pixels of one object in a frame, with their indices into the source cloud."""

    object_id: int
    pixels: np.ndarray  # (K, 2) int (row, col), row-major order
    cloud_indices: np.ndarray  # (K,) indices into the PointCloud the mask was cut from
    image_shape: tuple[int, int]

    @property
    def empty(self) -> bool:
        return len(self.pixels) == 0

    def __len__(self) -> int:
        return len(self.pixels)


def _empty_mask(object_id: int, shape: tuple[int, int]) -> SegmentationMask:
    return SegmentationMask(
        object_id=object_id,
        pixels=np.zeros((0, 2), dtype=np.int64),
        cloud_indices=np.zeros(0, dtype=np.int64),
        image_shape=shape,
    )


def segment(cloud: PointCloud, prompt: str, scene: Scene,
            min_pixels: int = DEFAULT_MIN_MASK_PIXELS) -> SegmentationMask:
    """Oracle segmentation: pixels whose back-projected point carries the prompted object id.

    Unknown prompts and objects below the visibility threshold yield an empty
    mask, which models a detection failure.
    """
    shape = (scene.camera.height, scene.camera.width)
    obj = scene.object_by_label(prompt)
    if obj is None or cloud.labels is None or cloud.pixels is None:
        return _empty_mask(-1, shape)
    indices = np.nonzero(cloud.labels == obj.object_id)[0]
    if len(indices) < min_pixels:
        return _empty_mask(obj.object_id, shape)
    return SegmentationMask(
        object_id=obj.object_id,
        pixels=cloud.pixels[indices],
        cloud_indices=indices,
        image_shape=shape,
    )


def mask_centroid(mask: SegmentationMask, cloud: PointCloud) -> np.ndarray:
    """Arithmetic mean of the world points under the mask; raises on an empty mask."""
    if mask.empty:
        raise ValueError("cannot take the centroid of an empty mask")
    return cloud.points[mask.cloud_indices].mean(axis=0)
