"""Candidate grasp generation and aerial feasibility filtering.

Candidates come from a deterministic antipodal sampler over the object's
sensed surface points: a random anchor point is paired with the surface point
whose estimated normal alignment with the pair axis is best, the gripper
closes along the pair axis, and the approach direction is drawn from a
downward-biased fan perpendicular to it.

Gripper frame convention: the rotation's +x column is the approach axis, +y is
the closing axis, and the opening width w is measured along +y.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import PointCloud, quat_from_matrix, quat_to_matrix

WIDTH_MARGIN = 0.005  # added to the contact-pair distance, meters
_NORMAL_NEIGHBORS = 10
_MIN_PAIR_DISTANCE = 1e-3


@dataclass(frozen=True)
class GraspConfig:
    n_candidates: int = 64
    alpha: float = 1.5  # stability penalty strength, 1/m
    gravity_cone_deg: float = 100.0  # max angle between approach and gravity
    w_max: float = 0.10  # gripper opening limit, meters

    def to_dict(self) -> dict:
        return {
            "n_candidates": self.n_candidates,
            "alpha": self.alpha,
            "gravity_cone_deg": self.gravity_cone_deg,
            "w_max": self.w_max,
        }


@dataclass(frozen=True)
class GraspCandidate:
    """One 6-DoF grasp hypothesis with its confidence and stability-weighted score."""

    translation: np.ndarray  # (3,) grasp center, world frame
    rotation: np.ndarray  # (4,) unit quaternion, gripper frame
    width: float
    score: float  # antipodal confidence in [0, 1]
    stability_score: float = 0.0  # score after the centroid-distance penalty
    pixel_anchor: tuple[int, int] = (0, 0)  # (row, col) of the anchor point

    def __post_init__(self):
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        t.setflags(write=False)
        object.__setattr__(self, "translation", t)
        r = np.asarray(self.rotation, dtype=np.float64).reshape(4)
        r.setflags(write=False)
        object.__setattr__(self, "rotation", r)

    @property
    def rotation_matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    @property
    def approach_axis(self) -> np.ndarray:
        return self.rotation_matrix[:, 0]

    @property
    def closing_axis(self) -> np.ndarray:
        return self.rotation_matrix[:, 1]


@dataclass(frozen=True)
class FeasibleGraspSet:
    """Gravity-filtered candidates ordered by stability-weighted score, best first."""

    candidates: tuple[GraspCandidate, ...]
    object_centroid: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.object_centroid, dtype=np.float64).reshape(3)
        c.setflags(write=False)
        object.__setattr__(self, "object_centroid", c)

    def __len__(self) -> int:
        return len(self.candidates)


def estimate_normals(points: np.ndarray, k: int = _NORMAL_NEIGHBORS) -> np.ndarray:
    """Per-point unit normals from a k-nearest-neighbor plane fit (sign is arbitrary)."""
    from scipy.spatial import cKDTree

    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    k = min(k, n)
    tree = cKDTree(points)
    _, neighbors = tree.query(points, k=k)
    if k == 1:
        neighbors = neighbors[:, None]
    patches = points[neighbors]  # (N, k, 3)
    centered = patches - patches.mean(axis=1, keepdims=True)
    cov = np.einsum("nki,nkj->nij", centered, centered)
    _, eigvecs = np.linalg.eigh(cov)
    normals = eigvecs[:, :, 0]  # eigenvector of the smallest eigenvalue
    norms = np.linalg.norm(normals, axis=1, keepdims=True)
    return normals / np.maximum(norms, 1e-12)


def _antipodal_scores(anchor_idx: int, points: np.ndarray, normals: np.ndarray,
                      w_limit: float) -> np.ndarray:
    """Pair quality of the anchor against every other point; -inf where invalid."""
    anchor = points[anchor_idx]
    deltas = points - anchor
    distances = np.linalg.norm(deltas, axis=1)
    valid = (distances > _MIN_PAIR_DISTANCE) & (distances <= w_limit)
    safe = np.maximum(distances, 1e-12)
    axes = deltas / safe[:, None]
    alignment = 0.5 * (
        np.abs(axes @ normals[anchor_idx]) + np.abs(np.einsum("ij,ij->i", axes, normals))
    )
    scores = np.where(valid, alignment, -np.inf)
    scores[anchor_idx] = -np.inf
    return scores


def _approach_fan_direction(closing_axis: np.ndarray, gravity: np.ndarray,
                            angle: float) -> np.ndarray:
    """Unit approach direction: the most-downward direction perpendicular to the
    closing axis, rotated about it by `angle`."""
    down = gravity - (gravity @ closing_axis) * closing_axis
    norm = float(np.linalg.norm(down))
    if norm < 1e-9:
        # Closing axis parallel to gravity: fall back to a horizontal reference.
        ref = np.array([1.0, 0.0, 0.0])
        down = ref - (ref @ closing_axis) * closing_axis
        norm = float(np.linalg.norm(down))
        if norm < 1e-9:
            ref = np.array([0.0, 1.0, 0.0])
            down = ref - (ref @ closing_axis) * closing_axis
            norm = float(np.linalg.norm(down))
    down = down / norm
    side = np.cross(closing_axis, down)
    return np.cos(angle) * down + np.sin(angle) * side


def sample_candidates(object_points: PointCloud, n: int, rng_seed: int,
                      gravity=(0.0, 0.0, -1.0),
                      config: GraspConfig | None = None) -> list[GraspCandidate]:
    """Draw n antipodal grasp candidates from the object's surface points.

    Deterministic for a fixed (points, seed, config). Raises when fewer than
    10 object points are available.
    """
    if config is None:
        config = GraspConfig()
    points = object_points.points
    if len(points) < 10:
        raise ValueError(f"need at least 10 object points to sample grasps, got {len(points)}")
    if n < 1:
        raise ValueError("candidate count must be >= 1")

    gravity = np.asarray(gravity, dtype=np.float64)
    gravity = gravity / np.linalg.norm(gravity)
    normals = estimate_normals(points)
    rng = np.random.default_rng(rng_seed)
    w_limit = config.w_max - WIDTH_MARGIN

    candidates: list[GraspCandidate] = []
    attempts = 0
    max_attempts = 20 * n
    while len(candidates) < n and attempts < max_attempts:
        attempts += 1
        anchor = int(rng.integers(0, len(points)))
        pair_scores = _antipodal_scores(anchor, points, normals, w_limit)
        partner = int(np.argmax(pair_scores))
        best = float(pair_scores[partner])
        if not np.isfinite(best):
            continue

        delta = points[partner] - points[anchor]
        distance = float(np.linalg.norm(delta))
        closing = delta / distance
        angle = float(rng.uniform(-0.5 * np.pi, 0.5 * np.pi))
        approach = _approach_fan_direction(closing, gravity, angle)
        normal_axis = np.cross(approach, closing)
        rotation = np.column_stack([approach, closing, normal_axis])

        anchor_pixel = (0, anchor)
        if object_points.pixels is not None:
            anchor_pixel = (int(object_points.pixels[anchor, 0]), int(object_points.pixels[anchor, 1]))

        candidates.append(
            GraspCandidate(
                translation=0.5 * (points[anchor] + points[partner]),
                rotation=quat_from_matrix(rotation),
                width=min(distance + WIDTH_MARGIN, config.w_max),
                score=float(np.clip(best, 0.0, 1.0)),
                pixel_anchor=anchor_pixel,
            )
        )
    if len(candidates) < n:
        raise ValueError("could not sample enough valid antipodal pairs (object too large for the gripper?)")
    return candidates


def best_antipodal_pair(points, w_max: float) -> tuple[int, int, float] | None:
    """Exhaustively search all anchor/partner pairs for the best antipodal quality.

    Returns (anchor, partner, score) with deterministic first-wins tie
    breaking, or None when no pair fits inside the gripper opening.
    """
    points = np.asarray(points, dtype=np.float64)
    normals = estimate_normals(points)
    w_limit = w_max - WIDTH_MARGIN
    best = (-np.inf, 0, 0)
    for anchor in range(len(points)):
        scores = _antipodal_scores(anchor, points, normals, w_limit)
        partner = int(np.argmax(scores))
        if scores[partner] > best[0]:
            best = (float(scores[partner]), anchor, partner)
    if not np.isfinite(best[0]):
        return None
    return best[1], best[2], best[0]


def gravity_filter(candidates, gravity, cone_half_angle: float) -> list[GraspCandidate]:
    """Keep candidates whose approach stays within the cone around gravity.

    The boundary is inclusive, so an exactly horizontal approach passes with
    the default cone of 100 degrees; approaches opposing gravity are discarded.
    """
    gravity = np.asarray(gravity, dtype=np.float64)
    gravity = gravity / np.linalg.norm(gravity)
    cos_limit = np.cos(cone_half_angle)
    kept = []
    for cand in candidates:
        cos_angle = float(cand.approach_axis @ gravity)
        if cos_angle >= cos_limit - 1e-12:
            kept.append(cand)
    return kept


def stability_score(score: float, translation, object_centroid, alpha: float) -> float:
    """Down-weight grasps far from the object centroid: s * exp(-alpha * ||t - c||)."""
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    distance = float(np.linalg.norm(np.asarray(translation) - np.asarray(object_centroid)))
    return float(score * np.exp(-alpha * distance))


def build_feasible_set(object_points: PointCloud, gravity, config: GraspConfig,
                       rng_seed: int) -> FeasibleGraspSet:
    """Sample, gravity-filter, stability-score, and rank grasp candidates.

    The returned set is ordered by stability-weighted score descending with
    ties broken by pixel anchor in row-major order so episode replays are
    exact. An empty set means no aerially feasible grasp was found.
    """
    centroid = object_points.points.mean(axis=0)
    raw = sample_candidates(object_points, config.n_candidates, rng_seed, gravity, config)
    filtered = gravity_filter(raw, gravity, np.deg2rad(config.gravity_cone_deg))
    scored = [
        GraspCandidate(
            translation=c.translation,
            rotation=c.rotation,
            width=c.width,
            score=c.score,
            stability_score=stability_score(c.score, c.translation, centroid, config.alpha),
            pixel_anchor=c.pixel_anchor,
        )
        for c in filtered
    ]
    ordered = sorted(scored, key=lambda c: (-c.stability_score, c.pixel_anchor[0], c.pixel_anchor[1]))
    return FeasibleGraspSet(tuple(ordered), centroid)
