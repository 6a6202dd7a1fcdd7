"""Rigid-body math, half-space convex hulls, labeled point clouds, and a KD-tree spatial index.

Conventions used throughout the package:
  * world frame is z-up, distances in meters, angles in radians
  * quaternions are stored as [w, x, y, z] and kept unit-norm
  * a convex hull is the intersection of half-spaces {x : n_i . x <= d_i}
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.spatial import ConvexHull as _QhullHull
from scipy.spatial import QhullError, cKDTree

from .errors import DegenerateGeometryError

# Interior-test margin: a point counts as inside only when it clears every face
# by more than this, so points exactly on a face are non-colliding.
HULL_EPS = 1e-9


# ---------------------------------------------------------------------------
# quaternion helpers
# ---------------------------------------------------------------------------

def quat_normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=np.float64)
    norm = float(np.linalg.norm(q))
    if norm < 1e-12:
        raise DegenerateGeometryError("cannot normalize a zero quaternion")
    return q / norm


def quat_multiply(a, b) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([w, -x, -y, -z])


def quat_from_yaw(yaw: float) -> np.ndarray:
    half = 0.5 * yaw
    return np.array([np.cos(half), 0.0, 0.0, np.sin(half)])


def quat_to_matrix(q) -> np.ndarray:
    w, x, y, z = quat_normalize(q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(m) -> np.ndarray:
    """Convert a rotation matrix to a unit quaternion (Shepperd's method)."""
    m = np.asarray(m, dtype=np.float64)
    trace = m[0, 0] + m[1, 1] + m[2, 2]
    if trace > 0.0:
        s = np.sqrt(trace + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_normalize(q)


def quat_slerp(a, b, fraction: float) -> np.ndarray:
    """Spherical-linear interpolation along the shortest arc."""
    a = quat_normalize(a)
    b = quat_normalize(b)
    dot = float(np.dot(a, b))
    if dot < 0.0:
        b = -b
        dot = -dot
    if dot > 1.0 - 1e-12:
        return quat_normalize(a + fraction * (b - a))
    theta = np.arccos(np.clip(dot, -1.0, 1.0))
    sin_theta = np.sin(theta)
    wa = np.sin((1.0 - fraction) * theta) / sin_theta
    wb = np.sin(fraction * theta) / sin_theta
    return quat_normalize(wa * a + wb * b)


# ---------------------------------------------------------------------------
# rigid transforms
# ---------------------------------------------------------------------------

def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=np.float64)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Pose:
    """Rigid transform mapping local coordinates into the parent frame."""

    translation: np.ndarray
    rotation: np.ndarray  # unit quaternion [w, x, y, z]

    def __post_init__(self):
        object.__setattr__(self, "translation", _freeze(np.reshape(self.translation, 3)))
        object.__setattr__(self, "rotation", _freeze(quat_normalize(np.reshape(self.rotation, 4))))

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.zeros(3), np.array([1.0, 0.0, 0.0, 0.0]))

    @staticmethod
    def from_yaw(yaw: float, translation=(0.0, 0.0, 0.0)) -> "Pose":
        return Pose(np.asarray(translation, dtype=np.float64), quat_from_yaw(yaw))

    @staticmethod
    def from_matrix(rotation_matrix, translation) -> "Pose":
        return Pose(np.asarray(translation, dtype=np.float64), quat_from_matrix(rotation_matrix))

    @property
    def matrix(self) -> np.ndarray:
        return quat_to_matrix(self.rotation)

    @property
    def yaw(self) -> float:
        m = self.matrix
        return float(np.arctan2(m[1, 0], m[0, 0]))

    def compose(self, other: "Pose") -> "Pose":
        """Return self applied after other: (self * other).apply(p) == self.apply(other.apply(p))."""
        rotation = quat_multiply(self.rotation, other.rotation)
        translation = self.translation + self.matrix @ other.translation
        return Pose(translation, rotation)

    def inverse(self) -> "Pose":
        inv_rot = quat_conjugate(self.rotation)
        inv_mat = quat_to_matrix(inv_rot)
        return Pose(-(inv_mat @ self.translation), inv_rot)

    def apply(self, points) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return points @ self.matrix.T + self.translation


# ---------------------------------------------------------------------------
# convex hulls as half-space intersections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvexHull:
    """Half-space representation of a bounded convex volume.

    `vertices` are the hull's own extreme points, `triangles` index triangular
    faces into `vertices` (kept for surface sampling and plotting).
    """

    normals: np.ndarray  # (F, 3) unit outward normals
    offsets: np.ndarray  # (F,) with half-space i being {x : normals[i] . x <= offsets[i]}
    centroid: np.ndarray  # (3,) mean of the hull vertices
    circumradius: float  # max distance from centroid to any hull vertex
    vertices: np.ndarray  # (V, 3)
    triangles: np.ndarray  # (T, 3) int indices into vertices

    def __post_init__(self):
        object.__setattr__(self, "normals", _freeze(self.normals))
        object.__setattr__(self, "offsets", _freeze(self.offsets))
        object.__setattr__(self, "centroid", _freeze(self.centroid))
        object.__setattr__(self, "vertices", _freeze(self.vertices))
        tri = np.array(self.triangles, dtype=np.int64)
        tri.setflags(write=False)
        object.__setattr__(self, "triangles", tri)

    @property
    def num_faces(self) -> int:
        return self.normals.shape[0]


def build_hull(vertices) -> ConvexHull:
    """Compute the half-space form of the convex hull of >= 4 non-coplanar points.

    Duplicate face planes produced by the triangulated hull are merged so an
    axis-aligned box yields exactly six half-spaces.
    """
    points = np.asarray(vertices, dtype=np.float64)
    if points.ndim != 2 or points.shape[1] != 3:
        raise DegenerateGeometryError("hull input must be an (N, 3) array of points")
    if points.shape[0] < 4:
        raise DegenerateGeometryError("hull needs at least 4 vertices")
    try:
        qhull = _QhullHull(points)
    except QhullError as exc:
        raise DegenerateGeometryError(f"degenerate hull input (coplanar or collinear): {exc}") from exc

    normals = qhull.equations[:, :3]
    offsets = -qhull.equations[:, 3]
    scale = np.linalg.norm(normals, axis=1)
    normals = normals / scale[:, None]
    offsets = offsets / scale

    # Merge faces that share a plane equation up to rounding.
    keys = np.round(np.column_stack([normals, offsets]), 8)
    _, first = np.unique(keys, axis=0, return_index=True)
    keep = np.sort(first)
    normals = normals[keep]
    offsets = offsets[keep]

    hull_vertices = points[qhull.vertices]
    centroid = hull_vertices.mean(axis=0)
    circumradius = float(np.linalg.norm(hull_vertices - centroid, axis=1).max())

    index_of = {int(orig): new for new, orig in enumerate(qhull.vertices)}
    triangles = np.array([[index_of[int(i)] for i in simplex] for simplex in qhull.simplices])

    return ConvexHull(
        normals=normals,
        offsets=offsets,
        centroid=centroid,
        circumradius=circumradius,
        vertices=hull_vertices,
        triangles=triangles,
    )


def box_hull(dims, center=(0.0, 0.0, 0.0)) -> ConvexHull:
    """Axis-aligned box of side lengths `dims` centered at `center`."""
    dims = np.asarray(dims, dtype=np.float64)
    center = np.asarray(center, dtype=np.float64)
    half = 0.5 * dims
    corners = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)], dtype=np.float64
    )
    return build_hull(center + corners * half)


def point_in_hull(point, hull: ConvexHull, tol: float = HULL_EPS) -> bool:
    """Strict interior test: True iff n_i . p - d_i < -tol for every face."""
    residual = hull.normals @ np.asarray(point, dtype=np.float64) - hull.offsets
    return bool(residual.max() < -tol)


def points_in_hull(points, hull: ConvexHull, tol: float = HULL_EPS) -> np.ndarray:
    """Vectorized strict interior test over an (N, 3) array; returns a bool mask."""
    points = np.asarray(points, dtype=np.float64)
    if points.size == 0:
        return np.zeros(0, dtype=bool)
    residual = points @ hull.normals.T - hull.offsets
    return residual.max(axis=1) < -tol


def transform_hull(hull: ConvexHull, pose: Pose) -> ConvexHull:
    """Rigidly move a hull; membership commutes with the transform and the circumradius is preserved."""
    rot = pose.matrix
    normals = hull.normals @ rot.T
    offsets = hull.offsets + normals @ pose.translation
    return ConvexHull(
        normals=normals,
        offsets=offsets,
        centroid=pose.apply(hull.centroid),
        circumradius=hull.circumradius,
        vertices=pose.apply(hull.vertices),
        triangles=hull.triangles,
    )


def hull_surface_area(hull: ConvexHull) -> float:
    a = hull.vertices[hull.triangles[:, 0]]
    b = hull.vertices[hull.triangles[:, 1]]
    c = hull.vertices[hull.triangles[:, 2]]
    return float(0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1).sum())


def sample_hull_surface(hull: ConvexHull, density: float, rng: np.random.Generator) -> np.ndarray:
    """Sample points on the hull surface at roughly `density` points per square meter."""
    a = hull.vertices[hull.triangles[:, 0]]
    b = hull.vertices[hull.triangles[:, 1]]
    c = hull.vertices[hull.triangles[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    counts = np.ceil(areas * density).astype(int)
    total = int(counts.sum())
    if total == 0:
        return np.zeros((0, 3))
    tri_index = np.repeat(np.arange(len(areas)), counts)
    u = rng.random(total)
    v = rng.random(total)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    pa, pb, pc = a[tri_index], b[tri_index], c[tri_index]
    return pa + u[:, None] * (pb - pa) + v[:, None] * (pc - pa)


def ray_hull_entry(origin, directions, hull: ConvexHull, tol: float = 1e-12) -> np.ndarray:
    """Entry distance of rays origin + t * direction into a hull.

    Returns an (N,) array of the smallest t > 0 where each ray enters the hull,
    or +inf where the ray misses. Directions must be unit length for the
    bounding-sphere pruning to be valid; t is then the metric distance.
    """
    origin = np.asarray(origin, dtype=np.float64)
    directions = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    n = directions.shape[0]
    entry = np.full(n, np.inf)

    # Rays whose line misses the hull's bounding sphere (or points away) cannot hit.
    to_center = hull.centroid - origin
    along = directions @ to_center
    center_dist_sq = float(to_center @ to_center)
    bound = hull.circumradius + 1e-9
    perp_sq = center_dist_sq - along**2
    candidates = (perp_sq <= bound * bound) & (along >= -bound)
    if not candidates.any():
        return entry
    dirs = directions[candidates]

    denom = dirs @ hull.normals.T  # (M, F)
    num = hull.offsets - hull.normals @ origin  # (F,)

    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = num[None, :] / denom

    uppers = np.where(denom > tol, ratio, np.inf)
    lowers = np.where(denom < -tol, ratio, -np.inf)
    t_hi = uppers.min(axis=1)
    t_lo = lowers.max(axis=1)

    parallel_miss = ((np.abs(denom) <= tol) & (num[None, :] < 0.0)).any(axis=1)
    # Require t_lo > 0: an origin inside the hull sees no entry from outside.
    hit = (t_lo <= t_hi) & (t_lo > 0.0) & ~parallel_miss
    sub = np.full(len(dirs), np.inf)
    sub[hit] = t_lo[hit]
    entry[candidates] = sub
    return entry


def segment_intersects_hull(p0, p1, hull: ConvexHull, tol: float = 1e-12) -> bool:
    """True when the closed segment p0-p1 meets the hull (boundary contact counts)."""
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    direction = p1 - p0
    denom = hull.normals @ direction
    num = hull.offsets - hull.normals @ p0

    lo, hi = 0.0, 1.0
    for a, b in zip(denom, num):
        if abs(a) <= tol:
            if b < -tol:
                return False
            continue
        t = b / a
        if a > 0:
            hi = min(hi, t)
        else:
            lo = max(lo, t)
        if lo > hi:
            return False
    return True


# ---------------------------------------------------------------------------
# point clouds and spatial index
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PointCloud:
    """World-frame points with optional per-point object labels and source pixels.

    `labels[i]` is the id of the scene object that produced point i; `pixels[i]`
    is the (row, col) image coordinate it was back-projected from.
    """

    points: np.ndarray  # (N, 3)
    labels: np.ndarray | None = None  # (N,) int
    pixels: np.ndarray | None = None  # (N, 2) int, (row, col)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        if not np.isfinite(pts).all():
            raise DegenerateGeometryError("point cloud contains non-finite coordinates")
        object.__setattr__(self, "points", _freeze(pts))
        if self.labels is not None:
            labels = np.array(self.labels, dtype=np.int64)
            labels.setflags(write=False)
            object.__setattr__(self, "labels", labels)
        if self.pixels is not None:
            pixels = np.array(self.pixels, dtype=np.int64).reshape(-1, 2)
            pixels.setflags(write=False)
            object.__setattr__(self, "pixels", pixels)

    def __len__(self) -> int:
        return self.points.shape[0]

    def select(self, mask_or_indices) -> "PointCloud":
        idx = np.asarray(mask_or_indices)
        return PointCloud(
            self.points[idx],
            None if self.labels is None else self.labels[idx],
            None if self.pixels is None else self.pixels[idx],
        )


class SpatialIndex:
    """KD-tree over a point snapshot; read-only after construction."""

    def __init__(self, points):
        self.points = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        self._tree = cKDTree(self.points) if len(self.points) else None

    def __len__(self) -> int:
        return self.points.shape[0]

    def radius_query(self, center, radius: float) -> np.ndarray:
        """Indices of all points with ||p - center|| <= radius, ascending."""
        if radius < 0:
            raise ValueError("radius must be non-negative")
        if self._tree is None:
            return np.zeros(0, dtype=np.int64)
        found = self._tree.query_ball_point(np.asarray(center, dtype=np.float64), radius)
        return np.array(sorted(found), dtype=np.int64)

    def radius_query_many(self, centers, radii) -> list[np.ndarray]:
        """Batched radius query: one sorted index array per center."""
        centers = np.asarray(centers, dtype=np.float64).reshape(-1, 3)
        radii = np.asarray(radii, dtype=np.float64)
        if self._tree is None:
            return [np.zeros(0, dtype=np.int64) for _ in range(len(centers))]
        found = self._tree.query_ball_point(centers, radii, return_sorted=True)
        return [np.asarray(hits, dtype=np.int64) for hits in found]


@lru_cache(maxsize=None)
def _unit_sphere_dirs(count: int) -> np.ndarray:
    # Fibonacci sphere, used for deterministic direction sets in tests/tools.
    i = np.arange(count) + 0.5
    phi = np.arccos(1 - 2 * i / count)
    theta = np.pi * (1 + 5**0.5) * i
    dirs = np.column_stack([np.sin(phi) * np.cos(theta), np.sin(phi) * np.sin(theta), np.cos(phi)])
    dirs.setflags(write=False)
    return dirs
