"""Sensor-model and segmentation-oracle contracts, plus instruction parsing."""
import numpy as np
import pytest

from skygrasp.errors import InstructionParseError, SceneError
from skygrasp.geometry import Pose, point_in_hull, ray_hull_entry
from skygrasp.perception import (
    camera_pose,
    mask_centroid,
    parse_instruction,
    render_depth,
    segment,
)
from skygrasp.scene import CameraModel, Scene, SceneObject, scene_from_dict
from skygrasp.geometry import box_hull, transform_hull


def make_scene(objects, camera=None):
    return Scene(objects, camera=camera or CameraModel(sigma=0.0, dropout=0.0, pitch=0.0))


def facing_camera(width=33, height=25, sigma=0.0, dropout=0.0):
    return CameraModel(fov=np.deg2rad(90), width=width, height=height,
                       max_range=10.0, sigma=sigma, dropout=dropout, pitch=0.0)


def plane_object(object_id=1, label="plate", distance=2.0, size=6.0, role="target"):
    hull = box_hull([0.02, size, size], center=(distance + 0.01, 0.0, 0.0))
    return SceneObject(object_id, label, (hull,), role)


def optical_pose(position=(0.0, 0.0, 0.0)):
    # Optical frame at `position` looking along world +x, image right = -y.
    rotation = np.array([[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]])
    return Pose.from_matrix(rotation, position)


class TestParseInstruction:
    def test_reference_command(self):
        assert parse_instruction("Grasp the green bottle from the steel table") == (
            "steel table",
            "green bottle",
        )

    def test_pick_on_variant(self):
        assert parse_instruction("pick the mug from the shelf") == ("shelf", "mug")
        assert parse_instruction("Pick the red cup on the desk") == ("desk", "red cup")

    def test_non_matching_raises_with_grammar(self):
        with pytest.raises(InstructionParseError, match="grasp/pick"):
            parse_instruction("hello world")


class TestRenderDepth:
    def test_center_pixel_depth_exact(self):
        cam = facing_camera(width=3, height=3)
        scene = make_scene([plane_object(distance=2.0)], camera=cam)
        frame = render_depth(scene, optical_pose(), cam, rng_seed=0)
        assert np.isclose(frame.depth[1, 1], 2.0, atol=1e-9)

    def test_full_dropout_gives_empty_cloud(self):
        cam = facing_camera(dropout=1.0)
        scene = make_scene([plane_object()], camera=cam)
        frame = render_depth(scene, camera_pose(Pose.identity(), cam), cam, rng_seed=1)
        assert len(frame.cloud()) == 0

    def test_noise_standard_deviation(self):
        cam = CameraModel(fov=np.deg2rad(90), width=1, height=1, max_range=10,
                          sigma=0.02, dropout=0.0, pitch=0.0)
        scene = make_scene([plane_object()], camera=cam)
        pose = camera_pose(Pose.identity(), cam)
        depths = np.array(
            [render_depth(scene, pose, cam, rng_seed=seed).depth[0, 0] for seed in range(10_000)]
        )
        assert 0.018 <= depths.std() <= 0.022

    def test_bit_deterministic_per_seed(self):
        cam = facing_camera(sigma=0.02, dropout=0.1)
        scene = make_scene([plane_object()], camera=cam)
        pose = camera_pose(Pose.from_yaw(0.3, [0, 0, 0.5]), cam)
        a = render_depth(scene, pose, cam, rng_seed=77)
        b = render_depth(scene, pose, cam, rng_seed=77)
        assert np.array_equal(a.depth, b.depth, equal_nan=True)
        assert np.array_equal(a.labels, b.labels)
        c = render_depth(scene, pose, cam, rng_seed=78)
        assert not np.array_equal(a.depth, c.depth, equal_nan=True)

    def test_noiseless_points_lie_on_surfaces(self):
        cam = facing_camera()
        target = plane_object(distance=1.5, size=0.8)
        box = SceneObject(2, "block", (box_hull([0.3, 0.3, 0.3], center=(1.0, 0.6, 0.0)),), "obstacle")
        scene = make_scene([target, box], camera=cam)
        frame = render_depth(scene, camera_pose(Pose.identity(), cam), cam, rng_seed=0)
        cloud = frame.cloud()
        assert len(cloud) > 0
        for obj in scene.objects:
            pts = cloud.points[cloud.labels == obj.object_id]
            for hull in obj.hulls:
                residual = np.abs(pts @ hull.normals.T - hull.offsets).min(axis=1)
                inside_or_on = (pts @ hull.normals.T - hull.offsets).max(axis=1) <= 1e-6
                assert inside_or_on.all()
                assert (residual <= 1e-6).all()

    def test_labels_partition_by_visibility(self):
        cam = facing_camera()
        near = SceneObject(1, "near", (box_hull([0.2, 0.6, 0.6], center=(1.0, 0.0, 0.0)),), "target")
        far = SceneObject(2, "far", (box_hull([0.2, 3.0, 3.0], center=(3.0, 0.0, 0.0)),), "context")
        scene = make_scene([near, far], camera=cam)
        frame = render_depth(scene, camera_pose(Pose.identity(), cam), cam, rng_seed=0)
        center_label = frame.labels[cam.height // 2, cam.width // 2]
        assert center_label == 1  # the near box occludes the far wall at the center


class TestSegment:
    def test_fully_occluded_target_gives_empty_mask(self):
        cam = facing_camera()
        wall = SceneObject(1, "wall", (box_hull([0.2, 8.0, 8.0], center=(1.0, 0.0, 0.0)),), "context")
        target = SceneObject(2, "bottle", (box_hull([0.2, 0.2, 0.2], center=(3.0, 0.0, 0.0)),), "target")
        scene = make_scene([wall, target], camera=cam)
        frame = render_depth(scene, camera_pose(Pose.identity(), cam), cam, rng_seed=0)
        mask = segment(frame.cloud(), "bottle", scene)
        assert mask.empty

    def test_unobstructed_target_mask_counts_all_target_pixels(self):
        cam = facing_camera()
        target = plane_object(distance=2.0, size=1.0, label="plate")
        scene = make_scene([target], camera=cam)
        frame = render_depth(scene, camera_pose(Pose.identity(), cam), cam, rng_seed=0)
        cloud = frame.cloud()
        mask = segment(cloud, "plate", scene)
        assert len(mask) == int((cloud.labels == 1).sum())

    def test_unknown_label_gives_empty_mask(self):
        cam = facing_camera()
        scene = make_scene([plane_object(label="plate")], camera=cam)
        frame = render_depth(scene, camera_pose(Pose.identity(), cam), cam, rng_seed=0)
        assert segment(frame.cloud(), "unicorn", scene).empty

    def test_partial_occlusion_matches_per_pixel_raycast(self):
        cam = facing_camera(width=32, height=24)
        target = SceneObject(1, "slab", (box_hull([0.1, 2.0, 2.0], center=(2.5, 0.0, 0.0)),), "target")
        blocker = SceneObject(2, "post", (box_hull([0.1, 0.6, 3.0], center=(1.2, 0.4, 0.0)),), "obstacle")
        scene = make_scene([target, blocker], camera=cam)
        pose = camera_pose(Pose.identity(), cam)
        frame = render_depth(scene, pose, cam, rng_seed=0)
        mask = segment(frame.cloud(), "slab", scene, min_pixels=1)

        # independent oracle: nearest hit per pixel via per-hull ray entries
        from skygrasp.perception import _pixel_rays

        dirs = (_pixel_rays(cam.width, cam.height, cam.fov) @ pose.matrix.T)
        hits = {}
        for obj in scene.objects:
            for hull in obj.hulls:
                t = ray_hull_entry(pose.translation, dirs, hull)
                for flat, ti in enumerate(t):
                    if np.isfinite(ti) and ti < hits.get(flat, (np.inf, None))[0]:
                        hits[flat] = (ti, obj.object_id)
        expected = sorted(
            divmod(flat, cam.width) for flat, (ti, oid) in hits.items() if oid == 1
        )
        got = sorted(map(tuple, mask.pixels))
        assert got == expected

    def test_mask_never_contains_other_objects(self):
        cam = facing_camera()
        a = SceneObject(1, "left", (box_hull([0.4, 0.8, 0.8], center=(2.0, 0.8, 0.0)),), "target")
        b = SceneObject(2, "right", (box_hull([0.4, 0.8, 0.8], center=(2.0, -0.8, 0.0)),), "obstacle")
        scene = make_scene([a, b], camera=cam)
        frame = render_depth(scene, camera_pose(Pose.identity(), cam), cam, rng_seed=0)
        cloud = frame.cloud()
        mask = segment(cloud, "left", scene)
        assert not mask.empty
        assert (cloud.labels[mask.cloud_indices] == 1).all()


class TestMaskCentroid:
    def test_singleton_mean(self):
        from skygrasp.geometry import PointCloud
        from skygrasp.perception import SegmentationMask

        cloud = PointCloud(np.array([[1.0, 2.0, 3.0]]), np.array([5]), np.array([[0, 0]]))
        mask = SegmentationMask(5, np.array([[0, 0]]), np.array([0]), (1, 1))
        assert np.allclose(mask_centroid(mask, cloud), [1, 2, 3])

    def test_symmetric_face_centroid(self):
        cam = facing_camera(width=41, height=41)
        scene = make_scene([plane_object(distance=2.0, size=1.0, label="plate")], camera=cam)
        frame = render_depth(scene, optical_pose(), cam, rng_seed=0)
        cloud = frame.cloud()
        mask = segment(cloud, "plate", scene)
        centroid = mask_centroid(mask, cloud)
        assert np.allclose(centroid[1:], [0.0, 0.0], atol=1e-6)

    def test_random_mask_equals_direct_mean(self):
        cam = facing_camera()
        scene = make_scene([plane_object(label="plate")], camera=cam)
        frame = render_depth(scene, camera_pose(Pose.identity(), cam), cam, rng_seed=0)
        cloud = frame.cloud()
        mask = segment(cloud, "plate", scene)
        expected = cloud.points[cloud.labels == 1].mean(axis=0)
        assert np.allclose(mask_centroid(mask, cloud), expected, atol=1e-12)

    def test_empty_mask_raises(self):
        from skygrasp.geometry import PointCloud
        from skygrasp.perception import SegmentationMask

        cloud = PointCloud(np.zeros((0, 3)), np.zeros(0, dtype=int), np.zeros((0, 2), dtype=int))
        mask = SegmentationMask(1, np.zeros((0, 2), dtype=int), np.zeros(0, dtype=int), (4, 4))
        with pytest.raises(ValueError):
            mask_centroid(mask, cloud)


class TestSceneSchema:
    def test_round_trip_and_validation(self):
        doc = {
            "schema": 1,
            "gravity": [0, 0, -1],
            "spawn": {"position": [0, 0, 1], "yaw_deg": 90.0},
            "camera": {"fov_deg": 90, "width": 16, "height": 12},
            "objects": [
                {"id": 1, "label": "table", "role": "context",
                 "shape": {"kind": "box", "dims": [1, 1, 0.4],
                           "pose": {"position": [0, 0, 0.2], "yaw_deg": 0}}},
                {"id": 2, "label": "cup", "role": "target",
                 "shape": {"kind": "hull", "vertices": np.random.default_rng(0).normal(size=(8, 3)).tolist()}},
            ],
        }
        scene = scene_from_dict(doc)
        assert scene.target.label == "cup"
        assert np.isclose(scene.spawn.yaw, np.pi / 2)
        assert scene.to_dict() == doc

    def test_rejects_bad_schema_and_duplicates(self):
        with pytest.raises(SceneError, match="schema"):
            scene_from_dict({"schema": 99, "objects": [{}]})
        doc = {
            "schema": 1,
            "objects": [
                {"id": 1, "label": "x", "role": "target",
                 "shape": {"kind": "box", "dims": [1, 1, 1], "pose": {"position": [0, 0, 0]}}},
                {"id": 2, "label": "x",
                 "shape": {"kind": "box", "dims": [1, 1, 1], "pose": {"position": [2, 0, 0]}}},
            ],
        }
        with pytest.raises(SceneError, match="unique"):
            scene_from_dict(doc)

    def test_missing_target_rejected(self):
        doc = {
            "schema": 1,
            "objects": [
                {"id": 1, "label": "x",
                 "shape": {"kind": "box", "dims": [1, 1, 1], "pose": {"position": [0, 0, 0]}}},
            ],
        }
        with pytest.raises(SceneError, match="target"):
            scene_from_dict(doc)

    def test_camera_invariants(self):
        with pytest.raises(SceneError):
            CameraModel(fov=0.0)
        with pytest.raises(SceneError):
            CameraModel(dropout=1.5)
        with pytest.raises(SceneError):
            CameraModel(sigma=-0.1)


class TestGroundTruthCloud:
    def test_labels_cover_all_objects_and_repeat_deterministically(self):
        hull = box_hull([0.2, 0.2, 0.2], center=(0, 0, 0.1))
        objects = [
            SceneObject(1, "a", (hull,), "target"),
            SceneObject(2, "b", (transform_hull(hull, Pose(np.array([1.0, 0, 0]), [1, 0, 0, 0])),), "obstacle"),
        ]
        s1 = make_scene(objects)
        s2 = make_scene(objects)
        c1, c2 = s1.ground_truth_cloud(), s2.ground_truth_cloud()
        assert np.array_equal(c1.points, c2.points)
        assert set(np.unique(c1.labels)) == {1, 2}
