"""Shared test utilities: independent oracles and synthetic scene builders.

The projection and edit-distance oracles here are deliberately written from
scratch (full-matrix DP, direct pinhole projection) so they stay independent
of the library code paths they verify.
"""

import numpy as np

from voxcover import geom

FRAME_H = 48
FRAME_W = 64
FRAME_FX = 40.0
FRAME_FY = 40.0


# -- oracles ---------------------------------------------------------------

def project_points(points_world, intrinsics, pose_matrix):
    """Forward pinhole projection oracle: world -> (u, v, depth).

    pose_matrix is camera-from-world. Depth is the camera-space z.
    """
    pts = np.asarray(points_world, dtype=np.float64).reshape(-1, 3)
    hom = np.concatenate([pts, np.ones((len(pts), 1))], axis=1)
    cam = hom @ np.asarray(pose_matrix, dtype=np.float64).T
    z = cam[:, 2]
    u = intrinsics.fx * cam[:, 0] / z + intrinsics.cx
    v = intrinsics.fy * cam[:, 1] / z + intrinsics.cy
    return u, v, z


def edit_distance_oracle(a, b, substitution_cost=1):
    """Full-matrix DP edit distance, independent of the kernel code."""
    m, n = len(a), len(b)
    table = np.zeros((m + 1, n + 1), dtype=np.int64)
    table[:, 0] = np.arange(m + 1)
    table[0, :] = np.arange(n + 1)
    for i in range(1, m + 1):
        for j in range(1, n + 1):
            sub = table[i - 1, j - 1] + (0 if a[i - 1] == b[j - 1] else substitution_cost)
            table[i, j] = min(sub, table[i - 1, j] + 1, table[i, j - 1] + 1)
    return int(table[m, n])


def random_rotation(rng):
    """Uniform random rotation from a normalized quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_pose(rng, translation_scale=2.0):
    m = np.eye(4)
    m[:3, :3] = random_rotation(rng)
    m[:3, 3] = rng.uniform(-translation_scale, translation_scale, size=3)
    return geom.CameraPose(matrix=m)


# -- synthetic scenes -------------------------------------------------------

def look_at_pose(position, target, up=(0.0, 0.0, 1.0)):
    """Camera-from-world pose for a camera at `position` looking at `target`.

    Camera frame: x right, y down, z forward (right-handed).
    """
    position = np.asarray(position, dtype=np.float64)
    forward = np.asarray(target, dtype=np.float64) - position
    forward = forward / np.linalg.norm(forward)
    right = np.cross(forward, np.asarray(up, dtype=np.float64))
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)
    r_world_from_cam = np.stack([right, down, forward], axis=1)
    m = np.eye(4)
    m[:3, :3] = r_world_from_cam.T
    m[:3, 3] = -r_world_from_cam.T @ position
    return geom.CameraPose(matrix=m)


def _depth_map(phase, h=FRAME_H, w=FRAME_W):
    vs, us = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return 2.0 + 0.5 * np.sin(2 * np.pi * us / w + phase) + 0.3 * np.cos(2 * np.pi * vs / h)


def _conf_map(salt, h=FRAME_H, w=FRAME_W):
    vs, us = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    return 0.2 + 0.8 * ((us * 7 + vs * 13 + salt * 29) % 101) / 100.0


def _make_frame(frame_id, pose, phase):
    return geom.CameraFrame(
        frame_id=frame_id,
        depth=_depth_map(phase),
        confidence=_conf_map(frame_id),
        intrinsics=geom.CameraIntrinsics(
            fx=FRAME_FX, fy=FRAME_FY, cx=FRAME_W / 2.0, cy=FRAME_H / 2.0
        ),
        pose=pose,
    )


def orbit_scene(n_frames=32, radius=3.0, seed=0):
    """Camera circling the origin at varying height, always looking inward."""
    rng = np.random.default_rng(seed)
    height_amp = rng.uniform(0.2, 0.8)
    frames = []
    for i in range(n_frames):
        ang = 2 * np.pi * i / n_frames
        pos = (radius * np.cos(ang), radius * np.sin(ang), 1.0 + height_amp * np.sin(2 * ang))
        frames.append(_make_frame(i, look_at_pose(pos, (0.0, 0.0, 0.5)), phase=ang + seed))
    return frames


def dolly_scene(n_frames=32, seed=0):
    """Camera translating along a line while looking forward."""
    rng = np.random.default_rng(seed)
    span = rng.uniform(3.0, 5.0)
    frames = []
    for i in range(n_frames):
        x = -span / 2 + span * i / (n_frames - 1)
        pos = (x, -2.0, 1.0)
        frames.append(_make_frame(i, look_at_pose(pos, (x, 2.0, 1.0)), phase=0.3 * i + seed))
    return frames


def static_pan_scene(n_frames=32, static_fraction=0.6, seed=0):
    """Camera parked for most of the clip, then panning."""
    rng = np.random.default_rng(seed)
    n_static = int(n_frames * static_fraction)
    sweep = rng.uniform(100.0, 160.0)
    pos = (0.0, 0.0, 1.2)
    frames = []
    for i in range(n_frames):
        if i < n_static:
            yaw = 0.0
            phase = 0.0  # identical depth for the parked stretch
        else:
            yaw = np.radians(sweep) * (i - n_static) / max(1, n_frames - n_static - 1)
            phase = 0.4 * (i - n_static) + seed
        target = (pos[0] + 2 * np.cos(yaw), pos[1] + 2 * np.sin(yaw), 1.0)
        frames.append(_make_frame(i, look_at_pose(pos, target), phase=phase))
    return frames


def procedural_scenes(count=20):
    """Mixed bag of orbit / dolly / static-then-pan trajectories."""
    makers = [orbit_scene, dolly_scene, static_pan_scene]
    return [makers[i % 3](seed=i) for i in range(count)]
