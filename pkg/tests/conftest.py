import numpy as np
import pytest

from tfftrack.core import Keypoint, Pose, SkeletonConfig, default_skeleton


@pytest.fixture
def skeleton():
    return default_skeleton()


@pytest.fixture
def tiny_skeleton():
    """Two-joint skeleton for hand-computable metric cases."""
    return SkeletonConfig(joint_names=("a", "b"), head_pair=(0, 1),
                          oks_kappas=(0.2, 0.2))


def make_pose(points, confidence=1.0):
    """Pose from a list of (x, y) tuples; None entries stay missing."""
    joints = tuple(None if p is None else Keypoint(p[0], p[1], confidence)
                   for p in points)
    return Pose(joints=joints)


def shift_pose(pose, dx, dy):
    joints = tuple(None if kp is None else Keypoint(kp.x + dx, kp.y + dy,
                                                    kp.confidence)
                   for kp in pose.joints)
    return Pose(joints=joints)


def random_pose(rng, joint_count, span=50.0, origin=(0.0, 0.0)):
    pts = rng.uniform(0, span, size=(joint_count, 2))
    pts[:, 0] += origin[0]
    pts[:, 1] += origin[1]
    return make_pose([tuple(p) for p in pts])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
