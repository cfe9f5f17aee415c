"""Closed-form AX = XB hand-eye solver and synthetic motion-pair generation.

X is the transform from the camera frame to the manipulator base frame; each
motion pair holds the same relative motion seen in the camera frame (A) and
in the robot frame (B).  The solver recovers the rotation by least squares
over rotation log-vectors followed by a linear solve for the translation.
Also provides the demonstration that a hand-eye transform computed against a
tilted base absorbs a constant first-joint offset error exactly.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kinematics import forward_kinematics
from .offset_analysis import apply_offset_errors, realignment_joint1
from .transforms import (
    HomogeneousTransform,
    random_rotation,
    rotation_angle_between,
    rotation_log,
)

DEFAULT_MIN_AXIS_ANGLE = 0.1
_MIN_ROTATION = 1e-8


class DegenerateMotionError(ValueError):
    """Motion set does not excite enough rotation axes to solve AX = XB."""

    def __init__(self, message, max_axis_angle=None):
        self.max_axis_angle = max_axis_angle
        super().__init__(message)


@dataclass(frozen=True)
class MotionPair:
    """One relative motion observed in the camera frame (A) and robot frame (B)."""

    a: HomogeneousTransform
    b: HomogeneousTransform


@dataclass(frozen=True)
class HandEyeResult:
    x: HomogeneousTransform
    rotation_residual: float
    translation_residual: float


def _line_angle(u, v):
    # angle between undirected axes
    cosv = abs(float(np.clip(np.dot(u, v), -1.0, 1.0)))
    return float(np.arccos(cosv))


def solve_ax_xb(pairs, min_axis_angle=DEFAULT_MIN_AXIS_ANGLE):
    """Recover X from relative-motion pairs; raises on degenerate motion sets.

    Rotation: orthogonal Procrustes fit between the log-vectors of the A and
    B rotations.  Translation: stacked linear least squares on
    (R_A - I) t = R_X t_B - t_A.  Residuals are RMS over all pairs.
    """
    pairs = list(pairs)
    if len(pairs) < 2:
        raise DegenerateMotionError(f"need at least 2 motion pairs, got {len(pairs)}")
    logs_a, logs_b, axes = [], [], []
    for p in pairs:
        la = rotation_log(p.a.rotation)
        lb = rotation_log(p.b.rotation)
        logs_a.append(la)
        logs_b.append(lb)
        if np.linalg.norm(lb) > _MIN_ROTATION:
            axes.append(lb / np.linalg.norm(lb))
    if len(axes) < 2:
        raise DegenerateMotionError(
            "fewer than 2 pairs carry a usable rotation", max_axis_angle=0.0
        )
    max_angle = 0.0
    for i in range(len(axes)):
        for j in range(i + 1, len(axes)):
            max_angle = max(max_angle, _line_angle(axes[i], axes[j]))
    if max_angle <= min_axis_angle:
        raise DegenerateMotionError(
            f"rotation axes nearly parallel (max axis angle {max_angle:.4g} rad "
            f"<= {min_axis_angle:.4g} rad)",
            max_axis_angle=max_angle,
        )

    m = np.zeros((3, 3))
    for la, lb in zip(logs_a, logs_b):
        m += np.outer(la, lb)
    u, _, vt = np.linalg.svd(m)
    rx = u @ vt
    if np.linalg.det(rx) < 0.0:
        rx = u @ np.diag([1.0, 1.0, -1.0]) @ vt

    lhs = np.zeros((3 * len(pairs), 3))
    rhs = np.zeros(3 * len(pairs))
    for i, p in enumerate(pairs):
        lhs[3 * i:3 * i + 3] = p.a.rotation - np.eye(3)
        rhs[3 * i:3 * i + 3] = rx @ p.b.translation - p.a.translation
    tx = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    x = HomogeneousTransform(rx, tx)

    rot_sq = 0.0
    trans_sq = 0.0
    for p in pairs:
        lhs_rot = p.a.rotation @ x.rotation
        rhs_rot = x.rotation @ p.b.rotation
        rot_sq += rotation_angle_between(lhs_rot, rhs_rot) ** 2
        lhs_t = p.a.rotation @ x.translation + p.a.translation
        rhs_t = x.rotation @ p.b.translation + x.translation
        trans_sq += float(np.sum((lhs_t - rhs_t) ** 2))
    n = len(pairs)
    return HandEyeResult(
        x=x,
        rotation_residual=float(np.sqrt(rot_sq / n)),
        translation_residual=float(np.sqrt(trans_sq / n)),
    )


def _noise_transform(rng, rot_std, trans_std):
    rot = np.eye(3)
    if rot_std > 0.0:
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        rot = HomogeneousTransform.from_axis_angle(axis, rng.normal(0.0, rot_std)).rotation
    trans = rng.normal(0.0, trans_std, size=3) if trans_std > 0.0 else np.zeros(3)
    return HomogeneousTransform(rot, trans)


def generate_handeye_dataset(x_true, n_motions, rcm_constrained=False,
                             rot_noise_std=0.0, trans_noise_std=0.0, seed=0,
                             rcm_point=(0.0, 0.0, 0.1)):
    """Synthetic motion pairs consistent with a known X, deterministic per seed.

    Robot motions are random rigid displacements; with ``rcm_constrained``
    they pivot about a fixed fulcrum point instead, which narrows the excited
    axes the way a trocar constraint does.  Camera motions are X B X^-1 with
    optional multiplicative noise.
    """
    if n_motions < 2:
        raise ValueError("need at least 2 motions")
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n_motions):
        rotation = random_rotation(rng)
        if rcm_constrained:
            pivot = HomogeneousTransform.from_translation(rcm_point)
            b = pivot @ HomogeneousTransform(rotation) @ pivot.inverse()
        else:
            b = HomogeneousTransform(rotation, rng.uniform(-0.05, 0.05, size=3))
        a = x_true @ b @ x_true.inverse()
        if rot_noise_std > 0.0 or trans_noise_std > 0.0:
            a = _noise_transform(rng, rot_noise_std, trans_noise_std) @ a
        pairs.append(MotionPair(a=a, b=b))
    return pairs


def tilted_handeye(cam_from_base, delta1):
    """Hand-eye transform an AX = XB solve returns when joint 1 carries a constant offset.

    The result maps the tilted (virtual) base frame to the camera, so chaining
    it with forward kinematics computed from the erroneous readings gives the
    true camera-frame pose.
    """
    return cam_from_base @ realignment_joint1(delta1).inverse()


def compensated_tip_pose(cam_from_virtual_base, chain, deltas, q):
    """Camera-frame tip pose computed from offset-corrupted joint readings."""
    reported = apply_offset_errors(q, deltas)
    fk = forward_kinematics(chain, reported, check_limits=False)
    return cam_from_virtual_base @ fk.tip


# -- motion-pair files -----------------------------------------------------

def pairs_to_dict(pairs, metadata=None):
    doc = {
        "pairs": [
            {"a": p.a.as_matrix().tolist(), "b": p.b.as_matrix().tolist()}
            for p in pairs
        ]
    }
    if metadata:
        doc["metadata"] = dict(metadata)
    return doc


def pairs_from_dict(doc):
    return [
        MotionPair(
            a=HomogeneousTransform.from_matrix(p["a"]),
            b=HomogeneousTransform.from_matrix(p["b"]),
        )
        for p in doc["pairs"]
    ]


def save_motion_pairs(pairs, path, metadata=None):
    Path(path).write_text(json.dumps(pairs_to_dict(pairs, metadata), indent=2))


def load_motion_pairs(path):
    return pairs_from_dict(json.loads(Path(path).read_text()))
