"""Base-frame realignment under joint offset errors.

A constant error in a joint's reported position tilts every frame the robot
computes.  If one constant transform maps the tilted (virtual) base frame
back onto the actual base frame for every configuration, a single hand-eye
calibration absorbs the error; otherwise it cannot.  This module computes
that realignment transform numerically from partial forward-kinematics
products, provides the closed forms for isolated errors in joints 1 to 3,
and classifies constancy by sampling configurations.
"""

import math
from dataclasses import dataclass

import numpy as np

from .kinematics import dh_transform
from .transforms import HomogeneousTransform, frobenius_distance

MAX_REALIGNMENT_DEPTH = 3
DEFAULT_CONSTANCY_TOL = 1e-9


class DegenerateSamplesError(ValueError):
    """Configuration samples do not vary where the analysis needs them to."""


def pad_offsets(deltas, joint_count):
    deltas = np.asarray(deltas, dtype=float)
    if deltas.ndim != 1 or len(deltas) > joint_count:
        raise ValueError(f"expected at most {joint_count} offsets, got shape {deltas.shape}")
    return np.concatenate([deltas, np.zeros(joint_count - len(deltas))])


def apply_offset_errors(q, deltas):
    """Joint vector as reported by sensors carrying the given offset errors."""
    q = np.asarray(q, dtype=float)
    return q + pad_offsets(deltas, len(q))


def _partial_product(chain, q, depth):
    current = HomogeneousTransform.identity()
    for row in chain.rows:
        value = q[row.joint] if row.joint is not None else 0.0
        current = current @ dh_transform(row, value)
        if row.joint == depth - 1:
            return current
    raise ValueError(f"chain has no row driving joint {depth}")


def realignment_transform(chain, deltas, q, depth):
    """Numeric virtual-to-actual base transform at the given joint depth.

    Composes the partial chain product with offsets applied against the
    inverse of the error-free product, so the returned transform realigns
    the virtual frame of joint ``depth`` with the actual one.
    """
    if not 1 <= depth <= MAX_REALIGNMENT_DEPTH:
        raise ValueError(f"depth must be between 1 and {MAX_REALIGNMENT_DEPTH}, got {depth}")
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.joint_count,):
        raise ValueError(f"expected {chain.joint_count} joint values, got shape {q.shape}")
    padded = pad_offsets(deltas, chain.joint_count)
    if not padded.any():
        # error-free chain realigns to itself exactly, for any configuration
        return HomogeneousTransform.identity()
    q_hat = q + padded
    virtual = _partial_product(chain, q_hat, depth)
    actual = _partial_product(chain, q, depth)
    return virtual @ actual.inverse()


def realignment_joint1(delta1):
    """Closed form for an isolated joint-1 offset: rotation about base y by -delta1."""
    c, s = math.cos(delta1), math.sin(delta1)
    return HomogeneousTransform([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def realignment_joint2(delta2, j1):
    """Closed form for an isolated joint-2 offset; depends on the joint-1 value."""
    c1, s1 = math.cos(j1), math.sin(j1)
    c2, s2 = math.cos(delta2), math.sin(delta2)
    rotation = [
        [c1 * c1 + c2 * s1 * s1, s2 * s1, -((-1.0 + c2) * c1 * s1)],
        [-s2 * s1, c2, c1 * s2],
        [-((-1.0 + c2) * c1 * s1), -c1 * s2, c2 * c1 * c1 + s1 * s1],
    ]
    return HomogeneousTransform(rotation)


def realignment_joint3(delta3, j1, j2):
    """Closed form for an isolated insertion offset: a configuration-dependent translation."""
    c1, s1 = math.cos(j1), math.sin(j1)
    c2, s2 = math.cos(j2), math.sin(j2)
    translation = (delta3 * c2 * s1, -delta3 * s2, -delta3 * c1 * c2)
    return HomogeneousTransform(np.eye(3), translation)


@dataclass(frozen=True)
class ConstancyReport:
    """Whether the realignment transform stays constant across configurations."""

    is_constant: bool
    spread: float
    samples: int
    tolerance: float
    depth: int

    def to_dict(self):
        return {
            "is_constant": self.is_constant,
            "spread": self.spread,
            "samples": self.samples,
            "tolerance": self.tolerance,
            "depth": self.depth,
        }


def default_constancy_samples(chain, grid=5, insertion=0.12):
    """Grid of configurations spanning joints 1 and 2 at a fixed insertion."""
    qs = []
    for j1 in np.linspace(-math.pi / 3, math.pi / 3, grid):
        for j2 in np.linspace(-math.pi / 4, math.pi / 4, grid):
            q = np.zeros(chain.joint_count)
            q[0], q[1] = j1, j2
            if chain.joint_count > 2:
                q[2] = insertion
            qs.append(q)
    return qs


def constancy_test(chain, deltas, config_samples=None, tolerance=DEFAULT_CONSTANCY_TOL, depth=3):
    """Classify whether one constant transform compensates the offset errors.

    Evaluates the realignment transform at every sample and reports the
    maximum pairwise Frobenius distance; constant means the spread stays
    within tolerance, in which case a single hand-eye calibration absorbs
    the injected errors.
    """
    if config_samples is None:
        config_samples = default_constancy_samples(chain)
    config_samples = [np.asarray(c, dtype=float) for c in config_samples]
    if len(config_samples) < 2:
        raise DegenerateSamplesError("need at least 2 configuration samples")
    j1s = {round(float(c[0]), 12) for c in config_samples}
    if len(j1s) < 2:
        raise DegenerateSamplesError("samples must span at least 2 distinct joint-1 values")
    if depth >= 3:
        j2s = {round(float(c[1]), 12) for c in config_samples}
        if len(j1s) < 2 or len(j2s) < 2:
            raise DegenerateSamplesError(
                "samples must span distinct joint-1 and joint-2 values for depth 3"
            )
    transforms = [realignment_transform(chain, deltas, q, depth) for q in config_samples]
    spread = 0.0
    for i in range(len(transforms)):
        for j in range(i + 1, len(transforms)):
            spread = max(spread, frobenius_distance(transforms[i], transforms[j]))
    return ConstancyReport(
        is_constant=spread <= tolerance,
        spread=spread,
        samples=len(transforms),
        tolerance=tolerance,
        depth=depth,
    )
