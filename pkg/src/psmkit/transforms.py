"""Rigid-transform algebra on 4x4 homogeneous matrices.

All rotations are 3x3 orthonormal with determinant +1; translations are in
meters.  Transforms are immutable once constructed and every constructor
validates orthonormality, so downstream kinematics can trust the invariant.
"""

import numpy as np

ORTHONORMALITY_TOL = 1e-9


class TransformError(ValueError):
    """Raised when a matrix does not describe a valid rigid transform."""


def _as_readonly(a, shape, name):
    arr = np.asarray(a, dtype=float)
    if arr.shape != shape:
        raise TransformError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise TransformError(f"{name} contains non-finite values")
    arr = arr.copy()
    arr.flags.writeable = False
    return arr


def orthonormality_defect(rotation):
    """Frobenius norm of R^T R - I (0 for a perfectly orthonormal matrix)."""
    r = np.asarray(rotation, dtype=float)
    return float(np.linalg.norm(r.T @ r - np.eye(3)))


class HomogeneousTransform:
    """Rotation + translation with an implicit [0,0,0,1] bottom row."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation, translation=(0.0, 0.0, 0.0)):
        rot = _as_readonly(rotation, (3, 3), "rotation")
        defect = orthonormality_defect(rot)
        if defect > ORTHONORMALITY_TOL:
            raise TransformError(
                f"rotation is not orthonormal (defect {defect:.3e} > {ORTHONORMALITY_TOL:.0e})"
            )
        if np.linalg.det(rot) < 0.0:
            raise TransformError("rotation has determinant -1 (reflection)")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", _as_readonly(translation, (3,), "translation"))

    @classmethod
    def _trusted(cls, rotation, translation):
        """Skip validation for matrices orthonormal by construction.

        Internal fast path for analytic constructors (axis rotations, DH rows,
        inverses of valid transforms).  Composition still re-checks.
        """
        t = object.__new__(cls)
        rotation = np.ascontiguousarray(rotation, dtype=float)
        translation = np.ascontiguousarray(translation, dtype=float)
        rotation.flags.writeable = False
        translation.flags.writeable = False
        object.__setattr__(t, "rotation", rotation)
        object.__setattr__(t, "translation", translation)
        return t

    def __setattr__(self, name, value):
        raise AttributeError("HomogeneousTransform is immutable")

    # -- constructors ------------------------------------------------------

    @classmethod
    def identity(cls):
        return cls._trusted(np.eye(3), np.zeros(3))

    @classmethod
    def from_matrix(cls, matrix):
        m = np.asarray(matrix, dtype=float)
        if m.shape != (4, 4):
            raise TransformError(f"expected a 4x4 matrix, got shape {m.shape}")
        if not np.allclose(m[3], (0.0, 0.0, 0.0, 1.0), atol=1e-12):
            raise TransformError("bottom row must be [0, 0, 0, 1]")
        return cls(m[:3, :3], m[:3, 3])

    @classmethod
    def from_translation(cls, translation):
        return cls._trusted(np.eye(3), np.asarray(translation, dtype=float).copy())

    @classmethod
    def rot_x(cls, angle, translation=(0.0, 0.0, 0.0)):
        c, s = np.cos(angle), np.sin(angle)
        return cls._trusted(np.array([[1, 0, 0], [0, c, -s], [0, s, c]]), np.asarray(translation, float))

    @classmethod
    def rot_y(cls, angle, translation=(0.0, 0.0, 0.0)):
        c, s = np.cos(angle), np.sin(angle)
        return cls._trusted(np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]]), np.asarray(translation, float))

    @classmethod
    def rot_z(cls, angle, translation=(0.0, 0.0, 0.0)):
        c, s = np.cos(angle), np.sin(angle)
        return cls._trusted(np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]]), np.asarray(translation, float))

    @classmethod
    def from_axis_angle(cls, axis, angle, translation=(0.0, 0.0, 0.0)):
        axis = np.asarray(axis, dtype=float)
        n = np.linalg.norm(axis)
        if n == 0.0:
            raise TransformError("axis must be nonzero")
        k = axis / n
        kx = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
        rot = np.eye(3) + np.sin(angle) * kx + (1.0 - np.cos(angle)) * (kx @ kx)
        return cls._trusted(rot, np.asarray(translation, dtype=float).copy())

    # -- algebra -----------------------------------------------------------

    def as_matrix(self):
        m = np.eye(4)
        m[:3, :3] = self.rotation
        m[:3, 3] = self.translation
        return m

    def __matmul__(self, other):
        if not isinstance(other, HomogeneousTransform):
            return NotImplemented
        rot = self.rotation @ other.rotation
        trans = self.rotation @ other.translation + self.translation
        return HomogeneousTransform(rot, trans)

    def inverse(self):
        rt = self.rotation.T
        return HomogeneousTransform._trusted(rt, -rt @ self.translation)

    def apply(self, points):
        """Transform one 3-point or an (N, 3) array of points."""
        p = np.asarray(points, dtype=float)
        if p.shape == (3,):
            return self.rotation @ p + self.translation
        if p.ndim == 2 and p.shape[1] == 3:
            return p @ self.rotation.T + self.translation
        raise TransformError(f"points must have shape (3,) or (N, 3), got {p.shape}")

    def normalize(self):
        """Project the rotation back onto SO(3) via SVD.

        Never applied implicitly; composition re-checks orthonormality instead.
        """
        u, _, vt = np.linalg.svd(self.rotation)
        rot = u @ vt
        if np.linalg.det(rot) < 0.0:
            rot = u @ np.diag([1.0, 1.0, -1.0]) @ vt
        return HomogeneousTransform(rot, self.translation)

    def almost_equal(self, other, tol=1e-9):
        return frobenius_distance(self, other) <= tol

    def __repr__(self):
        return f"HomogeneousTransform(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"


def frobenius_distance(a, b):
    """Frobenius norm of the difference between two transforms' 4x4 matrices."""
    return float(np.linalg.norm(a.as_matrix() - b.as_matrix()))


def rotation_log(rotation):
    """Axis-angle vector (angle * unit axis) of a rotation matrix."""
    r = np.asarray(rotation, dtype=float)
    # |v| = sin(angle); atan2 keeps precision at both ends of [0, pi]
    v = 0.5 * np.array([r[2, 1] - r[1, 2], r[0, 2] - r[2, 0], r[1, 0] - r[0, 1]])
    s = float(np.linalg.norm(v))
    c = float(np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0))
    angle = float(np.arctan2(s, c))
    if s < 1e-9:
        if c > 0.0:
            # tiny rotation: log equals the skew vector to O(angle^3)
            return v
        # near pi the skew part vanishes; recover the axis from R + I
        m = (r + np.eye(3)) / 2.0
        axis = np.sqrt(np.clip(np.diag(m), 0.0, None))
        i = int(np.argmax(axis))
        if axis[i] > 0:
            axis[(i + 1) % 3] = np.copysign(axis[(i + 1) % 3], m[i, (i + 1) % 3])
            axis[(i + 2) % 3] = np.copysign(axis[(i + 2) % 3], m[i, (i + 2) % 3])
        return angle * axis / np.linalg.norm(axis)
    return v * (angle / s)


def rotation_angle(rotation):
    """Geodesic rotation angle in radians."""
    r = np.asarray(rotation, dtype=float)
    return float(np.arccos(np.clip((np.trace(r) - 1.0) / 2.0, -1.0, 1.0)))


def rotation_angle_between(r1, r2):
    """Geodesic angle between two rotations, accurate near zero.

    Uses ||R1 - R2||_F = 2 sqrt(2) sin(theta / 2), which keeps full precision
    for small angles where the trace formula bottoms out near 1e-8.
    """
    d = float(np.linalg.norm(np.asarray(r1, dtype=float) - np.asarray(r2, dtype=float)))
    return 2.0 * float(np.arcsin(np.clip(d / (2.0 * np.sqrt(2.0)), 0.0, 1.0)))


def random_rotation(rng):
    """Uniform-ish random rotation from a random axis and angle."""
    axis = rng.normal(size=3)
    axis /= np.linalg.norm(axis)
    angle = rng.uniform(-np.pi, np.pi)
    return HomogeneousTransform.from_axis_angle(axis, angle).rotation


def random_transform(rng, translation_scale=1.0):
    return HomogeneousTransform(random_rotation(rng), rng.uniform(-1, 1, size=3) * translation_scale)
