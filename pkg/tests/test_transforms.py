import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psmkit.transforms import (
    HomogeneousTransform,
    TransformError,
    frobenius_distance,
    orthonormality_defect,
    random_rotation,
    random_transform,
    rotation_angle,
    rotation_log,
)


def test_identity():
    t = HomogeneousTransform.identity()
    assert np.allclose(t.as_matrix(), np.eye(4))


def test_inverse_of_identity_is_identity():
    t = HomogeneousTransform.identity()
    assert frobenius_distance(t.inverse(), t) == 0.0


def test_inverse_of_pure_translation():
    t = HomogeneousTransform.from_translation((1.0, 2.0, 3.0))
    inv = t.inverse()
    assert np.allclose(inv.translation, (-1.0, -2.0, -3.0))
    assert np.allclose(inv.rotation, np.eye(3))


def test_random_inverse_composes_to_identity():
    rng = np.random.default_rng(7)
    for _ in range(200):
        t = random_transform(rng)
        assert frobenius_distance(t @ t.inverse(), HomogeneousTransform.identity()) < 1e-12


def test_composition_preserves_orthonormality():
    rng = np.random.default_rng(11)
    for _ in range(500):
        a = random_transform(rng)
        b = random_transform(rng)
        assert orthonormality_defect((a @ b).rotation) < 1e-9


def test_rejects_non_orthonormal_rotation():
    with pytest.raises(TransformError):
        HomogeneousTransform([[1, 0, 0], [0, 1, 0], [0, 0, 1.1]])


def test_rejects_reflection():
    with pytest.raises(TransformError):
        HomogeneousTransform(np.diag([1.0, 1.0, -1.0]))


def test_from_matrix_rejects_bad_bottom_row():
    m = np.eye(4)
    m[3, 0] = 0.5
    with pytest.raises(TransformError):
        HomogeneousTransform.from_matrix(m)


def test_from_matrix_roundtrip():
    rng = np.random.default_rng(3)
    t = random_transform(rng)
    again = HomogeneousTransform.from_matrix(t.as_matrix())
    assert frobenius_distance(t, again) == 0.0


def test_immutability():
    t = HomogeneousTransform.identity()
    with pytest.raises(AttributeError):
        t.rotation = np.eye(3)
    with pytest.raises(ValueError):
        t.rotation[0, 0] = 2.0


def test_normalize_restores_drifted_rotation():
    rng = np.random.default_rng(5)
    rot = random_rotation(rng) + rng.normal(0, 1e-7, size=(3, 3))
    drifted = HomogeneousTransform.__new__(HomogeneousTransform)
    # bypass validation to emulate accumulated drift, then normalize
    object.__setattr__(drifted, "rotation", rot)
    object.__setattr__(drifted, "translation", np.zeros(3))
    fixed = drifted.normalize()
    assert orthonormality_defect(fixed.rotation) < 1e-14


def test_rot_axis_constructors():
    assert np.allclose(HomogeneousTransform.rot_x(np.pi / 2).rotation,
                       [[1, 0, 0], [0, 0, -1], [0, 1, 0]], atol=1e-15)
    assert np.allclose(HomogeneousTransform.rot_y(np.pi / 2).rotation,
                       [[0, 0, 1], [0, 1, 0], [-1, 0, 0]], atol=1e-15)
    assert np.allclose(HomogeneousTransform.rot_z(np.pi / 2).rotation,
                       [[0, -1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-15)


def test_apply_single_and_batched_points():
    t = HomogeneousTransform.rot_z(np.pi / 2, translation=(1.0, 0.0, 0.0))
    single = t.apply((1.0, 0.0, 0.0))
    assert np.allclose(single, (1.0, 1.0, 0.0), atol=1e-15)
    batch = t.apply(np.array([[1.0, 0, 0], [0, 1.0, 0]]))
    assert np.allclose(batch, [[1.0, 1.0, 0.0], [0.0, 0.0, 0.0]], atol=1e-15)


@given(st.floats(-3.0, 3.0))
@settings(deadline=None)
def test_rotation_log_of_axis_rotation(angle):
    log = rotation_log(HomogeneousTransform.rot_x(angle).rotation)
    assert np.allclose(log, (angle, 0.0, 0.0), atol=1e-9) or np.allclose(
        log, (angle - np.sign(angle) * 2 * np.pi, 0.0, 0.0), atol=1e-9
    )


def test_rotation_log_near_pi():
    for angle in (np.pi, np.pi - 1e-8):
        r = HomogeneousTransform.rot_y(angle).rotation
        log = rotation_log(r)
        assert abs(np.linalg.norm(log) - angle) < 1e-6
        assert np.allclose(np.abs(log / np.linalg.norm(log)), (0, 1, 0), atol=1e-5)


def test_rotation_angle_matches_construction():
    rng = np.random.default_rng(9)
    for _ in range(50):
        axis = rng.normal(size=3)
        angle = rng.uniform(0.01, np.pi - 0.01)
        r = HomogeneousTransform.from_axis_angle(axis, angle).rotation
        assert abs(rotation_angle(r) - angle) < 1e-10
