import math

import numpy as np
import pytest

from psmkit.experiments import (
    ConfigurationError,
    TrajectorySpec,
    generate_reference_trajectory,
    generate_trajectory,
    read_rmse_csv,
    reference_trajectory_spec,
    rmse_linearity,
    rmse_results_to_csv,
    trajectory_rmse_experiment,
    write_rmse_csv,
    write_rmse_json,
)
from psmkit.kinematics import KinematicChain, DhRow


def test_reference_trajectory_endpoints(psm_chain):
    traj = generate_reference_trajectory(psm_chain)
    assert traj.shape == (1000, 7)
    assert np.allclose(traj[0], (-math.pi / 5, -math.pi / 6, 0.2, 0, 0, 0, 0))
    assert np.allclose(traj[-1], (math.pi / 5, math.pi / 6, 0.2, 0, 0, 0, 0))


def test_reference_trajectory_midpoint_symmetry(psm_chain):
    traj = generate_reference_trajectory(psm_chain)
    mid = (traj[499] + traj[500]) / 2.0
    assert np.allclose(mid, (0.0, 0.0, 0.2, 0, 0, 0, 0), atol=1e-15)


def test_reference_trajectory_constant_insertion(psm_chain):
    traj = generate_reference_trajectory(psm_chain)
    assert np.all(traj[:, 2] == 0.2)


def test_spec_validation():
    with pytest.raises(ValueError):
        TrajectorySpec(start=(0.0,), end=(0.0,), points=1)
    with pytest.raises(ValueError):
        TrajectorySpec(start=(0.0, 0.0), end=(0.0,))


def test_reference_spec_needs_seven_joints():
    chain = KinematicChain(
        name="short",
        rows=(DhRow(0, 0, 0, 0, joint=0),),
        joint_limits=((-1.0, 1.0),),
        tool_constants={"tip_offset_z": 0.1},
    )
    with pytest.raises(ConfigurationError):
        reference_trajectory_spec(chain)


def test_zero_offset_gives_zero_rmse(psm_chain):
    (result,) = trajectory_rmse_experiment(psm_chain, [0.0])
    assert result.rmse_mm == 0.0
    assert np.all(result.per_point_errors_mm == 0.0)


def test_one_degree_matches_reported_band(psm_chain):
    (result,) = trajectory_rmse_experiment(psm_chain, [1.0])
    assert 3.2 <= result.rmse_mm <= 3.6


def test_three_degrees_slightly_over_one_centimeter(psm_chain):
    (result,) = trajectory_rmse_experiment(psm_chain, [3.0])
    assert 10.0 < result.rmse_mm < 11.5


def test_rmse_definition_matches_per_point_errors(psm_chain):
    (result,) = trajectory_rmse_experiment(psm_chain, [1.7])
    assert result.rmse_mm == pytest.approx(
        float(np.sqrt(np.mean(result.per_point_errors_mm ** 2))))


def test_linearity_in_e2(psm_chain):
    e2s = [0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0]
    results = trajectory_rmse_experiment(psm_chain, e2s)
    slope, intercept, r2 = rmse_linearity(results)
    assert r2 > 0.999
    assert abs(intercept) < 0.05
    assert 3.2 <= slope <= 3.6


def test_direction_invariance(psm_chain):
    spec = reference_trajectory_spec(psm_chain)
    reversed_spec = TrajectorySpec(start=spec.end, end=spec.start, points=spec.points)
    for e2 in (0.5, 2.0):
        (fwd,) = trajectory_rmse_experiment(psm_chain, [e2])
        (rev,) = trajectory_rmse_experiment(psm_chain, [e2], spec=reversed_spec)
        assert fwd.rmse_mm == pytest.approx(rev.rmse_mm, abs=1e-12)


def test_requires_tool_constants(psm_chain):
    bare = KinematicChain(name="bare", rows=psm_chain.rows,
                          joint_limits=psm_chain.joint_limits, tool_constants={})
    with pytest.raises(ConfigurationError):
        trajectory_rmse_experiment(bare, [1.0])


def test_csv_roundtrip_preserves_full_precision(psm_chain, tmp_path):
    results = trajectory_rmse_experiment(psm_chain, [0.0, 1.0, 2.0, 3.0])
    path = tmp_path / "rmse.csv"
    write_rmse_csv(results, path)
    parsed = read_rmse_csv(path)
    assert len(parsed) == 4
    for r, (e2, rmse) in zip(results, parsed):
        assert e2 == r.e2_degrees
        assert rmse == r.rmse_mm  # bit-exact through repr round-trip
    text = rmse_results_to_csv(results)
    assert text.splitlines()[0] == "e2_degrees,rmse_mm"


def test_json_report(psm_chain, tmp_path):
    results = trajectory_rmse_experiment(psm_chain, [1.0])
    path = tmp_path / "rmse.json"
    write_rmse_json(results, path, metadata={"chain": psm_chain.name})
    import json

    doc = json.loads(path.read_text())
    assert doc["metadata"]["chain"] == psm_chain.name
    assert doc["results"][0]["e2_degrees"] == 1.0
    assert len(doc["results"][0]["per_point_errors_mm"]) == 1000


def test_custom_trajectory_spec():
    spec = TrajectorySpec(start=(0.0, 0.0), end=(1.0, 2.0), points=5)
    traj = generate_trajectory(spec)
    assert traj.shape == (5, 2)
    assert np.allclose(traj[2], (0.5, 1.0))
