"""Trajectory experiment quantifying joint-2 offset error at the tool tip.

A reference joint-space trajectory sweeps the first two joints at constant
insertion; replaying it with a constant error added to joint 2 displaces the
tool tip, and the RMSE of the 3D tip distances measures the impact in
millimeters.  Position only; orientation is excluded.
"""

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .kinematics import tip_positions

REFERENCE_POINTS = 1000
REFERENCE_START = (-math.pi / 5, -math.pi / 6, 0.2)
REFERENCE_END = (math.pi / 5, math.pi / 6, 0.2)


class ConfigurationError(ValueError):
    """Chain not configured for the experiment (missing tool constants)."""


@dataclass(frozen=True)
class TrajectorySpec:
    start: tuple
    end: tuple
    points: int = REFERENCE_POINTS

    def __post_init__(self):
        if self.points < 2:
            raise ValueError("points must be >= 2")
        if len(self.start) != len(self.end):
            raise ValueError("start and end must have the same dimension")


def reference_trajectory_spec(chain):
    """The canonical sweep: joints 1 and 2 through symmetric arcs at 0.2 m insertion."""
    if chain.joint_count < 7:
        raise ConfigurationError(f"chain must have at least 7 joints, has {chain.joint_count}")
    pad = (0.0,) * (chain.joint_count - 3)
    return TrajectorySpec(start=REFERENCE_START + pad, end=REFERENCE_END + pad,
                          points=REFERENCE_POINTS)


def generate_trajectory(spec):
    """Inclusive per-joint linear interpolation between the spec endpoints."""
    start = np.asarray(spec.start, dtype=float)
    end = np.asarray(spec.end, dtype=float)
    ts = np.linspace(0.0, 1.0, spec.points)[:, None]
    return start + ts * (end - start)


def generate_reference_trajectory(chain):
    return generate_trajectory(reference_trajectory_spec(chain))


@dataclass(frozen=True)
class RmseResult:
    e2_degrees: float
    rmse_mm: float
    per_point_errors_mm: np.ndarray

    def to_dict(self):
        return {
            "e2_degrees": self.e2_degrees,
            "rmse_mm": self.rmse_mm,
            "per_point_errors_mm": self.per_point_errors_mm.tolist(),
        }


def trajectory_rmse_experiment(chain, e2_values_degrees, spec=None):
    """Tip-position RMSE for each joint-2 offset, against the reference trajectory."""
    if not chain.tool_constants:
        raise ConfigurationError("chain has no tool_constants; load an instrument description")
    if spec is None:
        spec = reference_trajectory_spec(chain)
    reference = generate_trajectory(spec)
    ref_tips = tip_positions(chain, reference, check_limits=False)
    results = []
    for e2_deg in e2_values_degrees:
        shifted = reference.copy()
        shifted[:, 1] += math.radians(float(e2_deg))
        tips = tip_positions(chain, shifted, check_limits=False)
        errors_mm = np.linalg.norm(tips - ref_tips, axis=1) * 1000.0
        rmse = float(np.sqrt(np.mean(errors_mm ** 2)))
        results.append(RmseResult(e2_degrees=float(e2_deg), rmse_mm=rmse,
                                  per_point_errors_mm=errors_mm))
    return results


def rmse_linearity(results):
    """Least-squares slope/intercept of RMSE against e2, with R^2."""
    e2 = np.array([r.e2_degrees for r in results])
    rmse = np.array([r.rmse_mm for r in results])
    if len(results) < 2:
        raise ValueError("need at least 2 results for a linearity fit")
    slope, intercept = np.polyfit(e2, rmse, 1)
    predicted = slope * e2 + intercept
    ss_res = float(np.sum((rmse - predicted) ** 2))
    ss_tot = float(np.sum((rmse - rmse.mean()) ** 2))
    r_squared = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), r_squared


def rmse_results_to_csv(results):
    """Full-precision CSV (repr round-trips every float exactly)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["e2_degrees", "rmse_mm"])
    for r in results:
        writer.writerow([repr(r.e2_degrees), repr(r.rmse_mm)])
    return buf.getvalue()


def write_rmse_csv(results, path):
    Path(path).write_text(rmse_results_to_csv(results))


def read_rmse_csv(path):
    rows = list(csv.reader(Path(path).read_text().splitlines()))
    return [(float(e2), float(rmse)) for e2, rmse in rows[1:]]


def write_rmse_json(results, path, metadata=None):
    doc = {"results": [r.to_dict() for r in results]}
    if metadata:
        doc["metadata"] = dict(metadata)
    Path(path).write_text(json.dumps(doc, indent=2))
