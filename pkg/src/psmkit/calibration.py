"""Sensor calibration procedures for a cable-driven manipulator.

Covers the full preoperative pipeline: potentiometer scale from a large
enforced motion, potentiometer offset at a fixtured zero position,
per-power-cycle encoder offset, nonlinearity table fitting, the
remote-center-of-motion search for the insertion-axis offset, and a
verification sweep comparing encoder and potentiometer decodes.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import forward_kinematics
from .sensors import LINEAR, LookupTable, actuator_from_enc, actuator_from_pot, simulate_readings

DEFAULT_MIN_VOLTAGE_SWEEP = 0.1
DEFAULT_VERIFY_THRESHOLD = math.radians(5.0)

# joint-1/joint-2 excursions used when no sweep is supplied to the
# insertion-offset search; amplitudes are configuration, not vendor data
DEFAULT_RCM_SWEEP = ((-0.5, 0.0), (0.5, 0.0), (0.0, -0.35), (0.0, 0.35), (0.0, 0.0))

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class DegenerateMotionError(ValueError):
    """Calibration data does not span enough motion to be identifiable."""


class SearchError(RuntimeError):
    """The insertion-offset search could not bracket a unique minimum."""


@dataclass(frozen=True)
class ScaleCalibrationSample:
    """One (encoder counts, ADC volts) observation during the scale motion."""

    counts: float
    voltage: float
    label: str | int | None = None


def calibrate_encoder_offset(k_e, counts, k_p, voltage, b_p):
    """Encoder offset at power-on, transferred from the potentiometer decode."""
    return -k_e * counts + k_p * voltage + b_p


def calibrate_pot_scale(samples, k_e, min_voltage_sweep=DEFAULT_MIN_VOLTAGE_SWEEP):
    """Potentiometer scale from samples spanning a large actuator motion.

    With exactly two samples this is the two-point ratio
    k_P = k_E * (E2 - E1) / (P2 - P1); with more it is the least-squares
    slope of k_E * E against P, which reduces to the same ratio for two.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise DegenerateMotionError("need at least 2 samples")
    voltages = np.array([s.voltage for s in samples], dtype=float)
    counts = np.array([s.counts for s in samples], dtype=float)
    sweep = float(voltages.max() - voltages.min())
    if sweep < min_voltage_sweep:
        raise DegenerateMotionError(
            f"voltage sweep {sweep:.6g} V below minimum {min_voltage_sweep:.6g} V; "
            "enforce a larger actuator motion"
        )
    if len(samples) == 2:
        return float(k_e * (counts[1] - counts[0]) / (voltages[1] - voltages[0]))
    positions = k_e * counts
    slope = np.polyfit(voltages, positions, 1)[0]
    return float(slope)


def calibrate_pot_offset_zero(k_p, voltage_at_zero):
    """Potentiometer offset with the actuator held at its zero position."""
    return -k_p * voltage_at_zero


def fit_nonlinearity_table(pairs, interpolation=LINEAR):
    """Correction table from (reference, measured) observations.

    Both values must be in the unit of the quantity being corrected (volts
    for an ADC nonlinearity).  The returned table maps measured values to
    reference values, exactly at the knots; a deviation-free sensor yields
    the identity correction.
    """
    pairs = sorted((float(m), float(t)) for t, m in pairs)
    if len(pairs) < 2:
        raise ValueError("need at least 2 calibration pairs")
    measured = np.array([m for m, _ in pairs])
    reference = np.array([t for _, t in pairs])
    if not np.all(np.diff(measured) > 0):
        raise ValueError("measured outputs must be strictly monotone")
    return LookupTable(measured, reference, interpolation)


@dataclass(frozen=True)
class InsertionSearchResult:
    """Outcome of the RCM reference-point search for the insertion offset."""

    estimated_offset: float
    residual_motion: float
    insertion_tested: float


def _nominal_rcm_insertion(chain):
    # insertion that parks the wrist reference point on the remote center:
    # the reference sits l_tool beyond the carriage datum, the RCM l_rcc
    l_rcc = chain.tool_constants.get("l_rcc")
    l_tool = chain.tool_constants.get("l_tool")
    if l_rcc is None or l_tool is None:
        raise ValueError("chain tool_constants must provide l_rcc and l_tool")
    return l_rcc - l_tool


def _reference_point(chain, q):
    # midpoint of the wrist segment between the joint-4 and joint-5 frame origins
    frames = forward_kinematics(chain, q, check_limits=False).frames
    try:
        wrist = [i for i, r in enumerate(chain.rows) if r.joint in (3, 4)]
        idx4, idx5 = wrist[0], wrist[1]
    except IndexError:
        raise ValueError("chain must have joints 4 and 5 to define the reference point") from None
    return 0.5 * (frames[idx4].translation + frames[idx5].translation)


def _verify_v_shape(values, rtol=1e-9):
    diffs = np.diff(values)
    scale = max(abs(float(values.max())), 1.0)
    signs = [0 if abs(d) <= rtol * scale else (1 if d > 0 else -1) for d in diffs]
    signs = [s for s in signs if s != 0]
    changes = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    if changes > 1 or (signs and signs[0] > 0 and changes > 0):
        raise SearchError("objective is not unimodal over the search range (bracketing failure)")


def calibrate_insertion_offset_rcm(chain, true_offset_error, sweep=None,
                                   search_range=0.02, tol=1e-5, observer=None,
                                   bracket_points=17):
    """Estimate the insertion potentiometer offset via the RCM fixed point.

    The wrist reference point is commanded to the remote center of motion and
    swung through joint-1/joint-2 configurations; an offset error in the
    insertion reading makes the point orbit instead of holding still.  A
    golden-section search over candidate corrections minimizes the maximum
    pairwise excursion of the observed point.  ``observer`` maps a base-frame
    3-point to observation coordinates (default: perfect 3D tracker).
    """
    sweep = DEFAULT_RCM_SWEEP if sweep is None else tuple(sweep)
    if len(sweep) < 3:
        raise ValueError("sweep must contain at least 3 (j1, j2) configurations")
    if len(set(sweep)) < 3:
        raise ValueError("sweep must contain at least 3 distinct (j1, j2) configurations")
    if observer is None:
        observer = lambda p: p
    nominal = _nominal_rcm_insertion(chain)
    zeros = np.zeros(chain.joint_count)

    def excursion(correction):
        # commanded insertion per the (erroneous) readings; the mechanism
        # actually sits at commanded - true_offset_error
        actual_q3 = nominal + correction - true_offset_error
        points = []
        for j1, j2 in sweep:
            q = zeros.copy()
            q[0], q[1], q[2] = j1, j2, actual_q3
            points.append(np.asarray(observer(_reference_point(chain, q)), dtype=float))
        points = np.stack(points)
        deltas = points[:, None, :] - points[None, :, :]
        return float(np.sqrt((deltas ** 2).sum(axis=2)).max())

    candidates = np.linspace(-search_range, search_range, bracket_points)
    values = np.array([excursion(c) for c in candidates])
    _verify_v_shape(values)
    best = int(np.argmin(values))
    lo = candidates[max(best - 1, 0)]
    hi = candidates[min(best + 1, len(candidates) - 1)]

    # golden-section on the bracketed interval
    a, b = float(lo), float(hi)
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = excursion(c), excursion(d)
    while (b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = excursion(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = excursion(d)
    estimate = 0.5 * (a + b)
    return InsertionSearchResult(
        estimated_offset=float(estimate),
        residual_motion=excursion(estimate),
        insertion_tested=float(nominal + estimate),
    )


@dataclass(frozen=True)
class ActuatorVerification:
    actuator: int
    max_discrepancy: float
    passed: bool


@dataclass(frozen=True)
class VerificationReport:
    threshold: float
    results: tuple
    configs_checked: int = 0
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(r.passed for r in self.results)

    def to_dict(self):
        return {
            "threshold": self.threshold,
            "passed": self.passed,
            "configs_checked": self.configs_checked,
            "actuators": [
                {"actuator": r.actuator, "max_discrepancy": r.max_discrepancy, "passed": r.passed}
                for r in self.results
            ],
            "metadata": dict(self.metadata),
        }

    def to_csv_rows(self):
        rows = [["actuator", "max_discrepancy", "passed"]]
        rows += [[str(r.actuator), repr(r.max_discrepancy), str(r.passed)] for r in self.results]
        return rows


def verify_calibration(actuators, configs, threshold=DEFAULT_VERIFY_THRESHOLD, seed=0,
                       truth=None):
    """Worst-case |beta_E - beta_P| per actuator across joint configurations.

    Each config is a per-actuator position vector.  Raw readings are
    simulated from the ``truth`` models (the physical sensors) and decoded
    with ``actuators`` (the calibration under test); by default the two
    coincide, so only noise and quantization remain.  Passing a different
    calibration as ``actuators`` exposes its miscalibration as a decode
    discrepancy, which is what the check is for.
    """
    configs = [np.asarray(c, dtype=float) for c in configs]
    if not configs:
        raise ValueError("configs must be non-empty")
    truth = list(actuators) if truth is None else list(truth)
    if len(truth) != len(actuators):
        raise ValueError("truth must have one model per actuator")
    for c in configs:
        if c.shape != (len(actuators),):
            raise ValueError(f"each config needs {len(actuators)} positions, got shape {c.shape}")
    rng = np.random.default_rng(seed)
    worst = np.zeros(len(actuators))
    for config in configs:
        for i, model in enumerate(actuators):
            voltage, counts = simulate_readings(float(config[i]), truth[i], rng=rng)
            beta_p = actuator_from_pot(model.pot, voltage)
            beta_e = actuator_from_enc(model.enc, counts)
            worst[i] = max(worst[i], abs(beta_e - beta_p))
    results = tuple(
        ActuatorVerification(actuator=i, max_discrepancy=float(w), passed=bool(w <= threshold))
        for i, w in enumerate(worst)
    )
    return VerificationReport(threshold=threshold, results=results,
                              configs_checked=len(configs), metadata={"seed": seed})
