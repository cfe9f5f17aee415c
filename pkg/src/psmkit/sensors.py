"""Potentiometer/encoder models for one actuator, plus coupling to joints.

An actuator position beta (radians, or meters for a prismatic stage) is
observable two ways:

    beta_P = k_P * correct(P) + b_P     from the potentiometer ADC voltage
    beta_E = k_E * E + b_E              from the incremental encoder counter

``correct`` applies an optional nonlinearity lookup table (volts to volts)
and is the identity when no table is configured.  Simulation inverts both
equations, injecting Gaussian voltage noise and uniform ADC quantization;
encoders are treated as noiseless but quantized to whole counts.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

LINEAR = "linear"
CUBIC = "cubic"

MAX_COUPLING_CONDITION = 1e6


class SensorRangeError(ValueError):
    """Reading or requested voltage outside the sensor's physical range."""


class LookupTableError(ValueError):
    """Malformed or non-invertible lookup table."""


class CouplingError(ValueError):
    """Ill-conditioned or dimensionally wrong coupling model."""


class LookupTable:
    """Monotone interpolation table; exact at knots.

    Inputs must be strictly increasing.  Outputs must be strictly monotone so
    the table stays invertible (needed when simulating raw readings).
    """

    def __init__(self, inputs, outputs, interpolation=LINEAR):
        self.inputs = np.asarray(inputs, dtype=float)
        self.outputs = np.asarray(outputs, dtype=float)
        self.interpolation = interpolation
        if self.inputs.ndim != 1 or self.inputs.shape != self.outputs.shape:
            raise LookupTableError("inputs and outputs must be 1-d arrays of equal length")
        if len(self.inputs) < 2:
            raise LookupTableError("need at least 2 knots")
        if not np.all(np.diff(self.inputs) > 0):
            raise LookupTableError("knot inputs must be strictly increasing")
        d = np.diff(self.outputs)
        if np.all(d > 0):
            self._sign = 1.0
        elif np.all(d < 0):
            self._sign = -1.0
        else:
            raise LookupTableError("knot outputs must be strictly monotone (table not invertible)")
        if interpolation == CUBIC:
            self._spline = CubicSpline(self.inputs, self.outputs)
        elif interpolation == LINEAR:
            self._spline = None
        else:
            raise LookupTableError(f"interpolation must be '{LINEAR}' or '{CUBIC}', got {interpolation!r}")

    def correct(self, x):
        x = np.asarray(x, dtype=float)
        if self._spline is not None:
            y = self._spline(x)
        else:
            y = np.interp(x, self.inputs, self.outputs)
        return float(y) if y.ndim == 0 else y

    __call__ = correct

    def inverse(self, y):
        """Input value that the table maps to y (strict monotonicity assumed)."""
        y = float(y)
        out = self.outputs * self._sign
        target = y * self._sign
        if target < out[0] or target > out[-1]:
            raise LookupTableError(f"value {y:.6g} outside table output range")
        if self._spline is None:
            return float(np.interp(target, out, self.inputs))
        k = min(int(np.searchsorted(out, target, side="right")) - 1, len(out) - 2)
        k = max(k, 0)
        lo, hi = self.inputs[k], self.inputs[k + 1]
        f = lambda x: float(self._spline(x)) - y
        if f(lo) == 0.0:
            return float(lo)
        if f(hi) == 0.0:
            return float(hi)
        try:
            return float(brentq(f, lo, hi, xtol=1e-14))
        except ValueError as e:
            # spline overshoot between monotone knots
            raise LookupTableError(f"table interpolant is not invertible near {y:.6g}") from e

    def to_knots(self):
        return [[float(a), float(b)] for a, b in zip(self.inputs, self.outputs)]


@dataclass(frozen=True)
class PotentiometerModel:
    k_p: float
    b_p: float = 0.0
    nonlinearity: LookupTable | None = None
    noise_std: float = 0.0
    adc_range: tuple = (-5.0, 5.0)
    adc_bits: int = 12

    def __post_init__(self):
        if self.k_p == 0.0:
            raise ValueError("k_p must be nonzero")
        lo, hi = self.adc_range
        if not lo < hi:
            raise ValueError("adc_range min must be below max")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be >= 0")
        if self.adc_bits < 1:
            raise ValueError("adc_bits must be >= 1")

    @property
    def voltage_step(self):
        lo, hi = self.adc_range
        return (hi - lo) / (2 ** self.adc_bits - 1)

    def quantize(self, voltage):
        """Uniform ADC quantization with saturation at the range ends."""
        lo, hi = self.adc_range
        code = np.clip(np.round((voltage - lo) / self.voltage_step), 0, 2 ** self.adc_bits - 1)
        return lo + code * self.voltage_step


@dataclass(frozen=True)
class EncoderModel:
    k_e: float
    b_e: float = 0.0
    counts_range: tuple = (-(2 ** 31), 2 ** 31 - 1)

    def __post_init__(self):
        if self.k_e <= 0.0:
            raise ValueError("k_e must be > 0 (known a priori)")
        lo, hi = self.counts_range
        if not lo < hi:
            raise ValueError("counts_range min must be below max")


@dataclass(frozen=True)
class ActuatorSensorModel:
    """Both sensors of one actuator plus the simulation ground truth."""

    pot: PotentiometerModel
    enc: EncoderModel
    true_position: float = 0.0


def actuator_from_pot(model, voltage):
    """Decode actuator position from an ADC voltage reading."""
    lo, hi = model.adc_range
    if not (lo <= voltage <= hi):
        raise SensorRangeError(f"voltage {voltage:.6g} outside ADC range [{lo:.6g}, {hi:.6g}]")
    corrected = model.nonlinearity.correct(voltage) if model.nonlinearity is not None else voltage
    return model.k_p * corrected + model.b_p


def actuator_from_enc(model, counts):
    """Decode actuator position from an encoder counter reading."""
    lo, hi = model.counts_range
    if not (lo <= counts <= hi):
        raise SensorRangeError(f"counts {counts} outside encoder range [{lo}, {hi}]")
    return model.k_e * counts + model.b_e


def simulate_readings(true_beta, model, seed=None, rng=None):
    """Raw (voltage, counts) pair a real actuator at ``true_beta`` would produce.

    Deterministic for a fixed seed.  The ideal voltage must be reachable
    within the ADC range; Gaussian noise is then applied and saturates at the
    range ends like a physical converter.
    """
    if rng is None:
        rng = np.random.default_rng(seed)
    pot, enc = model.pot, model.enc
    ideal = (true_beta - pot.b_p) / pot.k_p
    if pot.nonlinearity is not None:
        ideal = pot.nonlinearity.inverse(ideal)
    lo, hi = pot.adc_range
    if not (lo <= ideal <= hi):
        raise SensorRangeError(
            f"position {true_beta:.6g} needs voltage {ideal:.6g} outside ADC range [{lo:.6g}, {hi:.6g}]"
        )
    noisy = ideal + (rng.normal(0.0, pot.noise_std) if pot.noise_std > 0.0 else 0.0)
    voltage = float(pot.quantize(min(max(noisy, lo), hi)))

    counts = int(round((true_beta - enc.b_e) / enc.k_e))
    clo, chi = enc.counts_range
    if not (clo <= counts <= chi):
        raise SensorRangeError(f"position {true_beta:.6g} overflows encoder counts range")
    return voltage, counts


@dataclass(frozen=True)
class CouplingModel:
    """Actuator-to-joint map: q = C * diag(gear_ratios)^-1 * beta."""

    coupling_matrix: np.ndarray
    gear_ratios: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coupling_matrix, dtype=float)
        g = np.asarray(self.gear_ratios, dtype=float)
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise CouplingError("coupling_matrix must be square")
        if g.shape != (c.shape[0],):
            raise CouplingError("gear_ratios length must match coupling size")
        if np.any(g == 0.0):
            raise CouplingError("gear ratios must be nonzero")
        if np.linalg.cond(c) >= MAX_COUPLING_CONDITION:
            raise CouplingError(
                f"coupling matrix condition number >= {MAX_COUPLING_CONDITION:.0e} (singular?)"
            )
        object.__setattr__(self, "coupling_matrix", c)
        object.__setattr__(self, "gear_ratios", g)

    @property
    def size(self):
        return self.coupling_matrix.shape[0]


def joints_from_actuators(coupling, beta):
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (coupling.size,):
        raise CouplingError(f"expected {coupling.size} actuator positions, got shape {beta.shape}")
    return coupling.coupling_matrix @ (beta / coupling.gear_ratios)


def actuators_from_joints(coupling, q):
    q = np.asarray(q, dtype=float)
    if q.shape != (coupling.size,):
        raise CouplingError(f"expected {coupling.size} joint positions, got shape {q.shape}")
    return coupling.gear_ratios * np.linalg.solve(coupling.coupling_matrix, q)


@dataclass(frozen=True)
class SafetyCheckResult:
    ok: bool
    discrepancy: float

    @property
    def tripped(self):
        return not self.ok


def safety_check(beta_e, beta_p, threshold):
    """Redundancy monitor: trip when |beta_E - beta_P| strictly exceeds threshold."""
    if threshold <= 0.0:
        raise ValueError("threshold must be > 0")
    discrepancy = abs(beta_e - beta_p)
    return SafetyCheckResult(ok=discrepancy <= threshold, discrepancy=discrepancy)


# -- calibration file ------------------------------------------------------

@dataclass(frozen=True)
class CalibrationSet:
    actuators: tuple
    coupling: CouplingModel | None = None
    metadata: dict = field(default_factory=dict)


def actuator_from_dict(doc):
    table = None
    knots = doc.get("nonlinearity_knots") or []
    if knots:
        ins, outs = zip(*knots)
        table = LookupTable(ins, outs, doc.get("nonlinearity_interpolation", LINEAR))
    pot = PotentiometerModel(
        k_p=float(doc["k_P"]),
        b_p=float(doc.get("b_P", 0.0)),
        nonlinearity=table,
        noise_std=float(doc.get("noise_std", 0.0)),
        adc_range=tuple(doc.get("adc_range", (-5.0, 5.0))),
        adc_bits=int(doc.get("adc_bits", 12)),
    )
    enc = EncoderModel(k_e=float(doc["k_E"]), b_e=float(doc.get("b_E", 0.0)))
    return ActuatorSensorModel(pot=pot, enc=enc, true_position=float(doc.get("true_position", 0.0)))


def actuator_to_dict(model):
    doc = {
        "k_P": model.pot.k_p,
        "b_P": model.pot.b_p,
        "k_E": model.enc.k_e,
        "b_E": model.enc.b_e,
        "noise_std": model.pot.noise_std,
        "adc_bits": model.pot.adc_bits,
        "adc_range": list(model.pot.adc_range),
        "nonlinearity_knots": model.pot.nonlinearity.to_knots() if model.pot.nonlinearity else [],
    }
    if model.pot.nonlinearity is not None:
        doc["nonlinearity_interpolation"] = model.pot.nonlinearity.interpolation
    return doc


def calibration_from_dict(doc):
    actuators = tuple(actuator_from_dict(a) for a in doc.get("actuators", []))
    coupling = None
    if "coupling_matrix" in doc:
        n = len(doc["coupling_matrix"])
        coupling = CouplingModel(
            coupling_matrix=np.asarray(doc["coupling_matrix"], dtype=float),
            gear_ratios=np.asarray(doc.get("gear_ratios", [1.0] * n), dtype=float),
        )
    return CalibrationSet(actuators=actuators, coupling=coupling,
                          metadata=dict(doc.get("metadata", {})))


def calibration_to_dict(cal):
    doc = {"actuators": [actuator_to_dict(a) for a in cal.actuators]}
    if cal.coupling is not None:
        doc["coupling_matrix"] = cal.coupling.coupling_matrix.tolist()
        doc["gear_ratios"] = cal.coupling.gear_ratios.tolist()
    if cal.metadata:
        doc["metadata"] = dict(cal.metadata)
    return doc


def load_calibration_file(path):
    return calibration_from_dict(json.loads(Path(path).read_text()))


def save_calibration_file(cal, path):
    Path(path).write_text(json.dumps(calibration_to_dict(cal), indent=2))
