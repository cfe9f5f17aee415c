import math

import numpy as np
import pytest

from psmkit.calibration import (
    DegenerateMotionError,
    ScaleCalibrationSample,
    SearchError,
    calibrate_encoder_offset,
    calibrate_insertion_offset_rcm,
    calibrate_pot_offset_zero,
    calibrate_pot_scale,
    fit_nonlinearity_table,
    verify_calibration,
)
from psmkit.sensors import (
    ActuatorSensorModel,
    EncoderModel,
    PotentiometerModel,
    actuator_from_enc,
    actuator_from_pot,
    simulate_readings,
)


# -- encoder offset ------------------------------------------------------------

def test_encoder_offset_zero_case():
    assert calibrate_encoder_offset(0.001, 0, 1.0, 0.0, 0.0) == 0.0


def test_encoder_offset_arithmetic():
    # -0.001*1000 + 2*1 + (-1) = 0
    assert calibrate_encoder_offset(0.001, 1000, 2.0, 1.0, -1.0) == pytest.approx(0.0)


def test_encoder_offset_end_to_end_roundtrip():
    # simulated actuator with known truth: calibrating right after power-on
    # leaves only sensor quantization in the recovered positions
    pot = PotentiometerModel(k_p=0.8, b_p=-0.15, adc_range=(-5.0, 5.0), adc_bits=12)
    true_b_e = 0.4321  # encoder counter zeroes wherever the arm powers on
    enc_true = EncoderModel(k_e=2e-5, b_e=true_b_e)
    model = ActuatorSensorModel(pot=pot, enc=enc_true)

    voltage0, counts0 = simulate_readings(true_b_e, model)  # power-on read: counts == 0
    assert counts0 == 0
    b_e = calibrate_encoder_offset(enc_true.k_e, counts0, pot.k_p, voltage0, pot.b_p)
    decoder = EncoderModel(k_e=enc_true.k_e, b_e=b_e)

    rng = np.random.default_rng(5)
    bound = enc_true.k_e / 2 + pot.voltage_step * abs(pot.k_p)
    for beta in rng.uniform(-2.0, 2.0, 100):
        _, counts = simulate_readings(beta, model)
        assert abs(actuator_from_enc(decoder, counts) - beta) <= bound


# -- potentiometer scale ---------------------------------------------------------

def test_scale_two_point_formula():
    samples = [ScaleCalibrationSample(0, 1.0, "t1"), ScaleCalibrationSample(1000, 2.0, "t2")]
    assert calibrate_pot_scale(samples, 0.001) == pytest.approx(1.0)


def test_scale_rejects_degenerate_sweep():
    samples = [ScaleCalibrationSample(0, 1.0), ScaleCalibrationSample(1000, 1.0)]
    with pytest.raises(DegenerateMotionError):
        calibrate_pot_scale(samples, 0.001)


def test_scale_rejects_single_sample():
    with pytest.raises(DegenerateMotionError):
        calibrate_pot_scale([ScaleCalibrationSample(0, 1.0)], 0.001)


def test_scale_least_squares_on_exact_line_matches_two_point():
    k_e, k_p, b = 1e-4, 1.4, 0.3
    voltages = np.linspace(-2.0, 2.0, 9)
    samples = [ScaleCalibrationSample((k_p * v + b) / k_e, v) for v in voltages]
    assert calibrate_pot_scale(samples, k_e) == pytest.approx(k_p, abs=1e-12)
    two = calibrate_pot_scale([samples[0], samples[-1]], k_e)
    assert two == pytest.approx(k_p, abs=1e-12)


def test_scale_is_order_free():
    samples = [ScaleCalibrationSample(0, 1.0), ScaleCalibrationSample(1000, 2.0)]
    assert calibrate_pot_scale(samples, 0.001) == calibrate_pot_scale(samples[::-1], 0.001)
    many = [ScaleCalibrationSample(i * 100, 1.0 + 0.1 * i) for i in range(8)]
    rng = np.random.default_rng(0)
    shuffled = list(many)
    rng.shuffle(shuffled)
    assert calibrate_pot_scale(many, 1e-3) == pytest.approx(
        calibrate_pot_scale(shuffled, 1e-3), abs=1e-15)


def test_scale_from_noisy_samples_within_one_percent():
    # 50 noisy samples around a known k_P = 1.5 truth
    rng = np.random.default_rng(77)
    k_e, k_p, b_p = 1e-4, 1.5, -0.3
    betas = rng.uniform(-2.0, 2.0, 50)
    samples = []
    for beta in betas:
        voltage = (beta - b_p) / k_p + rng.normal(0.0, 0.005)
        counts = round(beta / k_e)
        samples.append(ScaleCalibrationSample(counts, voltage))
    estimate = calibrate_pot_scale(samples, k_e)
    assert abs(estimate - k_p) / k_p < 0.01


# -- potentiometer zero offset -----------------------------------------------------

def test_offset_zero_formula():
    assert calibrate_pot_offset_zero(1.0, 0.5) == -0.5
    assert calibrate_pot_offset_zero(1.0, 0.0) == 0.0


def test_offset_zero_from_averaged_noisy_fixture_reads():
    # actuator fixtured at beta = 0; average 100 noisy reads
    noise = 0.01
    pot = PotentiometerModel(k_p=0.9, b_p=0.2, noise_std=noise,
                             adc_range=(-5.0, 5.0), adc_bits=16)
    model = ActuatorSensorModel(pot=pot, enc=EncoderModel(k_e=1e-5))
    rng = np.random.default_rng(11)
    reads = [simulate_readings(0.0, model, rng=rng)[0] for _ in range(100)]
    estimate = calibrate_pot_offset_zero(pot.k_p, float(np.mean(reads)))
    assert abs(estimate - pot.b_p) < 3 * noise / math.sqrt(100) * pot.k_p


# -- nonlinearity fitting -------------------------------------------------------------

def test_fit_identity_when_sensor_is_deviation_free():
    reference = np.linspace(0.0, 3.0, 7)
    table = fit_nonlinearity_table(list(zip(reference, reference)))
    xs = np.linspace(0.0, 3.0, 100)
    assert np.allclose(table.correct(xs), xs, atol=1e-12)


def test_fit_two_knots_is_the_affine_map_through_them():
    # knots (measured, reference): (1.0, 1.1) and (2.0, 2.3)
    table = fit_nonlinearity_table([(1.1, 1.0), (2.3, 2.0)])
    assert table.correct(1.0) == pytest.approx(1.1)
    assert table.correct(2.0) == pytest.approx(2.3)
    assert table.correct(1.5) == pytest.approx(1.7)  # midpoint of the affine map


def test_fit_cubic_deviation_recovered_on_dense_grid():
    # synthetic cubic nonlinearity sampled at 32 knots, checked on a dense grid
    reference = np.linspace(-1.0, 1.0, 32)
    measured = reference + 0.05 * reference ** 3
    table = fit_nonlinearity_table(list(zip(reference, measured)), "cubic")
    dense_ref = np.linspace(-1.0, 1.0, 2000)
    dense_meas = dense_ref + 0.05 * dense_ref ** 3
    full_scale = reference.max() - reference.min()
    residual = np.abs(table.correct(dense_meas) - dense_ref)
    assert residual.max() < 1e-4 * full_scale


def test_fit_rejects_non_monotone_measurements():
    with pytest.raises(ValueError):
        fit_nonlinearity_table([(0.0, 0.0), (1.0, 1.0), (2.0, 0.5)])
    with pytest.raises(ValueError):
        fit_nonlinearity_table([(0.0, 0.0)])


# -- insertion offset search (RCM technique) --------------------------------------------

def test_rcm_search_zero_error_is_fixed_point(psm_chain):
    result = calibrate_insertion_offset_rcm(psm_chain, 0.0, search_range=0.012, tol=1e-5)
    assert abs(result.estimated_offset) < 1e-4
    assert result.residual_motion < 1e-9


def test_reference_point_at_rcm_is_invariant_under_joints_1_and_2(psm_chain):
    # wrist reference (midpoint of the frame-4/frame-5 origins) parked on the
    # remote center: no (j1, j2) motion moves it
    from psmkit.kinematics import forward_kinematics

    q3 = psm_chain.tool_constants["l_rcc"] - psm_chain.tool_constants["l_tool"]
    points = []
    for j1, j2 in ((0.0, 0.0), (0.7, -0.4), (-0.9, 0.5), (0.3, 0.6)):
        q = np.zeros(7)
        q[0], q[1], q[2] = j1, j2, q3
        frames = forward_kinematics(psm_chain, q).frames
        points.append(0.5 * (frames[3].translation + frames[4].translation))
    spread = max(np.linalg.norm(p - points[0]) for p in points[1:])
    assert spread < 1e-12


def test_rcm_search_recovers_five_millimeters(psm_chain):
    result = calibrate_insertion_offset_rcm(psm_chain, 0.005, search_range=0.012, tol=1e-5)
    assert abs(result.estimated_offset - 0.005) < 1e-4
    assert result.insertion_tested == pytest.approx(
        psm_chain.tool_constants["l_rcc"] - psm_chain.tool_constants["l_tool"] + 0.005,
        abs=1e-4,
    )


def test_rcm_search_negative_error(psm_chain):
    result = calibrate_insertion_offset_rcm(psm_chain, -0.0073, search_range=0.012, tol=1e-5)
    assert abs(result.estimated_offset + 0.0073) < 1e-4


def test_rcm_search_requires_three_distinct_configs(psm_chain):
    with pytest.raises(ValueError):
        calibrate_insertion_offset_rcm(psm_chain, 0.0, sweep=[(0.4, 0.0)])
    with pytest.raises(ValueError):
        calibrate_insertion_offset_rcm(psm_chain, 0.0, sweep=[(0.4, 0.0)] * 5)


def test_rcm_search_reports_non_unimodal_objective(psm_chain):
    aliasing_observer = lambda p: np.sin(800.0 * p)
    with pytest.raises(SearchError):
        calibrate_insertion_offset_rcm(psm_chain, 0.004, search_range=0.012,
                                       observer=aliasing_observer)


def test_rcm_search_with_pixel_space_observer(psm_chain):
    from psmkit.camera import PinholeCamera, project
    from psmkit.transforms import HomogeneousTransform

    camera = PinholeCamera(fx=1000.0, fy=1000.0, cx=360.0, cy=288.0)
    world_to_cam = HomogeneousTransform.rot_x(np.pi) @ HomogeneousTransform.from_translation(
        (0.0, 0.0, -0.5))
    observer = lambda p: project(camera, world_to_cam.apply(p))
    result = calibrate_insertion_offset_rcm(psm_chain, 0.005, search_range=0.012,
                                            tol=1e-6, observer=observer)
    assert abs(result.estimated_offset - 0.005) < 5e-4


# -- calibration verification -------------------------------------------------------------

def exact_actuator(b_e_error=0.0):
    # adc grid step of exactly 1 mV and power-of-two encoder scale, so
    # positions on the grid decode with zero quantization error
    pot = PotentiometerModel(k_p=1.0, b_p=0.0, adc_range=(0.0, 4.095), adc_bits=12)
    enc = EncoderModel(k_e=2 ** -10, b_e=b_e_error)
    return ActuatorSensorModel(pot=pot, enc=enc)


def test_verify_perfectly_calibrated_reports_zero():
    actuators = [exact_actuator(), exact_actuator()]
    configs = [[1.0, 2.0], [0.5, 3.0], [2.0, 0.25]]
    report = verify_calibration(actuators, configs, threshold=1e-9)
    assert report.passed
    assert all(r.max_discrepancy == 0.0 for r in report.results)
    assert report.configs_checked == 3


def test_verify_flags_injected_encoder_offset_error():
    # the physical sensors are exact, but the calibration under test carries a
    # 0.01 rad b_E error on the second actuator
    injected = 0.01
    truth = [exact_actuator(), exact_actuator()]
    actuators = [exact_actuator(), exact_actuator(b_e_error=injected)]
    configs = [[1.0, 1.0], [2.0, 2.0]]
    report = verify_calibration(actuators, configs, threshold=5e-3, truth=truth)
    quantization = actuators[1].enc.k_e / 2 + actuators[1].pot.voltage_step
    assert report.results[1].max_discrepancy >= injected - quantization
    assert not report.results[1].passed
    assert report.results[0].max_discrepancy <= quantization
    assert report.results[0].passed
    assert not report.passed


def test_verify_rejects_empty_configs():
    with pytest.raises(ValueError):
        verify_calibration([exact_actuator()], [])


def test_verify_report_serialization():
    report = verify_calibration([exact_actuator()], [[1.0]], threshold=1e-6, seed=3)
    doc = report.to_dict()
    assert doc["metadata"]["seed"] == 3
    rows = report.to_csv_rows()
    assert rows[0] == ["actuator", "max_discrepancy", "passed"]
    assert len(rows) == 2


# -- consistency of the full pipeline (scale -> zero offset -> encoder offset) -----------

def test_full_calibration_pipeline_consistency():
    rng = np.random.default_rng(21)
    for _ in range(5):
        k_p = rng.uniform(0.3, 1.5) * rng.choice([-1.0, 1.0])
        b_p = rng.uniform(-0.5, 0.5)
        k_e = 2e-5
        pot = PotentiometerModel(k_p=k_p, b_p=b_p, adc_range=(-5.0, 5.0), adc_bits=12)
        step = pot.voltage_step

        # power-on position lands on an exact ADC code; counter reads 0 there
        code_on = rng.integers(800, 3200)
        beta_on = k_p * (-5.0 + code_on * step) + b_p
        truth = ActuatorSensorModel(pot=pot, enc=EncoderModel(k_e=k_e, b_e=beta_on))

        voltage_on, counts_on = simulate_readings(beta_on, truth)
        assert counts_on == 0

        # large enforced motion to a second exact code
        code_far = code_on + 1500 if code_on < 2000 else code_on - 1500
        beta_far = k_p * (-5.0 + code_far * step) + b_p
        voltage_far, counts_far = simulate_readings(beta_far, truth)
        k_p_hat = calibrate_pot_scale(
            [ScaleCalibrationSample(counts_on, voltage_on),
             ScaleCalibrationSample(counts_far, voltage_far)], k_e)

        voltage_zero, _ = simulate_readings(0.0, truth)
        b_p_hat = calibrate_pot_offset_zero(k_p_hat, voltage_zero)
        b_e_hat = calibrate_encoder_offset(k_e, counts_on, k_p_hat, voltage_on, b_p_hat)

        dec_pot = PotentiometerModel(k_p=k_p_hat, b_p=b_p_hat,
                                     adc_range=(-5.0, 5.0), adc_bits=12)
        dec_enc = EncoderModel(k_e=k_e, b_e=b_e_hat)
        bound = k_e / 2 + step * abs(k_p)
        for beta in rng.uniform(-2.0, 2.0, 40):
            voltage, counts = simulate_readings(beta, truth)
            beta_e = actuator_from_enc(dec_enc, counts)
            beta_p = actuator_from_pot(dec_pot, voltage)
            assert abs(beta_e - beta) <= bound
            assert abs(beta_p - beta) <= bound
            assert abs(beta_e - beta_p) <= 2 * bound
