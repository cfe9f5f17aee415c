"""FastAPI service wrapping the toolkit; every operation is stateless.

Domain validation errors surface as HTTP 422 with the originating error
class in the payload, so a thin client can relay a meaningful diagnostic.
"""

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__, calibration, camera, experiments, handeye, offset_analysis
from ..kinematics import (
    ChainDescriptionError,
    JointLimitError,
    bundled_psm_chain,
    chain_from_dict,
    chain_to_dict,
    forward_kinematics,
)
from ..sensors import (
    CouplingError,
    LookupTableError,
    SensorRangeError,
    actuator_from_dict,
)
from ..transforms import HomogeneousTransform, TransformError, frobenius_distance, random_transform
from . import schemas

DOMAIN_ERRORS = (
    ChainDescriptionError,
    JointLimitError,
    SensorRangeError,
    LookupTableError,
    CouplingError,
    TransformError,
    calibration.DegenerateMotionError,
    calibration.SearchError,
    offset_analysis.DegenerateSamplesError,
    handeye.DegenerateMotionError,
    camera.ProjectionError,
    experiments.ConfigurationError,
    ValueError,
)

app = FastAPI(
    title="psmkit",
    version=__version__,
    description="Calibration, kinematics and camera-verification service "
    "for a cable-driven surgical manipulator",
)


async def domain_error_handler(request: Request, exc: Exception):
    return JSONResponse(
        status_code=422,
        content={"detail": {"error": type(exc).__name__, "message": str(exc)}},
    )


for _exc_class in DOMAIN_ERRORS:
    app.add_exception_handler(_exc_class, domain_error_handler)


def _resolve_chain(chain_input):
    if chain_input.description is not None:
        return chain_from_dict(chain_input.description)
    name = chain_input.bundled or "psm"
    if name != "psm":
        raise ChainDescriptionError(f"unknown bundled chain {name!r}")
    return bundled_psm_chain()


def _matrix(transform):
    return transform.as_matrix().tolist()


@app.get("/health", response_model=schemas.HealthResponse)
def health():
    return schemas.HealthResponse(status="ok", version=__version__)


@app.get("/chains/psm")
def get_psm_chain():
    return chain_to_dict(bundled_psm_chain())


@app.post("/kinematics/fk", response_model=schemas.FkResponse)
def fk(req: schemas.FkRequest):
    chain = _resolve_chain(req.chain)
    result = forward_kinematics(chain, req.q, check_limits=req.check_limits)
    frames = [_matrix(f) for f in result.frames] if req.include_frames else None
    return schemas.FkResponse(tip=_matrix(result.tip), frames=frames)


@app.post("/calibration/scale", response_model=schemas.ScaleResponse)
def calibrate_scale(req: schemas.ScaleRequest):
    samples = [
        calibration.ScaleCalibrationSample(counts=s.counts, voltage=s.voltage, label=s.label)
        for s in req.samples
    ]
    k_p = calibration.calibrate_pot_scale(samples, req.k_e, req.min_voltage_sweep)
    return schemas.ScaleResponse(k_p=float(k_p))


@app.post("/calibration/offset-zero", response_model=schemas.OffsetZeroResponse)
def calibrate_offset_zero(req: schemas.OffsetZeroRequest):
    return schemas.OffsetZeroResponse(
        b_p=calibration.calibrate_pot_offset_zero(req.k_p, req.voltage_at_zero)
    )


@app.post("/calibration/encoder-offset", response_model=schemas.EncoderOffsetResponse)
def calibrate_encoder(req: schemas.EncoderOffsetRequest):
    return schemas.EncoderOffsetResponse(
        b_e=calibration.calibrate_encoder_offset(req.k_e, req.counts, req.k_p, req.voltage, req.b_p)
    )


@app.post("/calibration/nonlinearity", response_model=schemas.NonlinearityResponse)
def calibrate_nonlinearity(req: schemas.NonlinearityRequest):
    table = calibration.fit_nonlinearity_table(req.pairs, req.interpolation)
    return schemas.NonlinearityResponse(
        knots=[(a, b) for a, b in table.to_knots()], interpolation=table.interpolation
    )


@app.post("/calibration/insertion-rcm", response_model=schemas.InsertionSearchResponse)
def calibrate_insertion(req: schemas.InsertionSearchRequest):
    chain = _resolve_chain(req.chain)
    result = calibration.calibrate_insertion_offset_rcm(
        chain,
        req.true_offset_error,
        sweep=req.sweep,
        search_range=req.search_range,
        tol=req.tol,
    )
    return schemas.InsertionSearchResponse(
        estimated_offset=result.estimated_offset,
        residual_motion=result.residual_motion,
        insertion_tested=result.insertion_tested,
    )


@app.post("/calibration/verify", response_model=schemas.VerifyResponse)
def verify(req: schemas.VerifyRequest):
    actuators = [actuator_from_dict(a.model_dump()) for a in req.actuators]
    truth = None
    if req.truth is not None:
        truth = [actuator_from_dict(a.model_dump()) for a in req.truth]
    report = calibration.verify_calibration(actuators, req.configs,
                                            threshold=req.threshold, seed=req.seed,
                                            truth=truth)
    doc = report.to_dict()
    return schemas.VerifyResponse(**doc)


@app.post("/offset-analysis/constancy", response_model=schemas.ConstancyResponse)
def constancy(req: schemas.ConstancyRequest):
    chain = _resolve_chain(req.chain)
    report = offset_analysis.constancy_test(
        chain, req.deltas, config_samples=req.config_samples,
        tolerance=req.tolerance, depth=req.depth,
    )
    samples = req.config_samples or offset_analysis.default_constancy_samples(chain)
    closed_form_dev = _closed_form_deviation(chain, req.deltas, req.depth, samples)
    transforms = None
    if req.include_transforms:
        transforms = [
            _matrix(offset_analysis.realignment_transform(chain, req.deltas, q, req.depth))
            for q in samples
        ]
    return schemas.ConstancyResponse(
        **report.to_dict(),
        closed_form_max_deviation=closed_form_dev,
        transforms=transforms,
    )


def _closed_form_deviation(chain, deltas, depth, samples):
    # closed forms exist for an isolated offset in joints 1 to 3; the
    # comparison runs at that joint's own depth
    deltas = np.asarray(deltas, dtype=float)
    nonzero = np.nonzero(deltas)[0]
    if len(nonzero) > 1:
        return None
    joint = int(nonzero[0]) + 1 if len(nonzero) else min(depth, 3)
    if joint > 3:
        return None
    value = float(deltas[joint - 1]) if len(nonzero) else 0.0
    worst = 0.0
    for q in samples:
        numeric = offset_analysis.realignment_transform(chain, deltas, q, joint)
        if joint == 1:
            closed = offset_analysis.realignment_joint1(value)
        elif joint == 2:
            closed = offset_analysis.realignment_joint2(value, float(q[0]))
        else:
            closed = offset_analysis.realignment_joint3(value, float(q[0]), float(q[1]))
        worst = max(worst, frobenius_distance(numeric, closed))
    return worst


@app.post("/offset-analysis/realignment", response_model=schemas.RealignmentResponse)
def realignment(req: schemas.RealignmentRequest):
    chain = _resolve_chain(req.chain)
    transform = offset_analysis.realignment_transform(chain, req.deltas, req.q, req.depth)
    return schemas.RealignmentResponse(transform=_matrix(transform))


@app.post("/handeye/solve", response_model=schemas.HandEyeSolveResponse)
def handeye_solve(req: schemas.HandEyeSolveRequest):
    pairs = [
        handeye.MotionPair(
            a=HomogeneousTransform.from_matrix(p.a),
            b=HomogeneousTransform.from_matrix(p.b),
        )
        for p in req.pairs
    ]
    result = handeye.solve_ax_xb(pairs, min_axis_angle=req.min_axis_angle)
    return schemas.HandEyeSolveResponse(
        x=_matrix(result.x),
        rotation_residual=result.rotation_residual,
        translation_residual=result.translation_residual,
    )


@app.post("/handeye/generate", response_model=schemas.HandEyeGenerateResponse)
def handeye_generate(req: schemas.HandEyeGenerateRequest):
    if req.x is not None:
        x_true = HomogeneousTransform.from_matrix(req.x)
    else:
        x_true = random_transform(np.random.default_rng(req.seed), translation_scale=0.2)
    pairs = handeye.generate_handeye_dataset(
        x_true,
        req.n_motions,
        rcm_constrained=req.rcm_constrained,
        rot_noise_std=req.rot_noise_std,
        trans_noise_std=req.trans_noise_std,
        seed=req.seed,
    )
    return schemas.HandEyeGenerateResponse(
        pairs=[schemas.MotionPairDoc(a=_matrix(p.a), b=_matrix(p.b)) for p in pairs],
        x_true=_matrix(x_true),
        metadata={"seed": req.seed, "n_motions": req.n_motions,
                  "rcm_constrained": req.rcm_constrained},
    )


@app.post("/camera/check-lines", response_model=schemas.LineCheckResponse)
def check_lines(req: schemas.LineCheckRequest):
    cam = camera.camera_from_dict(req.camera.model_dump())
    result = camera.straight_line_check(cam, req.points_3d, req.tolerance)
    return schemas.LineCheckResponse(max_deviation=result.max_deviation, passed=result.passed)


@app.post("/camera/check-rows", response_model=schemas.RowCheckResponse)
def check_rows(req: schemas.RowCheckRequest):
    rig = camera.stereo_from_dict({
        "left": req.rig.left.model_dump(),
        "right": req.rig.right.model_dump(),
        "left_to_right": req.rig.left_to_right,
    })
    result = camera.rectified_row_check(rig, req.matches)
    return schemas.RowCheckResponse(
        max_row_difference=result.max_row_difference,
        row_differences=list(result.row_differences),
    )


@app.post("/camera/deinterlace", response_model=schemas.DeinterlaceResponse)
def deinterlace_image(req: schemas.DeinterlaceRequest):
    image = camera.RasterImage(np.asarray(req.rows, dtype=np.uint8))
    out = camera.deinterlace(image, req.field)
    return schemas.DeinterlaceResponse(rows=out.pixels.tolist())


@app.post("/camera/reprojection", response_model=schemas.ReprojectionResponse)
def reprojection(req: schemas.ReprojectionRequest):
    cam = camera.camera_from_dict(req.camera.model_dump())
    report = camera.reprojection_error(cam, [(c.point, c.pixel) for c in req.correspondences])
    return schemas.ReprojectionResponse(**report.to_dict())


@app.post("/experiments/trajectory-rmse", response_model=schemas.TrajectoryRmseResponse)
def trajectory_rmse(req: schemas.TrajectoryRmseRequest):
    chain = _resolve_chain(req.chain)
    results = experiments.trajectory_rmse_experiment(chain, req.e2_values_degrees)
    docs = [
        schemas.RmseResultDoc(
            e2_degrees=r.e2_degrees,
            rmse_mm=r.rmse_mm,
            per_point_errors_mm=r.per_point_errors_mm.tolist() if req.include_per_point else None,
        )
        for r in results
    ]
    slope = intercept = r2 = None
    if len(results) >= 2:
        slope, intercept, r2 = experiments.rmse_linearity(results)
    return schemas.TrajectoryRmseResponse(
        results=docs, slope_mm_per_degree=slope, intercept_mm=intercept, r_squared=r2
    )
