"""Pydantic request/response models for the calibration service.

Matrices travel as row-major 4x4 nested lists; rigid-transform validation
(orthonormality, bottom row) happens in the core package so the service and
library enforce exactly the same rules.
"""

from pydantic import BaseModel, Field

Matrix4 = list[list[float]]
Vector = list[float]


class HealthResponse(BaseModel):
    status: str
    version: str


class ChainInput(BaseModel):
    """Either the name of a bundled description or an inline document."""

    bundled: str | None = None
    description: dict | None = None


class FkRequest(BaseModel):
    chain: ChainInput = ChainInput(bundled="psm")
    q: Vector
    include_frames: bool = False
    check_limits: bool = True


class FkResponse(BaseModel):
    tip: Matrix4
    frames: list[Matrix4] | None = None


class ScaleSample(BaseModel):
    counts: float
    voltage: float
    label: str | int | None = None


class ScaleRequest(BaseModel):
    samples: list[ScaleSample] = Field(min_length=2)
    k_e: float
    min_voltage_sweep: float = 0.1


class ScaleResponse(BaseModel):
    k_p: float


class OffsetZeroRequest(BaseModel):
    k_p: float
    voltage_at_zero: float


class OffsetZeroResponse(BaseModel):
    b_p: float


class EncoderOffsetRequest(BaseModel):
    k_e: float
    counts: float
    k_p: float
    voltage: float
    b_p: float


class EncoderOffsetResponse(BaseModel):
    b_e: float


class NonlinearityRequest(BaseModel):
    pairs: list[tuple[float, float]] = Field(min_length=2,
                                             description="(reference, measured) pairs")
    interpolation: str = "linear"


class NonlinearityResponse(BaseModel):
    knots: list[tuple[float, float]]
    interpolation: str


class InsertionSearchRequest(BaseModel):
    chain: ChainInput = ChainInput(bundled="psm")
    true_offset_error: float
    sweep: list[tuple[float, float]] | None = None
    search_range: float = 0.02
    tol: float = 1e-5


class InsertionSearchResponse(BaseModel):
    estimated_offset: float
    residual_motion: float
    insertion_tested: float


class ActuatorModelDoc(BaseModel):
    k_P: float
    b_P: float = 0.0
    k_E: float
    b_E: float = 0.0
    noise_std: float = 0.0
    adc_bits: int = 12
    adc_range: tuple[float, float] = (-5.0, 5.0)
    nonlinearity_knots: list[tuple[float, float]] = []
    nonlinearity_interpolation: str = "linear"


class VerifyRequest(BaseModel):
    actuators: list[ActuatorModelDoc] = Field(min_length=1)
    configs: list[Vector] = Field(min_length=1)
    threshold: float = 0.08726646259971647
    seed: int = 0
    truth: list[ActuatorModelDoc] | None = Field(
        default=None, description="physical sensor models when they differ from "
        "the calibration under test")


class ActuatorVerificationDoc(BaseModel):
    actuator: int
    max_discrepancy: float
    passed: bool


class VerifyResponse(BaseModel):
    threshold: float
    passed: bool
    configs_checked: int
    actuators: list[ActuatorVerificationDoc]
    metadata: dict


class ConstancyRequest(BaseModel):
    chain: ChainInput = ChainInput(bundled="psm")
    deltas: Vector
    depth: int = 3
    tolerance: float = 1e-9
    config_samples: list[Vector] | None = None
    include_transforms: bool = False


class ConstancyResponse(BaseModel):
    is_constant: bool
    spread: float
    samples: int
    tolerance: float
    depth: int
    closed_form_max_deviation: float | None = None
    transforms: list[Matrix4] | None = None


class RealignmentRequest(BaseModel):
    chain: ChainInput = ChainInput(bundled="psm")
    deltas: Vector
    q: Vector
    depth: int


class RealignmentResponse(BaseModel):
    transform: Matrix4


class MotionPairDoc(BaseModel):
    a: Matrix4
    b: Matrix4


class HandEyeSolveRequest(BaseModel):
    pairs: list[MotionPairDoc] = Field(min_length=2)
    min_axis_angle: float = 0.1


class HandEyeSolveResponse(BaseModel):
    x: Matrix4
    rotation_residual: float
    translation_residual: float


class HandEyeGenerateRequest(BaseModel):
    x: Matrix4 | None = None
    n_motions: int = Field(default=10, ge=2)
    rcm_constrained: bool = False
    rot_noise_std: float = 0.0
    trans_noise_std: float = 0.0
    seed: int = 0


class HandEyeGenerateResponse(BaseModel):
    pairs: list[MotionPairDoc]
    x_true: Matrix4
    metadata: dict


class CameraDoc(BaseModel):
    fx: float
    fy: float
    cx: float
    cy: float
    k1: float = 0.0
    k2: float = 0.0
    p1: float = 0.0
    p2: float = 0.0
    k3: float = 0.0
    width: int = 720
    height: int = 576


class StereoRigDoc(BaseModel):
    left: CameraDoc
    right: CameraDoc
    left_to_right: Matrix4


class LineCheckRequest(BaseModel):
    camera: CameraDoc
    points_3d: list[Vector] = Field(min_length=3)
    tolerance: float = 0.5


class LineCheckResponse(BaseModel):
    max_deviation: float
    passed: bool


class RowCheckRequest(BaseModel):
    rig: StereoRigDoc
    matches: list[tuple[tuple[float, float], tuple[float, float]]] = Field(min_length=1)


class RowCheckResponse(BaseModel):
    max_row_difference: float
    row_differences: list[float]


class DeinterlaceRequest(BaseModel):
    rows: list[list[int]] = Field(min_length=2)
    field: str


class DeinterlaceResponse(BaseModel):
    rows: list[list[int]]


class Correspondence(BaseModel):
    point: tuple[float, float, float]
    pixel: tuple[float, float]


class ReprojectionRequest(BaseModel):
    camera: CameraDoc
    correspondences: list[Correspondence] = Field(min_length=1)


class ReprojectionResponse(BaseModel):
    rms: float
    residuals: list[float]
    outlier_indices: list[int]


class TrajectoryRmseRequest(BaseModel):
    chain: ChainInput = ChainInput(bundled="psm")
    e2_values_degrees: list[float] = Field(min_length=1)
    include_per_point: bool = False


class RmseResultDoc(BaseModel):
    e2_degrees: float
    rmse_mm: float
    per_point_errors_mm: list[float] | None = None


class TrajectoryRmseResponse(BaseModel):
    results: list[RmseResultDoc]
    slope_mm_per_degree: float | None = None
    intercept_mm: float | None = None
    r_squared: float | None = None
