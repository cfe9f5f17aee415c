"""Pinhole camera model with lens distortion, plus calibration sanity checks.

The distortion convention is the conventional radial + tangential model on
normalized image coordinates: radial scaling (1 + k1 r^2 + k2 r^4 + k3 r^6)
with tangential terms p1, p2.  Positive k1 pushes points away from the
principal point (barrel direction grows pixel radii here).

Verification utilities cover the usual post-calibration checks: straight
lines must stay straight, rectified stereo keypoints must stay row-aligned,
reprojection residuals must stay small, and interlaced frames can be
rebuilt from a single field.
"""

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .transforms import HomogeneousTransform

EVEN = "even"
ODD = "odd"

UNDISTORT_MAX_ITERATIONS = 50
UNDISTORT_TOL = 1e-12


class ProjectionError(ValueError):
    """Point not projectable (behind the camera) or iteration failure."""


@dataclass(frozen=True)
class PinholeCamera:
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

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")


@dataclass(frozen=True)
class StereoRig:
    left: PinholeCamera
    right: PinholeCamera
    left_to_right: HomogeneousTransform


def _distort_normalized(camera, x, y):
    r2 = x * x + y * y
    radial = 1.0 + camera.k1 * r2 + camera.k2 * r2 * r2 + camera.k3 * r2 * r2 * r2
    xd = x * radial + 2.0 * camera.p1 * x * y + camera.p2 * (r2 + 2.0 * x * x)
    yd = y * radial + camera.p1 * (r2 + 2.0 * y * y) + 2.0 * camera.p2 * x * y
    return xd, yd


def project(camera, points):
    """Project camera-frame 3D points (one (3,) point or (N, 3)) to pixels."""
    p = np.asarray(points, dtype=float)
    single = p.shape == (3,)
    p = np.atleast_2d(p)
    if p.ndim != 2 or p.shape[1] != 3:
        raise ProjectionError(f"points must have shape (3,) or (N, 3), got {p.shape}")
    if np.any(p[:, 2] <= 0.0):
        raise ProjectionError("point behind the camera (z <= 0)")
    x = p[:, 0] / p[:, 2]
    y = p[:, 1] / p[:, 2]
    xd, yd = _distort_normalized(camera, x, y)
    uv = np.stack([camera.fx * xd + camera.cx, camera.fy * yd + camera.cy], axis=1)
    return uv[0] if single else uv


def undistort_point(camera, pixel):
    """Ideal (distortion-free) pixel for an observed pixel, by fixed-point iteration."""
    u, v = float(pixel[0]), float(pixel[1])
    xd = (u - camera.cx) / camera.fx
    yd = (v - camera.cy) / camera.fy
    x, y = xd, yd
    for _ in range(UNDISTORT_MAX_ITERATIONS):
        r2 = x * x + y * y
        radial = 1.0 + camera.k1 * r2 + camera.k2 * r2 * r2 + camera.k3 * r2 * r2 * r2
        dx = 2.0 * camera.p1 * x * y + camera.p2 * (r2 + 2.0 * x * x)
        dy = camera.p1 * (r2 + 2.0 * y * y) + 2.0 * camera.p2 * x * y
        x_new = (xd - dx) / radial
        y_new = (yd - dy) / radial
        if abs(x_new - x) < UNDISTORT_TOL and abs(y_new - y) < UNDISTORT_TOL:
            x, y = x_new, y_new
            break
        x, y = x_new, y_new
    else:
        raise ProjectionError(
            f"undistortion did not converge in {UNDISTORT_MAX_ITERATIONS} iterations"
        )
    return np.array([camera.fx * x + camera.cx, camera.fy * y + camera.cy])


@dataclass(frozen=True)
class LineCheckResult:
    max_deviation: float
    passed: bool


def straight_line_check(camera, collinear_points_3d, line_fit_tolerance=0.5):
    """Project collinear 3D points and measure straightness of the pixel track.

    Fits a total-least-squares line through the projections and reports the
    maximum perpendicular deviation; a distortion-free pinhole keeps this at
    numerical zero.
    """
    pts = np.asarray(collinear_points_3d, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 3 or pts.shape[1] != 3:
        raise ValueError("need at least 3 collinear 3D points")
    uv = project(camera, pts)
    center = uv.mean(axis=0)
    centered = uv - center
    if float(np.abs(centered).max()) < 1e-12:
        raise ProjectionError("projected points are coincident; line fit is degenerate")
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    normal = vt[-1]
    deviations = np.abs(centered @ normal)
    max_dev = float(deviations.max())
    return LineCheckResult(max_deviation=max_dev, passed=max_dev <= line_fit_tolerance)


@dataclass(frozen=True)
class RowAlignmentResult:
    max_row_difference: float
    row_differences: tuple


def rectified_row_check(rig, matched_keypoints):
    """Max |vL - vR| over matched keypoints in already-rectified images."""
    matches = list(matched_keypoints)
    if not matches:
        raise ValueError("matched_keypoints must be non-empty")
    diffs = tuple(abs(float(left[1]) - float(right[1])) for left, right in matches)
    return RowAlignmentResult(max_row_difference=max(diffs), row_differences=diffs)


@dataclass(frozen=True)
class ReprojectionReport:
    rms: float
    residuals: tuple
    outlier_indices: tuple

    def to_dict(self):
        return {
            "rms": self.rms,
            "residuals": list(self.residuals),
            "outlier_indices": list(self.outlier_indices),
        }


def reprojection_error(camera, correspondences):
    """RMS pixel residual over (3D point, observed pixel) pairs.

    Residuals above three times the RMS are flagged as outlier candidates.
    """
    corr = list(correspondences)
    if not corr:
        raise ValueError("correspondences must be non-empty")
    points = np.asarray([c[0] for c in corr], dtype=float)
    observed = np.asarray([c[1] for c in corr], dtype=float)
    predicted = project(camera, points)
    residuals = np.linalg.norm(predicted - observed, axis=1)
    rms = float(np.sqrt(np.mean(residuals ** 2)))
    outliers = tuple(int(i) for i in np.nonzero(residuals > 3.0 * rms)[0]) if rms > 0 else ()
    return ReprojectionReport(rms=rms, residuals=tuple(float(r) for r in residuals),
                              outlier_indices=outliers)


# -- images ----------------------------------------------------------------

@dataclass(frozen=True)
class RasterImage:
    """8-bit grayscale image stored row-major."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.uint8)
        if px.ndim != 2:
            raise ValueError("pixels must be a 2-d array")
        px = px.copy()
        px.flags.writeable = False
        object.__setattr__(self, "pixels", px)

    @property
    def height(self):
        return self.pixels.shape[0]

    @property
    def width(self):
        return self.pixels.shape[1]


def deinterlace(image, field):
    """Rebuild a full frame from one field of an interlaced image.

    Keeps the chosen field's rows; every missing row becomes the mean of its
    two kept neighbors rounded half-up, and a missing boundary row copies its
    single kept neighbor.  Output size equals input size.
    """
    if field not in (EVEN, ODD):
        raise ValueError(f"field must be '{EVEN}' or '{ODD}', got {field!r}")
    px = image.pixels
    h = image.height
    if h < 2:
        raise ValueError("image must have at least 2 rows")
    keep_start = 0 if field == EVEN else 1
    out = np.array(px, dtype=np.uint16)
    for r in range(h):
        if r % 2 == keep_start % 2:
            continue
        above, below = r - 1, r + 1
        if above < 0:
            out[r] = px[below]
        elif below >= h:
            out[r] = px[above]
        else:
            out[r] = (px[above].astype(np.uint16) + px[below].astype(np.uint16) + 1) // 2
    return RasterImage(out.astype(np.uint8))


def read_pgm(path):
    """Read a binary (P5) PGM file with maxval 255."""
    data = Path(path).read_bytes()
    fields = []
    i = 0
    while len(fields) < 4:
        while i < len(data) and data[i:i + 1].isspace():
            i += 1
        if data[i:i + 1] == b"#":
            while i < len(data) and data[i] != 0x0A:
                i += 1
            continue
        start = i
        while i < len(data) and not data[i:i + 1].isspace():
            i += 1
        fields.append(data[start:i])
    if fields[0] != b"P5":
        raise ValueError(f"not a binary PGM (P5) file: magic {fields[0]!r}")
    width, height, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    if maxval != 255:
        raise ValueError(f"only maxval 255 supported, got {maxval}")
    i += 1  # the single whitespace byte after maxval
    raster = np.frombuffer(data[i:i + width * height], dtype=np.uint8)
    if raster.size != width * height:
        raise ValueError("truncated PGM raster")
    return RasterImage(raster.reshape(height, width))


def write_pgm(image, path):
    header = f"P5\n{image.width} {image.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + image.pixels.tobytes())


# -- camera files ----------------------------------------------------------

def camera_to_dict(camera):
    return {
        "fx": camera.fx, "fy": camera.fy, "cx": camera.cx, "cy": camera.cy,
        "k1": camera.k1, "k2": camera.k2, "p1": camera.p1, "p2": camera.p2,
        "k3": camera.k3, "width": camera.width, "height": camera.height,
    }


def camera_from_dict(doc):
    return PinholeCamera(
        fx=float(doc["fx"]), fy=float(doc["fy"]),
        cx=float(doc["cx"]), cy=float(doc["cy"]),
        k1=float(doc.get("k1", 0.0)), k2=float(doc.get("k2", 0.0)),
        p1=float(doc.get("p1", 0.0)), p2=float(doc.get("p2", 0.0)),
        k3=float(doc.get("k3", 0.0)),
        width=int(doc.get("width", 720)), height=int(doc.get("height", 576)),
    )


def stereo_to_dict(rig):
    return {
        "left": camera_to_dict(rig.left),
        "right": camera_to_dict(rig.right),
        "left_to_right": rig.left_to_right.as_matrix().tolist(),
    }


def stereo_from_dict(doc):
    return StereoRig(
        left=camera_from_dict(doc["left"]),
        right=camera_from_dict(doc["right"]),
        left_to_right=HomogeneousTransform.from_matrix(doc["left_to_right"]),
    )


def load_camera(path):
    return camera_from_dict(json.loads(Path(path).read_text()))


def load_stereo_rig(path):
    return stereo_from_dict(json.loads(Path(path).read_text()))
