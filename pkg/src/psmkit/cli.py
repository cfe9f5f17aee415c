"""Command-line client for the calibration service.

Every subcommand translates files and flags into one service request and
writes the response back to files or stdout.  By default the service app is
driven in-process (no socket); pass ``--server URL`` to target a running
instance instead, or use ``psmkit serve`` to start one.

Exit codes: 0 success, 1 computation or request error, 2 usage error.
"""

import argparse
import asyncio
import csv
import json
import sys
from pathlib import Path

import httpx

DEFAULT_TIMEOUT = 60.0


class ServiceError(RuntimeError):
    def __init__(self, status_code, detail):
        self.status_code = status_code
        self.detail = detail
        if isinstance(detail, dict) and "message" in detail:
            text = f"{detail.get('error', 'error')}: {detail['message']}"
        else:
            text = str(detail)
        super().__init__(text)


def _request(server, method, path, payload=None):
    async def _go():
        if server:
            transport = None
            base_url = server.rstrip("/")
        else:
            from .service import app

            transport = httpx.ASGITransport(app=app)
            base_url = "http://psmkit.local"
        async with httpx.AsyncClient(transport=transport, base_url=base_url,
                                     timeout=DEFAULT_TIMEOUT) as client:
            response = await client.request(method, path, json=payload)
            if response.status_code != 200:
                try:
                    detail = response.json().get("detail", response.text)
                except ValueError:
                    detail = response.text
                raise ServiceError(response.status_code, detail)
            return response.json()

    return asyncio.run(_go())


def _chain_payload(path):
    if path is None:
        return {"bundled": "psm"}
    return {"description": json.loads(Path(path).read_text())}


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip() != ""]


def _write_json(doc, path):
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def _print_json(doc):
    print(json.dumps(doc, indent=2))


# -- subcommand handlers -----------------------------------------------------

def cmd_fk(args):
    payload = {
        "chain": _chain_payload(args.chain),
        "q": _floats(args.q),
        "include_frames": args.frames,
        "check_limits": not args.no_limit_check,
    }
    doc = _request(args.server, "POST", "/kinematics/fk", payload)
    if args.out:
        _write_json(doc, args.out)
        print(f"wrote {args.out}")
    else:
        _print_json(doc)
    return 0


def cmd_calibrate_scale(args):
    raw = json.loads(Path(args.samples).read_text())
    samples = raw["samples"] if isinstance(raw, dict) else raw
    payload = {"samples": samples, "k_e": args.ke, "min_voltage_sweep": args.min_sweep}
    doc = _request(args.server, "POST", "/calibration/scale", payload)
    if args.out:
        _write_json(doc, args.out)
    print(f"k_P = {doc['k_p']!r}")
    return 0


def cmd_calibrate_offset(args):
    doc = _request(args.server, "POST", "/calibration/offset-zero",
                   {"k_p": args.kp, "voltage_at_zero": args.voltage})
    if args.out:
        _write_json(doc, args.out)
    print(f"b_P = {doc['b_p']!r}")
    return 0


def cmd_calibrate_encoder(args):
    payload = {"k_e": args.ke, "counts": args.counts, "k_p": args.kp,
               "voltage": args.voltage, "b_p": args.bp}
    doc = _request(args.server, "POST", "/calibration/encoder-offset", payload)
    if args.out:
        _write_json(doc, args.out)
    print(f"b_E = {doc['b_e']!r}")
    return 0


def cmd_calibrate_nonlinearity(args):
    pairs = json.loads(Path(args.pairs).read_text())
    payload = {"pairs": pairs, "interpolation": args.interpolation}
    doc = _request(args.server, "POST", "/calibration/nonlinearity", payload)
    if args.out:
        _write_json(doc, args.out)
        print(f"wrote {args.out} ({len(doc['knots'])} knots)")
    else:
        _print_json(doc)
    return 0


def cmd_calibrate_bp3(args):
    payload = {
        "chain": _chain_payload(args.chain),
        "true_offset_error": args.true_error,
        "search_range": args.search_range,
        "tol": args.tol,
    }
    if args.sweep:
        payload["sweep"] = json.loads(Path(args.sweep).read_text())
    doc = _request(args.server, "POST", "/calibration/insertion-rcm", payload)
    if args.out:
        _write_json(doc, args.out)
    print(f"estimated offset = {doc['estimated_offset']!r} m "
          f"(residual motion {doc['residual_motion']:.3e})")
    return 0


def cmd_verify(args):
    cal = json.loads(Path(args.calibration).read_text())
    configs = json.loads(Path(args.configs).read_text())
    payload = {
        "actuators": cal["actuators"] if isinstance(cal, dict) else cal,
        "configs": configs,
        "threshold": args.threshold,
        "seed": args.seed,
    }
    if args.truth:
        truth = json.loads(Path(args.truth).read_text())
        payload["truth"] = truth["actuators"] if isinstance(truth, dict) else truth
    doc = _request(args.server, "POST", "/calibration/verify", payload)
    if args.out:
        _write_json(doc, args.out)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["actuator", "max_discrepancy", "passed"])
            for row in doc["actuators"]:
                writer.writerow([row["actuator"], repr(row["max_discrepancy"]), row["passed"]])
    status = "PASS" if doc["passed"] else "FAIL"
    print(f"{status}: worst discrepancy "
          f"{max(a['max_discrepancy'] for a in doc['actuators'])!r} rad "
          f"over {doc['configs_checked']} configurations")
    return 0


def cmd_offset_analysis(args):
    payload = {
        "chain": _chain_payload(args.chain),
        "deltas": _floats(args.delta),
        "depth": args.depth,
        "tolerance": args.tolerance,
        "include_transforms": args.transforms,
    }
    doc = _request(args.server, "POST", "/offset-analysis/constancy", payload)
    if args.out:
        _write_json(doc, args.out)
    verdict = "constant (hand-eye can compensate)" if doc["is_constant"] \
        else "NOT constant (no single hand-eye transform compensates)"
    print(f"realignment transform is {verdict}; spread {doc['spread']:.3e} "
          f"over {doc['samples']} samples")
    if doc.get("closed_form_max_deviation") is not None:
        print(f"closed form vs numeric: max deviation {doc['closed_form_max_deviation']:.3e}")
    return 0


def cmd_handeye_solve(args):
    pairs = json.loads(Path(args.pairs).read_text())["pairs"]
    doc = _request(args.server, "POST", "/handeye/solve",
                   {"pairs": pairs, "min_axis_angle": args.min_axis_angle})
    if args.out:
        _write_json(doc, args.out)
    print(f"rotation residual {doc['rotation_residual']:.3e} rad, "
          f"translation residual {doc['translation_residual']:.3e} m")
    return 0


def cmd_handeye_generate(args):
    payload = {
        "n_motions": args.n,
        "rcm_constrained": args.rcm,
        "rot_noise_std": args.rot_noise,
        "trans_noise_std": args.trans_noise,
        "seed": args.seed,
    }
    if args.x:
        payload["x"] = json.loads(Path(args.x).read_text())
    doc = _request(args.server, "POST", "/handeye/generate", payload)
    _write_json(doc, args.out)
    print(f"wrote {args.out} ({len(doc['pairs'])} pairs, seed {args.seed})")
    return 0


def cmd_camera_check_lines(args):
    payload = {
        "camera": json.loads(Path(args.camera).read_text()),
        "points_3d": json.loads(Path(args.points).read_text()),
        "tolerance": args.tolerance,
    }
    doc = _request(args.server, "POST", "/camera/check-lines", payload)
    if args.out:
        _write_json(doc, args.out)
    print(f"{'PASS' if doc['passed'] else 'FAIL'}: max deviation {doc['max_deviation']!r} px")
    return 0


def cmd_camera_check_rows(args):
    payload = {
        "rig": json.loads(Path(args.stereo).read_text()),
        "matches": json.loads(Path(args.matches).read_text()),
    }
    doc = _request(args.server, "POST", "/camera/check-rows", payload)
    if args.out:
        _write_json(doc, args.out)
    print(f"max row difference = {doc['max_row_difference']!r} px")
    return 0


def cmd_camera_deinterlace(args):
    from .camera import RasterImage, read_pgm, write_pgm
    import numpy as np

    image = read_pgm(args.image)
    payload = {"rows": image.pixels.tolist(), "field": args.field}
    doc = _request(args.server, "POST", "/camera/deinterlace", payload)
    write_pgm(RasterImage(np.asarray(doc["rows"], dtype=np.uint8)), args.out)
    print(f"wrote {args.out} ({image.width}x{image.height}, kept {args.field} rows)")
    return 0


def cmd_camera_reproj(args):
    raw = json.loads(Path(args.correspondences).read_text())
    corr = [c if isinstance(c, dict) else {"point": c[0], "pixel": c[1]} for c in raw]
    payload = {"camera": json.loads(Path(args.camera).read_text()), "correspondences": corr}
    doc = _request(args.server, "POST", "/camera/reprojection", payload)
    if args.out:
        _write_json(doc, args.out)
    print(f"RMS = {doc['rms']!r} px; outliers: {doc['outlier_indices']}")
    return 0


def cmd_trajectory_rmse(args):
    payload = {
        "chain": _chain_payload(args.chain),
        "e2_values_degrees": _floats(args.e2),
        "include_per_point": args.per_point,
    }
    doc = _request(args.server, "POST", "/experiments/trajectory-rmse", payload)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["e2_degrees", "rmse_mm"])
            for r in doc["results"]:
                writer.writerow([repr(r["e2_degrees"]), repr(r["rmse_mm"])])
        print(f"wrote {args.out}")
    if args.json:
        _write_json(doc, args.json)
        print(f"wrote {args.json}")
    for r in doc["results"]:
        print(f"e2 = {r['e2_degrees']:g} deg -> RMSE {r['rmse_mm']:.4f} mm")
    if doc.get("slope_mm_per_degree") is not None:
        print(f"slope {doc['slope_mm_per_degree']:.4f} mm/deg, "
              f"R^2 {doc['r_squared']:.6f}")
    return 0


def cmd_serve(args):
    import uvicorn

    uvicorn.run("psmkit.service:app", host=args.host, port=args.port)
    return 0


# -- parser ------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="psmkit",
        description="Kinematics, sensor-calibration and camera-verification toolkit "
        "for a cable-driven surgical manipulator.",
    )
    parser.add_argument("--server", default=None,
                        help="base URL of a running service; default runs in-process")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fk", help="forward kinematics for one joint vector")
    p.add_argument("--chain", help="robot description JSON (default: bundled PSM)")
    p.add_argument("--q", required=True, help="comma-separated joint values")
    p.add_argument("--frames", action="store_true", help="include every intermediate frame")
    p.add_argument("--no-limit-check", action="store_true")
    p.add_argument("--out", help="write the response JSON here")
    p.set_defaults(func=cmd_fk)

    cal = sub.add_parser("calibrate", help="sensor calibration procedures")
    calsub = cal.add_subparsers(dest="procedure", required=True)

    p = calsub.add_parser("scale", help="potentiometer scale from a large motion")
    p.add_argument("--samples", required=True, help="JSON file with (counts, voltage) samples")
    p.add_argument("--ke", type=float, required=True, help="encoder radians per count")
    p.add_argument("--min-sweep", type=float, default=0.1, help="minimum voltage sweep [V]")
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate_scale)

    p = calsub.add_parser("offset", help="potentiometer offset at the fixtured zero position")
    p.add_argument("--kp", type=float, required=True)
    p.add_argument("--voltage", type=float, required=True, help="ADC voltage at the zero position")
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate_offset)

    p = calsub.add_parser("encoder", help="per-power-cycle encoder offset")
    p.add_argument("--ke", type=float, required=True)
    p.add_argument("--counts", type=float, required=True)
    p.add_argument("--kp", type=float, required=True)
    p.add_argument("--voltage", type=float, required=True)
    p.add_argument("--bp", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate_encoder)

    p = calsub.add_parser("nonlinearity", help="fit a correction lookup table")
    p.add_argument("--pairs", required=True,
                   help="JSON file with [reference, measured] pairs")
    p.add_argument("--interpolation", choices=["linear", "cubic"], default="linear")
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate_nonlinearity)

    p = calsub.add_parser("bp3", help="insertion offset via the RCM reference-point search")
    p.add_argument("--chain")
    p.add_argument("--true-error", type=float, required=True,
                   help="injected insertion offset error [m] (simulation ground truth)")
    p.add_argument("--search-range", type=float, default=0.02)
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--sweep", help="JSON file with (j1, j2) sweep configurations")
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate_bp3)

    p = sub.add_parser("verify", help="check beta_E vs beta_P across configurations")
    p.add_argument("--calibration", required=True, help="calibration JSON with actuators")
    p.add_argument("--truth", help="physical sensor calibration JSON when it differs")
    p.add_argument("--configs", required=True, help="JSON list of per-actuator positions")
    p.add_argument("--threshold", type=float, default=0.08726646259971647,
                   help="trip threshold [rad]; default 5 degrees")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="JSON report path")
    p.add_argument("--csv", help="CSV report path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("offset-analysis",
                       help="constancy of the base realignment under offset errors")
    p.add_argument("--chain")
    p.add_argument("--delta", required=True, help="comma-separated per-joint offsets")
    p.add_argument("--depth", type=int, default=3)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--transforms", action="store_true",
                   help="include sampled transforms in the JSON report")
    p.add_argument("--out")
    p.set_defaults(func=cmd_offset_analysis)

    he = sub.add_parser("handeye", help="AX = XB solving and dataset generation")
    hesub = he.add_subparsers(dest="action", required=True)

    p = hesub.add_parser("solve", help="solve AX = XB from a motion-pair file")
    p.add_argument("--pairs", required=True)
    p.add_argument("--min-axis-angle", type=float, default=0.1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_handeye_solve)

    p = hesub.add_parser("generate", help="generate a synthetic motion-pair dataset")
    p.add_argument("--x", help="JSON 4x4 ground-truth transform (default: random from seed)")
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--rcm", action="store_true", help="pivot motions about a fixed fulcrum")
    p.add_argument("--rot-noise", type=float, default=0.0)
    p.add_argument("--trans-noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_handeye_generate)

    cam = sub.add_parser("camera", help="camera model verification utilities")
    camsub = cam.add_subparsers(dest="check", required=True)

    p = camsub.add_parser("check-lines", help="straight-line distortion check")
    p.add_argument("--camera", required=True)
    p.add_argument("--points", required=True, help="JSON list of collinear 3D points")
    p.add_argument("--tolerance", type=float, default=0.5)
    p.add_argument("--out")
    p.set_defaults(func=cmd_camera_check_lines)

    p = camsub.add_parser("check-rows", help="rectified row-alignment check")
    p.add_argument("--stereo", required=True)
    p.add_argument("--matches", required=True,
                   help="JSON list of [[uL, vL], [uR, vR]] matches")
    p.add_argument("--out")
    p.set_defaults(func=cmd_camera_check_rows)

    p = camsub.add_parser("deinterlace", help="rebuild a frame from one field")
    p.add_argument("--image", required=True, help="input PGM (P5)")
    p.add_argument("--field", choices=["even", "odd"], required=True)
    p.add_argument("--out", required=True, help="output PGM (P5)")
    p.set_defaults(func=cmd_camera_deinterlace)

    p = camsub.add_parser("reproj", help="reprojection error report")
    p.add_argument("--camera", required=True)
    p.add_argument("--correspondences", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_camera_reproj)

    p = sub.add_parser("trajectory-rmse",
                       help="tip RMSE for constant joint-2 offsets along the reference sweep")
    p.add_argument("--chain")
    p.add_argument("--e2", required=True, help="comma-separated offsets in degrees")
    p.add_argument("--per-point", action="store_true")
    p.add_argument("--out", help="CSV output path")
    p.add_argument("--json", help="JSON output path")
    p.set_defaults(func=cmd_trajectory_rmse)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ServiceError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
