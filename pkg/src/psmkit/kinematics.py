"""Modified-DH forward kinematics for configurable serial chains.

A chain is described by ordered rows in the modified (proximal) DH
convention: the transform for link n is built from alpha_{n-1}, a_{n-1},
d_n and theta_n.  Revolute rows add the joint value to theta_offset,
prismatic rows add it to the constant d.  Joint vectors are plain float
sequences, radians for revolute joints and meters for prismatic ones.

The bundled description ``data/psm.json`` models a 7-actuator patient-side
manipulator with a Large Needle Driver.  Only the first three rows are
vendor geometry; the wrist rows and tool constants are community-published
values shipped as configuration.
"""

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .transforms import HomogeneousTransform

REVOLUTE = "revolute"
PRISMATIC = "prismatic"

DEFAULT_REVOLUTE_LIMITS = (-math.pi, math.pi)
DEFAULT_PRISMATIC_LIMITS = (0.0, 0.24)


class ChainDescriptionError(ValueError):
    """Malformed robot-description document."""


class JointLimitError(ValueError):
    """A joint value violates its configured limits."""

    def __init__(self, joint, value, limits):
        self.joint = joint
        self.value = value
        self.limits = limits
        super().__init__(
            f"joint {joint} value {value:.6g} outside limits [{limits[0]:.6g}, {limits[1]:.6g}]"
        )


@dataclass(frozen=True)
class DhRow:
    """One modified-DH row; ``joint`` is None for a fixed row."""

    alpha_prev: float
    a_prev: float
    d: float
    theta_offset: float
    kind: str = REVOLUTE
    joint: int | None = None

    def __post_init__(self):
        if self.kind not in (REVOLUTE, PRISMATIC):
            raise ChainDescriptionError(f"kind must be '{REVOLUTE}' or '{PRISMATIC}', got {self.kind!r}")


def dh_transform(row, q=0.0):
    """Homogeneous transform of one DH row evaluated at joint value q."""
    if not np.isfinite(q):
        raise ValueError("joint value must be finite")
    if row.kind == REVOLUTE:
        theta = q + row.theta_offset
        d = row.d
    else:
        theta = row.theta_offset
        d = q + row.d
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(row.alpha_prev), math.sin(row.alpha_prev)
    rotation = np.array([
        [ct, -st, 0.0],
        [st * ca, ct * ca, -sa],
        [st * sa, ct * sa, ca],
    ])
    translation = np.array([row.a_prev, -d * sa, d * ca])
    # orthonormal by construction; composition re-checks downstream
    return HomogeneousTransform._trusted(rotation, translation)


@dataclass(frozen=True)
class KinematicChain:
    name: str
    rows: tuple
    joint_limits: tuple
    tool_constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.rows:
            raise ChainDescriptionError("rows must be non-empty")
        indices = [r.joint for r in self.rows if r.joint is not None]
        if len(set(indices)) != len(indices):
            dup = sorted(i for i in set(indices) if indices.count(i) > 1)
            raise ChainDescriptionError(f"duplicate joint index {dup[0]}")
        if sorted(indices) != list(range(len(indices))):
            raise ChainDescriptionError(
                f"joint indices must form a contiguous 0-based range, got {sorted(indices)}"
            )
        if len(self.joint_limits) != len(indices):
            raise ChainDescriptionError(
                f"expected {len(indices)} joint limit pairs, got {len(self.joint_limits)}"
            )
        for j, (lo, hi) in enumerate(self.joint_limits):
            if not lo < hi:
                raise ChainDescriptionError(f"limits for joint {j} must satisfy min < max")

    @property
    def joint_count(self):
        return sum(1 for r in self.rows if r.joint is not None)

    def tip_offset(self):
        """Fixed translation from the last row's frame to the tool control point."""
        return np.array([
            self.tool_constants.get("tip_offset_x", 0.0),
            self.tool_constants.get("tip_offset_y", 0.0),
            self.tool_constants.get("tip_offset_z", 0.0),
        ])

    def check_limits(self, q):
        q = np.asarray(q, dtype=float)
        if q.shape != (self.joint_count,):
            raise ValueError(f"expected {self.joint_count} joint values, got shape {q.shape}")
        for j, (lo, hi) in enumerate(self.joint_limits):
            if not (lo <= q[j] <= hi):
                raise JointLimitError(j, float(q[j]), (lo, hi))
        return q


@dataclass(frozen=True)
class FkResult:
    """Tip pose plus the cumulative frame after every row."""

    tip: HomogeneousTransform
    frames: tuple


def forward_kinematics(chain, q, check_limits=True):
    """Cumulative frame products over the chain rows and the tool tip pose.

    ``frames[k]`` is the base-to-frame transform after row k; the tip composes
    the last frame with the tool-constant tip offset.  With check_limits a
    joint outside its limits raises JointLimitError instead of clamping.
    """
    q = np.asarray(q, dtype=float)
    if q.shape != (chain.joint_count,):
        raise ValueError(f"expected {chain.joint_count} joint values, got shape {q.shape}")
    if check_limits:
        chain.check_limits(q)
    frames = []
    current = HomogeneousTransform.identity()
    for row in chain.rows:
        value = q[row.joint] if row.joint is not None else 0.0
        current = current @ dh_transform(row, value)
        frames.append(current)
    tip = current @ HomogeneousTransform.from_translation(chain.tip_offset())
    return FkResult(tip=tip, frames=tuple(frames))


def tip_positions(chain, qs, check_limits=True):
    """Vectorized tool-tip positions for an (N, dof) array of joint vectors."""
    qs = np.atleast_2d(np.asarray(qs, dtype=float))
    if qs.shape[1] != chain.joint_count:
        raise ValueError(f"expected {chain.joint_count} columns, got {qs.shape[1]}")
    if check_limits:
        lows = np.array([lo for lo, _ in chain.joint_limits])
        highs = np.array([hi for _, hi in chain.joint_limits])
        bad = np.where((qs < lows) | (qs > highs))
        if bad[0].size:
            i, j = int(bad[0][0]), int(bad[1][0])
            raise JointLimitError(j, float(qs[i, j]), tuple(chain.joint_limits[j]))
    n = qs.shape[0]
    total = np.broadcast_to(np.eye(4), (n, 4, 4)).copy()
    for row in chain.rows:
        values = qs[:, row.joint] if row.joint is not None else np.zeros(n)
        if row.kind == REVOLUTE:
            theta = values + row.theta_offset
            d = np.full(n, row.d)
        else:
            theta = np.full(n, row.theta_offset)
            d = values + row.d
        ct, st = np.cos(theta), np.sin(theta)
        ca, sa = math.cos(row.alpha_prev), math.sin(row.alpha_prev)
        t = np.zeros((n, 4, 4))
        t[:, 0, 0] = ct
        t[:, 0, 1] = -st
        t[:, 0, 3] = row.a_prev
        t[:, 1, 0] = st * ca
        t[:, 1, 1] = ct * ca
        t[:, 1, 2] = -sa
        t[:, 1, 3] = -d * sa
        t[:, 2, 0] = st * sa
        t[:, 2, 1] = ct * sa
        t[:, 2, 2] = ca
        t[:, 2, 3] = d * ca
        t[:, 3, 3] = 1.0
        total = total @ t
    tip = np.append(chain.tip_offset(), 1.0)
    return (total @ tip)[:, :3]


# -- description files -----------------------------------------------------

def _require(mapping, key, context):
    if key not in mapping:
        raise ChainDescriptionError(f"missing field '{key}' in {context}")
    return mapping[key]


def chain_from_dict(doc):
    """Build a chain from a parsed robot-description document."""
    if not isinstance(doc, dict):
        raise ChainDescriptionError("description must be a JSON object")
    name = _require(doc, "name", "description")
    raw_rows = _require(doc, "rows", "description")
    if not isinstance(raw_rows, list) or not raw_rows:
        raise ChainDescriptionError("field 'rows' must be a non-empty list")
    rows = []
    for i, r in enumerate(raw_rows):
        ctx = f"rows[{i}]"
        joint = r.get("joint")
        if joint is not None and (not isinstance(joint, int) or joint < 0):
            raise ChainDescriptionError(f"field 'joint' in {ctx} must be a non-negative integer or null")
        rows.append(DhRow(
            alpha_prev=float(_require(r, "alpha_prev", ctx)),
            a_prev=float(_require(r, "a_prev", ctx)),
            d=float(_require(r, "d", ctx)),
            theta_offset=float(_require(r, "theta_offset", ctx)),
            kind=_require(r, "kind", ctx),
            joint=joint,
        ))
    jointed = sorted((r for r in rows if r.joint is not None), key=lambda r: r.joint)
    raw_limits = doc.get("limits") or []
    limits = []
    for k, row in enumerate(jointed):
        if k < len(raw_limits) and raw_limits[k] is not None:
            pair = raw_limits[k]
            if len(pair) != 2:
                raise ChainDescriptionError(f"limits[{k}] must be a [min, max] pair")
            limits.append((float(pair[0]), float(pair[1])))
        else:
            limits.append(DEFAULT_REVOLUTE_LIMITS if row.kind == REVOLUTE else DEFAULT_PRISMATIC_LIMITS)
    tool_constants = doc.get("tool_constants") or {}
    if not isinstance(tool_constants, dict):
        raise ChainDescriptionError("field 'tool_constants' must be an object")
    return KinematicChain(
        name=str(name),
        rows=tuple(rows),
        joint_limits=tuple(limits),
        tool_constants={str(k): float(v) for k, v in tool_constants.items()},
    )


def chain_to_dict(chain):
    return {
        "name": chain.name,
        "rows": [
            {
                "alpha_prev": r.alpha_prev,
                "a_prev": r.a_prev,
                "d": r.d,
                "theta_offset": r.theta_offset,
                "kind": r.kind,
                "joint": r.joint,
            }
            for r in chain.rows
        ],
        "limits": [list(pair) for pair in chain.joint_limits],
        "tool_constants": dict(chain.tool_constants),
    }


def load_chain(source):
    """Load a chain from a path, JSON string, or already-parsed dict."""
    if isinstance(source, dict):
        return chain_from_dict(source)
    try:
        is_file = Path(source).exists()
    except (OSError, ValueError):
        is_file = False
    text = Path(source).read_text() if is_file else str(source)
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ChainDescriptionError(f"invalid JSON in description: {e}") from e
    return chain_from_dict(doc)


def bundled_psm_chain():
    """The packaged 7-joint PSM description with Large Needle Driver constants."""
    text = resources.files("psmkit").joinpath("data/psm.json").read_text()
    return load_chain(json.loads(text))
