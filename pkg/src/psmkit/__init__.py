"""Simulation, calibration and analysis toolkit for cable-driven
surgical-manipulator kinematics.

Core subpackages:

- ``transforms``: rigid-transform algebra
- ``kinematics``: modified-DH chains and forward kinematics
- ``sensors``: potentiometer/encoder models, simulation, safety check
- ``calibration``: scale/offset/encoder/nonlinearity/RCM procedures
- ``offset_analysis``: base-realignment transforms and constancy tests
- ``handeye``: AX = XB solver and offset-absorption demonstration
- ``camera``: pinhole model, verification checks, deinterlacing
- ``experiments``: the joint-2 offset trajectory RMSE experiment
- ``service``: FastAPI app exposing the above; the CLI is a thin client
"""

from .transforms import HomogeneousTransform, frobenius_distance
from .kinematics import (
    DhRow,
    KinematicChain,
    bundled_psm_chain,
    dh_transform,
    forward_kinematics,
    load_chain,
)

__version__ = "0.1.0"

__all__ = [
    "HomogeneousTransform",
    "frobenius_distance",
    "DhRow",
    "KinematicChain",
    "bundled_psm_chain",
    "dh_transform",
    "forward_kinematics",
    "load_chain",
    "__version__",
]
