"""Small-signal impedance modelling, PLL-coupling reshaping and stability
assessment of a grid-connected doubly fed induction generator."""

__version__ = "0.1.0"

from .errors import DFIGError
from .impedance import AdmittanceBlocks, build_admittance_dq, build_admittance_sequence
from .params import (
    ControlParams,
    GridParams,
    MachineParams,
    OperatingPoint,
    default_control,
    default_machine,
    grid_from_scr,
    solve_operating_point,
)
from .reshape import ReshapeConfig, ReshapeMode
from .stability import gnc_report, siso_report

__all__ = [
    "AdmittanceBlocks", "ControlParams", "DFIGError", "GridParams", "MachineParams", "OperatingPoint",
    "ReshapeConfig", "ReshapeMode", "build_admittance_dq", "build_admittance_sequence", "default_control",
    "default_machine", "gnc_report", "grid_from_scr", "siso_report", "solve_operating_point",
]
