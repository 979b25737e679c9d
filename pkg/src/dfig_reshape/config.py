"""Run configuration: TOML/JSON schema, validation and conversion to records.

Inductances in the ``machine`` and ``grid`` sections are per-unit values
(numerically equal to the reactance at the fundamental); they are converted
to the internal p.u.*s representation on load. Unknown keys are rejected.

Schema (all sections optional)::

    [machine]   R_s R_r L_s L_r L_m omega1 S_base V_base ignore_R_s
    [grid]      scr x_over_r V_g R_g L_g
    [control]   Kp_pll Ki_pll Kp_i Ki_i pll_base_p pll_base_i decoupling
    [reshape]   mode I_rdref I_rqref A_inf Q omega_hpf
    [scenario]  P_ref Q_ref rotor_hz t_end dt record_every events=[{t, kind, value}]
    [analysis]  f_min f_max n_points siso_band scan_freqs scan_amp fft_channel fft_window rel_threshold
    [sweep]     axes={name=[...]} rows=[{...}] analysis label
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any, Literal, Optional, Union

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from . import params as P
from .errors import ConfigError, DFIGError
from .reshape import ReshapeConfig, ReshapeMode
from .simulator.scenario import EVENT_KINDS, Event, SimScenario

MAX_SWEEP_POINTS = 10_000


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _default_l(key):
    d = P.DEFAULT_MACHINE_PU
    return {"L_s": d["X_m"] + d["X_ls"], "L_r": d["X_m"] + d["X_lr"], "L_m": d["X_m"]}[key]


class MachineSection(_Section):
    R_s: float = P.DEFAULT_MACHINE_PU["R_s"]
    R_r: float = P.DEFAULT_MACHINE_PU["R_r"]
    L_s: float = Field(default_factory=lambda: _default_l("L_s"))
    L_r: float = Field(default_factory=lambda: _default_l("L_r"))
    L_m: float = Field(default_factory=lambda: _default_l("L_m"))
    omega1: float = P.OMEGA1
    S_base: float = 1.5e6
    V_base: float = 690.0
    ignore_R_s: bool = False

    def build(self) -> P.MachineParams:
        return P.MachineParams(
            R_s=0.0 if self.ignore_R_s else self.R_s,
            R_r=self.R_r,
            L_s=self.L_s / self.omega1,
            L_r=self.L_r / self.omega1,
            L_m=self.L_m / self.omega1,
            omega1=self.omega1,
            S_base=self.S_base,
            V_base=self.V_base,
        )


class GridSection(_Section):
    scr: Optional[float] = None
    x_over_r: float = math.inf
    V_g: float = 1.0
    R_g: Optional[float] = None
    L_g: Optional[float] = None

    @model_validator(mode="after")
    def _consistent(self):
        explicit = self.R_g is not None or self.L_g is not None
        if explicit and (self.R_g is None or self.L_g is None):
            raise ValueError("R_g and L_g must be given together")
        if explicit and self.scr is not None:
            z = math.hypot(self.R_g, self.L_g)
            if z == 0 or abs(self.V_g**2 / z - self.scr) > 1e-9 * self.scr:
                raise ValueError("scr is inconsistent with R_g, L_g and V_g")
        return self

    @property
    def effective_scr(self) -> float:
        if self.R_g is not None:
            z = math.hypot(self.R_g, self.L_g)
            return math.inf if z == 0 else self.V_g**2 / z
        return P.RATED["scr"] if self.scr is None else self.scr

    @property
    def effective_x_over_r(self) -> float:
        if self.R_g is not None:
            return math.inf if self.R_g == 0 else self.L_g / self.R_g
        return self.x_over_r

    def build(self, omega1: float = P.OMEGA1) -> P.GridParams:
        return P.grid_from_scr(self.effective_scr, self.effective_x_over_r, self.V_g, omega1)


class ControlSection(_Section):
    Kp_pll: float = P.DEFAULT_CONTROL["Kp_pll"]
    Ki_pll: float = P.DEFAULT_CONTROL["Ki_pll"]
    Kp_i: float = P.DEFAULT_CONTROL["Kp_i"]
    Ki_i: float = P.DEFAULT_CONTROL["Ki_i"]
    pll_base_p: float = P.DEFAULT_CONTROL["pll_base_p"]
    pll_base_i: float = P.DEFAULT_CONTROL["pll_base_i"]
    decoupling: bool = True

    def build(self) -> P.ControlParams:
        return P.ControlParams(**self.model_dump())


class ReshapeSection(_Section):
    mode: str = "Off"
    I_rdref: Optional[float] = None
    I_rqref: Optional[float] = None
    A_inf: float = 1.0
    Q: float = 1.0
    omega_hpf: float = 2 * math.pi

    @field_validator("mode")
    @classmethod
    def _mode(cls, v):
        return ReshapeMode.parse(v).value

    def build(self) -> ReshapeConfig:
        return ReshapeConfig(**self.model_dump())


class EventSection(_Section):
    t: float
    kind: str
    value: Union[float, str, list]

    @field_validator("kind")
    @classmethod
    def _kind(cls, v):
        if v not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {v!r}; expected one of {EVENT_KINDS}")
        return v

    def build(self) -> Event:
        v = self.value
        if self.kind == "power":
            if not (isinstance(v, list) and len(v) == 2):
                raise ValueError("power events take [P_ref, Q_ref]")
            v = (float(v[0]), float(v[1]))
        elif self.kind == "reshape":
            v = ReshapeMode.parse(v).value
        else:
            v = float(v)
        return Event(self.t, self.kind, v)


class ScenarioSection(_Section):
    P_ref: float = P.RATED["P_ref"]
    Q_ref: float = P.RATED["Q_ref"]
    rotor_hz: float = P.RATED["rotor_hz"]
    t_end: float = 1.0
    dt: float = 20e-6
    record_every: int = 1
    events: list[EventSection] = Field(default_factory=list)


class AnalysisSection(_Section):
    f_min: float = 1.0
    f_max: float = 2000.0
    n_points: int = 400
    siso_band: Optional[tuple[float, float]] = None
    scan_freqs: list[float] = Field(default_factory=lambda: [20.0, 40.0, 80.0, 114.0, 150.0, 300.0, 500.0])
    scan_amp: float = 0.01
    fft_channel: str = "v_sa"
    fft_window: Optional[tuple[float, float]] = None
    rel_threshold: float = 0.01


SWEEP_KEYS = ("Kp_pll", "Ki_pll", "scr", "x_over_r", "P_ref", "Q_ref", "rotor_hz", "mode", "leakage_scale")


class SweepSection(_Section):
    axes: dict[str, list[Any]] = Field(default_factory=dict)
    rows: list[dict[str, Any]] = Field(default_factory=list)
    analysis: Literal["siso", "gnc", "both"] = "siso"
    label: str = "sweep"

    @model_validator(mode="after")
    def _keys(self):
        for key in list(self.axes) + [k for r in self.rows for k in r]:
            if key not in SWEEP_KEYS:
                raise ValueError(f"unknown sweep parameter {key!r}; expected one of {SWEEP_KEYS}")
        if self.size > MAX_SWEEP_POINTS:
            raise ValueError(f"sweep has {self.size} points; limit is {MAX_SWEEP_POINTS}")
        return self

    @property
    def size(self) -> int:
        n = 1
        for v in self.axes.values():
            n *= len(v)
        return n * max(len(self.rows), 1)


class RunConfig(_Section):
    machine: MachineSection = Field(default_factory=MachineSection)
    grid: GridSection = Field(default_factory=GridSection)
    control: ControlSection = Field(default_factory=ControlSection)
    reshape: ReshapeSection = Field(default_factory=ReshapeSection)
    scenario: ScenarioSection = Field(default_factory=ScenarioSection)
    analysis: AnalysisSection = Field(default_factory=AnalysisSection)
    sweep: Optional[SweepSection] = None

    # conversions -------------------------------------------------------
    def machine_params(self) -> P.MachineParams:
        return self.machine.build()

    def grid_params(self) -> P.GridParams:
        return self.grid.build(self.machine.omega1)

    def control_params(self) -> P.ControlParams:
        return self.control.build()

    def reshape_config(self) -> ReshapeConfig:
        return self.reshape.build()

    def operating_point(self) -> P.OperatingPoint:
        s = self.scenario
        return P.solve_operating_point(
            self.machine_params(), self.grid_params(), s.P_ref, s.Q_ref, 2 * math.pi * s.rotor_hz
        )

    def sim_scenario(self) -> SimScenario:
        s = self.scenario
        return SimScenario(
            machine=self.machine_params(),
            control=self.control_params(),
            reshape=self.reshape_config(),
            scr=self.grid.effective_scr,
            x_over_r=self.grid.effective_x_over_r,
            V_g=self.grid.V_g,
            P_ref=s.P_ref,
            Q_ref=s.Q_ref,
            rotor_hz=s.rotor_hz,
            events=tuple(e.build() for e in s.events),
            t_end=s.t_end,
            dt=s.dt,
            record_every=s.record_every,
        )

    def validate_records(self):
        """Build every record once so module invariants surface as config errors."""
        try:
            self.machine_params()
            self.grid_params()
            self.control_params()
            self.reshape_config()
            self.sim_scenario()
        except (DFIGError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        return self


def _format_validation(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"])
        lines.append(f"{loc}: {err['msg']}")
    return "; ".join(lines)


def parse_config(data: dict) -> RunConfig:
    try:
        cfg = RunConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_validation(exc)) from exc
    return cfg.validate_records()


def load_config(path) -> RunConfig:
    """Read a TOML (default) or JSON (``.json``) run configuration."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        data = json.loads(text) if path.suffix.lower() == ".json" else tomllib.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        return parse_config(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
