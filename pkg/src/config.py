"""
Scenario configuration — TOML documents with dotted keys, validated into
pydantic models. Unknown keys are rejected; cross-field preconditions of the
numerical modules are checked at load time.

    scenario = "evolve"
    grid.n = 64
    grid.length = 6.283185307179586
    initial.kind = "kelvin"
    initial.amplitude = 0.1
    initial.mode = 1
    solver.dt = 1e-3
    solver.steps = 1000
"""
from __future__ import annotations

import logging
import math
import sys
from typing import Annotated, List, Literal, Optional, Union, get_args

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .evolution import SolverConfig, llia_amplitude_bound
from .filament import FluidParams, KelvinWaveSpec, ZGrid, make_kelvin_wave
from .correspondence import WavepacketSpec, make_wavepacket, stationary_phase_width

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

logger = logging.getLogger(__name__)

ScenarioTag = Literal[
    "evolve",
    "dispersion",
    "validity",
    "observables",
    "propagate",
    "biot-savart-compare",
    "phase-divergence",
]
SCENARIO_TAGS: tuple[str, ...] = get_args(ScenarioTag)


class ConfigError(ValueError):
    """Invalid scenario document (parse error or failed validation)."""


# ---------------------------------------------------------------------------
# Sections
# ---------------------------------------------------------------------------

class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class FluidSection(_Section):
    preset: Optional[Literal["helium4"]] = None
    circulation: Optional[float] = Field(default=None, gt=0)
    density: Optional[float] = Field(default=None, gt=0)
    log_factor: Optional[float] = Field(default=None, gt=0)
    core_radius: Optional[float] = Field(default=None, gt=0)

    def to_params(self) -> FluidParams:
        base = FluidParams.helium4() if self.preset == "helium4" else FluidParams()
        overrides = self.model_dump(exclude={"preset"}, exclude_none=True)
        return base.model_copy(update=overrides)


class GridSection(_Section):
    n: int = Field(default=64, ge=8)
    length: float = Field(default=2.0 * math.pi, gt=0)

    @field_validator("n")
    @classmethod
    def _even(cls, v: int) -> int:
        if v % 2:
            raise ValueError(f"grid.n must be even, got {v}")
        return v

    def to_grid(self) -> ZGrid:
        return ZGrid(n=self.n, length=self.length)


class KelvinInitial(_Section):
    kind: Literal["kelvin"]
    amplitude: float = Field(ge=0)
    mode: int
    phase: float = 0.0

    def to_spec(self) -> KelvinWaveSpec:
        return KelvinWaveSpec(amplitude=self.amplitude, mode=self.mode, phase=self.phase)


class WavepacketInitial(_Section):
    kind: Literal["wavepacket"]
    center: float
    width: float = Field(gt=0)
    carrier_mode: int = 0
    amplitude: float = Field(default=0.1, gt=0)

    def to_spec(self) -> WavepacketSpec:
        return WavepacketSpec(
            center=self.center, width=self.width,
            carrier_mode=self.carrier_mode, amplitude=self.amplitude,
        )


class FileInitial(_Section):
    kind: Literal["file"]
    path: str
    t: float = 0.0


InitialSection = Annotated[
    Union[KelvinInitial, WavepacketInitial, FileInitial],
    Field(discriminator="kind"),
]


class OutputSection(_Section):
    dir: Optional[str] = None
    cadence: int = Field(default=1, ge=1)
    snapshots: Literal["none", "final", "all"] = "none"


class SweepSection(_Section):
    modes: Optional[List[int]] = None
    wavenumbers: Optional[List[float]] = None
    amplitudes: List[float] = Field(default_factory=lambda: [0.0])
    measure: bool = False
    workers: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _one_axis(self) -> "SweepSection":
        if (self.modes is None) == (self.wavenumbers is None):
            raise ValueError("exactly one of sweep.modes or sweep.wavenumbers must be given")
        if self.measure and self.modes is None:
            raise ValueError("sweep.measure needs sweep.modes (grid wavenumbers)")
        if any(a < 0 for a in self.amplitudes):
            raise ValueError("sweep.amplitudes must be >= 0")
        if any(k < 0 for k in self.wavenumbers or []):
            raise ValueError("sweep.wavenumbers must be >= 0")
        return self


class ValiditySection(_Section):
    amplitude: float = Field(gt=0)
    k: float = Field(gt=0)
    t0: float = Field(default=100.0, gt=0)
    amplitudes: List[Annotated[float, Field(gt=0)]] = Field(default_factory=list)


class BiotSavartSection(_Section):
    periods: int = Field(default=1, ge=0)
    workers: Optional[int] = Field(default=None, ge=1)


class PropagateSection(_Section):
    dt: float
    slices: int = Field(default=1, ge=1)
    steps: int = Field(default=1, ge=1)


# ---------------------------------------------------------------------------
# Scenario document
# ---------------------------------------------------------------------------

_NEEDS_KELVIN = {"biot-savart-compare", "phase-divergence"}
_NEEDS_INITIAL = {"evolve", "observables", "propagate"} | _NEEDS_KELVIN
_NEEDS_SOLVER = {"evolve", "phase-divergence"}


class ScenarioConfig(_Section):
    scenario: ScenarioTag
    fluid: FluidSection = Field(default_factory=FluidSection)
    grid: GridSection = Field(default_factory=GridSection)
    initial: Optional[InitialSection] = None
    solver: Optional[SolverConfig] = None
    output: OutputSection = Field(default_factory=OutputSection)
    sweep: Optional[SweepSection] = None
    validity: Optional[ValiditySection] = None
    biot_savart: BiotSavartSection = Field(default_factory=BiotSavartSection)
    propagate: Optional[PropagateSection] = None

    @model_validator(mode="after")
    def _check_preconditions(self) -> "ScenarioConfig":
        tag = self.scenario
        grid = self.grid.to_grid()
        params = self.fluid.to_params()

        if tag in _NEEDS_INITIAL and self.initial is None:
            raise ValueError(f"scenario '{tag}' needs an [initial] section")
        if tag in _NEEDS_KELVIN and not isinstance(self.initial, KelvinInitial):
            raise ValueError(f"scenario '{tag}' needs initial.kind = \"kelvin\"")
        if tag in _NEEDS_SOLVER and self.solver is None:
            raise ValueError(f"scenario '{tag}' needs a [solver] section")
        if tag == "dispersion":
            if self.sweep is None:
                raise ValueError("scenario 'dispersion' needs a [sweep] section")
            if self.sweep.measure and self.solver is None:
                raise ValueError("sweep.measure needs a [solver] section")
            for m in self.sweep.modes or []:
                if abs(m) > grid.max_resolved_mode:
                    raise ValueError(f"sweep.modes entry {m} is not resolvable on {grid.n} points")
        if tag == "validity":
            if self.validity is None:
                raise ValueError("scenario 'validity' needs a [validity] section")
            llia_amplitude_bound(self.validity.k, self.validity.t0, params)
        if tag == "propagate":
            if self.propagate is None:
                raise ValueError("scenario 'propagate' needs a [propagate] section")
            if isinstance(self.initial, FileInitial):
                raise ValueError("scenario 'propagate' needs a kelvin or wavepacket initial state")
            if isinstance(self.initial, KelvinInitial) and self.initial.amplitude == 0:
                raise ValueError("scenario 'propagate' needs V > 0; a zero-amplitude Kelvin wave is the straight line")
            _check_propagator_resolution(self.propagate, params, grid)

        if isinstance(self.initial, KelvinInitial):
            make_kelvin_wave(self.initial.to_spec(), grid)
        elif isinstance(self.initial, WavepacketInitial):
            make_wavepacket(self.initial.to_spec(), grid)
        return self


def _check_propagator_resolution(section: PropagateSection, params: FluidParams, grid: ZGrid) -> None:
    # ħ_eff/m_eff = Γ ln ε / 2π does not depend on V
    tau = section.dt / section.slices
    if tau == 0:
        raise ValueError("propagate.dt must be non-zero")
    ratio = params.circulation * params.log_factor / (2.0 * math.pi)
    width = stationary_phase_width(tau, ratio, 1.0)
    if width < 2.0 * grid.spacing or width > grid.length / 2.0:
        raise ValueError(
            f"propagate.dt / propagate.slices = {tau!r} is not resolved: "
            f"stationary-phase width {width!r} must lie in "
            f"[{2.0 * grid.spacing!r}, {grid.length / 2.0!r}]"
        )


# ---------------------------------------------------------------------------
# Loader
# ---------------------------------------------------------------------------

def _format_validation_error(exc: ValidationError) -> str:
    parts = []
    for err in exc.errors():
        loc = ".".join(str(p) for p in err["loc"]) or "<document>"
        parts.append(f"{loc}: {err['msg']}")
    return "; ".join(parts)


def load_config(text: str, scenario: Optional[str] = None) -> ScenarioConfig:
    """Parse and validate a scenario document.

    ``scenario`` (e.g. the CLI subcommand) fills in a missing ``scenario`` key
    and must agree with it when both are present.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    if scenario is not None:
        declared = data.get("scenario")
        if declared is not None and declared != scenario:
            raise ConfigError(
                f"scenario: document declares '{declared}' but '{scenario}' was requested"
            )
        data["scenario"] = scenario

    try:
        config = ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(f"invalid config: {_format_validation_error(exc)}") from exc
    logger.info("Loaded '%s' config (N=%d, L=%g)", config.scenario, config.grid.n, config.grid.length)
    return config
