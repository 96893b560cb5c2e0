"""Scenario files: YAML validated by pydantic models.

Γ₀-relative inputs (rates, times, resonance and spectral widths) are scaled with the
free-space rate of the reference atom. All other inputs use the units block.
"""

import json
import logging
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pydantic as pd
import yaml

from .coupling import Atom, AtomConfig
from .errors import ConfigError
from .green import BulkGreen, GreenSource, ResonatorGreen, TabulatedGreen, VacuumGreen
from .permittivity import ConstantPermittivity, DrudeLorentz, Oscillator
from .tables import GreenTable
from .units import DEBYE, EV_TO_RAD_S, NM, gamma0

logger = logging.getLogger(__name__)

ANALYSES = (
    "coupling",
    "dynamics-weak",
    "dynamics-strong",
    "volterra",
    "rates",
    "spectrum-weak",
    "spectrum-strong",
    "spectrum-finite-T",
)

FREQUENCY_UNITS = {"rad/s": 1.0, "eV": EV_TO_RAD_S}
LENGTH_UNITS = {"m": 1.0, "nm": NM}
DIPOLE_UNITS = {"C*m": 1.0, "debye": DEBYE}

Vector = Tuple[float, float, float]
ComplexPair = Tuple[float, float]


class SpecModel(pd.BaseModel):
    model_config = pd.ConfigDict(extra="forbid", frozen=True)


class Units(SpecModel):
    frequency: str = pd.Field("rad/s", description="rad/s or eV")
    length: str = pd.Field("m", description="m or nm")
    dipole: str = pd.Field("C*m", description="C*m or debye")

    @pd.field_validator("frequency")
    @classmethod
    def _frequency(cls, value):
        if value not in FREQUENCY_UNITS:
            raise ValueError(f"unit mismatch: frequency unit must be one of {list(FREQUENCY_UNITS)}")
        return value

    @pd.field_validator("length")
    @classmethod
    def _length(cls, value):
        if value not in LENGTH_UNITS:
            raise ValueError(f"unit mismatch: length unit must be one of {list(LENGTH_UNITS)}")
        return value

    @pd.field_validator("dipole")
    @classmethod
    def _dipole(cls, value):
        if value not in DIPOLE_UNITS:
            raise ValueError(f"unit mismatch: dipole unit must be one of {list(DIPOLE_UNITS)}")
        return value


class OscillatorSpec(SpecModel):
    plasma: float = pd.Field(..., ge=0, description="plasma frequency (frequency unit)")
    resonance: float = pd.Field(0.0, ge=0, description="transverse resonance, 0 for a Drude term")
    damping: float = pd.Field(0.0, ge=0)


class ResonatorSpec(SpecModel):
    resonance: float = pd.Field(..., gt=0, description="ω₀ (frequency unit)")
    damping: float = pd.Field(..., gt=0, description="γ (frequency unit), half width γ/2")
    couplings: Dict[str, List[List[float]]] = pd.Field(
        ..., description="mode coupling tensors in 1/m³, keys 'A-A', 'A-B', ..."
    )
    free_space: bool = False


class MediumSpec(SpecModel):
    kind: Literal["vacuum", "constant", "drude_lorentz", "tabulated", "resonator"] = "vacuum"
    epsilon: Optional[ComplexPair] = pd.Field(None, description="(real, imag) for kind 'constant'")
    oscillators: List[OscillatorSpec] = pd.Field(default_factory=list)
    tables: Dict[str, str] = pd.Field(default_factory=dict, description="pair 'A-B' -> table file")
    interpolation_order: Literal[1, 3] = 3
    resonator: Optional[ResonatorSpec] = None

    @pd.model_validator(mode="after")
    def _required_per_kind(self):
        if self.kind == "constant" and self.epsilon is None:
            raise ValueError("kind 'constant' needs epsilon")
        if self.kind == "drude_lorentz" and not self.oscillators:
            raise ValueError("kind 'drude_lorentz' needs at least one oscillator")
        if self.kind == "tabulated" and not self.tables:
            raise ValueError("kind 'tabulated' needs tables")
        if self.kind == "resonator" and self.resonator is None:
            raise ValueError("kind 'resonator' needs a resonator block")
        for key in list(self.tables) + list(self.resonator.couplings if self.resonator else []):
            if len(key.split("-")) != 2:
                raise ValueError(f"pair key {key!r} must look like 'A-B'")
        return self


class ReferenceSpec(SpecModel):
    omega: float = pd.Field(..., gt=0, description="transition frequency of the reference atom")
    dipole: float = pd.Field(..., gt=0, description="dipole modulus of the reference atom")


class AtomSpec(SpecModel):
    label: str
    position: Vector
    dipole: Vector
    dipole_imag: Vector = (0.0, 0.0, 0.0)
    frequency: float = pd.Field(..., gt=0)
    shifted_frequency: Optional[float] = pd.Field(None, gt=0)


class OverrideSpec(SpecModel):
    """Coupling coefficients in units of Γ₀."""

    gamma_aa: float = pd.Field(..., ge=0)
    gamma_bb: float = pd.Field(..., ge=0)
    gamma_ab: float
    delta_ab: float
    delta_ba: Optional[float] = None
    omega_a: Optional[float] = pd.Field(None, gt=0, description="ω̃_A, default the reference frequency")
    omega_b: Optional[float] = pd.Field(None, gt=0)


class AtomsSpec(SpecModel):
    reference: Optional[ReferenceSpec] = None
    geometry: Optional[List[AtomSpec]] = None
    overrides: Optional[OverrideSpec] = None
    single_atom_shift: bool = pd.Field(True, description="apply the reflection shift to ω̃")

    @pd.model_validator(mode="after")
    def _one_mode(self):
        if (self.geometry is None) == (self.overrides is None):
            raise ValueError("give exactly one of 'geometry' or 'overrides'")
        if self.overrides is not None and self.reference is None:
            raise ValueError("'overrides' need a 'reference' atom for the rate unit")
        if self.geometry is not None:
            if len(self.geometry) != 2:
                raise ValueError("geometry needs exactly two atoms")
            labels = [atom.label for atom in self.geometry]
            if len(set(labels)) != 2:
                raise ValueError("atom labels must be unique")
        return self


class TimeSpec(SpecModel):
    t_max: float = pd.Field(10.0, gt=0, description="end time in units of 1/Γ₀")
    steps: int = pd.Field(2001, ge=2)


class PVSpec(SpecModel):
    compute: bool = pd.Field(False, description="add principal-value components to the coupling output")
    window: Optional[float] = pd.Field(None, gt=0, description="PV exclusion half width (frequency unit)")
    split_linewidths: float = pd.Field(10.0, gt=0)
    band: Optional[Tuple[float, float]] = None
    quantum_correction: bool = False


class ResonanceSpec(SpecModel):
    linewidth: float = pd.Field(..., gt=0, description="Δω_m in units of Γ₀")
    detuning: float = pd.Field(
        0.0, description="ω_m minus the exact resonance ω̃_A ∓ δ_AB of the branch, units of Γ₀")
    branch: Literal["+", "-"] = "+"


class SpectrumSpec(SpecModel):
    points: int = pd.Field(2001, ge=3)
    span: Optional[float] = pd.Field(None, gt=0, description="half span in units of Γ₀")
    observation: Optional[Vector] = None
    f_a: ComplexPair = (1.0, 0.0)
    f_b: ComplexPair = (0.0, 0.0)
    w_a: ComplexPair = (1.0, 0.0)
    w_b: ComplexPair = (1.0, 0.0)
    duration: Optional[float] = pd.Field(None, gt=0, description="detector time T in units of 1/Γ₀")
    time_steps: int = pd.Field(4001, ge=2)


class VolterraSpec(SpecModel):
    kernel: Literal["markovian", "lorentzian", "tabulated"] = "markovian"
    kernel_points: int = pd.Field(4001, ge=3)


class NumericsSpec(SpecModel):
    time: TimeSpec = TimeSpec()
    pv: PVSpec = PVSpec()
    resonance: Optional[ResonanceSpec] = None
    spectrum: SpectrumSpec = SpectrumSpec()
    volterra: VolterraSpec = VolterraSpec()
    rate_window: int = pd.Field(5, ge=5)
    memory_cap_mb: float = pd.Field(512.0, gt=0)


class OutputSpec(SpecModel):
    directory: str = "output"
    format: Literal["csv", "json"] = "csv"


class Scenario(SpecModel):
    """A complete run description."""

    units: Units = Units()
    medium: MediumSpec = MediumSpec()
    atoms: AtomsSpec
    analysis: List[str] = pd.Field(..., min_length=1)
    numerics: NumericsSpec = NumericsSpec()
    output: OutputSpec = OutputSpec()

    _base_dir: Path = pd.PrivateAttr(default_factory=Path.cwd)

    @pd.field_validator("analysis")
    @classmethod
    def _known_analyses(cls, value):
        unknown = [name for name in value if name not in ANALYSES]
        if unknown:
            raise ValueError(f"unknown analysis {unknown}, choose from {list(ANALYSES)}")
        if len(set(value)) != len(value):
            raise ValueError("analyses must not repeat")
        return value

    @pd.model_validator(mode="after")
    def _analysis_requirements(self):
        strong = {"dynamics-strong", "spectrum-strong"}
        if strong & set(self.analysis) and self.numerics.resonance is None and self.medium.kind != "resonator":
            raise ValueError("strong-coupling analyses need numerics.resonance or a resonator medium")
        if self.numerics.volterra.kernel == "lorentzian" and "volterra" in self.analysis:
            if self.numerics.resonance is None and self.medium.kind != "resonator":
                raise ValueError("the lorentzian kernel needs numerics.resonance or a resonator medium")
        if self.numerics.volterra.kernel == "tabulated" and "volterra" in self.analysis:
            if self.atoms.geometry is None:
                raise ValueError("the tabulated kernel needs atoms.geometry")
        return self

    @property
    def base_dir(self) -> Path:
        return self._base_dir

    # unit scales
    @property
    def frequency_scale(self) -> float:
        return FREQUENCY_UNITS[self.units.frequency]

    @property
    def length_scale(self) -> float:
        return LENGTH_UNITS[self.units.length]

    @property
    def dipole_scale(self) -> float:
        return DIPOLE_UNITS[self.units.dipole]

    def reference_rate(self) -> float:
        """Γ₀ of the reference atom (atom A when no reference is given), 1/s."""
        reference = self.atoms.reference
        if reference is not None:
            return gamma0(reference.omega * self.frequency_scale, reference.dipole * self.dipole_scale)
        atom = self.atoms.geometry[0]
        dipole = (np.asarray(atom.dipole) + 1j * np.asarray(atom.dipole_imag)) * self.dipole_scale
        return gamma0(atom.frequency * self.frequency_scale, dipole)

    def reference_frequency(self) -> float:
        if self.atoms.reference is not None:
            return self.atoms.reference.omega * self.frequency_scale
        return self.atoms.geometry[0].frequency * self.frequency_scale

    def time_grid(self) -> np.ndarray:
        return np.linspace(0.0, self.numerics.time.t_max / self.reference_rate(), self.numerics.time.steps)

    def build_atoms(self) -> AtomConfig:
        if self.atoms.geometry is None:
            raise ConfigError("atoms.geometry: required for Green-tensor analyses")
        f, length, dipole = self.frequency_scale, self.length_scale, self.dipole_scale
        atoms = []
        for spec in self.atoms.geometry:
            vector = (np.asarray(spec.dipole) + 1j * np.asarray(spec.dipole_imag)) * dipole
            shifted = None if spec.shifted_frequency is None else spec.shifted_frequency * f
            atoms.append(Atom(spec.label, np.asarray(spec.position) * length, vector, spec.frequency * f, shifted))
        return AtomConfig(atoms)

    def build_source(self) -> GreenSource:
        medium = self.medium
        f = self.frequency_scale
        if medium.kind == "vacuum":
            return VacuumGreen()
        if medium.kind == "constant":
            return BulkGreen(ConstantPermittivity(*medium.epsilon))
        if medium.kind == "drude_lorentz":
            oscillators = tuple(Oscillator(o.plasma * f, o.resonance * f, o.damping * f) for o in medium.oscillators)
            return BulkGreen(DrudeLorentz(oscillators))
        if medium.kind == "tabulated":
            tables = {}
            for key, name in medium.tables.items():
                a, b = key.split("-")
                tables[(a, b)] = GreenTable.read_csv(self.base_dir / name, order=medium.interpolation_order)
            return TabulatedGreen(tables)
        spec = medium.resonator
        couplings = {tuple(key.split("-")): np.asarray(value, dtype=float) for key, value in spec.couplings.items()}
        return ResonatorGreen(spec.resonance * f, spec.damping * f, couplings, free_space=spec.free_space)


def _format_errors(error: pd.ValidationError) -> str:
    lines = []
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"{location}: {item['msg']}")
    return "; ".join(lines)


def parse_scenario(data: dict, base_dir: Union[str, Path, None] = None) -> Scenario:
    """Validate a scenario mapping; relative table paths resolve against `base_dir`."""
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a mapping")
    try:
        scenario = Scenario.model_validate(data)
    except pd.ValidationError as error:
        raise ConfigError(_format_errors(error)) from error
    scenario._base_dir = Path(base_dir) if base_dir is not None else Path.cwd()
    for key, name in scenario.medium.tables.items():
        path = scenario.base_dir / name
        if not path.is_file():
            raise ConfigError(f"medium.tables.{key}: file {path} not found")
    return scenario


def load_scenario(path: Union[str, Path]) -> Scenario:
    """Read and validate a YAML scenario file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"scenario file {path} not found")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as error:
        raise ConfigError(f"{path}: invalid YAML: {error}") from error
    scenario = parse_scenario(data, base_dir=path.resolve().parent)
    logger.info("loaded scenario %s with analyses %s", path, scenario.analysis)
    return scenario


def schema_json() -> str:
    """JSON schema of the scenario format."""
    return json.dumps(Scenario.model_json_schema(), indent=2, sort_keys=True)
