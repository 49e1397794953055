"""
Pydantic models for datasets, run configuration and persisted results.
"""

from enum import Enum
from pathlib import Path
from typing import Optional

from pydantic import BaseModel, Field, field_validator, model_validator


class Handedness(str, Enum):
    """Enantiomer label of a potential surface."""
    LEFT = "L"
    RIGHT = "R"


class ChiralityMode(str, Enum):
    """Which part of the r^-7 interaction differs between L and R."""
    FULL = "full"
    PSEUDOSCALAR = "pseudoscalar"


class InitialStates(str, Enum):
    """Which rotor levels the scattering starts from."""
    GROUND = "ground"
    THERMAL = "thermal"


class CriticalTerms(str, Enum):
    """Terms of the high-energy expansion used for the critical pressure."""
    LEADING = "leading"
    TWO_TERM = "two-term"


class OnsetRate(str, Enum):
    """Which tunneling rate the decoherence rate is compared with at the critical pressure."""
    ANGULAR = "angular"
    CYCLIC = "cyclic"


class Atom(BaseModel):
    """An atom of the molecule dataset."""

    symbol: str = Field(..., description="Element symbol, used to look up bond increments")
    mass: float = Field(..., gt=0, description="Isotopic mass in amu")
    position: list[float] = Field(..., min_length=3, max_length=3, description="Cartesian position in angstrom")


class MoleculeDataset(BaseModel):
    """Molecule geometry file (`d2s2.toml` layout)."""

    name: str = Field(..., description="Molecule name")
    provenance: str = Field("", description="Where the geometry and masses come from")
    atoms: list[Atom] = Field(..., min_length=1)
    bonds: list[tuple[int, int]] = Field(default_factory=list, description="Zero-based atom index pairs")

    @model_validator(mode="after")
    def check_bonds(self):
        for a, b in self.bonds:
            if not (0 <= a < len(self.atoms) and 0 <= b < len(self.atoms)) or a == b:
                raise ValueError(f"bond ({a}, {b}) does not reference two distinct atoms")
        return self

    class Config:
        json_schema_extra = {
            "example": {
                "name": "HeH",
                "provenance": "illustration",
                "atoms": [
                    {"symbol": "He", "mass": 4.0026, "position": [0.0, 0.0, 0.0]},
                    {"symbol": "H", "mass": 1.0078, "position": [0.0, 0.0, 0.77]},
                ],
                "bonds": [[0, 1]],
            }
        }


class Lorentzian(BaseModel):
    """One term strength * frequency^2 / (frequency^2 + w^2) of a polarizability."""

    strength: float = Field(..., ge=0, description="Static contribution in a.u.")
    frequency: float = Field(..., gt=0, description="Characteristic frequency in a.u.")


class GasDataset(BaseModel):
    """Gas atom file (`helium.toml` layout)."""

    name: str
    mass: float = Field(..., gt=0, description="Mass in amu")
    provenance: str = ""
    lorentzians: list[Lorentzian] = Field(default_factory=list)


class BondIncrement(BaseModel):
    """Static susceptibility increment of one element."""

    alpha_iso: float = Field(..., ge=0, description="Isotropic static polarizability in a.u.")
    bond_anisotropy: float = Field(0.0, description="Anisotropy added along every bond in a.u.")
    drude_frequency: float = Field(..., gt=0, description="Drude frequency in a.u.")
    dipole_quadrupole: float = Field(0.0, description="Bond-axial intrinsic A tensor strength in a.u.")


class BondIncrementTable(BaseModel):
    """Bond-increment table (`increments.toml` layout)."""

    provenance: str = ""
    convention: str = ""
    elements: dict[str, BondIncrement]


class TruncationConfig(BaseModel):
    """Closed-channel retention policy."""

    closed_window: float = Field(2.0, ge=0, description="Closed channels kept up to E + closed_window * E")
    closed_floor_kelvin: float = Field(25.0, ge=0, description="Minimum closed window in kelvin")
    j_extra: int = Field(2, ge=0, description="j_max = highest open j + j_extra")
    j_min: int = Field(3, ge=0, description="Lower bound on j_max")


class RadialConfig(BaseModel):
    r_core: float = Field(4.0, gt=0, description="Hard inner wall in bohr")
    r_match: float = Field(60.0, gt=0, description="Matching radius in bohr")
    step: float = Field(0.02, gt=0, description="Propagation step in bohr")
    verify_step: bool = Field(False, description="Repeat every propagation at half step and compare")

    @model_validator(mode="after")
    def check_order(self):
        if self.r_match <= self.r_core:
            raise ValueError("r_match must exceed r_core")
        return self


class PartialWaveConfig(BaseModel):
    j_total_max: int = Field(150, ge=0)
    min_j_total: int = Field(6, ge=0)
    tail_tolerance: float = Field(0.005, gt=0, description="Relative size of the last partial waves")


class ScatteringConfig(BaseModel):
    chiral: bool = Field(True, description="Include the chirality-dependent r^-7 term")
    chirality: ChiralityMode = ChiralityMode.PSEUDOSCALAR
    initial_states: InitialStates = InitialStates.GROUND
    dump_smatrix: bool = False

    class Config:
        use_enum_values = True


class RatesConfig(BaseModel):
    temperatures_kelvin: list[float] = Field(default_factory=lambda: [100.0, 200.0, 300.0, 400.0, 500.0, 600.0])
    pressures_mbar: list[float] = Field(default_factory=lambda: [1e-5])
    tunneling_hz: float = Field(176.0, ge=0, description="omega_z / 2 pi")
    beta_bohr: Optional[float] = Field(None, gt=0, description="Overrides the dataset coupling parameter")
    critical_terms: CriticalTerms = CriticalTerms.LEADING
    onset_rate: OnsetRate = Field(OnsetRate.ANGULAR, description="Critical pressure at gamma = omega_z "
                                  "(angular) or gamma = omega_z / 2 pi (cyclic)")

    class Config:
        use_enum_values = True


class RunConfig(BaseModel):
    """
    Complete run configuration, loaded from a TOML file.

    Relative dataset paths are resolved against the config file's directory.
    """

    molecule: Path = Field(Path("data/d2s2.toml"))
    gas: Path = Field(Path("data/helium.toml"))
    increments: Path = Field(Path("data/increments.toml"))
    energies_kelvin: list[float] = Field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0])
    truncation: TruncationConfig = Field(default_factory=TruncationConfig)
    radial: RadialConfig = Field(default_factory=RadialConfig)
    partial_waves: PartialWaveConfig = Field(default_factory=PartialWaveConfig)
    scattering: ScatteringConfig = Field(default_factory=ScatteringConfig)
    rates: RatesConfig = Field(default_factory=RatesConfig)
    out: Path = Field(Path("out"))
    threads: int = Field(1, ge=1)

    @field_validator("energies_kelvin")
    @classmethod
    def strictly_increasing(cls, values: list[float]) -> list[float]:
        if not values:
            raise ValueError("energy grid is empty")
        if any(v <= 0 for v in values):
            raise ValueError("energies must be positive")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise ValueError("energy grid must be strictly increasing")
        return values


class CriticalPoint(BaseModel):
    temperature: float = Field(..., description="Kelvin")
    critical_pressure: float = Field(..., description="mbar")
    pressure_constant: float = Field(..., description="(p_c/mbar)(T/K)^(-2/3)")


class RatePrediction(BaseModel):
    """Thermal decoherence rate and coherent shift at one (T, n_gas)."""

    temperature: float = Field(..., gt=0, description="Kelvin")
    n_gas: float = Field(..., ge=0, description="Number density in m^-3")
    gamma: float = Field(..., ge=0, description="Decoherence rate in s^-1")
    omega_x: float = Field(..., description="Collisional shift in s^-1")
    omega_z: float = Field(..., ge=0, description="Tunneling frequency in s^-1")
    critical_pressure: float = Field(..., ge=0, description="mbar")


class PredictionReport(BaseModel):
    """Output of the `predict` command."""

    meta: dict[str, str]
    beta_bohr: float
    rates: list[RatePrediction]
    critical: list[CriticalPoint]
    exponent: Optional[float] = Field(None, description="Fitted d ln p_c / d ln T")
