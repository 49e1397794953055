"""
Test script for the pydantic dataset, configuration and result models.
"""

import json

import pytest
from pydantic import ValidationError

from models import (
    ChiralityMode,
    CriticalPoint,
    CriticalTerms,
    GasDataset,
    MoleculeDataset,
    PredictionReport,
    RadialConfig,
    RatePrediction,
    RunConfig,
    ScatteringConfig,
)


def test_molecule_model():
    """Create a molecule from the schema example and check bond validation."""
    example = MoleculeDataset.model_config["json_schema_extra"]["example"]
    molecule = MoleculeDataset.model_validate(example)

    print("Example 1: Molecule dataset")
    print("=" * 60)
    print(molecule.model_dump_json(indent=2))

    assert molecule.atoms[1].position == [0.0, 0.0, 0.77]
    assert molecule.bonds == [(0, 1)]

    with pytest.raises(ValidationError):
        MoleculeDataset.model_validate(dict(example, bonds=[[0, 5]]))
    with pytest.raises(ValidationError):
        MoleculeDataset.model_validate(dict(example, bonds=[[1, 1]]))


def test_gas_model():
    gas = GasDataset(name="He", mass=4.002602, lorentzians=[{"strength": 1.383, "frequency": 1.0}])
    assert gas.lorentzians[0].strength == pytest.approx(1.383)
    with pytest.raises(ValidationError):
        GasDataset(name="He", mass=-1.0)
    with pytest.raises(ValidationError):
        GasDataset(name="He", mass=4.0, lorentzians=[{"strength": 1.0, "frequency": 0.0}])


def test_run_config_defaults():
    """Defaults describe a ground-state run on the bundled datasets."""
    config = RunConfig()

    print("\nExample 2: Default run configuration")
    print("=" * 60)
    print(config.model_dump_json(indent=2))

    assert config.energies_kelvin == [0.5, 1.0, 1.5, 2.0]
    assert config.threads == 1
    assert config.scattering.chirality == ChiralityMode.PSEUDOSCALAR.value
    assert config.scattering.initial_states == "ground"
    assert config.rates.tunneling_hz == 176.0
    assert config.rates.critical_terms == CriticalTerms.LEADING.value
    assert config.rates.beta_bohr is None


def test_run_config_validation():
    with pytest.raises(ValidationError):
        RunConfig(energies_kelvin=[])
    with pytest.raises(ValidationError):
        RunConfig(energies_kelvin=[1.0, 0.5])
    with pytest.raises(ValidationError):
        RunConfig(energies_kelvin=[-1.0, 1.0])
    with pytest.raises(ValidationError):
        RunConfig(threads=0)
    with pytest.raises(ValidationError):
        RadialConfig(r_core=10.0, r_match=5.0)
    with pytest.raises(ValidationError):
        ScatteringConfig(chirality="mirror")

    config = RunConfig(scattering={"chirality": "full", "initial_states": "thermal"})
    assert config.scattering.chirality == "full"
    assert config.scattering.initial_states == "thermal"


def test_prediction_report():
    """Results serialize to plain JSON."""
    report = PredictionReport(
        meta={"command": "predict", "config_hash": "0123456789abcdef"},
        beta_bohr=34.1,
        rates=[RatePrediction(temperature=300.0, n_gas=2.4e17, gamma=1.2e3, omega_x=-3.0,
                              omega_z=1105.8, critical_pressure=1.6e-5)],
        critical=[CriticalPoint(temperature=300.0, critical_pressure=1.6e-5,
                                pressure_constant=1.6e-5 * 300.0 ** (-2.0 / 3.0))],
        exponent=2.0 / 3.0,
    )

    print("\nExample 3: Prediction report")
    print("=" * 60)
    print(report.model_dump_json(indent=2))

    data = json.loads(report.model_dump_json())
    assert data["rates"][0]["gamma"] == 1.2e3
    assert data["critical"][0]["temperature"] == 300.0

    with pytest.raises(ValidationError):
        RatePrediction(temperature=0.0, n_gas=1.0, gamma=0.0, omega_x=0.0, omega_z=1.0, critical_pressure=1.0)
    with pytest.raises(ValidationError):
        RatePrediction(temperature=300.0, n_gas=1.0, gamma=-1.0, omega_x=0.0, omega_z=1.0, critical_pressure=1.0)


if __name__ == "__main__":
    test_molecule_model()
    test_gas_model()
    test_run_config_defaults()
    test_run_config_validation()
    test_prediction_report()
