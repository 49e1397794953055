"""
Loading of TOML datasets and run configurations, config hashing, and the
CSV/JSON writers that stamp every output with its provenance.
"""

import csv
import hashlib
import json
import os
import tomllib
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TypeVar

from pydantic import BaseModel, ValidationError

from errors import ConfigError
from models import BondIncrementTable, GasDataset, MoleculeDataset, RunConfig

Model = TypeVar("Model", bound=BaseModel)

DATASET_FIELDS = ("molecule", "gas", "increments")


def load_toml(path: Path) -> dict:
    """
    Parse a TOML file.

    Raises:
        ConfigError: Missing or malformed file
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    try:
        with open(path, "rb") as f:
            return tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e


def load_model(path: Path, model: type[Model]) -> Model:
    """Validate a TOML file against a pydantic model."""
    data = load_toml(path)
    try:
        return model.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid {model.__name__} in {path}:\n{e}") from e


def load_molecule(path: Path) -> MoleculeDataset:
    return load_model(path, MoleculeDataset)


def load_gas(path: Path) -> GasDataset:
    return load_model(path, GasDataset)


def load_increments(path: Path) -> BondIncrementTable:
    return load_model(path, BondIncrementTable)


def _resolve(path: Path, base: Path, data_dir: Path | None) -> Path:
    if path.is_absolute():
        return path
    if data_dir is not None and path.parts[:1] == ("data",):
        return data_dir.joinpath(*path.parts[1:])
    return base / path


def load_run_config(path: Path | None = None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """
    Build the run configuration: file values, then CHIRAL_* environment
    variables, then `overrides` (command-line flags).

    Relative dataset paths resolve against the config file's directory, or
    the working directory without a file. CHIRAL_DATA_DIR replaces the
    leading `data/` of default dataset paths.

    Raises:
        ConfigError: Invalid values or missing dataset files
    """
    data = load_toml(path) if path is not None else {}
    base = Path(path).parent if path is not None else Path.cwd()

    if os.getenv("CHIRAL_OUT"):
        data["out"] = os.getenv("CHIRAL_OUT")
    if os.getenv("CHIRAL_THREADS"):
        data["threads"] = os.getenv("CHIRAL_THREADS")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value

    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid run configuration:\n{e}") from e

    data_dir = Path(os.environ["CHIRAL_DATA_DIR"]) if os.getenv("CHIRAL_DATA_DIR") else None
    resolved = {name: _resolve(getattr(config, name), base, data_dir) for name in DATASET_FIELDS}
    for name, value in resolved.items():
        if not value.is_file():
            raise ConfigError(f"{name} dataset not found: {value}")
    return config.model_copy(update=resolved)


def config_hash(config: RunConfig) -> str:
    """sha256 over the configuration and the bytes of every dataset file."""
    digest = hashlib.sha256()
    digest.update(config.model_dump_json(exclude={"out", "threads"}).encode("utf-8"))
    for name in DATASET_FIELDS:
        digest.update(Path(getattr(config, name)).read_bytes())
    return digest.hexdigest()[:16]


@dataclass(frozen=True)
class RunContext:
    """A validated configuration with its datasets loaded."""
    config: RunConfig
    molecule: MoleculeDataset
    gas: GasDataset
    increments: BondIncrementTable
    hash: str

    @classmethod
    def load(cls, config: RunConfig) -> "RunContext":
        return cls(
            config=config,
            molecule=load_molecule(config.molecule),
            gas=load_gas(config.gas),
            increments=load_increments(config.increments),
            hash=config_hash(config),
        )

    @property
    def provenance(self) -> str:
        parts = [f"molecule: {self.molecule.provenance or self.molecule.name}",
                 f"gas: {self.gas.provenance or self.gas.name}",
                 f"increments: {self.increments.provenance or 'unspecified'}"]
        return "; ".join(parts)

    def meta(self, command: str) -> dict[str, str]:
        return {"command": command, "config_hash": self.hash, "provenance": self.provenance}


def write_csv(path: Path, rows: list[dict], meta: dict[str, str], fieldnames: list[str] | None = None):
    """CSV with leading `# key: value` lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fieldnames = fieldnames or (list(rows[0].keys()) if rows else [])
    with open(path, "w", newline="", encoding="utf-8") as f:
        for key, value in meta.items():
            f.write(f"# {key}: {value}\n")
        writer = csv.DictWriter(f, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_csv(path: Path) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Inverse of write_csv: (meta, rows) with values as strings."""
    meta, lines = {}, []
    with open(path, newline="", encoding="utf-8") as f:
        for line in f:
            if line.startswith("# "):
                key, _, value = line[2:].rstrip("\n").partition(": ")
                meta[key] = value
            else:
                lines.append(line)
    return meta, list(csv.DictReader(lines))


def write_json(path: Path, payload: BaseModel | dict, meta: dict[str, str] | None = None):
    """JSON with a `meta` object; pydantic models are dumped in JSON mode."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    data = payload.model_dump(mode="json") if isinstance(payload, BaseModel) else dict(payload)
    if meta is not None:
        data["meta"] = meta
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)
