"""
Command-line entry point: rotor levels, potential, coupled-channel
scattering, high-energy estimates, two-level dynamics and critical-pressure
predictions.

Usage:
    python main.py levels --config data/run.example.toml
    python main.py scatter --config data/run.example.toml --threads 4 --resume
    python main.py predict --config data/run.example.toml
"""

import argparse
import json
import math
import multiprocessing as mp
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np
from dotenv import load_dotenv
from scipy import constants

from channels import Truncation, build_channel_basis, count_open_channels, coupling_matrix, coupling_table, reduced_mass
from datasets import RunContext, load_run_config, read_csv, write_csv, write_json
from dispersion import (
    PotentialSurface,
    SusceptibilitySet,
    angular_expansion,
    dispersion_coefficients,
    molecule_tensors,
    susceptibility_table,
)
from errors import ChiralDecoherenceError, ConvergenceError, NumericalError
from highenergy import (
    HALF_PHASE_PREFACTOR,
    PHASE_PREFACTOR,
    HighEnergyParams,
    asymptotic_coefficients,
    beta_parameter,
    first_coupled_level,
)
from master import ConfigState, TwoLevelParams, decay_rates, trajectory
from models import CriticalPoint, InitialStates, OnsetRate, PredictionReport, RatePrediction
from observables import (
    critical_pressure,
    decoherence_report,
    eta_terms,
    mean_v_eta_asymptotic,
    number_density,
    pressure_constant,
    sigma_terms,
    tail_fraction,
    temperature_exponent,
    thermal_average_rates,
)
from propagator import RadialGrid, SMatrixBlock, solve_block
from rotor import RotorSpec, RotorState, asymmetry_parameter, rotor_levels
from units import (
    AMU_ME,
    BOHR_M,
    atomic_velocity_to_si,
    hartree_to_kelvin,
    hartree_to_wavenumber,
    kelvin_to_hartree,
)

LEVEL_J_MAX = 40
HANDS = ("L", "R")


@dataclass(frozen=True)
class Pipeline:
    """Rotor, surfaces and reduced mass derived from one run context."""
    spec: RotorSpec
    levels: list[RotorState]
    susceptibilities: SusceptibilitySet
    left: PotentialSurface
    right: PotentialSurface
    mass: float

    @property
    def surfaces(self) -> dict[str, PotentialSurface]:
        return {"L": self.left, "R": self.right}


def build_pipeline(ctx: RunContext) -> Pipeline:
    config = ctx.config
    spec = RotorSpec.from_dataset(ctx.molecule)
    s = molecule_tensors(ctx.increments, spec).with_gas(ctx.gas)
    left, right = dispersion_coefficients(
        s,
        r_core=config.radial.r_core,
        chirality=config.scattering.chirality,
        chiral=config.scattering.chiral,
        provenance=ctx.provenance,
    )
    return Pipeline(
        spec=spec,
        levels=rotor_levels(spec, LEVEL_J_MAX),
        susceptibilities=s,
        left=left,
        right=right,
        mass=reduced_mass(spec.total_mass, ctx.gas.mass),
    )


def prepare(args) -> tuple[RunContext, Pipeline]:
    overrides = {"threads": getattr(args, "threads", None), "out": getattr(args, "out", None)}
    config = load_run_config(Path(args.config) if args.config else None, overrides)
    ctx = RunContext.load(config)
    return ctx, build_pipeline(ctx)


def truncation_for(ctx: RunContext, pipeline: Pipeline, energy: float) -> Truncation:
    t = ctx.config.truncation
    return Truncation.default(energy, pipeline.levels, t.closed_window, t.closed_floor_kelvin, t.j_extra, t.j_min)


def resolve_beta(ctx: RunContext, pipeline: Pipeline) -> float:
    if ctx.config.rates.beta_bohr is not None:
        return ctx.config.rates.beta_bohr
    return beta_parameter(pipeline.left, pipeline.right, pipeline.levels, pipeline.mass)


# Scattering tasks. Workers receive the shared state once, through the pool initializer.

class ScatterTask(NamedTuple):
    energy_kelvin: float
    J: int
    parity: int
    handedness: str


class TaskResult(NamedTuple):
    task: ScatterTask
    block: dict | None
    size: int
    error: Exception | None


_WORKER_STATE: dict = {}


def _init_worker(state: dict):
    _WORKER_STATE.clear()
    _WORKER_STATE.update(state)


def solve_task(task: ScatterTask) -> TaskResult:
    state = _WORKER_STATE
    try:
        energy = kelvin_to_hartree(task.energy_kelvin)
        basis = build_channel_basis(task.J, task.parity, energy, state["truncations"][task.energy_kelvin],
                                    state["levels"])
        block = solve_block(basis, state["surfaces"][task.handedness], state["mass"], state["grid"],
                            state["verify_step"], state["expansions"][task.handedness])
        return TaskResult(task, block.to_dict(), len(basis), None)
    except ChiralDecoherenceError as e:
        return TaskResult(task, None, 0, e)
    except np.linalg.LinAlgError as e:
        return TaskResult(task, None, 0, NumericalError(f"linear algebra failed: {e}"))


def checkpoint_path(out: Path, task: ScatterTask) -> Path:
    return out / "checkpoints" / f"E{task.energy_kelvin:g}K_J{task.J}_p{task.parity:+d}_{task.handedness}.json"


def load_checkpoint(path: Path, config_hash: str) -> SMatrixBlock | None:
    if not path.exists():
        return None
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        if data.get("config_hash") != config_hash:
            print(f"Warning: {path.name} belongs to another configuration, recomputing")
            return None
        return SMatrixBlock.from_dict(data["block"])
    except (OSError, ValueError, KeyError) as e:
        print(f"Warning: Could not read checkpoint {path.name}: {e}")
        return None


def save_checkpoint(path: Path, block: SMatrixBlock, config_hash: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump({"config_hash": config_hash, "block": block.to_dict()}, f)


class TaskRunner:
    """Runs scatter tasks sequentially or on a process pool, in submission order."""

    def __init__(self, state: dict, threads: int):
        self.threads = threads
        self.pool = None
        if threads > 1:
            self.pool = mp.Pool(processes=threads, initializer=_init_worker, initargs=(state,))
        else:
            _init_worker(state)

    def map(self, tasks):
        if self.pool is None:
            return map(solve_task, tasks)
        return self.pool.imap(solve_task, tasks)

    def close(self):
        if self.pool is not None:
            self.pool.close()
            self.pool.join()


def initial_levels(ctx: RunContext, pipeline: Pipeline, energy: float) -> list[RotorState]:
    if ctx.config.scattering.initial_states == InitialStates.THERMAL.value:
        return [lv for lv in pipeline.levels if lv.energy < energy]
    return [pipeline.levels[0]]


def _converged(blocks: dict, initials: list[RotorState], J: int, ctx: RunContext) -> tuple[bool, float]:
    partial = ctx.config.partial_waves
    worst = 0.0
    for level in initials:
        left = blocks[(level.parity, "L")]
        right = blocks[(level.parity, "R")]
        worst = max(worst,
                    tail_fraction(sigma_terms(left, level.key)),
                    tail_fraction(eta_terms(left, right, level.key)))
    return J >= partial.min_j_total and worst < partial.tail_tolerance, worst


def scatter_energy(energy_kelvin: float, ctx: RunContext, pipeline: Pipeline, runner: TaskRunner,
                   resume: bool) -> tuple[dict, list[RotorState], float]:
    """
    All (J, parity, handedness) blocks at one energy, in batches of J until
    the partial-wave tails fall below tolerance.

    Raises:
        ConvergenceError: j_total_max reached first
    """
    config = ctx.config
    out = Path(config.out)
    initials = initial_levels(ctx, pipeline, kelvin_to_hartree(energy_kelvin))
    parities = sorted({lv.parity for lv in initials}, reverse=True)
    blocks = {(p, h): [] for p in parities for h in HANDS}
    width = max(config.threads, 1)
    J = 0
    tail = math.inf
    while J <= config.partial_waves.j_total_max:
        batch = range(J, min(J + width, config.partial_waves.j_total_max + 1))
        tasks = [ScatterTask(energy_kelvin, j_total, p, h) for j_total in batch for p in parities for h in HANDS]
        pending = []
        for task in tasks:
            cached = load_checkpoint(checkpoint_path(out, task), ctx.hash) if resume else None
            if cached is not None:
                blocks[(task.parity, task.handedness)].append(cached)
                print(f"  ✓ E={energy_kelvin:g} K J={task.J} p={task.parity:+d} {task.handedness} (checkpoint)")
            else:
                pending.append(task)

        for result in runner.map(pending):
            task = result.task
            if result.error is not None:
                print(f"  ✗ E={energy_kelvin:g} K J={task.J} p={task.parity:+d} {task.handedness}: {result.error}")
                raise result.error
            block = SMatrixBlock.from_dict(result.block)
            save_checkpoint(checkpoint_path(out, task), block, ctx.hash)
            blocks[(task.parity, task.handedness)].append(block)
            print(f"  ✓ E={energy_kelvin:g} K J={task.J} p={task.parity:+d} {task.handedness}: "
                  f"{block.n_open} open / {result.size} channels")

        J = batch[-1] + 1
        done, tail = _converged(blocks, initials, J - 1, ctx)
        if done:
            return blocks, initials, tail
    raise ConvergenceError(f"partial-wave sum at {energy_kelvin:g} K not converged by J = "
                           f"{config.partial_waves.j_total_max}", estimate=tail)


def dump_smatrix(out: Path, blocks: dict, meta: dict):
    for (parity, hand), items in blocks.items():
        for block in items:
            header = dict(meta, energy_hartree=f"{block.energy:.12e}", J=str(block.J), parity=f"{parity:+d}",
                          handedness=hand, dimension=str(block.n_open))
            name = f"E{hartree_to_kelvin(block.energy):g}K_J{block.J}_p{parity:+d}_{hand}.csv"
            write_csv(out / "smatrix" / name, block.rows(), header)


def cmd_levels(args) -> int:
    ctx, pipeline = prepare(args)
    out = Path(ctx.config.out)
    meta = ctx.meta("levels")
    a, b, c = pipeline.spec.constants
    levels = [lv for lv in pipeline.levels if lv.j <= args.j_max]

    rows = [{"j": lv.j, "tau": lv.tau, "wang": lv.wang, "parity": lv.parity,
             "energy_K": hartree_to_kelvin(lv.energy), "energy_cm": hartree_to_wavenumber(lv.energy)}
            for lv in levels]
    write_csv(out / "levels.csv", rows, meta)
    summary = {
        "molecule": ctx.molecule.name,
        "constants_cm": [hartree_to_wavenumber(x) for x in (a, b, c)],
        "asymmetry": asymmetry_parameter(a, b, c),
        "c2_axis": pipeline.spec.c2_axis,
        "total_mass_amu": pipeline.spec.total_mass,
    }
    write_json(out / "constants.json", summary, meta)

    print("=" * 60)
    print(f"Rotor: {ctx.molecule.name}")
    print("=" * 60)
    print(f"A, B, C = {', '.join(f'{x:.6f}' for x in summary['constants_cm'])} cm^-1")
    print(f"Asymmetry parameter: {summary['asymmetry']:.5f}, C2 axis: {summary['c2_axis']}")
    print(f"Levels written: {len(rows)} (j <= {args.j_max})")
    print(f"\n✓ Saved to {out / 'levels.csv'}")
    return 0


def cmd_potential(args) -> int:
    ctx, pipeline = prepare(args)
    out = Path(ctx.config.out)
    meta = ctx.meta("potential")
    left = pipeline.left

    summary = {
        "c6": left.c6,
        "chiral_coefficient": left.chiral_coefficient,
        "chirality": ctx.config.scattering.chirality,
        "reduced_mass_amu": pipeline.mass / AMU_ME,
    }
    if ctx.config.scattering.chiral and left.chiral_coefficient != 0.0:
        level = first_coupled_level(pipeline.left, pipeline.right, pipeline.levels)
        summary["first_coupled_level"] = {"j": level.j, "tau": level.tau,
                                          "energy_K": hartree_to_kelvin(level.energy)}
        summary["beta_bohr"] = beta_parameter(pipeline.left, pipeline.right, pipeline.levels, pipeline.mass,
                                              level=level)
    write_json(out / "potential.json", summary, meta)

    if args.dump_alpha:
        frequencies = np.linspace(0.0, 3.0, 61)
        write_csv(out / "susceptibilities.csv", susceptibility_table(pipeline.susceptibilities, frequencies), meta)
        print(f"✓ Susceptibilities saved to {out / 'susceptibilities.csv'}")

    if args.dump_w is not None:
        energy = kelvin_to_hartree(ctx.config.energies_kelvin[0])
        basis = build_channel_basis(args.dump_w, pipeline.levels[0].parity, energy,
                                    truncation_for(ctx, pipeline, energy), pipeline.levels)
        coupling = coupling_matrix(basis, left, pipeline.mass)
        radii = np.linspace(ctx.config.radial.r_core, ctx.config.radial.r_match, 57)
        write_csv(out / f"coupling_J{args.dump_w}.csv", coupling_table(coupling, basis, radii), meta)
        print(f"✓ W(r) for J={args.dump_w} ({len(basis)} channels) saved")

    print("=" * 60)
    print(f"C6 = {summary['c6']:.4f} a.u.")
    print(f"Chiral n_x n_y n_z coefficient = {summary['chiral_coefficient']:.6e} a.u.")
    if "beta_bohr" in summary:
        lv = summary["first_coupled_level"]
        print(f"First chirally coupled level: j={lv['j']} tau={lv['tau']:+d} at {lv['energy_K']:.3f} K")
        print(f"beta = {summary['beta_bohr']:.4f} bohr")
    print("=" * 60)
    return 0


def cmd_scatter(args) -> int:
    ctx, pipeline = prepare(args)
    config = ctx.config
    out = Path(config.out)
    meta = ctx.meta("scatter")

    grid = RadialGrid(config.radial.r_core, config.radial.r_match, config.radial.step)
    state = {
        "levels": pipeline.levels,
        "surfaces": pipeline.surfaces,
        "expansions": {h: angular_expansion(s) for h, s in pipeline.surfaces.items()},
        "truncations": {e: truncation_for(ctx, pipeline, kelvin_to_hartree(e)) for e in config.energies_kelvin},
        "mass": pipeline.mass,
        "grid": grid,
        "verify_step": config.radial.verify_step,
    }

    print("=" * 60)
    print(f"Coupled-channel scattering: {ctx.molecule.name} + {ctx.gas.name}")
    print(f"Energies (K): {', '.join(f'{e:g}' for e in config.energies_kelvin)}")
    print(f"Workers: {config.threads}, config hash: {ctx.hash}")
    print("=" * 60)

    reports, channel_rows, convergence = [], [], []
    runner = TaskRunner(state, config.threads)
    try:
        for idx, energy_kelvin in enumerate(config.energies_kelvin, 1):
            print(f"\n[{idx}/{len(config.energies_kelvin)}] E = {energy_kelvin:g} K")
            blocks, initials, tail = scatter_energy(energy_kelvin, ctx, pipeline, runner, args.resume)
            for level in initials:
                report = decoherence_report(blocks[(level.parity, "L")], blocks[(level.parity, "R")],
                                            energy_kelvin, level.key)
                reports.append(report)
                channel_rows.extend(dict(row, j0=level.j, tau0=level.tau) for row in report.channel_rows())
                print(f"  ✓ ({level.j},{level.tau:+d}): sigma = {report.sigma_tot:.3f}, "
                      f"eta = {report.eta_total:.4e}, eps = {report.epsilon:.4e} a0^2")
            truncation = state["truncations"][energy_kelvin]
            convergence.append({
                "energy_K": energy_kelvin,
                "j_total_max": max(b.J for items in blocks.values() for b in items),
                "tail": tail,
                "closed_window_K": hartree_to_kelvin(truncation.e_closed_max),
                "rotor_j_max": truncation.j_max,
                "open_channels_large_J": count_open_channels(kelvin_to_hartree(energy_kelvin), pipeline.levels),
            })
            if config.scattering.dump_smatrix:
                dump_smatrix(out, blocks, meta)
    finally:
        runner.close()

    write_csv(out / "scatter.csv", [r.row() for r in reports], meta)
    write_csv(out / "scatter_channels.csv", channel_rows, meta)
    write_json(out / "convergence.json", {"energies": convergence}, meta)

    print(f"\n{'=' * 60}")
    print("Summary")
    print(f"{'=' * 60}")
    for r in reports:
        ratio = r.eta_total / r.sigma_tot if r.sigma_tot else 0.0
        print(f"E = {r.energy_kelvin:8g} K  sigma = {r.sigma_tot:10.3f}  eta = {r.eta_total:10.4e}  "
              f"eta/sigma = {ratio:.3e}")
    print(f"\n✓ Results saved to {out / 'scatter.csv'}")
    return 0


def cmd_highenergy(args) -> int:
    ctx, pipeline = prepare(args)
    out = Path(ctx.config.out)
    meta = ctx.meta("highenergy")
    beta = resolve_beta(ctx, pipeline)
    prefactor = HALF_PHASE_PREFACTOR if args.prefactor == "half" else PHASE_PREFACTOR
    c1, c2 = asymptotic_coefficients(prefactor)

    rows = []
    for energy_kelvin in np.geomspace(args.e_min, args.e_max, args.points):
        params = HighEnergyParams.at_energy(kelvin_to_hartree(energy_kelvin), beta, pipeline.mass, pipeline.left.c6)
        rows.append({"E_K": float(energy_kelvin), "k_beta": params.k * beta, **params.sweep_row(prefactor, c1, c2)})
    write_csv(out / "highenergy.csv", rows, dict(meta, beta_bohr=f"{beta:.6f}", c1=f"{c1:.4f}", c2=f"{c2:.4f}"))

    print("=" * 60)
    print(f"beta = {beta:.4f} bohr, c1 = {c1:.4f}, c2 = {c2:.4f} ({args.prefactor} prefactor)")
    print(f"✓ {len(rows)} energies saved to {out / 'highenergy.csv'}")
    return 0


def cmd_master(args) -> int:
    ctx, _ = prepare(args)
    out = Path(ctx.config.out)
    meta = ctx.meta("master")
    omega_z = 2.0 * math.pi * ctx.config.rates.tunneling_hz
    params = TwoLevelParams(omega_z=omega_z, omega_x=args.omega_x_ratio * omega_z, gamma=args.gamma_ratio * omega_z)

    period = 2.0 * math.pi / omega_z if omega_z > 0 else 1.0
    times = np.linspace(0.0, args.periods * period, args.points)
    path = trajectory(ConfigState.left(), params, times)
    write_csv(out / "trajectory.csv", [dict(zip(("t", "x", "y", "z"), map(float, row))) for row in path], meta)

    rates = decay_rates(params)
    summary = {
        "omega_z": omega_z, "omega_x": params.omega_x, "gamma": params.gamma,
        "slow_rate": rates.slow, "fast_rates": list(rates.fast),
        "zeno_rate": omega_z**2 / params.gamma if params.gamma > 0 else None,
    }
    write_json(out / "master.json", summary, meta)

    print("=" * 60)
    print(f"gamma / omega_z = {args.gamma_ratio:g}: slow rate {rates.slow:.6e} s^-1, "
          f"fast rates {rates.fast[0]:.4e}, {rates.fast[1]:.4e} s^-1")
    print(f"✓ Trajectory saved to {out / 'trajectory.csv'}")
    return 0


def _scatter_tables(ctx: RunContext, pipeline: Pipeline, path: Path):
    """Velocity grid (m/s) and per-initial-state (eta, eps) tables in m^2 from a scatter run."""
    meta, rows = read_csv(path)
    if meta.get("config_hash") != ctx.hash:
        print(f"Warning: {path} was produced with another configuration")
    energies = sorted({float(r["E_K"]) for r in rows})
    velocities = np.array([atomic_velocity_to_si(math.sqrt(2.0 * kelvin_to_hartree(e) / pipeline.mass))
                           for e in energies])
    tables = {}
    for key in sorted({(int(r["j0"]), int(r["tau0"])) for r in rows}):
        chosen = {float(r["E_K"]): r for r in rows if (int(r["j0"]), int(r["tau0"])) == key}
        if len(chosen) != len(energies):
            continue
        eta = np.array([float(chosen[e]["eta_tot"]) for e in energies]) * BOHR_M**2
        eps = np.array([float(chosen[e]["eps_tot"]) for e in energies]) * BOHR_M**2
        tables[key] = (eta, eps)
    return velocities, tables


def cmd_predict(args) -> int:
    ctx, pipeline = prepare(args)
    config = ctx.config
    rates_config = config.rates
    out = Path(config.out)
    meta = ctx.meta("predict")
    omega_z = 2.0 * math.pi * rates_config.tunneling_hz
    reduced_kg = pipeline.mass * constants.m_e
    gas_kg = ctx.gas.mass * constants.atomic_mass

    beta = resolve_beta(ctx, pipeline)
    if rates_config.beta_bohr is None:
        print(f"Using beta = {beta:.4f} bohr from the dataset surfaces")

    scatter_csv = Path(args.from_scatter) if args.from_scatter else None
    if scatter_csv is not None:
        velocities, tables = _scatter_tables(ctx, pipeline, scatter_csv)
        initial = [lv for lv in pipeline.levels if lv.key in tables]

    predictions, critical = [], []
    for temperature in rates_config.temperatures_kelvin:
        if scatter_csv is not None:
            unit = thermal_average_rates(velocities, tables, temperature, 1.0, omega_z, gas_kg,
                                         levels=initial, onset=rates_config.onset_rate)
            mean_eta, mean_eps, p_c = unit.gamma, unit.omega_x, unit.critical_pressure
        else:
            mean_eta = mean_v_eta_asymptotic(temperature, beta, reduced_kg, gas_kg, rates_config.critical_terms)
            mean_eps = 0.0
            p_c = critical_pressure(temperature, omega_z, beta, reduced_kg, gas_kg, rates_config.critical_terms,
                                    rates_config.onset_rate)
        critical.append(CriticalPoint(temperature=temperature, critical_pressure=p_c,
                                      pressure_constant=pressure_constant(p_c, temperature)))
        for pressure in rates_config.pressures_mbar:
            n_gas = number_density(pressure, temperature)
            predictions.append(RatePrediction(temperature=temperature, n_gas=n_gas, gamma=n_gas * mean_eta,
                                              omega_x=n_gas * mean_eps, omega_z=omega_z, critical_pressure=p_c))

    exponent = None
    if len(critical) > 1:
        exponent = temperature_exponent([c.temperature for c in critical],
                                        [c.critical_pressure for c in critical])
    report = PredictionReport(meta=meta, beta_bohr=beta, rates=predictions, critical=critical, exponent=exponent)
    write_json(out / "prediction.json", report)

    print("=" * 60)
    threshold = "omega_z" if rates_config.onset_rate == OnsetRate.ANGULAR else "omega_z / 2 pi"
    print(f"Critical pressure (gamma = {threshold})")
    print("=" * 60)
    for c in critical:
        print(f"T = {c.temperature:6.1f} K  p_c = {c.critical_pressure:.3e} mbar  "
              f"p_c T^-2/3 = {c.pressure_constant:.3e}")
    if exponent is not None:
        print(f"Fitted exponent d ln p_c / d ln T = {exponent:.4f}")
    print(f"\n✓ Prediction saved to {out / 'prediction.json'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Collisional decoherence of chiral molecules in a buffer gas"
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None, help="Run configuration TOML (default: built-in values)")
    common.add_argument("--out", type=str, default=None, help="Output directory (overrides config and CHIRAL_OUT)")
    common.add_argument("--threads", type=int, default=None, help="Worker processes (overrides config)")

    sub = parser.add_subparsers(dest="command", required=True)

    levels = sub.add_parser("levels", parents=[common], help="Rotor constants and level table")
    levels.add_argument("--j-max", type=int, default=10, help="Highest j in the table (default: 10)")
    levels.set_defaults(func=cmd_levels)

    potential = sub.add_parser("potential", parents=[common], help="Dispersion coefficients and beta")
    potential.add_argument("--dump-alpha", action="store_true", help="Write alpha(iw) and A(iw) tables")
    potential.add_argument("--dump-w", type=int, default=None, metavar="J",
                           help="Write W(r) for total J at the first configured energy")
    potential.set_defaults(func=cmd_potential)

    scatter = sub.add_parser("scatter", parents=[common], help="Coupled-channel sigma, eta and eps")
    scatter.add_argument("--resume", action="store_true", help="Reuse checkpointed S-matrix blocks")
    scatter.set_defaults(func=cmd_scatter)

    high = sub.add_parser("highenergy", parents=[common], help="High-energy eta and Born sigma sweep")
    high.add_argument("--e-min", type=float, default=1.0, help="Lowest energy in K (default: 1)")
    high.add_argument("--e-max", type=float, default=1000.0, help="Highest energy in K (default: 1000)")
    high.add_argument("--points", type=int, default=31, help="Number of energies (default: 31)")
    high.add_argument("--prefactor", choices=["printed", "half"], default="printed",
                      help="Phase prefactor 5pi/128 (printed) or 5pi/256 (half)")
    high.set_defaults(func=cmd_highenergy)

    master = sub.add_parser("master", parents=[common], help="Two-level configuration dynamics")
    master.add_argument("--gamma-ratio", type=float, default=100.0, help="gamma / omega_z (default: 100)")
    master.add_argument("--omega-x-ratio", type=float, default=0.0, help="omega_x / omega_z (default: 0)")
    master.add_argument("--periods", type=float, default=10.0, help="Duration in tunneling periods")
    master.add_argument("--points", type=int, default=401, help="Trajectory samples")
    master.set_defaults(func=cmd_master)

    predict = sub.add_parser("predict", parents=[common], help="Decoherence rates and critical pressure")
    predict.add_argument("--from-scatter", type=str, default=None, metavar="CSV",
                         help="Average tabulated eta(E) from a scatter run instead of the high-energy form")
    predict.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ChiralDecoherenceError as e:
        print(f"Error: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
