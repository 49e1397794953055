"""
Cross sections from S-matrix blocks and thermally averaged rates.

Partial-wave forms, with T = 1 - S, k0 the initial wavenumber and j0 the
initial rotor angular momentum:

    sigma_tot      = 2 pi / (k0^2 (2j0+1)) sum_J (2J+1) sum_l0 (1 - Re S_{a0 l0, a0 l0})
    sigma_{a<-a0}  =   pi / (k0^2 (2j0+1)) sum_J (2J+1) sum_{l l0} |T|^2
    eta_{a<-a0}    =   pi / (2 k0^2 (2j0+1)) sum_J (2J+1) sum_{l l0} |S^L - S^R|^2
    eps_{a<-a0}    =   pi / (k0^2 (2j0+1)) sum_J (2J+1) sum_{l l0} Im(T^L conj(T^R))

eta carries the 1/8pi direction average of the amplitude difference and eps
the 1/4pi of the interference term.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import constants
from scipy.integrate import simpson
from scipy.interpolate import PchipInterpolator
from scipy.special import erf, gamma

from errors import ConvergenceError, DomainError
from highenergy import C1, C2
from models import CriticalTerms, OnsetRate, RatePrediction
from propagator import SMatrixBlock
from rotor import RotorState, boltzmann_weights
from units import BOHR_M, MBAR_PA

GROUND = (0, 0)
MIN_COVERAGE = 0.99
TAIL_WINDOW = 2


def _ordered(blocks: list[SMatrixBlock]) -> list[SMatrixBlock]:
    return sorted(blocks, key=lambda b: b.J)


def _initial_rows(block: SMatrixBlock, initial) -> list[int]:
    return [i for i, (j, tau, _) in enumerate(block.channels) if (j, tau) == tuple(initial)]


def _final_groups(block: SMatrixBlock) -> dict[tuple[int, int], list[int]]:
    groups: dict[tuple[int, int], list[int]] = {}
    for i, (j, tau, _) in enumerate(block.channels):
        groups.setdefault((j, tau), []).append(i)
    return groups


def _initial_wavenumber(blocks: list[SMatrixBlock], initial) -> float:
    for block in blocks:
        rows = _initial_rows(block, initial)
        if rows:
            return float(block.wavenumbers[rows[0]])
    raise DomainError(f"initial state {tuple(initial)} is not open in any block")


def _prefactor(blocks: list[SMatrixBlock], initial) -> float:
    k0 = _initial_wavenumber(blocks, initial)
    return math.pi / (k0**2 * (2 * initial[0] + 1))


def _check_pair(blocks_left: list[SMatrixBlock], blocks_right: list[SMatrixBlock]):
    if len(blocks_left) != len(blocks_right):
        raise DomainError("L and R runs cover different J values")
    for left, right in zip(blocks_left, blocks_right):
        if left.J != right.J or left.channels != right.channels:
            raise DomainError(f"L and R channel bases differ at J={left.J}")


def sigma_terms(blocks: list[SMatrixBlock], initial=GROUND) -> np.ndarray:
    """Per-J contributions to sigma_tot in bohr^2, ordered by J."""
    blocks = _ordered(blocks)
    scale = 2.0 * _prefactor(blocks, initial)
    terms = []
    for block in blocks:
        rows = _initial_rows(block, initial)
        diagonal = np.array([block.s[i, i] for i in rows])
        terms.append(scale * (2 * block.J + 1) * float(np.sum(1.0 - diagonal.real)))
    return np.array(terms)


def sigma_total(blocks: list[SMatrixBlock], initial=GROUND) -> float:
    """Total cross section in bohr^2 of one handedness from the initial state."""
    return float(np.sum(sigma_terms(blocks, initial)))


def sigma_state_resolved(blocks: list[SMatrixBlock], initial=GROUND) -> dict[tuple[int, int], float]:
    """Integral cross sections sigma_{a <- a0} keyed by final (j, tau)."""
    blocks = _ordered(blocks)
    scale = _prefactor(blocks, initial)
    out: dict[tuple[int, int], float] = {}
    for block in blocks:
        columns = _initial_rows(block, initial)
        t = np.eye(block.n_open) - block.s
        for final, rows in _final_groups(block).items():
            value = float(np.sum(np.abs(t[np.ix_(rows, columns)]) ** 2))
            out[final] = out.get(final, 0.0) + scale * (2 * block.J + 1) * value
    return out


def _pair_terms(blocks_left, blocks_right, initial, kernel):
    blocks_left, blocks_right = _ordered(blocks_left), _ordered(blocks_right)
    _check_pair(blocks_left, blocks_right)
    scale = _prefactor(blocks_left, initial)
    per_j = []
    channels: dict[tuple[int, int], float] = {}
    for left, right in zip(blocks_left, blocks_right):
        columns = _initial_rows(left, initial)
        weight = scale * (2 * left.J + 1)
        total = 0.0
        for final, rows in _final_groups(left).items():
            cell = np.ix_(rows, columns)
            value = weight * float(np.sum(kernel(left.s[cell], right.s[cell], rows, columns)))
            channels[final] = channels.get(final, 0.0) + value
            total += value
        per_j.append(total)
    return np.array(per_j), channels


def _eta_kernel(s_left, s_right, rows, columns):
    return 0.5 * np.abs(s_left - s_right) ** 2


def _epsilon_kernel(s_left, s_right, rows, columns):
    identity = np.equal.outer(rows, columns).astype(float)
    return np.imag((identity - s_left) * np.conj(identity - s_right))


def eta_decoherence(blocks_left, blocks_right, initial=GROUND) -> tuple[float, dict[tuple[int, int], float]]:
    """
    Decoherence cross section in bohr^2 and its breakdown by final (j, tau).

    Raises:
        DomainError: L and R blocks are not on identical bases
    """
    terms, channels = _pair_terms(blocks_left, blocks_right, initial, _eta_kernel)
    return float(np.sum(terms)), channels


def eta_terms(blocks_left, blocks_right, initial=GROUND) -> np.ndarray:
    return _pair_terms(blocks_left, blocks_right, initial, _eta_kernel)[0]


def epsilon_shift(blocks_left, blocks_right, initial=GROUND) -> float:
    """Coherent characteristic area eps in bohr^2 (summed over final states)."""
    terms, _ = _pair_terms(blocks_left, blocks_right, initial, _epsilon_kernel)
    return float(np.sum(terms))


def tail_fraction(terms, window: int = TAIL_WINDOW) -> float:
    """Share of the last `window` partial waves in the total (0 for a zero sum)."""
    terms = np.asarray(terms, dtype=float)
    total = float(np.sum(np.abs(terms)))
    if total == 0.0 or len(terms) == 0:
        return 0.0
    return float(np.sum(np.abs(terms[-window:])) / total)


@dataclass
class DecoherenceReport:
    """Cross sections at one collision energy, bohr^2."""
    energy_kelvin: float
    initial: tuple[int, int]
    sigma_left: float
    sigma_right: float
    eta_total: float
    epsilon: float
    eta_channels: dict[tuple[int, int], float] = field(default_factory=dict)
    sigma_channels: dict[tuple[int, int], float] = field(default_factory=dict)
    j_total_max: int = 0
    tails: dict[str, float] = field(default_factory=dict)

    @property
    def sigma_tot(self) -> float:
        return 0.5 * (self.sigma_left + self.sigma_right)

    def row(self) -> dict:
        return {
            "E_K": self.energy_kelvin,
            "j0": self.initial[0],
            "tau0": self.initial[1],
            "sigma_tot": self.sigma_tot,
            "eta_tot": self.eta_total,
            "eps_tot": self.epsilon,
            "sigma_L": self.sigma_left,
            "sigma_R": self.sigma_right,
            "J_max": self.j_total_max,
        }

    def channel_rows(self) -> list[dict]:
        return [{"E_K": self.energy_kelvin, "j": j, "tau": tau, "eta": value,
                 "sigma_L": self.sigma_channels.get((j, tau), 0.0)}
                for (j, tau), value in sorted(self.eta_channels.items())]


def decoherence_report(blocks_left, blocks_right, energy_kelvin: float, initial=GROUND) -> DecoherenceReport:
    """Collect sigma, eta and eps with their J-tail estimates."""
    s_left = sigma_terms(blocks_left, initial)
    s_right = sigma_terms(blocks_right, initial)
    eta_per_j, eta_channels = _pair_terms(blocks_left, blocks_right, initial, _eta_kernel)
    return DecoherenceReport(
        energy_kelvin=energy_kelvin,
        initial=tuple(initial),
        sigma_left=float(np.sum(s_left)),
        sigma_right=float(np.sum(s_right)),
        eta_total=float(np.sum(eta_per_j)),
        epsilon=epsilon_shift(blocks_left, blocks_right, initial),
        eta_channels=eta_channels,
        sigma_channels=sigma_state_resolved(blocks_left, initial),
        j_total_max=max(b.J for b in blocks_left),
        tails={"sigma": tail_fraction(s_left), "eta": tail_fraction(eta_per_j)},
    )


# Thermal averages. SI units from here on: m/s, m^2, kg, kelvin.

def _most_probable_speed(temperature: float, mass_kg: float) -> float:
    return math.sqrt(2.0 * constants.k * temperature / mass_kg)


def maxwell_density(v, temperature: float, mass_kg: float):
    """Maxwell-Boltzmann speed density nu(v)."""
    vp = _most_probable_speed(temperature, mass_kg)
    x = np.asarray(v, dtype=float) / vp
    return 4.0 / math.sqrt(math.pi) * x**2 * np.exp(-x**2) / vp


def maxwell_moment(n: float, temperature: float, mass_kg: float) -> float:
    """<v^n> = (2 / sqrt(pi)) Gamma((3 + n) / 2) (2kT / m)^(n / 2)."""
    if n <= -3:
        raise DomainError("Maxwell-Boltzmann moment diverges for n <= -3")
    return 2.0 / math.sqrt(math.pi) * gamma((3.0 + n) / 2.0) * _most_probable_speed(temperature, mass_kg) ** n


def _cumulative(v: float, temperature: float, mass_kg: float) -> float:
    x = v / _most_probable_speed(temperature, mass_kg)
    return float(erf(x) - 2.0 / math.sqrt(math.pi) * x * math.exp(-x * x))


def velocity_coverage(velocities, temperature: float, mass_kg: float) -> float:
    """Maxwell-Boltzmann weight inside the tabulated velocity range."""
    v = np.asarray(velocities, dtype=float)
    return _cumulative(v.max(), temperature, mass_kg) - _cumulative(v.min(), temperature, mass_kg)


def thermal_average(velocities, values, temperature: float, mass_kg: float,
                    min_coverage: float = MIN_COVERAGE, points: int = 2001) -> float:
    """
    <v x(v)> for a tabulated x(v), interpolated monotonically in log v.

    A single tabulated velocity v0 stands for a beam, nu = delta(v - v0), and
    gives v0 x(v0) without any coverage check.

    Raises:
        ConvergenceError: The table covers less than `min_coverage` of the
            Maxwell-Boltzmann weight
    """
    v = np.atleast_1d(np.asarray(velocities, dtype=float))
    x = np.atleast_1d(np.asarray(values, dtype=float))
    if len(v) != len(x):
        raise DomainError(f"{len(v)} velocities but {len(x)} values")
    if len(v) == 0:
        raise DomainError("empty velocity table")
    if np.any(v <= 0):
        raise DomainError("velocities must be positive")
    if len(v) == 1:
        return float(v[0] * x[0])
    coverage = velocity_coverage(v, temperature, mass_kg)
    if coverage < min_coverage:
        raise ConvergenceError(f"velocity table covers {coverage:.3%} of the thermal distribution",
                               estimate=coverage)
    order = np.argsort(v)
    interpolant = PchipInterpolator(np.log(v[order]), x[order])
    grid = np.linspace(np.log(v.min()), np.log(v.max()), points)
    speeds = np.exp(grid)
    # dv = v dlog v
    integrand = maxwell_density(speeds, temperature, mass_kg) * speeds * interpolant(grid) * speeds
    return float(simpson(integrand, x=grid))


def number_density(pressure_mbar: float, temperature: float) -> float:
    """Ideal-gas density in m^-3."""
    return pressure_mbar * MBAR_PA / (constants.k * temperature)


def onset_rate(omega_z: float, onset: OnsetRate = OnsetRate.ANGULAR) -> float:
    """Tunneling rate in s^-1 that gamma has to reach at the critical pressure."""
    if OnsetRate(onset) == OnsetRate.CYCLIC:
        return omega_z / (2.0 * math.pi)
    return omega_z


def critical_pressure_from_rate(temperature: float, omega_z: float, mean_v_eta: float,
                                onset: OnsetRate = OnsetRate.ANGULAR) -> float:
    """Pressure in mbar at which n_gas <v eta> equals the onset rate."""
    if mean_v_eta <= 0:
        return math.inf
    return onset_rate(omega_z, onset) * constants.k * temperature / mean_v_eta / MBAR_PA


def _initial_weights(tables, temperature: float, weights, levels: list[RotorState] | None):
    if weights is not None:
        return weights
    if levels is None:
        if len(tables) != 1:
            raise DomainError("several initial states need rotor levels or explicit weights")
        return {key: 1.0 for key in tables}
    retained = [lv for lv in levels if lv.key in tables]
    missing = set(tables) - {lv.key for lv in retained}
    if missing:
        raise DomainError(f"no rotor level for initial states {sorted(missing)}")
    return boltzmann_weights(retained, temperature)


def thermal_average_rates(
    velocities,
    tables: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]],
    temperature: float,
    n_gas: float,
    omega_z: float,
    mass_kg: float,
    weights: dict[tuple[int, int], float] | None = None,
    levels: list[RotorState] | None = None,
    onset: OnsetRate = OnsetRate.ANGULAR,
) -> RatePrediction:
    """
    gamma = n_gas sum_a0 w(a0) <v eta_a0>, omega_x likewise with eps.

    `tables` maps each initial state to (eta, eps) arrays in m^2 on the
    velocity grid (m/s). Without explicit weights the initial states are
    Boltzmann-weighted over their `levels`; a lone initial state gets weight 1.

    Raises:
        DomainError: Negative density, or several initial states and nothing
            to weight them with
    """
    if n_gas < 0:
        raise DomainError("gas density must be non-negative")
    if not tables:
        raise DomainError("no eta tables to average")
    weights = _initial_weights(tables, temperature, weights, levels)
    mean_eta = mean_eps = 0.0
    for key, (eta, eps) in tables.items():
        w = weights.get(key, 0.0)
        if w == 0.0:
            continue
        mean_eta += w * thermal_average(velocities, eta, temperature, mass_kg)
        mean_eps += w * thermal_average(velocities, eps, temperature, mass_kg)
    return RatePrediction(
        temperature=temperature,
        n_gas=n_gas,
        gamma=max(n_gas * mean_eta, 0.0),
        omega_x=n_gas * mean_eps,
        omega_z=omega_z,
        critical_pressure=critical_pressure_from_rate(temperature, omega_z, mean_eta, onset),
    )


def mean_v_eta_asymptotic(temperature: float, beta_bohr: float, reduced_mass_kg: float, gas_mass_kg: float,
                          terms: CriticalTerms = CriticalTerms.LEADING,
                          c1: float | None = None, c2: float | None = None) -> float:
    """
    <v eta> in m^3/s for the high-energy expansion, k = m* v / hbar, averaged
    over the gas Maxwell-Boltzmann distribution.
    """
    c1 = C1 if c1 is None else c1
    c2 = C2 if c2 is None else c2
    beta = beta_bohr * BOHR_M
    length = constants.hbar / reduced_mass_kg
    value = c1 * beta ** (5.0 / 3.0) * length ** (1.0 / 3.0) * maxwell_moment(2.0 / 3.0, temperature, gas_mass_kg)
    if CriticalTerms(terms) == CriticalTerms.TWO_TERM:
        value -= c2 * beta ** (5.0 / 6.0) * length ** (7.0 / 6.0) * maxwell_moment(-1.0 / 6.0, temperature, gas_mass_kg)
    return value


def critical_pressure(temperature: float, omega_z: float, beta_bohr: float, reduced_mass_kg: float,
                      gas_mass_kg: float, terms: CriticalTerms = CriticalTerms.LEADING,
                      onset: OnsetRate = OnsetRate.ANGULAR) -> float:
    """
    Smallest pressure in mbar with gamma >= omega_z, from the high-energy eta.

    With `onset` = cyclic the threshold is omega_z / 2 pi instead, which
    lowers p_c by 2 pi. The leading term alone gives p_c proportional to
    T^(2/3) exactly.
    """
    if temperature <= 0:
        raise DomainError("temperature must be positive")
    if omega_z < 0:
        raise DomainError("tunneling frequency must be non-negative")
    mean = mean_v_eta_asymptotic(temperature, beta_bohr, reduced_mass_kg, gas_mass_kg, terms)
    return critical_pressure_from_rate(temperature, omega_z, mean, onset)


def pressure_constant(pressure_mbar: float, temperature: float) -> float:
    """(p / mbar)(T / K)^(-2/3)."""
    return pressure_mbar * temperature ** (-2.0 / 3.0)


def temperature_exponent(temperatures, pressures) -> float:
    """Least-squares slope of ln p against ln T."""
    slope, _ = np.polyfit(np.log(temperatures), np.log(pressures), 1)
    return float(slope)
