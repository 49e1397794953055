"""
High-energy approximations: power-law Born cross sections, the
exponential-Born decoherence integral and its asymptotic expansion, and the
coupling length beta.

In the exponential-Born picture the elastic ground-state element of the
J-block S-matrix is cos of the rms coupling phase, which for the r^-7
coupling |<0|dV|1>| = beta^5 / (2 m r^7) gives

    eta = (4 pi / k^2) Int_{1/2}^inf dJ (2J+1) sin^2( x0 (k beta)^5 G(J) ),
    G(J) = Gamma(J - 1/2) / Gamma(J + 11/2),

with x0 = 5 pi / 128. Its large-k beta expansion is
eta = c1 beta^(5/3) k^(-1/3) - c2 beta^(5/6) k^(-7/6).
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import digamma, gamma, gammaln

from channels import Channel, ChannelBasis, Truncation, multipole_matrix, rotor_factor
from dispersion import PotentialSurface, angular_expansion
from errors import ConvergenceError, DomainError
from rotor import RotorState

PHASE_PREFACTOR = 5.0 * math.pi / 128.0
# Prefactor for which the closed-form coefficients equal the quoted c1, c2.
HALF_PHASE_PREFACTOR = 5.0 * math.pi / 256.0
C1 = 3.66
C2 = 14.4
COUPLING_TOLERANCE = 1e-12


def _sine_moment(mu: float) -> float:
    """Int_0^inf x^(mu-1) sin^2 x dx for -2 < mu < 0."""
    return -gamma(mu) * math.cos(mu * math.pi / 2.0) / 2.0 ** (mu + 1.0)


def born_factor(n: int) -> float:
    """p_n of sigma = p_n (C_n / v)^(2/(n-1)) in atomic units."""
    if n < 3:
        raise DomainError("power-law cross sections need n >= 3")
    mu = -2.0 / (n - 1)
    radial = 0.5 * math.sqrt(math.pi) * gamma((n - 1) / 2.0) / gamma(n / 2.0)
    return 4.0 * math.pi * (2.0 / (n - 1)) * _sine_moment(mu) * radial ** (2.0 / (n - 1))


def born_sigma_power(n: int, c_n: float, energy: float, mass: float) -> float:
    """
    Total cross section (bohr^2) of -C_n / r^n at collision energy `energy`
    (hartree) and reduced mass `mass`, in the exponential-Born approximation.
    """
    if energy <= 0:
        raise DomainError("energy must be positive")
    if c_n < 0:
        raise DomainError("C_n must be non-negative")
    if c_n == 0:
        return 0.0
    velocity = math.sqrt(2.0 * energy / mass)
    return born_factor(n) * (c_n / velocity) ** (2.0 / (n - 1))


def _log_phase(j_total, kbeta: float, prefactor: float):
    return math.log(prefactor) + 5.0 * math.log(kbeta) + gammaln(j_total - 0.5) - gammaln(j_total + 5.5)


def _phase(j_total, kbeta: float, prefactor: float):
    return np.exp(_log_phase(j_total, kbeta, prefactor))


def _phase_at(offset: float, kbeta: float, prefactor: float) -> float:
    return _log_phase(0.5 + math.exp(offset), kbeta, prefactor)


def _solve_j(u: float, kbeta: float, prefactor: float) -> float:
    """J > 1/2 with phase(J) = u; the phase decreases monotonically in J."""
    target = math.log(u)
    lo, hi = -60.0, 20.0
    if _phase_at(hi, kbeta, prefactor) > target:
        raise ConvergenceError("phase does not fall below target within J < 5e8")
    if _phase_at(lo, kbeta, prefactor) < target:
        return 0.5 + math.exp(lo)
    offset = brentq(lambda t: _phase_at(t, kbeta, prefactor) - target, lo, hi, xtol=1e-14, rtol=1e-14)
    return 0.5 + math.exp(offset)


def eta_exponential_born(k: float, beta: float, prefactor: float = PHASE_PREFACTOR) -> float:
    """
    The exponential-Born decoherence cross section in bohr^2.

    The J range is split where the phase equals pi. Below, sin^2 is written
    as (1 - cos 2u)/2 and the cosine part is integrated over the phase u with
    a Fourier-weighted rule; above, the integrand decays as J^-11.

    Raises:
        ConvergenceError: A quadrature reports failure
    """
    if k <= 0:
        raise DomainError("wavenumber must be positive")
    if beta < 0:
        raise DomainError("beta must be non-negative")
    if beta == 0:
        return 0.0
    kbeta = k * beta

    j_c = _solve_j(math.pi, kbeta, prefactor)

    def weight(u):
        j_total = _solve_j(u, kbeta, prefactor)
        slope = u * (digamma(j_total - 0.5) - digamma(j_total + 5.5))
        return (2.0 * j_total + 1.0) / abs(slope)

    scale = j_c**2 + 1.0
    cosine, cos_error = quad(weight, math.pi, math.inf, weight="cos", wvar=2.0, limlst=100, epsabs=1e-12 * scale)
    oscillating = 0.5 * (j_c**2 + j_c - 0.75) - 0.5 * cosine

    def tail_integrand(j_total):
        return (2.0 * j_total + 1.0) * math.sin(_phase(j_total, kbeta, prefactor)) ** 2

    tail, tail_error = quad(tail_integrand, j_c, math.inf, limit=200, epsabs=0.0, epsrel=1e-10)
    total = oscillating + tail
    if abs(cos_error) + abs(tail_error) > 1e-4 * abs(total) + 1e-10 * scale:
        raise ConvergenceError("exponential-Born quadrature did not converge",
                               estimate=abs(cos_error) + abs(tail_error))
    return 4.0 * math.pi / k**2 * total


def asymptotic_coefficients(prefactor: float = PHASE_PREFACTOR) -> tuple[float, float]:
    """
    Closed-form (c1, c2) of the large-k beta expansion for a given phase
    prefactor. The second term comes from 2J+1 = 2(J+2) - 3 together with
    G(J) ~ (J+2)^-6.
    """
    c1 = 4.0 * math.pi * prefactor ** (1.0 / 3.0) / 3.0 * _sine_moment(-1.0 / 3.0)
    c2 = 4.0 * math.pi * 3.0 * prefactor ** (1.0 / 6.0) / 6.0 * _sine_moment(-1.0 / 6.0)
    return c1, c2


def eta_asymptotic(k: float, beta: float, c1: float = C1, c2: float = C2) -> float:
    """
    Two-term asymptotic eta in bohr^2.

    Raises:
        DomainError: k beta too small for a positive result
    """
    if k <= 0 or beta < 0:
        raise DomainError("k must be positive and beta non-negative")
    if beta == 0:
        return 0.0
    value = c1 * beta ** (5.0 / 3.0) / k ** (1.0 / 3.0) - c2 * beta ** (5.0 / 6.0) / k ** (7.0 / 6.0)
    if value <= 0:
        raise DomainError(f"asymptotic eta is negative at k beta = {k * beta:.3g}")
    return value


def refit_asymptotic_coefficients(kbeta_values, prefactor: float = PHASE_PREFACTOR) -> tuple[float, float]:
    """
    Least-squares (c1, c2) from eta_exponential_born at beta = 1, with a
    third (k beta)^-5/3 term absorbing the next order.
    """
    x = np.asarray(kbeta_values, dtype=float)
    scaled = np.array([eta_exponential_born(k, 1.0, prefactor) * k ** (1.0 / 3.0) for k in x])
    design = np.column_stack([np.ones_like(x), -x ** (-5.0 / 6.0), x ** (-5.0 / 3.0)])
    solution, *_ = np.linalg.lstsq(design, scaled, rcond=None)
    return float(solution[0]), float(solution[1])


def _difference_multipoles(left: PotentialSurface, right: PotentialSurface) -> dict[tuple[int, int], complex]:
    a = angular_expansion(left)[7]
    b = angular_expansion(right)[7]
    keys = set(a) | set(b)
    return {key: a.get(key, 0.0) - b.get(key, 0.0) for key in sorted(keys)}


def first_coupled_level(left: PotentialSurface, right: PotentialSurface, levels: list[RotorState],
                        initial: tuple[int, int] = (0, 0), j: int | None = None) -> RotorState:
    """
    Lowest level (optionally of a given j) reached from `initial` by the
    r^-7 part of V_L - V_R.

    Raises:
        DomainError: No level in `levels` is coupled
    """
    difference = _difference_multipoles(left, right)
    start = next(lv for lv in levels if lv.key == tuple(initial))
    scale = max((abs(v) for v in difference.values()), default=0.0)
    for level in sorted(levels, key=lambda lv: (lv.energy, lv.j, lv.tau)):
        if level.key == start.key or (j is not None and level.j != j):
            continue
        # mu terms of one lambda share the orbital factor and may cancel
        per_lambda: dict[int, complex] = {}
        for (lam, mu), v in difference.items():
            per_lambda[lam] = per_lambda.get(lam, 0.0) + v * rotor_factor(start, level, lam, mu)
        strength = sum(abs(v) for v in per_lambda.values())
        if strength > COUPLING_TOLERANCE * max(scale, 1e-300):
            return level
    raise DomainError("no level is coupled to the initial state by the chiral interaction")


def beta_parameter(left: PotentialSurface, right: PotentialSurface, levels: list[RotorState], mass: float,
                   initial: tuple[int, int] = (0, 0), level: RotorState | None = None,
                   j_total: int = 10) -> float:
    """
    beta in bohr from 2 m |<initial, l0=J| dV7 |level>| = beta^5, the norm
    taken over all l' of the coupled level at total J.

    Returns 0 when V_L = V_R.
    """
    difference = _difference_multipoles(left, right)
    if not difference or max(abs(v) for v in difference.values()) == 0.0:
        return 0.0
    start = next(lv for lv in levels if lv.key == tuple(initial))
    if start.j != 0:
        raise DomainError("beta is defined for a j = 0 initial state")
    target = level or first_coupled_level(left, right, levels, initial)

    channels = [Channel(0, start.j, start.tau, j_total, start.energy, start.parity)]
    channels += [Channel(1, target.j, target.tau, l, target.energy, target.parity)
                 for l in range(abs(j_total - target.j), j_total + target.j + 1)]
    basis = ChannelBasis(j_total, None, target.energy, tuple(channels), (start, target),
                         Truncation(e_closed_max=0.0, j_max=target.j))
    matrix = multipole_matrix(basis, difference)
    coupling = math.sqrt(float(np.sum(matrix[0, 1:] ** 2)))
    return (2.0 * mass * coupling) ** 0.2


@dataclass(frozen=True)
class HighEnergyParams:
    """k (1/bohr), beta (bohr), reduced mass (m_e) and C6 (a.u.) at one energy."""
    k: float
    beta: float
    mass: float
    c6: float

    def __post_init__(self):
        if self.k <= 0 or self.mass <= 0:
            raise DomainError("k and the reduced mass must be positive")
        if self.beta < 0 or self.c6 < 0:
            raise DomainError("beta and C6 must be non-negative")

    @classmethod
    def at_energy(cls, energy: float, beta: float, mass: float, c6: float) -> "HighEnergyParams":
        return cls(k=math.sqrt(2.0 * mass * energy), beta=beta, mass=mass, c6=c6)

    @property
    def energy(self) -> float:
        return self.k**2 / (2.0 * self.mass)

    def sweep_row(self, prefactor: float = PHASE_PREFACTOR, c1: float = C1, c2: float = C2) -> dict[str, float]:
        try:
            asymptotic = eta_asymptotic(self.k, self.beta, c1, c2)
        except DomainError:
            asymptotic = math.nan
        return {
            "eta_born_integral": eta_exponential_born(self.k, self.beta, prefactor),
            "eta_asymptotic": asymptotic,
            "sigma_born": born_sigma_power(6, self.c6, self.energy, self.mass),
        }
