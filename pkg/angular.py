"""
Angular momentum algebra: Wigner 3j and 6j symbols, Clebsch-Gordan
coefficients and spherical harmonics.

Symbols are evaluated from Racah's single-sum formulas with log-factorials,
so they stay finite well beyond j = 60. Angular momenta are passed as
HalfInt, int or float; internally every value is held as the integer 2j.
The Condon-Shortley phase is used throughout.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln, lpmv

from errors import DomainError


@dataclass(frozen=True, order=True)
class HalfInt:
    """An integer or half-integer angular momentum stored as twice its value."""
    twice_value: int

    @classmethod
    def of(cls, value: "HalfInt | int | float") -> "HalfInt":
        if isinstance(value, HalfInt):
            return value
        twice = 2 * value
        if abs(twice - round(twice)) > 1e-9:
            raise DomainError(f"{value} is not a multiple of 1/2")
        return cls(int(round(twice)))

    @property
    def is_integer(self) -> bool:
        return self.twice_value % 2 == 0

    def __float__(self) -> float:
        return self.twice_value / 2

    def __int__(self) -> int:
        if not self.is_integer:
            raise DomainError(f"{self} is half-integer")
        return self.twice_value // 2

    def __repr__(self) -> str:
        if self.is_integer:
            return f"HalfInt({self.twice_value // 2})"
        return f"HalfInt({self.twice_value}/2)"


def _twice(value: "HalfInt | int | float") -> int:
    return HalfInt.of(value).twice_value


def _log_factorial(n2: int) -> float:
    """log((n2/2)!) for an even twice-value n2."""
    return float(gammaln(n2 // 2 + 1))


def _triangle_ok(a: int, b: int, c: int) -> bool:
    # Twice-values: parity of the sum must be even and |a-b| <= c <= a+b.
    return (a + b + c) % 2 == 0 and abs(a - b) <= c <= a + b


def _log_delta(a: int, b: int, c: int) -> float:
    return (_log_factorial(a + b - c) + _log_factorial(a - b + c)
            + _log_factorial(-a + b + c) - _log_factorial(a + b + c + 2))


def _signed_sum(log_terms: list[float], signs: list[int]) -> float:
    if not log_terms:
        return 0.0
    top = max(log_terms)
    return math.exp(top) * math.fsum(s * math.exp(t - top) for s, t in zip(signs, log_terms))


@lru_cache(maxsize=200_000)
def _wigner3j_twice(j1: int, j2: int, j3: int, m1: int, m2: int, m3: int) -> float:
    if m1 + m2 + m3 != 0:
        return 0.0
    if not _triangle_ok(j1, j2, j3):
        return 0.0
    for j, m in ((j1, m1), (j2, m2), (j3, m3)):
        if abs(m) > j or (j + m) % 2:
            return 0.0

    # Racah formula, everything in twice units; k runs over integers.
    k_min = max(0, (j2 - j3 - m1) // 2, (j1 - j3 + m2) // 2)
    k_max = min((j1 + j2 - j3) // 2, (j1 - m1) // 2, (j2 + m2) // 2)
    if k_min > k_max:
        return 0.0

    prefactor = 0.5 * (_log_delta(j1, j2, j3)
                       + _log_factorial(j1 + m1) + _log_factorial(j1 - m1)
                       + _log_factorial(j2 + m2) + _log_factorial(j2 - m2)
                       + _log_factorial(j3 + m3) + _log_factorial(j3 - m3))

    log_terms, signs = [], []
    for k in range(k_min, k_max + 1):
        k2 = 2 * k
        log_terms.append(prefactor - (
            _log_factorial(k2)
            + _log_factorial(j3 - j2 + k2 + m1)
            + _log_factorial(j3 - j1 + k2 - m2)
            + _log_factorial(j1 + j2 - j3 - k2)
            + _log_factorial(j1 - k2 - m1)
            + _log_factorial(j2 - k2 + m2)))
        signs.append(-1 if k % 2 else 1)

    phase = -1 if ((j1 - j2 - m3) // 2) % 2 else 1
    return phase * _signed_sum(log_terms, signs)


@lru_cache(maxsize=200_000)
def _wigner6j_twice(j1: int, j2: int, j3: int, j4: int, j5: int, j6: int) -> float:
    triads = ((j1, j2, j3), (j1, j5, j6), (j4, j2, j6), (j4, j5, j3))
    if not all(_triangle_ok(*t) for t in triads):
        return 0.0

    a = [sum(t) for t in triads]
    b = [j1 + j2 + j4 + j5, j2 + j3 + j5 + j6, j3 + j1 + j6 + j4]
    t_min = max(a) // 2
    t_max = min(b) // 2

    prefactor = 0.5 * sum(_log_delta(*t) for t in triads)
    log_terms, signs = [], []
    for t in range(t_min, t_max + 1):
        t2 = 2 * t
        log_terms.append(prefactor + _log_factorial(t2 + 2) - (
            sum(_log_factorial(t2 - x) for x in a)
            + sum(_log_factorial(x - t2) for x in b)))
        signs.append(-1 if t % 2 else 1)

    return _signed_sum(log_terms, signs)


def wigner3j(j1, j2, j3, m1, m2, m3) -> float:
    """
    Wigner 3j symbol (j1 j2 j3; m1 m2 m3).

    Returns 0 when the triangle or projection selection rules fail.

    Raises:
        DomainError: If any j is negative
    """
    tj = [_twice(j) for j in (j1, j2, j3)]
    if min(tj) < 0:
        raise DomainError(f"negative angular momentum in 3j({j1}, {j2}, {j3})")
    return _wigner3j_twice(*tj, _twice(m1), _twice(m2), _twice(m3))


def wigner6j(j1, j2, j3, j4, j5, j6) -> float:
    """Wigner 6j symbol {j1 j2 j3; j4 j5 j6}, 0 on triangle violations."""
    tj = [_twice(j) for j in (j1, j2, j3, j4, j5, j6)]
    if min(tj) < 0:
        raise DomainError("negative angular momentum in 6j symbol")
    return _wigner6j_twice(*tj)


def clebsch_gordan(j1, m1, j2, m2, j, m) -> float:
    """<j1 m1 j2 m2 | j m> via the 3j symbol."""
    tj1, tj2, tm = _twice(j1), _twice(j2), _twice(m)
    phase = -1 if ((tj1 - tj2 + tm) // 2) % 2 else 1
    return phase * math.sqrt(_twice(j) + 1) * wigner3j(j1, j2, j, m1, m2, -float(HalfInt.of(m)))


def spherical_harmonic(l, m, theta, phi):
    """
    Spherical harmonic Y_lm(theta, phi) with the Condon-Shortley phase.

    theta and phi may be numpy arrays of matching shape.
    """
    l_int, m_int = int(HalfInt.of(l)), int(HalfInt.of(m))
    if abs(m_int) > l_int:
        raise DomainError(f"|m| > l in Y({l_int}, {m_int})")
    m_abs = abs(m_int)
    norm = math.exp(0.5 * (math.log((2 * l_int + 1) / (4 * math.pi))
                           + gammaln(l_int - m_abs + 1) - gammaln(l_int + m_abs + 1)))
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    value = norm * lpmv(m_abs, l_int, np.cos(theta)) * np.exp(1j * m_abs * phi)
    if m_int < 0:
        value = (-1) ** m_abs * np.conj(value)
    return value
