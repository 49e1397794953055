"""
Rigid asymmetric-top rotor: principal-axis frame, rotational constants,
eigenstates in the symmetric-top basis, and thermal level populations.

Body frame convention: z is the a axis (largest rotational constant). When
the molecule has a C2 axis along b or c, that axis becomes y; otherwise y is
the b axis. x completes a right-handed frame. The Hamiltonian is

    H = A Jz^2 + Bx Jx^2 + By Jy^2

and eigenvectors are expanded over |j, k>, k = -j..j, with rotor functions
proportional to D^{j*}_{mk}. Energies are in hartree, lengths in bohr.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from errors import DomainError
from models import MoleculeDataset
from units import AMU_ME, KELVIN_HARTREE, angstrom_to_bohr

WANG_BLOCKS = ("E+", "E-", "O+", "O-")

# Tolerance (bohr) for matching atoms under a trial C2 rotation.
SYMMETRY_TOLERANCE = 1e-4


@dataclass(frozen=True)
class InertiaFrame:
    """Principal moments (ascending) and the rotation into the body frame.

    `axes` rows are the body x, y, z unit vectors in input coordinates.
    """
    moments: tuple[float, float, float]
    axes: np.ndarray
    center_of_mass: np.ndarray
    c2_axis: str | None


@dataclass(frozen=True)
class RotorSpec:
    """
    Molecule geometry and rotational constants.

    Positions are in bohr in the body frame. `constants` holds (A, B, C) in
    hartree and `axis_constants` the coefficients (Bx, By, A) of the body-axis
    Hamiltonian.
    """
    symbols: tuple[str, ...]
    masses: tuple[float, ...]
    positions: np.ndarray
    constants: tuple[float, float, float]
    axis_constants: tuple[float, float, float]
    bonds: tuple[tuple[int, int], ...] = ()
    name: str = ""
    provenance: str = ""
    c2_axis: str | None = None

    @classmethod
    def from_geometry(
        cls,
        symbols: list[str],
        masses: list[float],
        positions: np.ndarray,
        bonds: list[tuple[int, int]] = (),
        name: str = "",
        provenance: str = "",
    ) -> "RotorSpec":
        """Build a rotor from atoms (masses in amu, positions in bohr)."""
        frame = inertia_frame(masses, positions, list(symbols))
        body = (np.asarray(positions, dtype=float) - frame.center_of_mass) @ frame.axes.T
        a, b, c = _constants_from_moments(frame.moments)
        by, bx = (c, b) if frame.c2_axis == "c" else (b, c)
        return cls(
            symbols=tuple(symbols),
            masses=tuple(float(m) for m in masses),
            positions=body,
            constants=(a, b, c),
            axis_constants=(bx, by, a),
            bonds=tuple(tuple(bond) for bond in bonds),
            name=name,
            provenance=provenance,
            c2_axis=frame.c2_axis,
        )

    @classmethod
    def from_dataset(cls, molecule: MoleculeDataset) -> "RotorSpec":
        """Rotor from a molecule file; positions there are in angstrom."""
        return cls.from_geometry(
            symbols=[atom.symbol for atom in molecule.atoms],
            masses=[atom.mass for atom in molecule.atoms],
            positions=angstrom_to_bohr(np.array([atom.position for atom in molecule.atoms])),
            bonds=[tuple(bond) for bond in molecule.bonds],
            name=molecule.name,
            provenance=molecule.provenance,
        )

    @classmethod
    def from_constants(cls, a: float, b: float, c: float, name: str = "") -> "RotorSpec":
        """Rotor without geometry; y is taken along b."""
        if not a >= b >= c > 0:
            raise DomainError(f"rotational constants must satisfy A >= B >= C > 0, got {a}, {b}, {c}")
        return cls(
            symbols=(), masses=(), positions=np.zeros((0, 3)),
            constants=(a, b, c), axis_constants=(c, b, a), name=name,
        )

    @property
    def total_mass(self) -> float:
        """Total mass in amu."""
        return float(sum(self.masses))

    def inverted(self) -> "RotorSpec":
        """The parity image: every body-frame position negated."""
        return RotorSpec(
            symbols=self.symbols, masses=self.masses, positions=-self.positions,
            constants=self.constants, axis_constants=self.axis_constants,
            bonds=self.bonds, name=f"{self.name} (mirror)",
            provenance=self.provenance, c2_axis=self.c2_axis,
        )


@dataclass(frozen=True)
class RotorState:
    """
    Asymmetric-top eigenstate, a representative of its m-degenerate level.

    `coefficients` run over k = -j..j. `parity` is s(-1)^(j+K) for Wang label
    s and |k| parity K; it is the character under the body C2(y) rotation.
    """
    j: int
    tau: int
    energy: float
    parity: int
    wang: str
    coefficients: np.ndarray = field(repr=False)
    m: int = 0

    @property
    def key(self) -> tuple[int, int]:
        return (self.j, self.tau)

    @property
    def label(self) -> str:
        return f"{self.j}_{self.tau:+d}"


def _principal(masses: np.ndarray, positions: np.ndarray):
    com = masses @ positions / masses.sum()
    rel = positions - com
    tensor = np.zeros((3, 3))
    for m, r in zip(masses, rel):
        tensor += m * (np.dot(r, r) * np.eye(3) - np.outer(r, r))
    moments, vectors = np.linalg.eigh(tensor)
    return com, rel, moments, vectors


def _canonical(v: np.ndarray) -> np.ndarray:
    return v if v[np.argmax(np.abs(v))] > 0 else -v


def _has_c2(axis: np.ndarray, symbols, rel: np.ndarray) -> bool:
    rotated = 2.0 * np.outer(rel @ axis, axis) - rel
    for sym, r in zip(symbols, rotated):
        distances = np.linalg.norm(rel - r, axis=1)
        partners = [i for i, d in enumerate(distances) if d < SYMMETRY_TOLERANCE]
        if not any(symbols[i] == sym for i in partners):
            return False
    return True


def inertia_frame(masses, positions, symbols=None) -> InertiaFrame:
    """
    Principal moments (amu bohr^2, ascending) and body axes.

    Symbols default to the masses rounded to 1e-6 amu, which is enough to
    recognize equivalent atoms for the C2 search.

    Raises:
        DomainError: Fewer than two atoms or non-positive masses
    """
    masses = np.asarray(masses, dtype=float)
    positions = np.asarray(positions, dtype=float).reshape(-1, 3)
    if len(masses) < 2:
        raise DomainError("at least two atoms are needed for an inertia tensor")
    if np.any(masses <= 0):
        raise DomainError("atomic masses must be positive")
    if symbols is None:
        symbols = [f"{m:.6f}" for m in masses]

    com, rel, moments, vectors = _principal(masses, positions)
    e_a, e_b, e_c = (_canonical(vectors[:, i]) for i in range(3))

    c2_axis = None
    if _has_c2(e_b, symbols, rel):
        c2_axis = "b"
    elif _has_c2(e_c, symbols, rel):
        c2_axis = "c"

    y = e_c if c2_axis == "c" else e_b
    z = e_a
    x = np.cross(y, z)
    axes = np.vstack([x, y, z])
    return InertiaFrame(tuple(float(i) for i in moments), axes, com, c2_axis)


def _constants_from_moments(moments) -> tuple[float, float, float]:
    i_a, i_b, i_c = (m * AMU_ME for m in moments)
    scale = max(moments)
    if moments[0] < 1e-10 * scale:
        raise DomainError("collinear geometry: the a-axis moment vanishes")
    return 1.0 / (2.0 * i_a), 1.0 / (2.0 * i_b), 1.0 / (2.0 * i_c)


def moments_of_inertia(masses, positions, allow_linear: bool = False) -> tuple[float, float, float]:
    """
    Rotational constants (A, B, C) in hartree from masses (amu) and
    positions (bohr).

    A collinear geometry raises DomainError unless allow_linear is set, in
    which case A is returned as infinity.
    """
    moments = inertia_frame(masses, positions).moments
    if allow_linear and moments[0] < 1e-10 * max(moments):
        b = 1.0 / (2.0 * moments[2] * AMU_ME)
        return math.inf, b, b
    return _constants_from_moments(moments)


def asymmetry_parameter(a: float, b: float, c: float) -> float:
    """Ray's asymmetry parameter, -1 for a prolate and +1 for an oblate top."""
    return (2.0 * b - a - c) / (a - c)


def symmetric_top_hamiltonian(spec: RotorSpec, j: int) -> np.ndarray:
    """H over |j, k>, k = -j..j."""
    bx, by, a = spec.axis_constants
    ks = np.arange(-j, j + 1)
    jj = j * (j + 1)
    h = np.diag(0.5 * (bx + by) * (jj - ks**2) + a * ks**2).astype(float)
    off = 0.25 * (bx - by)
    for i, k in enumerate(ks[:-2]):
        value = off * math.sqrt(jj - k * (k + 1)) * math.sqrt(jj - (k + 1) * (k + 2))
        h[i + 2, i] = h[i, i + 2] = value
    return h


def wang_transform(j: int) -> dict[str, np.ndarray]:
    """Columns spanning each Wang block, expressed over k = -j..j."""
    size = 2 * j + 1
    blocks: dict[str, list[np.ndarray]] = {name: [] for name in WANG_BLOCKS}
    root = 1.0 / math.sqrt(2.0)
    for kk in range(0, j + 1):
        kind = "E" if kk % 2 == 0 else "O"
        if kk == 0:
            v = np.zeros(size)
            v[j] = 1.0
            blocks["E+"].append(v)
            continue
        for s, sign in (("+", 1.0), ("-", -1.0)):
            v = np.zeros(size)
            v[j + kk] = root
            v[j - kk] = sign * root
            blocks[kind + s].append(v)
    return {name: np.array(cols).T if cols else np.zeros((size, 0)) for name, cols in blocks.items()}


def rotor_levels(spec: RotorSpec, j_max: int) -> list[RotorState]:
    """
    Asymmetric-top levels for j = 0..j_max, 2j+1 per j, energy ordered with
    tau = -j..j. Ties are broken by the Wang block order E+, E-, O+, O-.
    """
    if j_max < 0:
        raise DomainError("j_max must be non-negative")

    levels = []
    for j in range(j_max + 1):
        h = symmetric_top_hamiltonian(spec, j)
        found = []
        for order, (name, w) in enumerate(wang_transform(j).items()):
            if w.shape[1] == 0:
                continue
            energies, vectors = np.linalg.eigh(w.T @ h @ w)
            k_parity = 0 if name[0] == "E" else 1
            s = 1 if name[1] == "+" else -1
            parity = s * (-1) ** (j + k_parity)
            for e, v in zip(energies, vectors.T):
                c = w @ v
                c = c * (1.0 if c[np.argmax(np.abs(c))] > 0 else -1.0)
                found.append((float(e), order, name, parity, c))
        found.sort(key=lambda item: (item[0], item[1]))
        for tau, (e, _, name, parity, c) in zip(range(-j, j + 1), found):
            levels.append(RotorState(j=j, tau=tau, energy=e, parity=parity, wang=name, coefficients=c))
    return levels


def boltzmann_weights(levels: list[RotorState], temperature: float) -> dict[tuple[int, int], float]:
    """
    Thermal weights (2j+1) exp(-E / kT), normalized over the given levels.

    Raises:
        DomainError: Empty level set or negative temperature
    """
    if not levels:
        raise DomainError("no rotor levels to weight")
    if temperature < 0:
        raise DomainError("temperature must be non-negative")

    energies = np.array([lv.energy for lv in levels])
    degeneracy = np.array([2 * lv.j + 1 for lv in levels], dtype=float)
    shifted = energies - energies.min()
    if temperature == 0:
        raw = np.where(shifted <= 1e-15, degeneracy, 0.0)
    else:
        raw = degeneracy * np.exp(-shifted / (temperature * KELVIN_HARTREE))
    raw /= raw.sum()
    return {lv.key: float(w) for lv, w in zip(levels, raw)}
