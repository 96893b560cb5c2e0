"""Coupling coefficients of two atoms in a Green-tensor environment.

Indices follow the rotating-frame amplitude equations: Γ[i, j] = Γ_{i*j},
δ[i, j] = δ_{i*j} and 𝒦[i, j] = 𝒦_{i*j}, so that Ċ = 𝒦C when the shifted
frequencies coincide. The diagonal of 𝒦 is −Γ_ii/2; single-atom shifts are carried
by the shifted frequencies ω̃ and repeated on the diagonal of δ.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import DomainError, ModelError, ReflectionDataWarning
from .green import GreenSource, Pair
from .quadrature import pv_integral_complex, regular_integral
from .units import EPSILON_0, HBAR, C, coupling_prefactor

logger = logging.getLogger(__name__)

#: relative frequency difference below which the mid-frequency is used
MID_FREQUENCY_TOLERANCE = 1e-3
#: default resonant window around ω̃ for the PV split, in line widths
SPLIT_LINEWIDTHS = 10.0
#: frequency support relative to ω̃ for sources without a band of their own
DEFAULT_BAND = (0.5, 1.5)


@dataclass(frozen=True, eq=False)
class Atom:
    """A two-level atom: position (m), complex dipole (C·m), bare and shifted frequency (rad/s)."""

    label: str
    position: np.ndarray
    dipole: np.ndarray
    frequency: float
    shifted_frequency: Optional[float] = None

    def __post_init__(self):
        position = np.asarray(self.position, dtype=float)
        dipole = np.asarray(self.dipole, dtype=complex)
        if position.shape != (3,) or dipole.shape != (3,):
            raise ModelError(f"atom {self.label}: position and dipole must be 3-vectors")
        if not np.any(dipole):
            raise ModelError(f"atom {self.label}: dipole must be non-zero")
        if not self.frequency > 0:
            raise ModelError(f"atom {self.label}: transition frequency must be positive")
        if self.shifted_frequency is not None and not self.shifted_frequency > 0:
            raise ModelError(f"atom {self.label}: shifted frequency must be positive")
        object.__setattr__(self, "position", position)
        object.__setattr__(self, "dipole", dipole)

    @property
    def omega_tilde(self) -> float:
        return self.frequency if self.shifted_frequency is None else self.shifted_frequency

    def with_shift(self, shift: float) -> "Atom":
        """ω̃ = ω − δ_{A*A}"""
        return replace(self, shifted_frequency=self.frequency - shift)

    def scaled(self, factor: complex) -> "Atom":
        return replace(self, dipole=self.dipole * factor)


class AtomConfig:
    """Ordered collection of atoms; coefficient matrices use this order."""

    def __init__(self, atoms: Sequence[Atom]):
        self.atoms = tuple(atoms)
        if not self.atoms:
            raise ModelError("at least one atom is required")
        labels = [atom.label for atom in self.atoms]
        if len(set(labels)) != len(labels):
            raise ModelError(f"atom labels must be unique, got {labels}")

    def __len__(self):
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def __getitem__(self, key: Union[int, str]) -> Atom:
        if isinstance(key, str):
            for atom in self.atoms:
                if atom.label == key:
                    return atom
            raise KeyError(key)
        return self.atoms[key]

    def __repr__(self):
        return f"AtomConfig({[atom.label for atom in self.atoms]})"

    @property
    def labels(self):
        return [atom.label for atom in self.atoms]

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([atom.omega_tilde for atom in self.atoms])

    def pair(self, i: int, j: int) -> Pair:
        a, b = self.atoms[i], self.atoms[j]
        return Pair(a.label, b.label, tuple(a.position), tuple(b.position))

    def mid_frequency(self) -> Optional[float]:
        """(ω̃_A + ω̃_B)/2 when the shifted frequencies nearly coincide."""
        w = self.frequencies
        if len(w) > 1 and np.ptp(w) < MID_FREQUENCY_TOLERANCE * w.min():
            return float(w.mean())
        return None

    def evaluation_frequency(self, j: int, frequency: Optional[float] = None) -> float:
        """Frequency at which couplings towards atom j are evaluated."""
        if frequency is not None:
            return frequency
        mid = self.mid_frequency()
        return self.atoms[j].omega_tilde if mid is None else mid

    def replace_atom(self, index: int, atom: Atom) -> "AtomConfig":
        atoms = list(self.atoms)
        atoms[index] = atom
        return AtomConfig(atoms)


def coupling_element(d_a, tensor, d_b, omega) -> complex:
    """(ω²/ħε₀c²)·d_a*·T·d_b"""
    d_a = np.asarray(d_a, dtype=complex)
    d_b = np.asarray(d_b, dtype=complex)
    return complex(coupling_prefactor(omega) * (np.conj(d_a) @ np.asarray(tensor) @ d_b))


def decay_matrix(atoms: AtomConfig, source: GreenSource, frequency: Optional[float] = None) -> np.ndarray:
    """Γ_{i*j} = (2ω̃_j²/ħε₀c²)·d_i*·Im G(r_i, r_j, ω̃_j)·d_j

    The diagonal uses the equal-point imaginary part (free-space value plus the
    reflection part where the source has one).
    """
    n = len(atoms)
    gamma = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            w = atoms.evaluation_frequency(j, frequency)
            im = source.im(atoms.pair(i, j), w)
            gamma[i, j] = 2 * coupling_element(atoms[i].dipole, im, atoms[j].dipole, w)
    return gamma


def dd_shift(atoms: AtomConfig, source: GreenSource, frequency: Optional[float] = None) -> np.ndarray:
    """δ_{i*j} = (ω̃_j²/ħε₀c²)·d_i*·Re G(r_i, r_j, ω̃_j)·d_j for i ≠ j, zero diagonal."""
    n = len(atoms)
    delta = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            w = atoms.evaluation_frequency(j, frequency)
            tensor = np.asarray(source.query(atoms.pair(i, j), w))
            delta[i, j] = coupling_element(atoms[i].dipole, tensor.real, atoms[j].dipole, w)
    return delta


def kappa(atoms: AtomConfig, source: GreenSource, frequency: Optional[float] = None,
          check: bool = True) -> np.ndarray:
    """𝒦_{i*j} = i(ω̃_j²/ħε₀c²)·d_i*·G(r_i, r_j, ω̃_j)·d_j off the diagonal, −Γ_ii/2 on it.

    With `check`, asserts 𝒦 = −Γ/2 + iδ against `decay_matrix` and `dd_shift`.
    """
    n = len(atoms)
    gamma = decay_matrix(atoms, source, frequency)
    result = np.diag(-gamma.diagonal() / 2).astype(complex)
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            w = atoms.evaluation_frequency(j, frequency)
            tensor = source.query(atoms.pair(i, j), w)
            result[i, j] = 1j * coupling_element(atoms[i].dipole, tensor, atoms[j].dipole, w)
    if check:
        expected = -gamma / 2 + 1j * dd_shift(atoms, source, frequency)
        scale = max(np.max(np.abs(expected)), np.finfo(float).tiny)
        if np.max(np.abs(result - expected)) > 1e-10 * scale:
            raise ModelError("coupling decomposition K = -Gamma/2 + i delta violated")
    return result


@dataclass(frozen=True)
class PrincipalValueParts:
    """δ⁻ and δ⁺ matrices; δ⁻ is also split into its resonant and off-resonant parts."""

    minus: np.ndarray
    plus: np.ndarray
    minus_resonant: np.ndarray
    minus_off_resonant: np.ndarray
    split: np.ndarray
    band: Tuple[float, float]

    @property
    def total(self) -> np.ndarray:
        """δ⁻ + δ⁺, equal to the Re-G shift by Kramers-Kronig."""
        return self.minus + self.plus


def _spectral_integrand(source, pair, d_a, d_b, reflection_only):
    """(1/πħε₀)(ω²/c²)·d_a*·Im G(ω)·d_b"""
    prefactor = 1 / (np.pi * HBAR * EPSILON_0 * C**2)

    def integrand(w):
        if reflection_only:
            refl = source.reflection(pair, w)
            if refl is None:
                return 0j
            im = np.asarray(refl).imag
        else:
            im = source.im(pair, w)
        return prefactor * w**2 * complex(np.conj(d_a) @ im @ d_b)

    return integrand


def default_band(source: GreenSource, reference: float) -> Tuple[float, float]:
    if source.band is not None:
        return source.band
    return DEFAULT_BAND[0] * reference, DEFAULT_BAND[1] * reference


def pv_components(atoms: AtomConfig, source: GreenSource, band: Optional[Tuple[float, float]] = None,
                  split: Optional[float] = None, window: Optional[float] = None,
                  frequency: Optional[float] = None,
                  split_linewidths: float = SPLIT_LINEWIDTHS) -> PrincipalValueParts:
    """Principal-value components of the shifts.

    δ^∓_{i*j} = (𝒫/πħε₀)∫dω (ω²/c²)·d_i*·Im G(r_i, r_j, ω)·d_j/(ω ∓ ω_pole)

    Off the diagonal the pole sits at the coupling frequency ω̃_j (full G); on the
    diagonal it sits at the bare ω_i and only the reflection part enters.

    Parameters
    ----------
    - band: integration support (rad/s); defaults to the source band, else ω̃ ± 50%
    - split: half width Ω_split of the resonant window; default `split_linewidths` line widths Γ_jj
    - window: PV exclusion half-width passed to `pv_integral`
    """
    n = len(atoms)
    gamma = None
    minus = np.zeros((n, n), dtype=complex)
    plus = np.zeros((n, n), dtype=complex)
    resonant = np.zeros((n, n), dtype=complex)
    off_resonant = np.zeros((n, n), dtype=complex)
    splits = np.zeros(n)
    support = None

    for j in range(n):
        if split is None:
            if gamma is None:
                gamma = decay_matrix(atoms, source, frequency)
            splits[j] = split_linewidths * abs(gamma[j, j])
        else:
            splits[j] = split

    for i in range(n):
        for j in range(n):
            diagonal = i == j
            pole = atoms[i].frequency if diagonal else atoms.evaluation_frequency(j, frequency)
            support = band if band is not None else default_band(source, pole)
            lower, upper = support
            if not lower < pole < upper:
                raise DomainError(f"pole {pole:.6g} outside the integration support ({lower:.6g}, {upper:.6g})")
            f = _spectral_integrand(source, atoms.pair(i, j), atoms[i].dipole, atoms[j].dipole, diagonal)

            minus[i, j] = pv_integral_complex(f, lower, upper, pole, window=window)
            plus[i, j] = (regular_integral(lambda w: np.real(f(w)) / (w + pole), lower, upper)
                          + 1j * regular_integral(lambda w: np.imag(f(w)) / (w + pole), lower, upper))

            inner_lo, inner_hi = max(lower, pole - splits[j]), min(upper, pole + splits[j])
            resonant[i, j] = pv_integral_complex(f, inner_lo, inner_hi, pole, window=window)
            off = 0j
            for lo, hi in ((lower, inner_lo), (inner_hi, upper)):
                if hi > lo:
                    off += (regular_integral(lambda w: np.real(f(w)) / (w - pole), lo, hi)
                            + 1j * regular_integral(lambda w: np.imag(f(w)) / (w - pole), lo, hi))
            off_resonant[i, j] = off
    logger.debug("pv_components band=%s split=%s", support, splits)
    return PrincipalValueParts(minus, plus, resonant, off_resonant, splits, support)


def lamb_shift(atoms: AtomConfig, index: int, source: GreenSource, quantum_correction: bool = False,
               band: Optional[Tuple[float, float]] = None) -> float:
    """Single-atom shift from the reflection part of the Green tensor.

    δ_{A*A} = (ω_A²/ħε₀c²)·d_A*·Re G^R(r_A, r_A, ω_A)·d_A [− 2δ⁺_{A*A}]

    The free-space part is absorbed into the bare frequency, so a source without
    reflection data gives 0 and a `ReflectionDataWarning`.
    """
    atom = atoms[index]
    pair = atoms.pair(index, index)
    refl = source.reflection(pair, atom.frequency)
    if refl is None:
        warnings.warn(f"no reflection Green tensor at atom {atom.label}; single-atom shift set to 0",
                      ReflectionDataWarning)
        return 0.0
    value = coupling_element(atom.dipole, np.asarray(refl).real, atom.dipole, atom.frequency).real
    if quantum_correction:
        lower, upper = band if band is not None else default_band(source, atom.frequency)
        f = _spectral_integrand(source, pair, atom.dipole, atom.dipole, True)
        delta_plus = regular_integral(lambda w: np.real(f(w)) / (w + atom.frequency), lower, upper)
        value -= 2 * delta_plus
    return float(value)


def shifted_atoms(atoms: AtomConfig, source: GreenSource, quantum_correction: bool = False) -> AtomConfig:
    """Apply ω̃ = ω − δ_{A*A} to every atom without a user-fixed shifted frequency."""
    result = atoms
    for i, atom in enumerate(atoms):
        if atom.shifted_frequency is not None:
            continue
        if source.reflection(atoms.pair(i, i), atom.frequency) is None:
            continue
        shift = lamb_shift(atoms, i, source, quantum_correction)
        result = result.replace_atom(i, atom.with_shift(shift))
    return result


class CollectiveParams(NamedTuple):
    gamma_plus: float
    gamma_minus: float
    omega_plus: float
    omega_minus: float


def collective_params(coupling_set: "CouplingSet", linewidth: float) -> CollectiveParams:
    """Γ± = Γ_{A*A} ± Γ_{A*B} and Ω± = √(2Γ±Δω_m).

    The coupling set should be evaluated at the resonance centre ω_m
    (`build_coupling_set(..., frequency=omega_m)`).
    """
    if not linewidth > 0:
        raise ModelError(f"resonance half width must be positive, got {linewidth}")
    gamma_aa = coupling_set.gamma[0, 0].real
    gamma_ab = coupling_set.gamma[0, 1].real
    gamma_plus, gamma_minus = gamma_aa + gamma_ab, gamma_aa - gamma_ab
    tol = 1e-12 * max(abs(gamma_aa), np.finfo(float).tiny)
    for name, value in (("gamma_plus", gamma_plus), ("gamma_minus", gamma_minus)):
        if value < -tol:
            raise ModelError(f"{name} = {value:.6g} < 0: non-physical memory kernel")
    gamma_plus, gamma_minus = max(gamma_plus, 0.0), max(gamma_minus, 0.0)
    return CollectiveParams(gamma_plus, gamma_minus,
                            float(np.sqrt(2 * gamma_plus * linewidth)),
                            float(np.sqrt(2 * gamma_minus * linewidth)))


@dataclass(frozen=True, eq=False)
class CouplingSet:
    """All coupling coefficients of an atom pair.

    gamma, delta and kappa are complex 2×2 arrays; frequencies are the shifted
    transition frequencies ω̃ (rad/s).
    """

    gamma: np.ndarray
    delta: np.ndarray
    kappa: np.ndarray
    frequencies: Tuple[float, float]
    omega_plus: Optional[float] = None
    omega_minus: Optional[float] = None
    linewidth: Optional[float] = None
    metadata: dict = field(default_factory=dict)

    @classmethod
    def from_overrides(cls, gamma_aa: float, gamma_bb: float, gamma_ab: float, delta_ab: float,
                       omega_a: float, omega_b: Optional[float] = None,
                       gamma_ba: Optional[float] = None, delta_ba: Optional[float] = None):
        """Coupling set from directly specified coefficients, no Green tensor involved."""
        if gamma_aa < 0 or gamma_bb < 0:
            raise ModelError("diagonal decay rates must be non-negative")
        gamma_ba = gamma_ab if gamma_ba is None else gamma_ba
        delta_ba = delta_ab if delta_ba is None else delta_ba
        gamma = np.array([[gamma_aa, gamma_ab], [gamma_ba, gamma_bb]], dtype=complex)
        delta = np.array([[0.0, delta_ab], [delta_ba, 0.0]], dtype=complex)
        kappa_matrix = -gamma / 2 + 1j * delta
        omega_b = omega_a if omega_b is None else omega_b
        return cls(gamma, delta, kappa_matrix, (omega_a, omega_b), metadata={"mode": "overrides"})

    def with_collective(self, linewidth: float) -> "CouplingSet":
        params = collective_params(self, linewidth)
        return replace(self, omega_plus=params.omega_plus, omega_minus=params.omega_minus, linewidth=linewidth)

    @property
    def gamma_aa(self) -> float:
        return float(self.gamma[0, 0].real)

    @property
    def gamma_bb(self) -> float:
        return float(self.gamma[1, 1].real)

    @property
    def gamma_ab(self) -> float:
        return float(self.gamma[0, 1].real)

    @property
    def delta_ab(self) -> float:
        return float(self.delta[0, 1].real)

    @property
    def kappa_ab(self) -> complex:
        return complex(self.kappa[0, 1])

    @property
    def kappa_ba(self) -> complex:
        return complex(self.kappa[1, 0])

    @property
    def gamma_plus(self) -> float:
        return self.gamma_aa + self.gamma_ab

    @property
    def gamma_minus(self) -> float:
        return self.gamma_aa - self.gamma_ab

    @property
    def df(self) -> pd.DataFrame:
        """Coefficient table: name, real part, imaginary part."""
        rows = []
        labels = ("A", "B")
        for name, matrix in (("Gamma", self.gamma), ("delta", self.delta), ("K", self.kappa)):
            for i in range(2):
                for j in range(2):
                    value = complex(matrix[i, j])
                    rows.append((f"{name}_{labels[i]}*{labels[j]}", value.real, value.imag))
        rows.append(("omega_tilde_A", self.frequencies[0], 0.0))
        rows.append(("omega_tilde_B", self.frequencies[1], 0.0))
        rows.append(("Gamma_plus", self.gamma_plus, 0.0))
        rows.append(("Gamma_minus", self.gamma_minus, 0.0))
        if self.linewidth is not None:
            rows.append(("linewidth", self.linewidth, 0.0))
            rows.append(("Omega_plus", self.omega_plus, 0.0))
            rows.append(("Omega_minus", self.omega_minus, 0.0))
        return pd.DataFrame(rows, columns=["coefficient", "real", "imag"])


def build_coupling_set(atoms: AtomConfig, source: GreenSource, frequency: Optional[float] = None,
                       linewidth: Optional[float] = None) -> CouplingSet:
    """Coupling set of a two-atom configuration.

    Parameters
    ----------
    - atoms: two atoms; shifted frequencies should already include single-atom shifts
    - source: Green tensor provider
    - frequency: evaluate every coefficient at this frequency (e.g. a resonance centre)
    - linewidth: resonance half width Δω_m; fills Ω± when given
    """
    if len(atoms) != 2:
        raise ModelError(f"coupling sets are built for two atoms, got {len(atoms)}")
    gamma = decay_matrix(atoms, source, frequency)
    delta = dd_shift(atoms, source, frequency)
    delta[np.diag_indices(2)] = [atom.frequency - atom.omega_tilde for atom in atoms]
    kappa_matrix = kappa(atoms, source, frequency)
    result = CouplingSet(gamma, delta, kappa_matrix, tuple(atoms.frequencies),
                         metadata={"mode": "geometry", "source": repr(source)})
    if linewidth is not None:
        result = result.with_collective(linewidth)
    logger.info("coupling set: Gamma_AA=%.6g Gamma_AB=%.6g delta_AB=%.6g",
                result.gamma_aa, result.gamma_ab, result.delta_ab)
    return result
