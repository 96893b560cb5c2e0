"""Classical Green tensor of the surroundings.

Convention: G solves ∇×∇×G − (ω²/c²)ε(ω)G = δ(r − r')𝟙, so that in vacuum
Im G(r, r, ω) = ω/(6πc)𝟙 and Γ = (2ω²/ħε₀c²)·d*·Im G·d is the decay rate in 1/s.
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np

from .errors import DomainError, ModelError
from .permittivity import PermittivityModel, Vacuum
from .tables import GreenTable
from .units import C, EPSILON_0, HBAR

IDENTITY = np.eye(3)


def _vector(r) -> np.ndarray:
    r = np.asarray(r)
    if r.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {r.shape}")
    return r


def _separation(r_a, r_b):
    sep = _vector(r_a).astype(float) - _vector(r_b).astype(float)
    dist = float(np.linalg.norm(sep))
    if dist == 0.0:
        raise DomainError("Green tensor requested at coincident points")
    return dist, sep / dist


def bulk_green(medium: PermittivityModel, r_a, r_b, omega):
    """Green tensor of a homogeneous medium between two distinct points.

    G = (e^{ikR}/4πR)[(1 + (ikR−1)/(kR)²)𝟙 + (3(1−ikR)/(kR)² − 1)R̂⊗R̂],
    k = n(ω)ω/c, R = r_a − r_b.

    Parameters
    ----------
    - medium: permittivity model of the surroundings
    - r_a, r_b: field and source points in m
    - omega: angular frequency (scalar or array) in rad/s

    Returns a (3, 3) complex array, or (n, 3, 3) for an array of frequencies.
    """
    dist, unit = _separation(r_a, r_b)
    omega = np.asarray(omega, dtype=float)
    n = np.asarray(medium.refractive_index(omega))
    kr = n * omega / C * dist
    phase = np.exp(1j * kr) / (4 * np.pi * dist)
    iso = phase * (1 + (1j * kr - 1) / kr**2)
    lon = phase * (3 * (1 - 1j * kr) / kr**2 - 1)
    return iso[..., None, None] * IDENTITY + lon[..., None, None] * np.outer(unit, unit)


def equal_point_im_vacuum(omega):
    """Im G(r, r, ω) of free space, (ω/6πc)𝟙."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError(f"angular frequency must be positive, got {omega.min()}")
    return (omega / (6 * np.pi * C))[..., None, None] * IDENTITY


def asymptotic_delta_short(d_a, d_b, r_a, r_b, medium: PermittivityModel, omega) -> complex:
    """Near-field dipole-dipole shift, ωR/c → 0.

    δ = Re[1/ε]·(3(d_a*·R̂)(d_b·R̂) − d_a*·d_b)/(4πħε₀R³)
    """
    dist, unit = _separation(r_a, r_b)
    da = np.conj(np.asarray(d_a, dtype=complex))
    db = np.asarray(d_b, dtype=complex)
    angular = 3 * (da @ unit) * (db @ unit) - da @ db
    inv_eps = (1 / medium.evaluate(omega)).real
    return inv_eps * angular / (4 * np.pi * HBAR * EPSILON_0 * dist**3)


def asymptotic_delta_long(d_a, d_b, r_a, r_b, medium: PermittivityModel, omega) -> complex:
    """Far-field dipole-dipole shift, ωR/c → ∞.

    δ = ω²(d_a*·d_b − (d_a*·R̂)(d_b·R̂))·cos(n_R ωR/c)·e^{−n_I ωR/c}/(4πħε₀c²R)
    """
    dist, unit = _separation(r_a, r_b)
    da = np.conj(np.asarray(d_a, dtype=complex))
    db = np.asarray(d_b, dtype=complex)
    transverse = da @ db - (da @ unit) * (db @ unit)
    n = medium.refractive_index(omega)
    x = omega * dist / C
    envelope = np.cos(n.real * x) * np.exp(-n.imag * x)
    return omega**2 * transverse * envelope / (4 * np.pi * HBAR * EPSILON_0 * C**2 * dist)


@dataclass(frozen=True)
class Pair:
    """Two labelled points; tensors are G(r_a, r_b)."""

    a: str
    b: str
    r_a: Tuple[float, float, float]
    r_b: Tuple[float, float, float]

    @property
    def equal_point(self) -> bool:
        return self.a == self.b

    def swapped(self) -> "Pair":
        return Pair(self.b, self.a, self.r_b, self.r_a)


class GreenSource:
    """Provider of G(r_a, r_b, ω).

    `query` covers distinct points. For a point with itself only the imaginary part
    (`equal_point_im`) and the reflection part (`reflection`) exist; the divergent
    real vacuum part is absorbed into the bare transition frequency.
    """

    #: frequency support (lower, upper) in rad/s, None when unbounded
    band: Optional[Tuple[float, float]] = None

    def query(self, pair: Pair, omega):
        raise NotImplementedError

    def reflection(self, pair: Pair, omega):
        """Reflection part G^R(r, r, ω), None when the source has none."""
        return None

    def equal_point_im(self, pair: Pair, omega):
        im = equal_point_im_vacuum(omega)
        refl = self.reflection(pair, omega)
        if refl is not None:
            im = im + np.asarray(refl).imag
        return im

    def im(self, pair: Pair, omega):
        """Im G for either distinct or equal points."""
        if pair.equal_point:
            return self.equal_point_im(pair, omega)
        return np.asarray(self.query(pair, omega)).imag


class VacuumGreen(GreenSource):
    def query(self, pair, omega):
        return bulk_green(Vacuum(), pair.r_a, pair.r_b, omega)

    def __repr__(self):
        return "VacuumGreen()"


class BulkGreen(GreenSource):
    """Homogeneous absorbing medium."""

    def __init__(self, medium: PermittivityModel):
        self.medium = medium

    def query(self, pair, omega):
        return bulk_green(self.medium, pair.r_a, pair.r_b, omega)

    def equal_point_im(self, pair, omega):
        """n_R(ω)·(ω/6πc)𝟙.

        Exact for a real index. In an absorbing medium the coincidence limit of Im G
        diverges like Im(1/ε)/R³ (local-field absorption), so this keeps only the
        radiative part n_R times the vacuum value. Rates built on it are an
        approximation there; the self-test checks the Cauchy-Schwarz bound for lossless
        media only.
        """
        n_real = np.asarray(self.medium.refractive_index(omega)).real
        return n_real[..., None, None] * equal_point_im_vacuum(omega)

    def __repr__(self):
        return f"BulkGreen({self.medium!r})"


class TabulatedGreen(GreenSource):
    """Green tensors tabulated over frequency, one table per ordered pair of labels.

    Equal-point tables (`("A", "A")`) hold the reflection part only. A missing
    reverse pair is served from the transpose of the stored one (reciprocity).
    """

    def __init__(self, tables: Mapping[Tuple[str, str], GreenTable]):
        if not tables:
            raise ValueError("TabulatedGreen needs at least one table")
        self.tables: Dict[Tuple[str, str], GreenTable] = dict(tables)
        lower = max(table.interval[0] for table in self.tables.values())
        upper = min(table.interval[1] for table in self.tables.values())
        if lower >= upper:
            raise ValueError("tabulated frequency intervals do not overlap")
        self.band = (lower, upper)

    def _table(self, a, b):
        if (a, b) in self.tables:
            return self.tables[(a, b)], False
        if (b, a) in self.tables:
            return self.tables[(b, a)], True
        return None, False

    def query(self, pair, omega):
        table, transposed = self._table(pair.a, pair.b)
        if table is None:
            raise ModelError(f"no tabulated Green tensor for pair {pair.a}-{pair.b}")
        values = table.get(omega)
        return np.swapaxes(values, -1, -2) if transposed else values

    def reflection(self, pair, omega):
        table = self.tables.get((pair.a, pair.a))
        return None if table is None else table.get(omega)

    def has_reflection(self, label: str) -> bool:
        return (label, label) in self.tables

    def check_reciprocity(self, tol: float = 1e-6):
        """Assert G_ab = G_baᵀ wherever both orders are tabulated."""
        for (a, b), table in self.tables.items():
            if a == b or (b, a) not in self.tables:
                continue
            other = self.tables[(b, a)].get(table.omega)
            scale = np.max(np.abs(table.values))
            err = np.max(np.abs(table.values - np.swapaxes(other, -1, -2)))
            if err > tol * scale:
                raise ModelError(f"tabulated pair {a}-{b} violates reciprocity (max deviation {err:.3g})")

    def __repr__(self):
        return f"TabulatedGreen(pairs={sorted(self.tables)})"


class ResonatorGreen(GreenSource):
    """Single Lorentz-resonance environment.

    G(r_a, r_b, ω) = (c²/ω²)·L(ω)·M_ab with L(ω) = ω₀²/(ω₀² − ω² − iγω) and real
    symmetric coupling tensors M_ab in 1/m³. Near ω₀, Im G is Lorentzian with
    half width γ/2. Equal-point entries are the reflection part.
    """

    def __init__(self, resonance: float, damping: float, couplings: Mapping[Tuple[str, str], np.ndarray],
                 free_space: bool = False, band: Optional[Tuple[float, float]] = None):
        if resonance <= 0 or damping <= 0:
            raise ModelError("resonator needs positive resonance and damping")
        self.resonance = resonance
        self.damping = damping
        self.couplings = {key: np.asarray(value, dtype=float) for key, value in couplings.items()}
        self.free_space = free_space
        self.band = band if band is not None else (1e-3 * resonance, 50 * resonance)

    @property
    def profile(self):
        from .dynamics import ResonanceProfile

        return ResonanceProfile(self.resonance, self.damping / 2)

    def response(self, omega):
        """(c²/ω²)·L(ω)"""
        omega = np.asarray(omega, dtype=float)
        lorentz = self.resonance**2 / (self.resonance**2 - omega**2 - 1j * self.damping * omega)
        return C**2 / omega**2 * lorentz

    def _coupling(self, a, b):
        if (a, b) in self.couplings:
            return self.couplings[(a, b)]
        if (b, a) in self.couplings:
            return self.couplings[(b, a)].T
        return None

    def query(self, pair, omega):
        coupling = self._coupling(pair.a, pair.b)
        result = 0j
        if coupling is not None:
            result = self.response(omega)[..., None, None] * coupling
        if self.free_space:
            result = result + bulk_green(Vacuum(), pair.r_a, pair.r_b, omega)
        elif coupling is None:
            raise ModelError(f"resonator has no coupling for pair {pair.a}-{pair.b}")
        return result

    def reflection(self, pair, omega):
        coupling = self._coupling(pair.a, pair.a)
        if coupling is None:
            return None
        return self.response(omega)[..., None, None] * coupling

    def __repr__(self):
        return f"ResonatorGreen(resonance={self.resonance:.6g}, damping={self.damping:.6g})"


def query(source: GreenSource, pair: Pair, omega):
    """G(r_a, r_b, ω) from any source."""
    return source.query(pair, omega)
