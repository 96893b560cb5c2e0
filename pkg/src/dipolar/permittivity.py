"""Permittivity and refractive index of homogeneous surroundings."""

from dataclasses import dataclass, field
from typing import Tuple, Union

import numpy as np

from .errors import DomainError, ModelError


def _check_frequency(omega):
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError(f"angular frequency must be positive, got {omega.min()}")
    return omega


class PermittivityModel:
    """Base class: subclasses implement `permittivity(omega)` for real ω."""

    def permittivity(self, omega):
        raise NotImplementedError

    def evaluate(self, omega):
        """ε(ω) = ε_R + iε_I for ω > 0, scalar or array."""
        omega = _check_frequency(omega)
        eps = np.asarray(self.permittivity(omega), dtype=complex)
        return eps[()] if eps.ndim == 0 else eps

    def refractive_index(self, omega):
        """n = √ε with n_I ≥ 0."""
        eps = np.asarray(self.evaluate(omega), dtype=complex)
        n = np.sqrt(eps)
        # numpy puts ε = x - 0j on the lower branch
        n = np.where(n.imag < 0, -n, n)
        lossless = (eps.imag == 0) & (eps.real > 0)
        n = np.where(lossless, np.sqrt(np.abs(eps.real)) + 0j, n)
        return n[()] if n.ndim == 0 else n


@dataclass(frozen=True)
class Vacuum(PermittivityModel):
    def permittivity(self, omega):
        return np.ones_like(np.asarray(omega, dtype=float)) + 0j


@dataclass(frozen=True)
class ConstantPermittivity(PermittivityModel):
    """Frequency-independent ε = ε_R + iε_I."""

    eps_real: float
    eps_imag: float = 0.0

    def __post_init__(self):
        if self.eps_imag < 0:
            raise ModelError(f"passive medium needs eps_imag >= 0, got {self.eps_imag}")

    def permittivity(self, omega):
        return np.full_like(np.asarray(omega, dtype=float), self.eps_real, dtype=complex) + 1j * self.eps_imag


@dataclass(frozen=True)
class Oscillator:
    """One Drude-Lorentz term; resonance = 0 gives a Drude (free-carrier) term."""

    plasma: float
    resonance: float
    damping: float

    def __post_init__(self):
        if self.plasma < 0 or self.resonance < 0 or self.damping < 0:
            raise ModelError(f"oscillator parameters must be non-negative: {self}")


@dataclass(frozen=True)
class DrudeLorentz(PermittivityModel):
    """ε(ω) = 1 + Σ_j ω_P,j² / (ω_T,j² − ω² − iγ_jω)

    Example
    -------
    >>> model = DrudeLorentz.single(plasma=0.5e15, resonance=1e15, damping=1e13)
    >>> model.evaluate(1e15)
    """

    oscillators: Tuple[Oscillator, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "oscillators", tuple(self.oscillators))

    @classmethod
    def single(cls, plasma: float, resonance: float, damping: float):
        return cls((Oscillator(plasma, resonance, damping),))

    def permittivity(self, omega):
        omega = np.asarray(omega, dtype=float)
        eps = np.ones_like(omega, dtype=complex)
        for osc in self.oscillators:
            eps = eps + osc.plasma**2 / (osc.resonance**2 - omega**2 - 1j * osc.damping * omega)
        return eps

    def static_permittivity(self) -> float:
        """ω → 0 limit; infinite when a Drude term is present."""
        if any(osc.resonance == 0 and osc.plasma > 0 for osc in self.oscillators):
            return float("inf")
        return 1.0 + sum(osc.plasma**2 / osc.resonance**2 for osc in self.oscillators if osc.plasma > 0)


Medium = Union[Vacuum, ConstantPermittivity, DrudeLorentz]


def evaluate(model: PermittivityModel, omega):
    """Complex permittivity of `model` at ω > 0."""
    return model.evaluate(omega)


def refractive_index(model: PermittivityModel, omega):
    """Complex refractive index of `model` at ω > 0 on the branch n_I ≥ 0."""
    return model.refractive_index(omega)
