"""Emitted-light spectrum at an observation point.

Spectra are |amplitude|² of the bracketed sums (arbitrary units): only positions,
widths and relative weights carry meaning. Δω_S = ω_S − ω̃_A.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid
from scipy.signal import fftconvolve, find_peaks, peak_prominences, peak_widths

from .coupling import Atom, default_band
from .dynamics import TimeSeries, uniform_step
from .errors import ConvergenceWarning, DomainError, GridError
from .green import GreenSource, Pair
from .quadrature import pv_integral
from .units import C, EPSILON_0

logger = logging.getLogger(__name__)

#: spectral rows evaluated per chunk of the finite-time transform
CHUNK = 128
DEFAULT_POINTS = 2001


@dataclass(frozen=True, eq=False)
class SpectrumSeries:
    """Spectral density S(ω_S) on a strictly increasing grid of setting frequencies."""

    omega: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        omega = np.asarray(self.omega, dtype=float)
        if omega.ndim != 1 or len(omega) < 2 or not np.all(np.diff(omega) > 0):
            raise GridError("spectrum grid must be strictly increasing")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    @property
    def df(self) -> pd.DataFrame:
        return pd.DataFrame({"omega_S": self.omega, "S": self.values})

    def integrated(self) -> float:
        return float(trapezoid(self.values, self.omega))


@dataclass(frozen=True, eq=False)
class EmissionVector:
    """Emission vectors of both atoms: F (weak coupling) and optionally W (strong coupling)."""

    f_a: np.ndarray
    f_b: np.ndarray
    w_a: Optional[np.ndarray] = None
    w_b: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("f_a", "f_b", "w_a", "w_b"):
            value = getattr(self, name)
            if value is None:
                continue
            value = np.atleast_1d(np.asarray(value, dtype=complex))
            if not np.all(np.isfinite(value)):
                raise DomainError(f"emission vector {name} has non-finite entries")
            object.__setattr__(self, name, value)


def _observation_pair(observation, atom: Atom, label: str) -> Pair:
    return Pair(label, atom.label, tuple(np.asarray(observation, dtype=float)), tuple(atom.position))


def emission_vector_weak(source: GreenSource, observation, atom: Atom, omega_tilde: Optional[float] = None,
                         window: Optional[Tuple[float, float]] = None, label: str = "obs") -> np.ndarray:
    """F = (ω̃²/πε₀c²)·[π·Im G(r, r_A, ω̃)·d − i·𝒫∫dω Im G(r, r_A, ω)·d/(ω − ω̃)]

    Parameters
    ----------
    - source: Green source with tensors between the observation point and the atom
    - observation: observation point r (m)
    - atom: emitting atom
    - omega_tilde: line centre, default the atom's shifted frequency
    - window: frequency interval of the PV integral, default the source band or ω̃ ± 50%
    - label: point label used for tabulated sources
    """
    omega_tilde = atom.omega_tilde if omega_tilde is None else omega_tilde
    if window is None:
        window = default_band(source, omega_tilde)
    lower, upper = window
    if not lower < omega_tilde < upper:
        raise DomainError(f"window ({lower:.6g}, {upper:.6g}) excludes the line centre {omega_tilde:.6g}")
    pair = _observation_pair(observation, atom, label)

    def projected(w):
        return np.asarray(source.im(pair, w)) @ atom.dipole

    resonant = np.pi * projected(omega_tilde)
    principal = np.zeros(3, dtype=complex)
    for k in range(3):
        principal[k] = (pv_integral(lambda w: float(np.real(projected(w)[k])), lower, upper, omega_tilde)
                        + 1j * pv_integral(lambda w: float(np.imag(projected(w)[k])), lower, upper, omega_tilde))
    return omega_tilde**2 / (np.pi * EPSILON_0 * C**2) * (resonant - 1j * principal)


def emission_vector_strong(source: GreenSource, observation, atom: Atom, omega_m: float, linewidth: float,
                           rabi: float, label: str = "obs") -> np.ndarray:
    """W = (ω_m²Δω_m/(ε₀c²Ω))·Im G(r, r_A, ω_m)·d"""
    if rabi <= 0:
        raise DomainError("Rabi frequency must be positive")
    pair = _observation_pair(observation, atom, label)
    im = np.asarray(source.im(pair, omega_m))
    return omega_m**2 * linewidth / (EPSILON_0 * C**2 * rabi) * (im @ atom.dipole)


def lorentzian_memory(w, rabi: float, linewidth: float, detuning: float) -> Callable:
    """Emission memory of a Lorentzian resonance, τ ↦ ΩW·e^{−i(ω_m − ω̃)τ}e^{−Δω_m τ}.

    Returns a callable mapping an array of lags to an (n, 3) array.
    """
    w = np.atleast_1d(np.asarray(w, dtype=complex))

    def memory(tau):
        tau = np.asarray(tau, dtype=float)
        return rabi * np.exp((-1j * detuning - linewidth) * tau)[:, None] * w[None, :]

    return memory


def spectrum_grid(omega_a: float, delta_ab: float, gamma_plus: float, rabi: float = 0.0,
                  points: int = DEFAULT_POINTS, span: Optional[float] = None) -> np.ndarray:
    """ω̃_A ± max(10|δ_AB|, 10Γ₊, 2Ω)"""
    if span is None:
        span = max(10 * abs(delta_ab), 10 * gamma_plus, 2 * rabi)
    if span <= 0:
        raise GridError("spectrum span must be positive")
    return np.linspace(omega_a - span, omega_a + span, points)


def _vectors(*values):
    return [np.atleast_1d(np.asarray(v, dtype=complex)) for v in values]


def weak_spectrum(f_a, f_b, delta_ab: float, gamma_plus: float, gamma_minus: float, omega_a: float,
                  omega_s) -> SpectrumSeries:
    """S = ¼|(F_A + F_B)/(Δω_S + δ_AB + iΓ₊/2) + (F_A − F_B)/(Δω_S − δ_AB + iΓ₋/2)|²"""
    f_a, f_b = _vectors(f_a, f_b)
    omega_s = np.asarray(omega_s, dtype=float)
    d = (omega_s - omega_a)[:, None]
    amplitude = (f_a + f_b) / (d + delta_ab + 0.5j * gamma_plus) + (f_a - f_b) / (d - delta_ab + 0.5j * gamma_minus)
    values = 0.25 * np.sum(np.abs(amplitude) ** 2, axis=1)
    return SpectrumSeries(omega_s, values, {"regime": "weak", "omega_tilde": omega_a})


def strong_spectrum(w_a, w_b, f_a, f_b, delta_ab: float, rabi: float, linewidth: float, gamma_weak: float,
                    branch: str, omega_a: float, omega_s) -> SpectrumSeries:
    """Strong-coupling spectrum, one superposition state (`branch`) strongly coupled.

    S = ¼|(W_A ± W_B)[1/(Δω_S ± δ + Ω/2 + iΔω_m/2) − 1/(Δω_S ± δ − Ω/2 + iΔω_m/2)]
          + i(F_A ∓ F_B)/(Δω_S ∓ δ + iΓ_∓/2)|²

    Parameters
    ----------
    - rabi: Ω of the strongly coupled state
    - gamma_weak: Γ of the weakly coupled state
    - branch: "+" or "-"
    """
    if branch not in ("+", "-"):
        raise ValueError(f"branch must be '+' or '-', got {branch!r}")
    s = 1 if branch == "+" else -1
    w_a, w_b, f_a, f_b = _vectors(w_a, w_b, f_a, f_b)
    omega_s = np.asarray(omega_s, dtype=float)
    d = (omega_s - omega_a)[:, None] + s * delta_ab
    split = 1 / (d + rabi / 2 + 0.5j * linewidth) - 1 / (d - rabi / 2 + 0.5j * linewidth)
    weak = 1j * (f_a - s * f_b) / ((omega_s - omega_a)[:, None] - s * delta_ab + 0.5j * gamma_weak)
    values = 0.25 * np.sum(np.abs((w_a + s * w_b) * split + weak) ** 2, axis=1)
    return SpectrumSeries(omega_s, values, {"regime": "strong", "branch": branch, "omega_tilde": omega_a})


def _transform(t, values, detuning):
    """∫₀ᵀ e^{iΔt}·values(t) dt by the trapezoidal rule, one row per Δ."""
    h = uniform_step(t)
    weights = np.full(len(t), h)
    weights[0] = weights[-1] = h / 2
    weighted = values * weights[:, None]
    result = np.empty((len(detuning), values.shape[1]), dtype=complex)
    for start in range(0, len(detuning), CHUNK):
        rows = detuning[start:start + CHUNK]
        result[start:start + CHUNK] = np.exp(1j * rows[:, None] * t[None, :]) @ weighted
    return result


def finite_time_spectrum(series: TimeSeries, omega_s, frequencies: Sequence[float],
                         emission: Optional[EmissionVector] = None,
                         memories: Optional[Sequence[Callable]] = None,
                         duration: Optional[float] = None) -> SpectrumSeries:
    """Spectrum for a finite detector time T from an amplitude series.

    Mode A (`emission`): S = |Σ_A F_A·∫₀ᵀ dt e^{i(ω_S − ω̃_A)t}C_A(t)|², the memory
    integral replaced by its long-time ζ-function limit.
    Mode B (`memories`): S = |Σ_A ∫₀ᵀ dt e^{i(ω_S − ω̃_A)t}∫₀ᵗ dt' M_A(t − t')C_A(t')|² with
    M_A(τ) = ∫dω (ω²/πε₀c²)·Im G(r, r_A, ω)·d_A·e^{−i(ω − ω̃_A)τ} supplied per atom.

    Parameters
    ----------
    - series: amplitudes on a uniform grid starting at 0 and covering [0, T]
    - omega_s: setting frequencies ω_S
    - frequencies: shifted transition frequencies (ω̃_A, ω̃_B)
    - duration: T, default the end of the series
    """
    if (emission is None) == (memories is None):
        raise ValueError("give exactly one of emission (mode A) or memories (mode B)")
    t = np.asarray(series.t, dtype=float)
    if t[0] != 0:
        raise GridError("amplitude series must start at t = 0")
    if duration is not None:
        if duration > t[-1] * (1 + 1e-12):
            raise GridError(f"series ends at {t[-1]:.6g} s, before T = {duration:.6g} s")
        keep = t <= duration * (1 + 1e-12)
    else:
        keep = np.ones(len(t), dtype=bool)
    t = t[keep]
    amplitudes = [np.asarray(series.c_a)[keep], np.asarray(series.c_b)[keep]]
    remaining = abs(amplitudes[0][-1]) ** 2 + abs(amplitudes[1][-1]) ** 2
    if remaining > np.exp(-3):
        warnings.warn(f"excited-state population {remaining:.3g} left at T: spectrum not converged",
                      ConvergenceWarning)

    omega_s = np.asarray(omega_s, dtype=float)
    h = uniform_step(t)
    total = 0j
    for index, c in enumerate(amplitudes):
        detuning = omega_s - frequencies[index]
        if emission is not None:
            vector = np.atleast_1d(emission.f_a if index == 0 else emission.f_b)
            total = total + _transform(t, c[:, None], detuning) * vector[None, :]
        else:
            kernel = memories[index](t)
            inner = fftconvolve(c[:, None], kernel, axes=0)[: len(t)] * h
            # trapezoidal end corrections of the discrete convolution
            inner -= 0.5 * h * (c[0] * kernel + c[:, None] * kernel[0][None, :])
            total = total + _transform(t, inner, detuning)
    values = np.sum(np.abs(total) ** 2, axis=1)
    mode = "A" if emission is not None else "B"
    logger.debug("finite_time_spectrum mode %s, T=%.6g s, %d frequencies", mode, t[-1], len(omega_s))
    return SpectrumSeries(omega_s, values, {"regime": "finite-T", "mode": mode, "duration": float(t[-1])})


@dataclass(frozen=True)
class Peak:
    position: float
    half_width: float
    weight: float
    height: float

    @property
    def width(self) -> float:
        return 2 * self.half_width


def peak_analysis(series: SpectrumSeries, rel_prominence: float = 1e-3) -> List[Peak]:
    """Local maxima with half widths at half maximum and weights.

    Half widths come from linearly interpolated half-maximum crossings; weights
    integrate S between the adjacent minima.
    """
    values = series.values
    top = np.max(values) if len(values) else 0.0
    if top <= 0:
        return []
    peaks, _ = find_peaks(values, prominence=rel_prominence * top)
    if len(peaks) == 0:
        return []
    _, left_bases, right_bases = peak_prominences(values, peaks)
    # reference the crossings to zero so they sit at half the peak value
    widths, _, _, _ = peak_widths(values, peaks, rel_height=0.5,
                                  prominence_data=(values[peaks], left_bases, right_bases))
    step = np.diff(series.omega).mean()

    bounds = [0]
    for left, right in zip(peaks[:-1], peaks[1:]):
        bounds.append(left + int(np.argmin(values[left:right + 1])))
    bounds.append(len(values) - 1)

    result = []
    for k, peak in enumerate(peaks):
        lo, hi = bounds[k], bounds[k + 1]
        weight = trapezoid(values[lo:hi + 1], series.omega[lo:hi + 1])
        result.append(Peak(float(series.omega[peak]), float(widths[k] * step / 2), float(weight),
                           float(values[peak])))
    return result
