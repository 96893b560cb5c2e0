"""Single-excitation dynamics of the atom pair.

Amplitudes are slowly varying (rotating-frame) quantities: C_A = 1, C_B = 0 at t = 0.
The superposition amplitudes are C_± = (C_A ± C_B)/√2.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from .coupling import MID_FREQUENCY_TOLERANCE, CouplingSet
from .errors import BranchError, GridError, ModelError, RegimeWarning, StabilityError
from .projection import Projection

logger = logging.getLogger(__name__)

SQRT_HALF = np.sqrt(0.5)
#: RK4 is stable for |hλ| up to about 2.78 on the negative real axis
RK4_STABILITY = 2.5


def uniform_step(t) -> float:
    """Step of a uniform, increasing time grid; `GridError` otherwise."""
    t = np.asarray(t, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise GridError("time grid needs at least two points")
    steps = np.diff(t)
    h = steps[0]
    if h <= 0 or np.max(np.abs(steps - h)) > 1e-9 * max(h, abs(t[-1]) * 1e-6):
        raise GridError("time grid must be uniform and increasing")
    return float(h)


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """Amplitude trajectories on a time grid (s)."""

    t: np.ndarray
    c_a: np.ndarray
    c_b: np.ndarray
    c_plus: Optional[np.ndarray] = None
    c_minus: Optional[np.ndarray] = None
    label: str = ""

    @property
    def p_a(self) -> np.ndarray:
        return np.abs(self.c_a) ** 2

    @property
    def p_b(self) -> np.ndarray:
        return np.abs(self.c_b) ** 2

    @property
    def df(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.t,
            "Re(C_A)": self.c_a.real,
            "Im(C_A)": self.c_a.imag,
            "Re(C_B)": self.c_b.real,
            "Im(C_B)": self.c_b.imag,
            "P_A": self.p_a,
            "P_B": self.p_b,
        })

    def probability_violation(self) -> float:
        """Largest excursion outside 0 ≤ P_A, P_B and P_A + P_B ≤ 1."""
        total = self.p_a + self.p_b
        return float(max(np.max(total) - 1.0, -np.min(self.p_a), -np.min(self.p_b), 0.0))

    def check_probability(self, tol: float = 1e-9):
        violation = self.probability_violation()
        if violation > tol:
            raise ModelError(f"{self.label or 'series'}: probability bound violated by {violation:.3g}")
        return self


@dataclass(frozen=True, eq=False)
class DensityMatrixSeries:
    """Single-excitation density-matrix block ϱ[n] = [[ϱ_AA, ϱ_AB], [ϱ_BA, ϱ_BB]]."""

    t: np.ndarray
    rho: np.ndarray

    @property
    def rho_aa(self):
        return self.rho[:, 0, 0].real

    @property
    def rho_bb(self):
        return self.rho[:, 1, 1].real

    @property
    def rho_ab(self):
        return self.rho[:, 0, 1]

    @property
    def df(self) -> pd.DataFrame:
        return pd.DataFrame({
            "t": self.t,
            "rho_AA": self.rho_aa,
            "rho_BB": self.rho_bb,
            "Re(rho_AB)": self.rho_ab.real,
            "Im(rho_AB)": self.rho_ab.imag,
        })


@dataclass(frozen=True)
class ResonanceProfile:
    """Lorentzian field resonance: centre ω_m and half width Δω_m (rad/s)."""

    center: float
    linewidth: float

    def __post_init__(self):
        if not self.linewidth > 0:
            raise ModelError(f"resonance half width must be positive, got {self.linewidth}")
        if not self.center > 0:
            raise ModelError(f"resonance centre must be positive, got {self.center}")

    def lineshape(self, omega):
        """Unit-peak Lorentzian Δω_m²/((ω − ω_m)² + Δω_m²)."""
        omega = np.asarray(omega, dtype=float)
        return self.linewidth**2 / ((omega - self.center) ** 2 + self.linewidth**2)


class StrongParams(NamedTuple):
    """Coefficients of the second-order equation for one superposition amplitude."""

    omega_m: float
    omega_tilde: float
    delta_ab: float
    linewidth: float
    rabi: float
    sign: int = 1

    @property
    def damping(self) -> complex:
        """i(ω_m − ω̃_A ± δ) + Δω_m"""
        return 1j * (self.omega_m - self.omega_tilde + self.sign * self.delta_ab) + self.linewidth


def _sinhc(s, t):
    """sinh(st)/s with the s → 0 limit t."""
    st = s * t
    small = np.abs(st) < 1e-4
    safe = np.where(small, 1.0, s)
    return np.where(small, t * (1 + st**2 / 6), np.sinh(st) / safe)


def _assemble(t, c_plus, c_minus, delta_ab, label):
    """C_A, C_B from slow superposition amplitudes with their ±δ phases."""
    plus = c_plus * np.exp(1j * delta_ab * t)
    minus = c_minus * np.exp(-1j * delta_ab * t)
    c_a = SQRT_HALF * (plus + minus)
    c_b = SQRT_HALF * (plus - minus)
    return TimeSeries(t, c_a, c_b, c_plus, c_minus, label)


def weak_amplitudes(coupling_set: CouplingSet, t, omega_a: Optional[float] = None,
                    omega_b: Optional[float] = None) -> TimeSeries:
    """Weak atom-field coupling amplitudes for C_A(0) = 1, C_B(0) = 0.

    Solves Ċ_A = 𝒦_AA C_A + 𝒦_AB e^{iΔt} C_B, Ċ_B = 𝒦_BB C_B + 𝒦_BA e^{−iΔt} C_A with
    Δ = ω̃_A − ω̃_B (zero under the mid-frequency rule):

    C_A = e^{−Σt/4}[cosh(Dt/2) − (ΔΓ/2D)·sinh(Dt/2)]
    C_B = e^{−Σt/4}(2𝒦_BA/D)·sinh(Dt/2)

    with Σ = Γ_AA + Γ_BB, ΔΓ = Γ_AA − Γ_BB (−2iΔ folded in) and D = √(ΔΓ²/4 + 4𝒦_AB𝒦_BA).
    Both expressions are even in D, so the branch of the complex root does not matter;
    D → 0 reduces to C_A = e^{−Σt/4}(1 − ΔΓt/4), C_B = 𝒦_BA·t·e^{−Σt/4}.
    """
    t = np.asarray(t, dtype=float)
    omega_a = coupling_set.frequencies[0] if omega_a is None else omega_a
    omega_b = coupling_set.frequencies[1] if omega_b is None else omega_b
    detuning = omega_a - omega_b
    if abs(detuning) < MID_FREQUENCY_TOLERANCE * min(omega_a, omega_b):
        detuning = 0.0

    k = coupling_set.kappa
    m_aa = k[0, 0]
    m_bb = k[1, 1] + 1j * detuning
    q = (m_aa - m_bb) / 2
    s = np.sqrt(q**2 + k[0, 1] * k[1, 0] + 0j)
    envelope = np.exp((m_aa + m_bb) / 2 * t)
    sinhc = _sinhc(s, t)
    c_a = envelope * (np.cosh(s * t) + q * sinhc)
    c_b_rot = envelope * k[1, 0] * sinhc
    c_b = c_b_rot * np.exp(-1j * detuning * t)
    series = TimeSeries(t, c_a, c_b, SQRT_HALF * (c_a + c_b), SQRT_HALF * (c_a - c_b), "weak")
    logger.debug("weak_amplitudes D=%s detuning=%.3g", 2 * s, detuning)
    return series


def weak_populations_symmetric(gamma_bb: float, gamma_ab: float, delta_ab: float, t) -> TimeSeries:
    """Identical atoms, P_{A(B)} = ½[cosh(Γ_ABt) ± cos(2δ_ABt)]e^{−Γ_BBt}.

    Amplitudes come from C_± = 2^{−½}e^{(−Γ_±/2 ± iδ_AB)t}.
    """
    t = np.asarray(t, dtype=float)
    c_plus = SQRT_HALF * np.exp(-(gamma_bb + gamma_ab) * t / 2)
    c_minus = SQRT_HALF * np.exp(-(gamma_bb - gamma_ab) * t / 2)
    return _assemble(t, c_plus, c_minus, delta_ab, "weak-symmetric")


def symmetric_populations(gamma_bb: float, gamma_ab: float, delta_ab: float, t):
    """Closed-form (P_A, P_B) for identical atoms."""
    t = np.asarray(t, dtype=float)
    decay = np.exp(-gamma_bb * t)
    return (0.5 * (np.cosh(gamma_ab * t) + np.cos(2 * delta_ab * t)) * decay,
            0.5 * (np.cosh(gamma_ab * t) - np.cos(2 * delta_ab * t)) * decay)


def population_peak(series: TimeSeries):
    """(t, P_B) at the maximum of P_B, refined by a parabola through the top three samples."""
    p = series.p_b
    n = int(np.argmax(p))
    if 0 < n < len(p) - 1:
        y0, y1, y2 = p[n - 1], p[n], p[n + 1]
        curvature = y0 - 2 * y1 + y2
        if curvature < 0:
            shift = 0.5 * (y0 - y2) / curvature
            h = series.t[1] - series.t[0]
            return float(series.t[n] + shift * h), float(y1 - 0.25 * (y0 - y2) * shift)
    return float(series.t[n]), float(p[n])


class DensityMatrixProjection(Projection):
    """RK4 propagation of dϱ/dt = 𝒦ϱ + ϱ𝒦†; needs `grid`, `kappa` and `rho0`."""

    def BeforeRun(self):
        self.h = uniform_step(self.grid)
        eigenvalues = np.linalg.eigvals(self.kappa)
        rate = np.max(np.abs(eigenvalues[:, None] + np.conj(eigenvalues)[None, :]))
        if self.h * rate > RK4_STABILITY:
            raise StabilityError(
                f"time step {self.h:.3g} s exceeds the RK4 bound {RK4_STABILITY}/{rate:.3g} s"
            )

    def t(self, n):
        return self.grid[n]

    def rho(self, n):
        if n == 0:
            return self.rho0
        return self._rk4(self.rho(n - 1))

    def _rhs(self, rho):
        return self.kappa @ rho + rho @ self.kappa.conj().T

    def _rk4(self, rho):
        h = self.h
        k1 = self._rhs(rho)
        k2 = self._rhs(rho + 0.5 * h * k1)
        k3 = self._rhs(rho + 0.5 * h * k2)
        k4 = self._rhs(rho + h * k3)
        return rho + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def _check_density_matrix(rho0):
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (2, 2):
        raise ModelError("initial density matrix must be 2x2")
    if not np.allclose(rho0, rho0.conj().T, atol=1e-12):
        raise ModelError("initial density matrix must be Hermitian")
    eigenvalues = np.linalg.eigvalsh(rho0)
    if eigenvalues.min() < -1e-12 or eigenvalues.sum() > 1 + 1e-12:
        raise ModelError("initial density matrix must be positive with trace at most 1")
    return rho0


def density_matrix_weak(coupling_set: CouplingSet, t, rho0=None) -> DensityMatrixSeries:
    """Fixed-step RK4 solution of the weak-coupling density-matrix equations.

    Parameters
    ----------
    - coupling_set: degenerate pair (ω̃_A = ω̃_B under the mid-frequency rule)
    - t: uniform time grid starting at the initial state
    - rho0: initial 2×2 block, default excitation on atom A
    """
    omega_a, omega_b = coupling_set.frequencies
    if abs(omega_a - omega_b) >= MID_FREQUENCY_TOLERANCE * min(omega_a, omega_b):
        raise ModelError("density-matrix propagation needs degenerate shifted frequencies")
    t = np.asarray(t, dtype=float)
    rho0 = np.diag([1.0, 0.0]).astype(complex) if rho0 is None else _check_density_matrix(rho0)
    projection = DensityMatrixProjection(grid=t, kappa=np.asarray(coupling_set.kappa), rho0=rho0)
    projection.Run(len(t))
    return DensityMatrixSeries(t, projection.rho.array)


def _check_branch(omega_strong, omega_weak, linewidth):
    if omega_strong < omega_weak:
        raise BranchError(
            f"strongly coupled state needs the larger Rabi frequency, got {omega_strong:.6g} < {omega_weak:.6g}"
        )
    if linewidth > 0:
        for name, ratio in (("strong", omega_strong / linewidth), ("weak", omega_weak / linewidth)):
            if 0.1 < ratio < 10:
                warnings.warn(f"{name}-branch Omega/linewidth = {ratio:.3g} is between 0.1 and 10",
                              RegimeWarning)


def strong_populations(gamma_plus: float, gamma_minus: float, omega_plus: float, omega_minus: float,
                       linewidth: float, delta_ab: float, branch: str, t) -> TimeSeries:
    """Exact-resonance amplitudes with one superposition state strongly coupled.

    The strongly coupled amplitude is 2^{−½}e^{−Δω_m t/2}cos(Ωt/2), the other one
    2^{−½}e^{−Γt/2}. `branch` is "+" or "-", the strongly coupled state.
    """
    t = np.asarray(t, dtype=float)
    if branch not in ("+", "-"):
        raise BranchError(f"branch must be '+' or '-', got {branch!r}")
    if branch == "+":
        _check_branch(omega_plus, omega_minus, linewidth)
        c_plus = SQRT_HALF * np.exp(-linewidth * t / 2) * np.cos(omega_plus * t / 2)
        c_minus = SQRT_HALF * np.exp(-gamma_minus * t / 2) + 0j
    else:
        _check_branch(omega_minus, omega_plus, linewidth)
        c_plus = SQRT_HALF * np.exp(-gamma_plus * t / 2) + 0j
        c_minus = SQRT_HALF * np.exp(-linewidth * t / 2) * np.cos(omega_minus * t / 2)
    return _assemble(t, c_plus + 0j, c_minus + 0j, delta_ab, f"strong{branch}")


def _lorentzian_slow(gamma, profile: ResonanceProfile, omega_tilde, shift, t):
    """c̈ + aċ + (Ω/2)²c = 0, c(0) = 2^{−½}, ċ(0) = 0, a = Δω_m + i(ω_m − ω̃ + shift)."""
    a = profile.linewidth + 1j * (profile.center - omega_tilde + shift)
    rabi2 = 2 * gamma * profile.linewidth
    root = np.sqrt(a**2 - rabi2 + 0j)
    l1, l2 = (-a + root) / 2, (-a - root) / 2
    if abs(l1 - l2) < 1e-9 * max(abs(a), np.sqrt(rabi2), np.finfo(float).tiny):
        return SQRT_HALF * np.exp(l1 * t) * (1 - l1 * t)
    return SQRT_HALF * (l2 * np.exp(l1 * t) - l1 * np.exp(l2 * t)) / (l2 - l1)


def lorentzian_amplitudes(gamma_plus: float, gamma_minus: float, profile: ResonanceProfile,
                          omega_tilde: float, delta_ab: float, t) -> TimeSeries:
    """Exact amplitudes for a Lorentzian field resonance, both superposition states.

    Each slow amplitude solves c̈ + [i(ω_m − ω̃_A ± δ_AB) + Δω_m]ċ + (Ω_±/2)²c = 0
    with Ω_± = √(2Γ_±Δω_m); no strong/weak approximation is made.
    """
    t = np.asarray(t, dtype=float)
    c_plus = _lorentzian_slow(gamma_plus, profile, omega_tilde, delta_ab, t)
    c_minus = _lorentzian_slow(gamma_minus, profile, omega_tilde, -delta_ab, t)
    return _assemble(t, c_plus, c_minus, delta_ab, "lorentzian")


class TimeAverages(NamedTuple):
    p_a: float
    p_b: float
    p_l: float


#: closed-form cycle averages of the three periodic cases
CASE_AVERAGES = {
    "i": TimeAverages(1 / 2, 1 / 2, 0.0),
    "ii": TimeAverages(5 / 8, 1 / 8, 2 / 8),
    "iii": TimeAverages(3 / 8, 3 / 8, 2 / 8),
}


def periodic_populations(case: str, t, rate: float = 1.0):
    """Undamped (P_A, P_B) for the three periodic cases.

    `rate` is δ_AB for case i and Ω for cases ii and iii (4|δ_AB| = Ω in case ii).
    """
    t = np.asarray(t, dtype=float)
    if case == "i":
        return np.cos(rate * t) ** 2, np.sin(rate * t) ** 2
    if case == "ii":
        c2 = np.cos(rate * t / 2) ** 2
        return 0.25 * (1 + 3 * c2), 0.25 * (1 - c2)
    if case == "iii":
        return np.cos(rate * t / 4) ** 4, np.sin(rate * t / 4) ** 4
    raise ValueError(f"unknown case {case!r}, expected one of {sorted(CASE_AVERAGES)}")


def time_averages(case: str, numeric: bool = False, points: int = 20001) -> TimeAverages:
    """Cycle-averaged (P̄_A, P̄_B, P̄_L) for case i, ii or iii.

    With `numeric`, the closed-form populations are averaged over one period by
    trapezoidal quadrature instead.
    """
    if case not in CASE_AVERAGES:
        raise ValueError(f"unknown case {case!r}, expected one of {sorted(CASE_AVERAGES)}")
    if not numeric:
        return CASE_AVERAGES[case]
    period = {"i": np.pi, "ii": 2 * np.pi, "iii": 4 * np.pi}[case]
    t = np.linspace(0.0, period, points)
    p_a, p_b = periodic_populations(case, t)
    mean_a = trapezoid(p_a, t) / period
    mean_b = trapezoid(p_b, t) / period
    return TimeAverages(float(mean_a), float(mean_b), float(1 - mean_a - mean_b))


def strong_ode_residual(series: TimeSeries, params: StrongParams) -> float:
    """Largest |c̈ + [i(ω_m − ω̃_A ± δ) + Δω_m]ċ + (Ω/2)²c| over interior grid points.

    Uses the slow amplitude c_+ or c_- of `series` selected by `params.sign`, with
    second-order central differences.
    """
    h = uniform_step(series.t)
    if h * params.rabi > 0.1:
        raise StabilityError(f"grid too coarse for second derivatives: dt*Omega = {h * params.rabi:.3g} > 0.1")
    c = series.c_plus if params.sign > 0 else series.c_minus
    if c is None:
        raise ModelError("series carries no superposition amplitudes")
    c = np.asarray(c, dtype=complex)
    second = (c[2:] - 2 * c[1:-1] + c[:-2]) / h**2
    first = (c[2:] - c[:-2]) / (2 * h)
    residual = second + params.damping * first + (params.rabi / 2) ** 2 * c[1:-1]
    return float(np.max(np.abs(residual)))
