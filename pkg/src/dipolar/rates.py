"""Energy-transfer rates: transient slope w1, adiabatic elimination w2 and golden rule w."""

import logging
import warnings
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.integrate import quad
from scipy.signal import savgol_filter

from .coupling import AtomConfig, decay_matrix, kappa
from .dynamics import TimeSeries, uniform_step
from .errors import ModelError, RateRegimeError, RegimeWarning
from .green import GreenSource

logger = logging.getLogger(__name__)

#: golden-rule quadrature support, in line widths either side of the lines
GOLDEN_RULE_WIDTHS = 40.0
EQUAL_GAMMA_TOLERANCE = 1e-9
REGIME_CONTRAST = 10.0


def rate_w1(gamma_aa: float, gamma_bb: float, kappa_ba: complex):
    """Transfer rate at the inflection point of P_B for weak dipole-dipole coupling.

    With D = |Γ_AA − Γ_BB|/2, D₊ = −min(Γ), D₋ = −max(Γ), S = D₊ + D₋, the inflection
    time t0 solves e^{Dt0} = 4D₋²/(S² + 2D√(S² + 4D₊D₋)) and

    w1 = (|𝒦_BA|²/D²)·e^{D₋t0}·[D₋ + D₊e^{2Dt0} − S·e^{Dt0}].

    Equal rates use the limit Γt0 = 2 − √2, w1 = |𝒦_BA|²·2(√2 − 1)e^{−(2−√2)}/Γ.

    Returns (w1, t0) in 1/s and s.
    """
    if gamma_aa < 0 or gamma_bb < 0:
        raise ModelError("decay rates must be non-negative")
    largest = max(gamma_aa, gamma_bb)
    if largest == 0:
        raise ModelError("at least one decay rate must be positive")
    k2 = abs(kappa_ba) ** 2
    d = abs(gamma_aa - gamma_bb) / 2
    if d <= EQUAL_GAMMA_TOLERANCE * largest:
        gamma = (gamma_aa + gamma_bb) / 2
        u = 2 - np.sqrt(2)
        return k2 * 2 * (np.sqrt(2) - 1) * np.exp(-u) / gamma, u / gamma
    d_plus, d_minus = -min(gamma_aa, gamma_bb), -largest
    s = d_plus + d_minus
    x = 4 * d_minus**2 / (s**2 + 2 * d * np.sqrt(s**2 + 4 * d_plus * d_minus))
    t0 = np.log(x) / d
    w1 = k2 / d**2 * np.exp(d_minus * t0) * (d_minus + d_plus * x**2 - s * x)
    return float(w1), float(t0)


def rate_window_detect(series: TimeSeries, window: int = 5):
    """First inflection of P_B with positive slope, from Savitzky-Golay derivatives.

    Returns (t0, w1_empirical); `RateRegimeError` when P_B has no such inflection.
    """
    if window < 5 or window % 2 == 0:
        raise ValueError(f"window must be odd and at least 5, got {window}")
    h = uniform_step(series.t)
    p = series.p_b
    d1 = savgol_filter(p, window, 3, deriv=1, delta=h)
    d2 = savgol_filter(p, window, 3, deriv=2, delta=h)
    scale = np.max(np.abs(d2))
    if scale == 0:
        raise RateRegimeError("P_B has no inflection: not in the rate regime")
    crossings = np.nonzero((d2[:-1] > 0) & (d2[1:] <= 0) & (d1[1:] > 0))[0]
    if len(crossings) == 0:
        raise RateRegimeError("P_B has no inflection with positive slope: not in the rate regime")
    n = crossings[0]
    frac = d2[n] / (d2[n] - d2[n + 1])
    t0 = series.t[n] + frac * h
    w1 = d1[n] + frac * (d1[n + 1] - d1[n])
    logger.debug("rate window at t0=%.6g s, slope %.6g", t0, w1)
    return float(t0), float(w1)


def rate_w2(gamma_aa: float, gamma_bb: float, kappa_ba: complex, p_a0: float = 1.0) -> float:
    """Rate from adiabatic elimination of the coherence, 4|𝒦_BA|²P_A⁽⁰⁾/(Γ_AA + Γ_BB)."""
    total = gamma_aa + gamma_bb
    if total <= 0:
        raise ModelError("adiabatic elimination needs Gamma_AA + Gamma_BB > 0")
    if abs(kappa_ba) > 0.1 * total / 2:
        warnings.warn("quasi-stationary coherence assumption needs |K_BA| << (Gamma_AA + Gamma_BB)/2",
                      RegimeWarning)
    return 4 * abs(kappa_ba) ** 2 * p_a0 / total


def lorentzian_density(nu, center: float, gamma: float):
    """Level density (Γ/2π)/((ν − ω̃)² + (Γ/2)²)."""
    return (gamma / (2 * np.pi)) / ((np.asarray(nu) - center) ** 2 + (gamma / 2) ** 2)


class GoldenRule(NamedTuple):
    value: float
    quadrature: float


def golden_rule_rate(kappa_ba: complex, gamma_aa: float, gamma_bb: float, omega_a: float = 0.0,
                     omega_b: float = 0.0, p_a: float = 1.0) -> GoldenRule:
    """Golden-rule rate with Lorentzian level densities of widths Γ_AA and Γ_BB.

    w = 2π|𝒦_BA|²p_A∫dν ξ_A(ν)ξ_B(ν) = (4|𝒦_BA|²p_A/Γ_s)·(Γ_s/2)²/((ω̃_A − ω̃_B)² + (Γ_s/2)²)

    with Γ_s = Γ_AA + Γ_BB. The overlap integral is also done by quadrature over ±40
    line widths with an analytic tail correction; both values are returned.
    """
    if gamma_aa < 0 or gamma_bb < 0:
        raise ModelError("line widths must be non-negative")
    k2 = abs(kappa_ba) ** 2
    detuning = omega_a - omega_b
    half = (gamma_aa + gamma_bb) / 2
    if half == 0:
        if detuning != 0:
            return GoldenRule(0.0, 0.0)
        raise ModelError("golden rule with zero line widths and equal frequencies is singular")
    closed = 2 * np.pi * k2 * p_a * (half / np.pi) / (detuning**2 + half**2)

    if gamma_aa == 0:
        overlap = float(lorentzian_density(omega_a, omega_b, gamma_bb))
    elif gamma_bb == 0:
        overlap = float(lorentzian_density(omega_b, omega_a, gamma_aa))
    else:
        margin = GOLDEN_RULE_WIDTHS * max(gamma_aa, gamma_bb) / 2
        lower, upper = min(omega_a, omega_b) - margin, max(omega_a, omega_b) + margin
        overlap, _ = quad(lambda nu: lorentzian_density(nu, omega_a, gamma_aa) * lorentzian_density(nu, omega_b, gamma_bb),
                          lower, upper, points=sorted({omega_a, omega_b}), limit=500, epsabs=0.0, epsrel=1e-12)
        # ∫ beyond ±margin of the product of the two 1/ν² tails
        tail = 2 * gamma_aa * gamma_bb / (4 * np.pi**2) / (3 * margin**3)
        overlap += tail
    quadrature = 2 * np.pi * k2 * p_a * overlap
    return GoldenRule(float(closed), float(quadrature))


def golden_rule_from_atoms(atoms: AtomConfig, source: GreenSource, p_a: float = 1.0,
                           widths: Optional[Sequence[float]] = None) -> GoldenRule:
    """Golden-rule rate with 𝒦_BA from the Green tensor; widths default to Γ_AA, Γ_BB."""
    if widths is None:
        widths = decay_matrix(atoms, source).diagonal().real
    k = kappa(atoms, source)
    omega_a, omega_b = atoms.frequencies
    return golden_rule_rate(k[1, 0], widths[0], widths[1], omega_a, omega_b, p_a)


@dataclass(frozen=True)
class RateReport:
    """The three rates and their comparison ratios."""

    w1: float
    t0: float
    w2: float
    w_golden: float
    p_a0: float
    ratio: float
    corrected_ratio: float
    regime: str

    def to_dict(self) -> dict:
        return asdict(self)

    def to_text(self) -> str:
        """flat `key = value` block"""
        lines = []
        for key, value in self.to_dict().items():
            lines.append(f"{key} = {value:.12g}" if isinstance(value, float) else f"{key} = {value}")
        return "\n".join(lines) + "\n"

    @property
    def df(self) -> pd.DataFrame:
        return pd.DataFrame([self.to_dict()])


def regime_tag(gamma_aa: float, gamma_bb: float) -> str:
    if gamma_aa > REGIME_CONTRAST * gamma_bb:
        return "i"
    if gamma_bb > REGIME_CONTRAST * gamma_aa:
        return "iii"
    return "ii"


def rate_report(gamma_aa: float, gamma_bb: float, kappa_ba: complex, p_a0: Optional[float] = None,
                omega_a: float = 0.0, omega_b: float = 0.0) -> RateReport:
    """All three rates for one coupling; P_A⁽⁰⁾ defaults to e^{−Γ_AA t0}."""
    w1, t0 = rate_w1(gamma_aa, gamma_bb, kappa_ba)
    if p_a0 is None:
        p_a0 = float(np.exp(-gamma_aa * t0))
    w2 = rate_w2(gamma_aa, gamma_bb, kappa_ba, p_a0)
    golden = golden_rule_rate(kappa_ba, gamma_aa, gamma_bb, omega_a, omega_b, p_a0).value
    ratio = w1 / golden if golden > 0 else float("nan")
    return RateReport(w1, t0, w2, golden, p_a0, ratio, ratio * float(np.exp(gamma_bb * t0)),
                      regime_tag(gamma_aa, gamma_bb))


#: idealised decay rates (Γ_AA, Γ_BB) per regime, in units of the reference rate
REGIME_RATES = {"i": (1.0, 0.0), "ii": (1.0, 1.0), "iii": (0.0, 1.0)}


def ratio_report(regime: str, gamma: float = 1.0, kappa_ba: complex = 1e-2) -> RateReport:
    """Rate comparison in the limiting regimes.

    i: Γ_BB = 0, ii: Γ_AA = Γ_BB, iii: Γ_AA = 0, each with P_A⁽⁰⁾ = e^{−Γ_AA t0}.
    The ratios do not depend on `gamma` or `kappa_ba`.
    """
    if regime not in REGIME_RATES:
        raise ValueError(f"unknown regime {regime!r}, expected one of {sorted(REGIME_RATES)}")
    scale_aa, scale_bb = REGIME_RATES[regime]
    report = rate_report(scale_aa * gamma, scale_bb * gamma, kappa_ba)
    return RateReport(**{**report.to_dict(), "regime": regime})
