"""Physical constants and the coupling-strength convention.

All quantities are SI: frequencies in rad/s, times in s, lengths in m and dipole
moments in C·m. With G normalised so that Im G(r, r, ω) = ω/(6πc) in vacuum, the
coupling prefactor ω²/(ħε₀c²) turns d*·G·d' into rates in 1/s.
"""

import numpy as np
from scipy import constants

HBAR = constants.hbar
EPSILON_0 = constants.epsilon_0
C = constants.c
#: 1 debye in C·m
DEBYE = 1e-21 / constants.c
#: 1 eV expressed as an angular frequency in rad/s
EV_TO_RAD_S = constants.e / constants.hbar
NM = constants.nano


def coupling_prefactor(omega):
    """ω²/(ħε₀c²), the factor between d*·G·d' and a coupling rate."""
    return np.asarray(omega) ** 2 / (HBAR * EPSILON_0 * C**2)


def gamma0(omega, dipole) -> float:
    """Free-space decay rate Γ₀ = ω³|d|²/(3πħε₀c³).

    Parameters
    ----------
    - omega: transition frequency in rad/s
    - dipole: dipole vector (C·m) or its modulus
    """
    d2 = float(np.sum(np.abs(np.atleast_1d(dipole)) ** 2))
    return omega**3 * d2 / (3 * np.pi * HBAR * EPSILON_0 * C**3)
