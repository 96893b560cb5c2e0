"""Principal-value quadrature."""

import logging
import warnings
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad

from .errors import ConvergenceWarning, DomainError

logger = logging.getLogger(__name__)

QUAD_LIMIT = 500
#: relative spread allowed between Richardson levels
PV_RTOL = 1e-6


def _side(f, lower, upper, pole, points):
    """∫ f(ω)/(ω − pole) dω over a pole-free interval."""
    inner = None
    if points is not None:
        inner = [p for p in points if lower < p < upper] or None
    value, _ = quad(lambda w: f(w) / (w - pole), lower, upper, points=inner,
                    limit=QUAD_LIMIT, epsabs=0.0, epsrel=1e-11)
    return value


def pv_integral(f: Callable[[float], float], a: float, b: float, pole: float,
                window: Optional[float] = None, levels: int = 3,
                points: Optional[Sequence[float]] = None, rtol: float = PV_RTOL) -> float:
    """Principal value of ∫_a^b f(ω)/(ω − pole) dω for a real-valued f.

    The interval (pole − h, pole + h) is excluded and the two remaining pieces are
    integrated adaptively. The excluded part is odd in h (h, h³, ...), so the results
    for h, h/2, h/4 are Richardson-extrapolated to h → 0.

    Parameters
    ----------
    - f: smooth real integrand numerator
    - a, b: integration limits, a < pole < b
    - pole: location of the simple pole
    - window: half-width h of the excluded interval, default 1e-3·min(pole − a, b − pole)
    - levels: number of halvings used in the extrapolation
    - points: breakpoints passed on to the adaptive quadrature (e.g. resonances)
    """
    if not a < pole < b:
        raise DomainError(f"pole {pole:.6g} outside the integration support ({a:.6g}, {b:.6g})")
    if levels < 1:
        raise ValueError("levels must be at least 1")
    edge = min(pole - a, b - pole)
    h = 1e-3 * edge if window is None else min(window, 0.5 * edge)

    estimates = []
    magnitude = 0.0
    for level in range(levels):
        width = h / 2**level
        left = _side(f, a, pole - width, pole, points)
        right = _side(f, pole + width, b, pole, points)
        magnitude = max(magnitude, abs(left) + abs(right))
        estimates.append(left + right)

    # eliminate h^1, h^3, ... in turn
    table = [np.asarray(estimates)]
    for order in range(1, levels):
        prev = table[-1]
        factor = 2.0 ** (2 * order - 1)
        table.append((factor * prev[1:] - prev[:-1]) / (factor - 1))
    result = float(table[-1][0])

    if levels > 1:
        spread = abs(table[-1][0] - table[-2][-1])
        scale = max(abs(result), 1e-6 * magnitude)
        if spread > rtol * scale:
            warnings.warn(f"principal value not converged: Richardson spread {spread:.3g} at value {result:.6g}",
                          ConvergenceWarning)
        logger.debug("pv_integral pole=%.6g h=%.3g value=%.10g spread=%.3g", pole, h, result, spread)
    return result


def pv_integral_complex(f: Callable[[float], complex], a, b, pole, **kwargs) -> complex:
    """`pv_integral` applied to the real and imaginary parts of a complex f."""
    re = pv_integral(lambda w: float(np.real(f(w))), a, b, pole, **kwargs)
    im = pv_integral(lambda w: float(np.imag(f(w))), a, b, pole, **kwargs)
    return re + 1j * im


def regular_integral(f: Callable[[float], float], a: float, b: float,
                     points: Optional[Sequence[float]] = None) -> float:
    """Adaptive ∫_a^b f(ω) dω for pole-free integrands."""
    inner = None if points is None else ([p for p in points if a < p < b] or None)
    value, _ = quad(f, a, b, points=inner, limit=QUAD_LIMIT, epsabs=0.0, epsrel=1e-11)
    return value
