"""Numerically exact solution of the coupled integrodifferential amplitude equations.

Ċ_A(t) = Σ_{A'≠A} iδ_{A*A'}e^{iΔ_{AA'}t}C_{A'}(t) + Σ_{A'} e^{iΔ_{AA'}t}∫₀ᵗ dt' κ_{AA'}(t − t')C_{A'}(t')

with Δ_{AA'} = ω̃_A − ω̃_{A'} and κ_{AA'}(τ) = −(1/π)∫dω J_{AA'}(ω)e^{−i(ω−ω̃_{A'})τ}, where
J_{AA'}(ω) = (ω²/ħε₀c²)·d_A*·Im G(r_A, r_{A'}, ω)·d_{A'}. In the Markov limit the memory
term reduces to −½Γ_{A*A'}C_{A'}(t).

The memory integral is discretised by product integration with C piecewise linear,
the outer equation by the trapezoidal rule. Both are second order in Δt; the
trapezoidal corrector is linear in the new amplitudes and is solved exactly.
"""

import logging
import warnings
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .coupling import MID_FREQUENCY_TOLERANCE, AtomConfig, CouplingSet, default_band
from .dynamics import ResonanceProfile, TimeSeries, uniform_step
from .errors import ConvergenceWarning, GridError, MemoryCapError, ModelError
from .green import GreenSource
from .projection import Projection
from .units import coupling_prefactor

logger = logging.getLogger(__name__)

#: approximate bytes held per time step by the cached projection variables
STEP_BYTES = 1024
#: extra bytes per step for kernels with a stored history
HISTORY_BYTES = 512


class MemoryKernel:
    """Memory function κ_{AA'}(τ) of the amplitude equations."""

    kind = "generic"

    def value(self, tau: float, frequencies: np.ndarray) -> np.ndarray:
        """κ(τ) as a complex 2×2 array, column A' referenced to ω̃_{A'}."""
        raise NotImplementedError

    def carried_shift(self, frequencies) -> np.ndarray:
        """Shifts (rad/s) the memory already produces in its Markov limit, zero without dispersion."""
        return np.zeros((2, 2), dtype=complex)


class MarkovianKernel(MemoryKernel):
    """Instantaneous memory, −½Γ_{A*A'}C_{A'}(t). A zero matrix switches the memory off."""

    kind = "markovian"

    def __init__(self, gamma):
        self.gamma = np.asarray(gamma, dtype=complex)
        if self.gamma.shape != (2, 2):
            raise ModelError("decay matrix must be 2x2")

    @classmethod
    def from_coupling(cls, coupling_set: CouplingSet):
        return cls(coupling_set.gamma)

    def __repr__(self):
        return f"MarkovianKernel(gamma={self.gamma.real.tolist()})"


class LorentzianKernel(MemoryKernel):
    """Lorentzian field resonance, κ_{AA'}(τ) = −(Γ_{A*A'}/2)Δω_m·e^{−[Δω_m + i(ω_m − ω̃_{A'})]τ}."""

    kind = "lorentzian"

    def __init__(self, profile: ResonanceProfile, gamma):
        self.profile = profile
        self.gamma = np.asarray(gamma, dtype=complex)
        if self.gamma.shape != (2, 2):
            raise ModelError("decay matrix must be 2x2")

    @classmethod
    def from_collective(cls, profile: ResonanceProfile, gamma_plus: float, gamma_minus: float):
        """Γ_AA = Γ_BB = (Γ₊ + Γ₋)/2, Γ_AB = Γ_BA = (Γ₊ − Γ₋)/2"""
        if gamma_plus < 0 or gamma_minus < 0:
            raise ModelError("collective decay rates must be non-negative")
        diag, off = (gamma_plus + gamma_minus) / 2, (gamma_plus - gamma_minus) / 2
        return cls(profile, [[diag, off], [off, diag]])

    def rates(self, frequencies) -> np.ndarray:
        """a_{A'} = Δω_m + i(ω_m − ω̃_{A'}), one per column."""
        frequencies = np.asarray(frequencies, dtype=float)
        return self.profile.linewidth + 1j * (self.profile.center - frequencies)

    def value(self, tau, frequencies):
        a = self.rates(frequencies)
        return -0.5 * self.gamma * self.profile.linewidth * np.exp(-a * tau)[None, :]

    def weights(self, h: float, frequencies):
        """Per-column decay e^{−ah} and product-integration weights (w0, w1).

        ∫_{t_n}^{t_{n+1}} e^{−a(t_{n+1}−t')}C(t')dt' = w0·C_n + w1·C_{n+1} for linear C.
        """
        z = self.rates(frequencies) * h
        phi = np.empty_like(z)
        small = np.abs(z) < 0.1
        # (1 − e^{−z}(1 + z))/z² = Σ_{m≥2} (−1)^m (m−1)/m! z^{m−2}
        series = np.zeros_like(z[small])
        term_factorial = 1.0
        for m in range(2, 18):
            term_factorial *= m
            series = series + (-1) ** m * (m - 1) / term_factorial * z[small] ** (m - 2)
        phi[small] = series
        zl = z[~small]
        phi[~small] = (1 - np.exp(-zl) * (1 + zl)) / zl**2
        e1 = -np.expm1(-z) / z * h
        w0 = h * phi
        return np.exp(-z), w0, e1 - w0

    def __repr__(self):
        return f"LorentzianKernel({self.profile}, gamma={self.gamma.real.tolist()})"


class TabulatedKernel(MemoryKernel):
    """Memory function from the spectral density of any Green source.

    Parameters
    ----------
    - atoms: the two atoms (positions, dipoles)
    - source: Green tensor provider; equal-point entries use `equal_point_im`
    - band: frequency support (rad/s), default the source band or ω̃ ± 50%
    - points: trapezoidal frequency nodes
    """

    kind = "tabulated"

    def __init__(self, atoms: AtomConfig, source: GreenSource, band: Optional[Tuple[float, float]] = None,
                 points: int = 4001):
        if len(atoms) != 2:
            raise ModelError("tabulated kernel needs two atoms")
        if band is None:
            band = default_band(source, float(np.mean(atoms.frequencies)))
        self.band = band
        self.omega = np.linspace(band[0], band[1], points)
        self.density = np.zeros((points, 2, 2), dtype=complex)
        prefactor = coupling_prefactor(self.omega)
        for i in range(2):
            for j in range(2):
                im = source.im(atoms.pair(i, j), self.omega)
                projected = np.einsum("a,nab,b->n", np.conj(atoms[i].dipole), im, atoms[j].dipole)
                self.density[:, i, j] = prefactor * projected

    @property
    def resolution(self) -> float:
        return float(self.omega[1] - self.omega[0])

    def value(self, tau, frequencies):
        frequencies = np.asarray(frequencies, dtype=float)
        phase = np.exp(-1j * (self.omega[:, None] - frequencies[None, :]) * tau)
        return -trapezoid(self.density * phase[:, None, :], self.omega, axis=0) / np.pi

    def carried_shift(self, frequencies):
        """(1/π)𝒫∫_band J_{AA'}(ω)/(ω − ω̃_{A'})dω, the in-band dispersive shift of the memory.

        Integrated exactly for the density linear between the frequency nodes, so it matches
        the Markov limit of `value`.
        """
        frequencies = np.asarray(frequencies, dtype=float)
        lo, hi = self.omega[:-1], self.omega[1:]
        width = (hi - lo)[:, None]
        shift = np.zeros((2, 2), dtype=complex)
        for j, pole in enumerate(frequencies):
            column = self.density[:, :, j]
            slope = np.diff(column, axis=0) / width
            with np.errstate(divide="ignore"):
                logs = np.log(np.abs(self.omega - pole))
            # a node on the pole: the two adjacent segments cancel
            logs[np.isinf(logs)] = 0.0
            at_pole = column[:-1] + slope * (pole - lo)[:, None]
            shift[:, j] = (slope * width + at_pole * np.diff(logs)[:, None]).sum(axis=0)
        return shift / np.pi

    def __repr__(self):
        return f"TabulatedKernel(band={self.band}, points={len(self.omega)})"


class VolterraProjection(Projection):
    """Step-indexed solver state.

    Needs `grid`, `memory_kernel`, `delta` (2×2 coherent shifts), `frequencies`,
    `initial` and `memory_cap` (bytes).
    """

    def BeforeRun(self):
        self.h = uniform_step(self.grid)
        if self.grid[0] != 0:
            raise GridError("time grid must start at t = 0")
        history = self.memory_kernel.kind == "tabulated"
        estimate = self.steps * (STEP_BYTES + (HISTORY_BYTES if history else 0))
        if estimate > self.memory_cap:
            raise MemoryCapError(
                f"{self.steps} steps need about {estimate / 2**20:.0f} MB, above the cap of "
                f"{self.memory_cap / 2**20:.0f} MB; use a coarser time grid"
            )
        self._detuning = self.frequencies[:, None] - self.frequencies[None, :]
        self._identity = np.eye(2)
        if self.memory_kernel.kind == "lorentzian":
            decay, w0, w1 = self.memory_kernel.weights(self.h, self.frequencies)
            scale = -0.5 * self.memory_kernel.gamma * self.memory_kernel.profile.linewidth
            self._decay = decay[None, :]
            self._w0 = scale * w0[None, :]
            self._w1 = scale * w1[None, :]
        elif history:
            kernel = self.memory_kernel
            if self.grid[-1] * kernel.resolution > np.pi:
                warnings.warn(
                    f"frequency resolution {kernel.resolution:.3g} rad/s aliases the memory beyond "
                    f"{np.pi / kernel.resolution:.3g} s; increase the number of kernel points",
                    ConvergenceWarning,
                )
            self._history = np.zeros((self.steps, 2), dtype=complex)
            self._kernel_table = np.zeros((self.steps, 2, 2), dtype=complex)
            self._kernel_table[0] = self.kernel(0)

    def t(self, n):
        return n * self.h

    def phase(self, n):
        """e^{iΔ_{AA'}t_n}"""
        return np.exp(1j * self._detuning * self.t(n))

    def coherent(self, n):
        return 1j * self.delta * self.phase(n)

    def kernel(self, lag):
        return self.memory_kernel.value(lag * self.h, self.frequencies)

    def _endpoint(self, n):
        """Weight of C_n in the memory integral up to t_n."""
        kind = self.memory_kernel.kind
        if kind == "markovian":
            return -0.5 * self.memory_kernel.gamma
        if n == 0:
            return np.zeros((2, 2), dtype=complex)
        if kind == "lorentzian":
            return self._w1
        return 0.5 * self.h * self._kernel_table[0]

    def memory_base(self, n):
        """Part of the memory integral up to t_n that does not involve C_n."""
        kind = self.memory_kernel.kind
        if n == 0 or kind == "markovian":
            return np.zeros((2, 2), dtype=complex)
        previous = self.amplitudes(n - 1)
        if kind == "lorentzian":
            return self._decay * self.memory(n - 1) + self._w0 * previous[None, :]
        self._kernel_table[n] = self.kernel(n)
        lags = self._kernel_table[n - 1:0:-1]
        base = 0.5 * self._kernel_table[n] * self._history[0][None, :]
        base = base + np.einsum("jab,jb->ab", lags, self._history[1:n])
        return self.h * base

    def amplitudes(self, n):
        if n == 0:
            value = np.asarray(self.initial, dtype=complex)
        else:
            phase = self.phase(n)
            system = self.coherent(n) + phase * self._endpoint(n)
            forcing = (phase * self.memory_base(n)).sum(axis=1)
            rhs = self.amplitudes(n - 1) + 0.5 * self.h * (self.derivative(n - 1) + forcing)
            value = np.linalg.solve(self._identity - 0.5 * self.h * system, rhs)
        if self.memory_kernel.kind == "tabulated":
            self._history[n] = value
        return value

    def memory(self, n):
        """m_{AA'}(t_n) = ∫₀^{t_n} κ_{AA'}(t_n − t')C_{A'}(t')dt'"""
        return self.memory_base(n) + self._endpoint(n) * self.amplitudes(n)[None, :]

    def derivative(self, n):
        c = self.amplitudes(n)
        return self.coherent(n) @ c + (self.phase(n) * self.memory(n)).sum(axis=1)


def volterra_solve(kernel: MemoryKernel, delta_ab: float, frequencies: Sequence[float], t,
                   delta_ba: Optional[float] = None, initial=(1.0, 0.0), memory_cap_mb: float = 512) -> TimeSeries:
    """Solve the integrodifferential amplitude equations on a uniform grid from t = 0.

    Parameters
    ----------
    - kernel: `MarkovianKernel`, `LorentzianKernel` or `TabulatedKernel`
    - delta_ab: full exchange shift δ_{A*B} (rad/s); δ_{B*A} defaults to it. The part the
      kernel already carries (`carried_shift`) is subtracted, so a tabulated kernel only
      adds the dispersion outside its band
    - frequencies: shifted transition frequencies (ω̃_A, ω̃_B)
    - t: uniform time grid starting at 0
    - memory_cap_mb: refuse grids whose projected memory use exceeds this
    """
    t = np.asarray(t, dtype=float)
    frequencies = np.asarray(frequencies, dtype=float)
    if abs(frequencies[0] - frequencies[1]) < MID_FREQUENCY_TOLERANCE * frequencies.min():
        frequencies = np.full(2, frequencies.mean())
    delta_ba = delta_ab if delta_ba is None else delta_ba
    delta = np.array([[0.0, delta_ab], [delta_ba, 0.0]], dtype=complex)
    delta = delta - kernel.carried_shift(frequencies)

    projection = VolterraProjection(
        grid=t,
        memory_kernel=kernel,
        delta=delta,
        frequencies=frequencies,
        initial=initial,
        memory_cap=memory_cap_mb * 2**20,
    )
    projection.Run(len(t))
    amplitudes = projection.amplitudes.array
    logger.info("volterra_solve %s: %d steps, dt=%.3g s", kernel.kind, len(t), projection.h)
    c_a, c_b = amplitudes[:, 0], amplitudes[:, 1]
    return TimeSeries(t, c_a, c_b, (c_a + c_b) / np.sqrt(2), (c_a - c_b) / np.sqrt(2), f"volterra-{kernel.kind}")
