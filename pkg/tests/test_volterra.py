import numpy as np
import pytest

from dipolar.coupling import Atom, AtomConfig, CouplingSet, build_coupling_set, decay_matrix, pv_components
from dipolar.dynamics import ResonanceProfile, StrongParams, lorentzian_amplitudes, strong_ode_residual, weak_amplitudes
from dipolar.errors import ConvergenceWarning, GridError, MemoryCapError, ModelError
from dipolar.green import ResonatorGreen, VacuumGreen
from dipolar.units import C, DEBYE, EPSILON_0, HBAR
from dipolar.volterra import LorentzianKernel, MarkovianKernel, TabulatedKernel, volterra_solve

OMEGA = 3e15


def _relative_deviation(series, reference):
    top = max(np.max(reference.p_a), np.max(reference.p_b))
    return max(np.max(np.abs(series.p_a - reference.p_a)), np.max(np.abs(series.p_b - reference.p_b))) / top


def test_markovian_kernel_matches_weak_solution():
    cs = CouplingSet.from_overrides(1.07, 1.07, 0.04, 0.06, omega_a=OMEGA)
    t = np.linspace(0, 10, 2001)
    series = volterra_solve(MarkovianKernel.from_coupling(cs), 0.06, cs.frequencies, t)
    assert series.label == "volterra-markovian"
    assert _relative_deviation(series, weak_amplitudes(cs, t)) < 1e-5


@pytest.mark.timeout(30)
def test_broad_resonance_is_markovian():
    gamma_plus, gamma_minus, delta = 1.11, 1.03, 0.06
    profile = ResonanceProfile(center=OMEGA, linewidth=1e4 * gamma_plus)
    kernel = LorentzianKernel.from_collective(profile, gamma_plus, gamma_minus)
    cs = CouplingSet.from_overrides(1.07, 1.07, 0.04, delta, omega_a=OMEGA)
    t = np.linspace(0, 5 / 1.07, 10001)
    series = volterra_solve(kernel, delta, (OMEGA, OMEGA), t)
    assert _relative_deviation(series, weak_amplitudes(cs, t)) < 1e-3


def test_second_order_convergence():
    profile = ResonanceProfile(center=OMEGA, linewidth=2.0)
    kernel = LorentzianKernel.from_collective(profile, 1.0, 0.5)
    errors = []
    for steps in (1001, 2001):
        t = np.linspace(0, 10, steps)
        series = volterra_solve(kernel, 0.3, (OMEGA, OMEGA), t)
        exact = lorentzian_amplitudes(1.0, 0.5, profile, OMEGA, 0.3, t)
        errors.append(max(np.max(np.abs(series.c_a - exact.c_a)), np.max(np.abs(series.c_b - exact.c_b))))
    assert errors[0] / errors[1] == pytest.approx(4.0, abs=0.5)


def test_vacuum_rabi_oscillation():
    linewidth, rabi = 0.02, 2.0
    gamma_plus = rabi**2 / (2 * linewidth)  # Ω₊/Δω_m = 100
    profile = ResonanceProfile(center=OMEGA, linewidth=linewidth)
    kernel = LorentzianKernel.from_collective(profile, gamma_plus, 0.0)
    params = StrongParams(OMEGA, OMEGA, 0.0, linewidth, rabi)
    duration = 3 * 2 * np.pi / rabi
    residuals = []
    for steps in (4001, 8001):
        t = np.linspace(0, duration, steps)
        series = volterra_solve(kernel, 0.0, (OMEGA, OMEGA), t)
        envelope = np.exp(-linewidth * t / 2) * np.abs(np.cos(rabi * t / 2))
        assert np.max(np.abs(np.sqrt(2) * np.abs(series.c_plus) - envelope)) < 0.02
        residuals.append(strong_ode_residual(series, params))
    assert 3.0 < residuals[0] / residuals[1] < 5.0


def _resonator_pair(m):
    m = np.eye(3) * m
    couplings = {("A", "A"): m, ("B", "B"): m, ("A", "B"): 0.5 * m}
    source = ResonatorGreen(100.0, 2.0, couplings)
    dipole = np.array([0.0, 0.0, 1e-29])
    atoms = AtomConfig([Atom("A", np.zeros(3), dipole, 100.0), Atom("B", np.array([1e-9, 0, 0]), dipole, 100.0)])
    return atoms, source


def test_tabulated_kernel_follows_lorentzian_resonance():
    atoms, source = _resonator_pair(0.002 * HBAR * EPSILON_0 / 1e-58)
    tabulated = TabulatedKernel(atoms, source, band=(80.0, 120.0), points=8001)
    assert tabulated.resolution == pytest.approx(0.005)
    gamma = decay_matrix(atoms, source, frequency=100.0)
    lorentzian = LorentzianKernel(source.profile, gamma)
    frequencies = np.array([100.0, 100.0])
    scale = np.max(np.abs(lorentzian.value(0.0, frequencies)))
    for tau in (0.1, 0.5, 1.0, 2.0):
        deviation = np.max(np.abs(tabulated.value(tau, frequencies) - lorentzian.value(tau, frequencies)))
        assert deviation < 0.05 * scale

    t = np.linspace(0, 10, 401)
    series = volterra_solve(tabulated, 0.0, frequencies, t)
    reference = volterra_solve(lorentzian, 0.0, frequencies, t)
    assert series.label == "volterra-tabulated"
    assert np.max(np.abs(series.p_a - reference.p_a)) < 0.03
    assert np.max(np.abs(series.p_b - reference.p_b)) < 0.03


def test_tabulated_kernel_aliasing_warning():
    atoms, source = _resonator_pair(0.002 * HBAR * EPSILON_0 / 1e-58)
    coarse = TabulatedKernel(atoms, source, band=(80.0, 120.0), points=101)
    with pytest.warns(ConvergenceWarning, match="aliases"):
        volterra_solve(coarse, 0.0, (100.0, 100.0), np.linspace(0, 10, 51))


def test_solver_guards():
    kernel = MarkovianKernel(np.eye(2))
    with pytest.raises(GridError, match="t = 0"):
        volterra_solve(kernel, 0.0, (OMEGA, OMEGA), np.linspace(1, 2, 11))
    with pytest.raises(GridError):
        volterra_solve(kernel, 0.0, (OMEGA, OMEGA), np.array([0.0, 0.1, 0.3]))
    with pytest.raises(MemoryCapError, match="coarser"):
        volterra_solve(kernel, 0.0, (OMEGA, OMEGA), np.linspace(0, 1, 2001), memory_cap_mb=1e-3)
    with pytest.raises(ModelError, match="2x2"):
        MarkovianKernel(np.eye(3))
    with pytest.raises(ModelError):
        LorentzianKernel.from_collective(ResonanceProfile(OMEGA, 1.0), -1.0, 0.5)


def test_lorentzian_weights_are_exact_for_linear_amplitudes():
    profile = ResonanceProfile(center=OMEGA, linewidth=3.0)
    kernel = LorentzianKernel.from_collective(profile, 1.0, 1.0)
    h = 0.2
    frequencies = np.array([OMEGA - 1.0, OMEGA])
    decay, w0, w1 = kernel.weights(h, frequencies)
    a = kernel.rates(frequencies)
    # ∫₀ʰ e^{−a(h−s)}(1 + s)ds
    exact = (1 - np.exp(-a * h)) / a + (a * h - 1 + np.exp(-a * h)) / a**2
    assert np.allclose(w0 * 1.0 + w1 * (1 + h), exact)
    assert np.allclose(decay, np.exp(-a * h))
    tiny = kernel.weights(1e-6, frequencies)
    assert np.allclose(tiny[1] + tiny[2], 1e-6, rtol=1e-5)


def test_tabulated_carried_shift_matches_principal_value():
    atoms, source = _resonator_pair(0.002 * HBAR * EPSILON_0 / 1e-58)
    detuned = AtomConfig([Atom(atom.label, atom.position, atom.dipole, 101.0) for atom in atoms])
    kernel = TabulatedKernel(detuned, source, band=(80.0, 120.0), points=8001)
    shift = kernel.carried_shift([101.0, 101.0])
    parts = pv_components(detuned, source, band=(80.0, 120.0))
    assert abs(shift[0, 1]) > 0.1 * abs(decay_matrix(detuned, source)[0, 1])
    assert shift[0, 1] == pytest.approx(parts.minus[0, 1], rel=1e-3)
    assert shift[1, 0] == pytest.approx(parts.minus[1, 0], rel=1e-3)
    assert np.all(MarkovianKernel(np.eye(2)).carried_shift([101.0, 101.0]) == 0)


def test_tabulated_kernel_keeps_near_field_exchange():
    # ω̃R/c = 0.02: the 1/R³ exchange lies outside any band around ω̃
    separation = 0.02 * C / OMEGA
    dipole = np.array([0.0, 0.0, 5 * DEBYE])
    atoms = AtomConfig([Atom("A", np.zeros(3), dipole, OMEGA),
                        Atom("B", np.array([separation, 0.0, 0.0]), dipole, OMEGA)])
    source = VacuumGreen()
    cs = build_coupling_set(atoms, source)
    assert cs.delta_ab == pytest.approx(-2.96e12, rel=0.01)
    t = np.linspace(0, 3 / abs(cs.delta_ab), 601)
    series = volterra_solve(TabulatedKernel(atoms, source), cs.delta_ab, cs.frequencies, t,
                            delta_ba=float(cs.delta[1, 0].real))
    reference = weak_amplitudes(cs, t)
    assert np.max(series.p_b) > 0.99
    assert np.max(np.abs(series.p_b - reference.p_b)) < 1e-3
    assert np.max(np.abs(series.p_a - reference.p_a)) < 1e-3
