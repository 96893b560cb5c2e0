"""Invariant checks over randomized two-atom geometries."""

import logging
import warnings
from dataclasses import dataclass, field
from typing import List

import numpy as np
import pandas as pd

from .coupling import Atom, AtomConfig, CouplingSet, build_coupling_set, dd_shift, decay_matrix, kappa
from .dynamics import weak_amplitudes
from .green import BulkGreen, VacuumGreen
from .permittivity import ConstantPermittivity, DrudeLorentz
from .spectrum import EmissionVector, finite_time_spectrum, spectrum_grid, weak_spectrum
from .units import C, DEBYE, NM

logger = logging.getLogger(__name__)

CHECKS = ("reciprocity", "cauchy-schwarz", "kappa-identity", "probability", "spectrum-nonnegative")

#: transition wavelength of the randomized atoms
WAVELENGTH = 600 * NM
RECIPROCITY_TOL = 1e-12
KAPPA_TOL = 1e-10
PROBABILITY_TOL = 1e-9


@dataclass(frozen=True)
class CheckResult:
    check: str
    geometry: int
    source: str
    value: float
    passed: bool


@dataclass
class SelfTestReport:
    results: List[CheckResult] = field(default_factory=list)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]

    @property
    def ok(self) -> bool:
        return not self.failures

    @property
    def df(self) -> pd.DataFrame:
        return pd.DataFrame([r.__dict__ for r in self.results],
                            columns=["check", "geometry", "source", "value", "passed"])

    def summary(self) -> pd.DataFrame:
        """runs and failures per check"""
        df = self.df
        return df.groupby("check").agg(runs=("passed", "size"), failures=("passed", lambda p: int((~p).sum())))


def random_atoms(rng: np.random.Generator) -> AtomConfig:
    """Two atoms with random dipoles, separation between 0.01 and 10 reduced wavelengths."""
    omega = 2 * np.pi * C / WAVELENGTH
    reduced = C / omega
    distance = reduced * 10 ** rng.uniform(-2, 1)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    atoms = []
    for label, position in (("A", np.zeros(3)), ("B", distance * direction)):
        dipole = rng.normal(size=3)
        dipole *= rng.uniform(0.5, 5) * DEBYE / np.linalg.norm(dipole)
        frequency = omega * (1 + rng.uniform(-1e-4, 1e-4))
        atoms.append(Atom(label, position, dipole, frequency))
    return AtomConfig(atoms)


def _sources(rng: np.random.Generator):
    lossless = BulkGreen(ConstantPermittivity(rng.uniform(1.0, 4.0)))
    lossy = BulkGreen(ConstantPermittivity(rng.uniform(1.0, 4.0), rng.uniform(0.01, 1.0)))
    omega = 2 * np.pi * C / WAVELENGTH
    dispersive = BulkGreen(DrudeLorentz.single(0.5 * omega, 1.3 * omega, 0.05 * omega))
    return {"vacuum": VacuumGreen(), "lossless": lossless, "lossy": lossy, "drude-lorentz": dispersive}


def check_reciprocity(atoms: AtomConfig, source) -> float:
    """max |G(r_A, r_B) − G(r_B, r_A)ᵀ| relative to |G|"""
    omega = float(np.mean(atoms.frequencies))
    forward = np.asarray(source.query(atoms.pair(0, 1), omega))
    backward = np.asarray(source.query(atoms.pair(1, 0), omega))
    return float(np.max(np.abs(forward - backward.T)) / np.max(np.abs(forward)))


def check_cauchy_schwarz(atoms: AtomConfig, source) -> float:
    """|Γ_{A*B}|² / (Γ_AA·Γ_BB), at most one for a lossless environment."""
    gamma = decay_matrix(atoms, source)
    return float(abs(gamma[0, 1]) ** 2 / (gamma[0, 0].real * gamma[1, 1].real))


def check_kappa_identity(atoms: AtomConfig, source) -> float:
    k = kappa(atoms, source, check=False)
    expected = -decay_matrix(atoms, source) / 2 + 1j * dd_shift(atoms, source)
    return float(np.max(np.abs(k - expected)) / np.max(np.abs(expected)))


def _weak_series(cs: CouplingSet, periods: float, steps: int):
    slowest = max(min(cs.gamma_plus, cs.gamma_minus), 0.1 * cs.gamma_aa)
    t = np.linspace(0.0, periods / slowest, steps)
    return weak_amplitudes(cs, t)


def check_probability(cs: CouplingSet) -> float:
    return _weak_series(cs, 10.0, 801).probability_violation()


def check_spectrum(cs: CouplingSet, rng: np.random.Generator) -> float:
    """Most negative spectrum value relative to the peak, weak and finite-time forms."""
    f_a, f_b = rng.normal(size=3) + 1j * rng.normal(size=3), rng.normal(size=3) + 1j * rng.normal(size=3)
    omega_a = cs.frequencies[0]
    grid = spectrum_grid(omega_a, cs.delta_ab, max(cs.gamma_plus, cs.gamma_aa), points=401)
    weak = weak_spectrum(f_a, f_b, cs.delta_ab, cs.gamma_plus, cs.gamma_minus, omega_a, grid).values
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        series = _weak_series(cs, 20.0, 801)
        finite = finite_time_spectrum(series, grid, cs.frequencies, emission=EmissionVector(f_a, f_b)).values
    worst = min(np.min(weak) / np.max(weak), np.min(finite) / max(np.max(finite), np.finfo(float).tiny))
    return float(max(-worst, 0.0))


def run_selftest(geometries: int = 100, seed: int = 0) -> SelfTestReport:
    """Check every invariant on `geometries` random configurations.

    Reciprocity and the 𝒦 identity are checked for vacuum, lossless, lossy and
    dispersive bulk media; the Cauchy-Schwarz bound for the lossless ones;
    probability bounds and spectrum nonnegativity on vacuum coupling sets.
    """
    rng = np.random.default_rng(seed)
    report = SelfTestReport()
    add = report.results.append
    for g in range(geometries):
        atoms = random_atoms(rng)
        for name, source in _sources(rng).items():
            value = check_reciprocity(atoms, source)
            add(CheckResult("reciprocity", g, name, value, value <= RECIPROCITY_TOL))
            value = check_kappa_identity(atoms, source)
            add(CheckResult("kappa-identity", g, name, value, value <= KAPPA_TOL))
            if name in ("vacuum", "lossless"):
                value = check_cauchy_schwarz(atoms, source)
                add(CheckResult("cauchy-schwarz", g, name, value, value <= 1 + 1e-9))
        cs = build_coupling_set(atoms, VacuumGreen())
        value = check_probability(cs)
        add(CheckResult("probability", g, "vacuum", value, value <= PROBABILITY_TOL))
        value = check_spectrum(cs, rng)
        add(CheckResult("spectrum-nonnegative", g, "vacuum", value, value == 0.0))
    logger.info("selftest: %d checks, %d failures", len(report.results), len(report.failures))
    return report
