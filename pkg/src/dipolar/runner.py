"""Run the analyses of a scenario and write their tables plus a run manifest."""

import logging
from functools import cached_property
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from .coupling import (
    DEFAULT_BAND,
    MID_FREQUENCY_TOLERANCE,
    SPLIT_LINEWIDTHS,
    CouplingSet,
    build_coupling_set,
    pv_components,
    shifted_atoms,
)
from .dynamics import (
    RK4_STABILITY,
    ResonanceProfile,
    TimeSeries,
    population_peak,
    strong_populations,
    weak_amplitudes,
)
from .errors import AnalysisError, ConfigError, DipolarError, RateRegimeError
from .green import ResonatorGreen
from .output import Emitter
from .quadrature import PV_RTOL, QUAD_LIMIT
from .rates import EQUAL_GAMMA_TOLERANCE, GOLDEN_RULE_WIDTHS, rate_report, rate_window_detect
from .scenario import ANALYSES, Scenario
from .spectrum import (
    EmissionVector,
    emission_vector_strong,
    emission_vector_weak,
    finite_time_spectrum,
    peak_analysis,
    spectrum_grid,
    strong_spectrum,
    weak_spectrum,
)
from .volterra import LorentzianKernel, MarkovianKernel, TabulatedKernel, volterra_solve

logger = logging.getLogger(__name__)

#: dependency order: coupling before dynamics before rates and spectra
ANALYSIS_ORDER = ANALYSES

#: scenario keys reported with a failing analysis
ANALYSIS_KEYS = {
    "coupling": "atoms",
    "dynamics-weak": "numerics.time",
    "dynamics-strong": "numerics.resonance",
    "volterra": "numerics.volterra",
    "rates": "numerics.rate_window",
    "spectrum-weak": "numerics.spectrum",
    "spectrum-strong": "numerics.spectrum",
    "spectrum-finite-T": "numerics.spectrum.duration",
}


def _complex(pair) -> complex:
    return complex(pair[0], pair[1])


def numerical_constants() -> dict:
    """Fixed tolerances and defaults that shape the results, recorded in the manifest."""
    return {
        "mid_frequency_tolerance": MID_FREQUENCY_TOLERANCE,
        "split_linewidths": SPLIT_LINEWIDTHS,
        "default_band": list(DEFAULT_BAND),
        "pv_rtol": PV_RTOL,
        "quad_limit": QUAD_LIMIT,
        "golden_rule_widths": GOLDEN_RULE_WIDTHS,
        "equal_gamma_tolerance": EQUAL_GAMMA_TOLERANCE,
        "rk4_stability": RK4_STABILITY,
    }


class RunContext:
    """Quantities shared between analyses, each computed once on first use."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self.summaries: Dict[str, dict] = {}

    @cached_property
    def gamma0(self) -> float:
        return self.scenario.reference_rate()

    @cached_property
    def source(self):
        return self.scenario.build_source()

    @cached_property
    def atoms(self):
        atoms = self.scenario.build_atoms()
        if self.scenario.atoms.single_atom_shift:
            atoms = shifted_atoms(atoms, self.source, self.scenario.numerics.pv.quantum_correction)
        return atoms

    @property
    def geometry(self) -> bool:
        return self.scenario.atoms.geometry is not None

    @cached_property
    def coupling_set(self) -> CouplingSet:
        if self.geometry:
            return build_coupling_set(self.atoms, self.source)
        spec = self.scenario.atoms.overrides
        g0, f = self.gamma0, self.scenario.frequency_scale
        omega_a = self.scenario.reference_frequency() if spec.omega_a is None else spec.omega_a * f
        omega_b = None if spec.omega_b is None else spec.omega_b * f
        delta_ba = None if spec.delta_ba is None else spec.delta_ba * g0
        return CouplingSet.from_overrides(spec.gamma_aa * g0, spec.gamma_bb * g0, spec.gamma_ab * g0,
                                          spec.delta_ab * g0, omega_a, omega_b, delta_ba=delta_ba)

    @cached_property
    def profile(self) -> ResonanceProfile:
        spec = self.scenario.numerics.resonance
        if spec is None:
            if isinstance(self.source, ResonatorGreen):
                return self.source.profile
            raise ConfigError("numerics.resonance: required for strong-coupling analyses")
        cs = self.coupling_set
        # exact resonance of the selected superposition state: ω̃_A − δ_AB for "+", ω̃_A + δ_AB for "−"
        sign = 1.0 if spec.branch == "+" else -1.0
        resonance = cs.frequencies[0] - sign * cs.delta_ab
        return ResonanceProfile(resonance + spec.detuning * self.gamma0, spec.linewidth * self.gamma0)

    @property
    def branch(self) -> str:
        spec = self.scenario.numerics.resonance
        return "+" if spec is None else spec.branch

    @cached_property
    def strong_set(self) -> CouplingSet:
        """Coupling set at the resonance centre with Ω± filled in."""
        profile = self.profile
        if self.geometry:
            return build_coupling_set(self.atoms, self.source, frequency=profile.center, linewidth=profile.linewidth)
        return self.coupling_set.with_collective(profile.linewidth)

    @cached_property
    def time(self) -> np.ndarray:
        return self.scenario.time_grid()

    @cached_property
    def weak_series(self) -> TimeSeries:
        return weak_amplitudes(self.coupling_set, self.time)

    def series_table(self, series: TimeSeries) -> pd.DataFrame:
        df = series.df
        df.insert(1, "Gamma0_t", series.t * self.gamma0)
        return df

    def observation(self):
        point = self.scenario.numerics.spectrum.observation
        if point is None or not self.geometry:
            return None
        return np.asarray(point, dtype=float) * self.scenario.length_scale

    def pv_band(self):
        band = self.scenario.numerics.pv.band
        if band is None:
            return None
        f = self.scenario.frequency_scale
        return band[0] * f, band[1] * f

    def span(self) -> Optional[float]:
        span = self.scenario.numerics.spectrum.span
        return None if span is None else span * self.gamma0


def _peaks_summary(series) -> list:
    return [{"position": p.position, "half_width": p.half_width, "weight": p.weight, "height": p.height}
            for p in peak_analysis(series)]


def analyse_coupling(ctx: RunContext):
    cs = ctx.coupling_set
    df = cs.df
    pv = ctx.scenario.numerics.pv
    if pv.compute:
        if not ctx.geometry:
            raise ConfigError("numerics.pv.compute: needs atoms.geometry")
        window = None if pv.window is None else pv.window * ctx.scenario.frequency_scale
        parts = pv_components(ctx.atoms, ctx.source, band=ctx.pv_band(), split_linewidths=pv.split_linewidths,
                              window=window)
        rows = []
        labels = ctx.atoms.labels
        for name, matrix in (("delta_minus", parts.minus), ("delta_plus", parts.plus),
                             ("delta_minus_resonant", parts.minus_resonant),
                             ("delta_minus_off_resonant", parts.minus_off_resonant),
                             ("delta_pv", parts.total)):
            for i in range(2):
                for j in range(2):
                    value = complex(matrix[i, j])
                    rows.append((f"{name}_{labels[i]}*{labels[j]}", value.real, value.imag))
        df = pd.concat([df, pd.DataFrame(rows, columns=df.columns)], ignore_index=True)
    ctx.summaries["coupling"] = {"gamma_plus": cs.gamma_plus, "gamma_minus": cs.gamma_minus,
                                 "kappa_ba": cs.kappa_ba}
    return df, {"mode": cs.metadata.get("mode"), "gamma0": ctx.gamma0}


def analyse_dynamics_weak(ctx: RunContext):
    series = ctx.weak_series
    t_peak, p_peak = population_peak(series)
    ctx.summaries["dynamics-weak"] = {"t_peak": t_peak, "Gamma0_t_peak": t_peak * ctx.gamma0, "P_B_peak": p_peak,
                                      "probability_violation": series.probability_violation()}
    return ctx.series_table(series), {"regime": "weak", "gamma0": ctx.gamma0}


def analyse_dynamics_strong(ctx: RunContext):
    cs = ctx.strong_set
    series = strong_populations(cs.gamma_plus, cs.gamma_minus, cs.omega_plus, cs.omega_minus, cs.linewidth,
                                cs.delta_ab, ctx.branch, ctx.time)
    ctx.summaries["dynamics-strong"] = {"omega_plus": cs.omega_plus, "omega_minus": cs.omega_minus,
                                        "linewidth": cs.linewidth, "branch": ctx.branch}
    return ctx.series_table(series), {"regime": "strong", "branch": ctx.branch, "gamma0": ctx.gamma0}


def analyse_volterra(ctx: RunContext):
    numerics = ctx.scenario.numerics
    kind = numerics.volterra.kernel
    cs = ctx.coupling_set
    delta_ab, delta_ba = cs.delta_ab, float(cs.delta[1, 0].real)
    frequencies = cs.frequencies
    if kind == "markovian":
        kernel = MarkovianKernel.from_coupling(cs)
    elif kind == "lorentzian":
        kernel = LorentzianKernel(ctx.profile, ctx.strong_set.gamma)
    else:
        kernel = TabulatedKernel(ctx.atoms, ctx.source, band=ctx.pv_band(), points=numerics.volterra.kernel_points)
    series = volterra_solve(kernel, delta_ab, frequencies, ctx.time, delta_ba=delta_ba,
                            memory_cap_mb=numerics.memory_cap_mb)
    ctx.summaries["volterra"] = {"kernel": kind, "probability_violation": series.probability_violation()}
    return ctx.series_table(series), {"kernel": repr(kernel), "gamma0": ctx.gamma0}


def analyse_rates(ctx: RunContext):
    cs = ctx.coupling_set
    report = rate_report(cs.gamma_aa, cs.gamma_bb, cs.kappa_ba, omega_a=cs.frequencies[0],
                         omega_b=cs.frequencies[1])
    df = report.df
    try:
        t0, slope = rate_window_detect(ctx.weak_series, ctx.scenario.numerics.rate_window)
    except RateRegimeError as error:
        logger.warning("rate window not found: %s", error)
        t0, slope = float("nan"), float("nan")
    df["t0_detected"] = t0
    df["w1_detected"] = slope
    ctx.summaries["rates"] = {**report.to_dict(), "t0_detected": t0, "w1_detected": slope}
    return df, {"gamma0": ctx.gamma0, "rate_window": ctx.scenario.numerics.rate_window}


def _scalar_vectors(spec, names):
    return [_complex(getattr(spec, name)) for name in names]


def analyse_spectrum_weak(ctx: RunContext):
    spec = ctx.scenario.numerics.spectrum
    cs = ctx.coupling_set
    observation = ctx.observation()
    if observation is not None:
        f_a, f_b = (emission_vector_weak(ctx.source, observation, atom, window=ctx.pv_band()) for atom in ctx.atoms)
    else:
        f_a, f_b = _scalar_vectors(spec, ("f_a", "f_b"))
    omega_a = cs.frequencies[0]
    grid = spectrum_grid(omega_a, cs.delta_ab, cs.gamma_plus, points=spec.points, span=ctx.span())
    series = weak_spectrum(f_a, f_b, cs.delta_ab, cs.gamma_plus, cs.gamma_minus, omega_a, grid)
    ctx.summaries["spectrum-weak"] = {"peaks": _peaks_summary(series)}
    return series.df, series.metadata


def analyse_spectrum_strong(ctx: RunContext):
    spec = ctx.scenario.numerics.spectrum
    cs = ctx.strong_set
    profile = ctx.profile
    plus = ctx.branch == "+"
    rabi = cs.omega_plus if plus else cs.omega_minus
    gamma_weak = cs.gamma_minus if plus else cs.gamma_plus
    observation = ctx.observation()
    if observation is not None:
        w_a, w_b = (emission_vector_strong(ctx.source, observation, atom, profile.center, profile.linewidth, rabi)
                    for atom in ctx.atoms)
        f_a, f_b = (emission_vector_weak(ctx.source, observation, atom, window=ctx.pv_band()) for atom in ctx.atoms)
    else:
        w_a, w_b, f_a, f_b = _scalar_vectors(spec, ("w_a", "w_b", "f_a", "f_b"))
    omega_a = cs.frequencies[0]
    grid = spectrum_grid(omega_a, cs.delta_ab, cs.gamma_plus, rabi=rabi, points=spec.points, span=ctx.span())
    series = strong_spectrum(w_a, w_b, f_a, f_b, cs.delta_ab, rabi, profile.linewidth, gamma_weak, ctx.branch,
                             omega_a, grid)
    ctx.summaries["spectrum-strong"] = {"peaks": _peaks_summary(series), "rabi": rabi}
    return series.df, series.metadata


def analyse_spectrum_finite(ctx: RunContext):
    spec = ctx.scenario.numerics.spectrum
    cs = ctx.coupling_set
    if spec.duration is not None:
        duration = spec.duration / ctx.gamma0
    else:
        slowest = min(r for r in (cs.gamma_plus, cs.gamma_minus, ctx.gamma0) if r > 0)
        duration = 20 / slowest
    t = np.linspace(0.0, duration, spec.time_steps)
    series = weak_amplitudes(cs, t)
    observation = ctx.observation()
    if observation is not None:
        f_a, f_b = (emission_vector_weak(ctx.source, observation, atom, window=ctx.pv_band()) for atom in ctx.atoms)
    else:
        f_a, f_b = _scalar_vectors(spec, ("f_a", "f_b"))
    omega_a = cs.frequencies[0]
    grid = spectrum_grid(omega_a, cs.delta_ab, cs.gamma_plus, points=spec.points, span=ctx.span())
    spectrum = finite_time_spectrum(series, grid, cs.frequencies, emission=EmissionVector(f_a, f_b))
    ctx.summaries["spectrum-finite-T"] = {"peaks": _peaks_summary(spectrum), "duration": duration}
    return spectrum.df, spectrum.metadata


ANALYSIS_FUNCTIONS = {
    "coupling": analyse_coupling,
    "dynamics-weak": analyse_dynamics_weak,
    "dynamics-strong": analyse_dynamics_strong,
    "volterra": analyse_volterra,
    "rates": analyse_rates,
    "spectrum-weak": analyse_spectrum_weak,
    "spectrum-strong": analyse_spectrum_strong,
    "spectrum-finite-T": analyse_spectrum_finite,
}


def ordered_analyses(names):
    return [name for name in ANALYSIS_ORDER if name in names]


def run(scenario: Scenario, output_dir: Union[str, Path, None] = None, fmt: Optional[str] = None,
        force: bool = False) -> dict:
    """Execute the scenario's analyses and write `<analysis>.<format>` files and `manifest.json`.

    Returns the manifest. On failure every file written by this run is removed and the
    error is re-raised as `AnalysisError` naming the analysis and scenario key.
    """
    from . import __version__

    directory = Path(output_dir) if output_dir is not None else scenario.base_dir / scenario.output.directory
    emitter = Emitter(directory, fmt or scenario.output.format, force)
    names = ordered_analyses(scenario.analysis)
    emitter.check(names)
    ctx = RunContext(scenario)
    outputs = {}
    try:
        for name in names:
            logger.info("running %s", name)
            try:
                df, metadata = ANALYSIS_FUNCTIONS[name](ctx)
            except DipolarError as error:
                raise AnalysisError(name, ANALYSIS_KEYS[name], error) from error
            path = emitter.emit_table(name, df, {"analysis": name, **metadata})
            outputs[name] = path.name
        manifest = {
            "version": __version__,
            "inputs": scenario.model_dump(mode="json"),
            "numerics": scenario.numerics.model_dump(mode="json"),
            "gamma0": ctx.gamma0,
            "time_grid": {"t_max": float(ctx.scenario.numerics.time.t_max / ctx.gamma0),
                          "steps": scenario.numerics.time.steps},
            "analyses": names,
            "outputs": outputs,
            "constants": numerical_constants(),
            "summaries": ctx.summaries,
        }
        emitter.write_manifest(manifest)
    except BaseException:
        emitter.cleanup()
        raise
    return manifest
