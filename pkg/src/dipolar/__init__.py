from .permittivity import ConstantPermittivity, DrudeLorentz, Oscillator, Vacuum
from .green import BulkGreen, Pair, ResonatorGreen, TabulatedGreen, VacuumGreen, bulk_green
from .tables import GreenTable
from .coupling import Atom, AtomConfig, CouplingSet, build_coupling_set, decay_matrix, kappa, pv_components
from .projection import Projection
from .dynamics import (
    ResonanceProfile,
    TimeSeries,
    density_matrix_weak,
    lorentzian_amplitudes,
    strong_populations,
    time_averages,
    weak_amplitudes,
)
from .volterra import LorentzianKernel, MarkovianKernel, TabulatedKernel, volterra_solve
from .rates import golden_rule_rate, rate_report, rate_w1, rate_w2, rate_window_detect, ratio_report
from .spectrum import finite_time_spectrum, peak_analysis, strong_spectrum, weak_spectrum
from .scenario import Scenario, load_scenario
from .make_examples import make_example

__version__ = '0.1.0'
