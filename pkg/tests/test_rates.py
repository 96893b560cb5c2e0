import numpy as np
import pytest
from scipy.integrate import trapezoid

from dipolar.coupling import CouplingSet
from dipolar.dynamics import TimeSeries, weak_amplitudes
from dipolar.errors import ModelError, RateRegimeError, RegimeWarning
from dipolar.rates import (
    golden_rule_rate,
    lorentzian_density,
    rate_report,
    rate_w1,
    rate_w2,
    rate_window_detect,
    ratio_report,
    regime_tag,
)

OMEGA = 3e15
KAPPA_BA = -0.02 + 0.06j


def test_w1_for_equal_rates():
    w1, t0 = rate_w1(1.07, 1.07, KAPPA_BA)
    assert w1 == pytest.approx(0.001724, rel=1e-3)
    assert t0 == pytest.approx((2 - np.sqrt(2)) / 1.07)


def test_w1_is_continuous_at_equal_rates():
    equal = rate_w1(1.0, 1.0, KAPPA_BA)
    nearly = rate_w1(1.0, 1.0 + 1e-5, KAPPA_BA)
    assert nearly[0] == pytest.approx(equal[0], rel=1e-4)
    assert nearly[1] == pytest.approx(equal[1], rel=1e-4)


def test_w1_single_decaying_atom():
    # one decay channel: e^{Γt0/2} = 2
    w1, t0 = rate_w1(2.0, 0.0, KAPPA_BA)
    assert t0 == pytest.approx(np.log(2.0))
    assert w1 == pytest.approx(abs(KAPPA_BA) ** 2 / 2.0)
    assert rate_w1(0.0, 2.0, KAPPA_BA) == pytest.approx((w1, t0))


def test_detected_slope_matches_w1():
    cs = CouplingSet.from_overrides(1.07, 1.07, 0.04, 0.06, omega_a=OMEGA)
    series = weak_amplitudes(cs, np.linspace(0, 6, 6001))
    t0, w1 = rate_window_detect(series, window=7)
    expected_w1, expected_t0 = rate_w1(1.07, 1.07, cs.kappa_ba)
    assert t0 == pytest.approx(expected_t0, rel=0.01)
    assert w1 == pytest.approx(expected_w1, rel=0.03)


def test_window_detect_rejects_monotone_decay():
    t = np.linspace(0, 5, 501)
    decay = TimeSeries(t, np.exp(-t / 2) + 0j, np.sqrt(1 - np.exp(-t)) + 0j)
    with pytest.raises(RateRegimeError, match="rate regime"):
        rate_window_detect(decay)
    with pytest.raises(ValueError, match="odd"):
        rate_window_detect(decay, window=6)


def test_w2():
    assert rate_w2(1.0, 1.0, 0.01, p_a0=0.5) == pytest.approx(4 * 1e-4 * 0.5 / 2)
    with pytest.warns(RegimeWarning, match="quasi-stationary"):
        rate_w2(1.0, 1.0, 0.5)
    with pytest.raises(ModelError):
        rate_w2(0.0, 0.0, 0.01)


def test_golden_rule_closed_form_and_quadrature():
    rate = golden_rule_rate(KAPPA_BA, 1.0, 0.5, omega_a=0.3, omega_b=0.0, p_a=0.8)
    half = 0.75
    expected = 4 * abs(KAPPA_BA) ** 2 * 0.8 / 1.5 * half**2 / (0.3**2 + half**2)
    assert rate.value == pytest.approx(expected, rel=1e-12)
    assert rate.quadrature == pytest.approx(rate.value, rel=1e-6)


def test_golden_rule_sharp_line():
    rate = golden_rule_rate(KAPPA_BA, 1.0, 0.0, omega_a=0.0, omega_b=0.2)
    assert rate.quadrature == pytest.approx(rate.value, rel=1e-12)
    assert golden_rule_rate(KAPPA_BA, 0.0, 0.0, omega_a=0.0, omega_b=1.0).value == 0.0
    with pytest.raises(ModelError, match="singular"):
        golden_rule_rate(KAPPA_BA, 0.0, 0.0)


def test_lorentzian_density_is_normalised():
    nu = np.linspace(-2000, 2000, 400001)
    assert trapezoid(lorentzian_density(nu, 0.0, 1.0), nu) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("regime, ratio, corrected", [
    ("i", 1.0, 1.0),
    ("ii", np.sqrt(2) - 1, 0.744),
    ("iii", 0.25, 1.0),
])
def test_limiting_regime_ratios(regime, ratio, corrected):
    report = ratio_report(regime)
    assert report.regime == regime
    assert report.ratio == pytest.approx(ratio, abs=1e-6)
    assert report.corrected_ratio == pytest.approx(corrected, abs=0.01)
    # independent of the scales
    assert ratio_report(regime, gamma=3.0, kappa_ba=0.2j).ratio == pytest.approx(report.ratio, rel=1e-9)
    with pytest.raises(ValueError, match="unknown regime"):
        ratio_report("iv")


def test_rate_report_output():
    report = rate_report(1.07, 1.07, KAPPA_BA)
    assert report.p_a0 == pytest.approx(np.exp(-1.07 * report.t0))
    assert report.regime == "ii"
    text = report.to_text()
    assert text.splitlines()[0].startswith("w1 = ")
    assert "regime = ii" in text
    assert list(report.df.columns) == ["w1", "t0", "w2", "w_golden", "p_a0", "ratio", "corrected_ratio", "regime"]
    assert regime_tag(20.0, 1.0) == "i"
    assert regime_tag(1.0, 20.0) == "iii"
