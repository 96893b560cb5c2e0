import numpy as np
import pytest

from dipolar.coupling import coupling_element
from dipolar.errors import DomainError, FrequencyRangeError, ModelError
from dipolar.green import (
    BulkGreen,
    Pair,
    ResonatorGreen,
    TabulatedGreen,
    VacuumGreen,
    asymptotic_delta_long,
    asymptotic_delta_short,
    bulk_green,
    equal_point_im_vacuum,
    query,
)
from dipolar.permittivity import ConstantPermittivity, Vacuum
from dipolar.tables import GreenTable
from dipolar.units import C, DEBYE

OMEGA = 3e15
DIPOLE = np.array([0.0, 0.0, 5 * DEBYE])


def _points(x):
    """two points on the x axis, ωR/c = x in vacuum"""
    return np.zeros(3), np.array([x * C / OMEGA, 0.0, 0.0])


def _delta(medium, x):
    r_a, r_b = _points(x)
    tensor = bulk_green(medium, r_a, r_b, OMEGA)
    return coupling_element(DIPOLE, tensor.real, DIPOLE, OMEGA).real


def test_near_field_im_part_matches_equal_point_value():
    r_a, r_b = _points(1e-3)
    im = bulk_green(Vacuum(), r_a, r_b, OMEGA).imag
    assert np.allclose(im, equal_point_im_vacuum(OMEGA), rtol=1e-5)
    assert equal_point_im_vacuum(OMEGA)[0, 0] == pytest.approx(OMEGA / (6 * np.pi * C))


def test_reciprocity():
    rng = np.random.default_rng(3)
    medium = ConstantPermittivity(2.0, 0.3)
    for _ in range(10):
        r_a, r_b = rng.normal(size=3) * 1e-7, rng.normal(size=3) * 1e-7
        forward = bulk_green(medium, r_a, r_b, OMEGA)
        backward = bulk_green(medium, r_b, r_a, OMEGA)
        assert np.allclose(forward, backward.T)


def test_array_frequencies():
    r_a, r_b = _points(1.0)
    omega = np.linspace(1e15, 4e15, 7)
    tensors = bulk_green(Vacuum(), r_a, r_b, omega)
    assert tensors.shape == (7, 3, 3)
    assert np.allclose(tensors[2], bulk_green(Vacuum(), r_a, r_b, omega[2]))


def test_coincident_points():
    with pytest.raises(DomainError, match="coincident"):
        bulk_green(Vacuum(), np.zeros(3), np.zeros(3), OMEGA)


@pytest.mark.parametrize("medium", [Vacuum(), ConstantPermittivity(2.25)])
def test_short_distance_asymptote(medium):
    r_a, r_b = _points(0.01)
    full = _delta(medium, 0.01)
    approx = asymptotic_delta_short(DIPOLE, DIPOLE, r_a, r_b, medium, OMEGA).real
    assert full == pytest.approx(approx, rel=0.01)


@pytest.mark.parametrize("medium", [Vacuum(), ConstantPermittivity(2.25)])
def test_long_distance_asymptote(medium):
    r_a, r_b = _points(50.0)
    full = _delta(medium, 50.0)
    approx = asymptotic_delta_long(DIPOLE, DIPOLE, r_a, r_b, medium, OMEGA).real
    assert full == pytest.approx(approx, rel=0.05)


def test_absorbing_medium_envelope():
    medium = ConstantPermittivity(2.25, 0.3)
    n = medium.refractive_index(OMEGA)
    x = np.linspace(50.0, 100.0, 41)
    log_envelope = []
    for xi in x:
        r_a, r_b = _points(xi)
        distance = r_b[0]
        log_envelope.append(np.log(abs(bulk_green(medium, r_a, r_b, OMEGA)[2, 2]) * 4 * np.pi * distance))
    slope = np.polyfit(x, log_envelope, 1)[0]
    assert slope == pytest.approx(-n.imag, rel=0.02)


def test_sources_agree_on_vacuum():
    r_a, r_b = _points(2.0)
    pair = Pair("A", "B", tuple(r_a), tuple(r_b))
    assert np.allclose(query(VacuumGreen(), pair, OMEGA), BulkGreen(Vacuum()).query(pair, OMEGA))
    same = Pair("A", "A", tuple(r_a), tuple(r_a))
    assert np.allclose(VacuumGreen().im(same, OMEGA), equal_point_im_vacuum(OMEGA))
    assert VacuumGreen().reflection(same, OMEGA) is None


def test_bulk_equal_point_scales_with_index():
    pair = Pair("A", "A", (0, 0, 0), (0, 0, 0))
    im = BulkGreen(ConstantPermittivity(2.25)).im(pair, OMEGA)
    assert np.allclose(im, 1.5 * equal_point_im_vacuum(OMEGA))


def test_bulk_equal_point_keeps_radiative_part_when_lossy():
    pair = Pair("A", "A", (0, 0, 0), (0, 0, 0))
    medium = ConstantPermittivity(2.25, 0.3)
    n_real = np.asarray(medium.refractive_index(OMEGA)).real
    assert n_real > 1.5
    im = BulkGreen(medium).im(pair, OMEGA)
    assert np.allclose(im, n_real * equal_point_im_vacuum(OMEGA))


def _tables(skew=0.0):
    grid = np.linspace(1e15, 5e15, 41)
    r_a, r_b = _points(1.0)

    def forward(w):
        return bulk_green(Vacuum(), r_a, r_b, w)

    def backward(w):
        tensors = bulk_green(Vacuum(), r_b, r_a, w).copy()
        tensors[:, 0, 1] += skew
        return tensors

    return GreenTable.from_function(forward, grid), GreenTable.from_function(backward, grid)


def test_tabulated_transposed_lookup():
    forward, _ = _tables()
    source = TabulatedGreen({("A", "B"): forward})
    r_a, r_b = _points(1.0)
    pair = Pair("A", "B", tuple(r_a), tuple(r_b))
    assert np.allclose(source.query(pair.swapped(), 2e15), source.query(pair, 2e15).T)
    assert source.band == (1e15, 5e15)
    assert not source.has_reflection("A")
    with pytest.raises(FrequencyRangeError, match="tabulated interval"):
        source.query(pair, 6e15)
    with pytest.raises(ModelError, match="no tabulated"):
        source.query(Pair("A", "C", tuple(r_a), tuple(r_b)), 2e15)


def test_tabulated_reciprocity_check():
    forward, backward = _tables()
    TabulatedGreen({("A", "B"): forward, ("B", "A"): backward}).check_reciprocity()
    forward, skewed = _tables(skew=1e6)
    with pytest.raises(ModelError, match="reciprocity"):
        TabulatedGreen({("A", "B"): forward, ("B", "A"): skewed}).check_reciprocity()


def test_resonator_profile_and_causality():
    couplings = {("A", "B"): np.eye(3) * 1e20}
    source = ResonatorGreen(resonance=OMEGA, damping=0.02 * OMEGA, couplings=couplings)
    profile = source.profile
    assert profile.center == OMEGA
    assert profile.linewidth == pytest.approx(0.01 * OMEGA)
    pair = Pair("A", "B", (0, 0, 0), (1e-7, 0, 0))
    omega = np.linspace(0.5 * OMEGA, 2 * OMEGA, 51)
    assert np.all(source.query(pair, omega)[:, 0, 0].imag > 0)
    # Im part is Lorentzian near the resonance: half maximum one half width away
    peak = source.query(pair, OMEGA)[0, 0].imag * OMEGA**2
    side = source.query(pair, OMEGA + profile.linewidth)[0, 0].imag * (OMEGA + profile.linewidth) ** 2
    assert side / peak == pytest.approx(0.5, rel=0.02)


def test_resonator_reflection_and_missing_pair():
    couplings = {("A", "A"): np.eye(3) * 1e20}
    source = ResonatorGreen(OMEGA, 0.02 * OMEGA, couplings)
    same = Pair("A", "A", (0, 0, 0), (0, 0, 0))
    refl = source.reflection(same, OMEGA)
    assert np.allclose(source.im(same, OMEGA), equal_point_im_vacuum(OMEGA) + refl.imag)
    with pytest.raises(ModelError, match="no coupling"):
        source.query(Pair("A", "B", (0, 0, 0), (1e-7, 0, 0)), OMEGA)
    with pytest.raises(ModelError):
        ResonatorGreen(OMEGA, 0.0, couplings)
