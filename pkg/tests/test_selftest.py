import numpy as np
import pytest

from dipolar.coupling import build_coupling_set
from dipolar.green import VacuumGreen
from dipolar.selftest import (
    CHECKS,
    check_cauchy_schwarz,
    check_probability,
    check_reciprocity,
    random_atoms,
    run_selftest,
)


def test_random_atoms_are_reproducible():
    a = random_atoms(np.random.default_rng(3))
    b = random_atoms(np.random.default_rng(3))
    assert np.array_equal(a[1].position, b[1].position)
    assert np.array_equal(a[0].dipole, b[0].dipole)
    assert a.labels == ["A", "B"]


def test_single_geometry_checks():
    atoms = random_atoms(np.random.default_rng(11))
    assert check_reciprocity(atoms, VacuumGreen()) < 1e-12
    assert check_cauchy_schwarz(atoms, VacuumGreen()) <= 1 + 1e-9
    assert check_probability(build_coupling_set(atoms, VacuumGreen())) <= 1e-9


@pytest.mark.timeout(120)
def test_selftest_passes():
    report = run_selftest(geometries=5, seed=2024)
    assert report.ok, report.df[~report.df["passed"]]
    summary = report.summary()
    assert set(summary.index) == set(CHECKS)
    assert summary.loc["reciprocity", "runs"] == 5 * 4
    assert summary.loc["cauchy-schwarz", "runs"] == 5 * 2
    assert summary["failures"].sum() == 0
