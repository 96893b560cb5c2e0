import json

import numpy as np
import pandas as pd
import pytest

from dipolar.errors import AnalysisError, ConfigError
from dipolar.make_examples import example_path
from dipolar.output import Emitter
from dipolar.runner import ordered_analyses, run
from dipolar.scenario import load_scenario, parse_scenario

TRANSFER_TABLES = ["coupling.csv", "dynamics-weak.csv", "rates.csv", "spectrum-weak.csv"]


def read_table(path):
    return pd.read_csv(path, comment="#")


@pytest.fixture
def transfer():
    return load_scenario(example_path("transfer_overrides") / "scenario.yaml")


def test_ordered_analyses():
    assert ordered_analyses(["spectrum-weak", "coupling", "rates"]) == ["coupling", "rates", "spectrum-weak"]


def test_transfer_run(transfer, tmp_path):
    manifest = run(transfer, output_dir=tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(TRANSFER_TABLES + ["manifest.json"])
    assert manifest["analyses"] == ["coupling", "dynamics-weak", "rates", "spectrum-weak"]
    gamma0 = manifest["gamma0"]

    rates = manifest["summaries"]["rates"]
    assert rates["w1"] / gamma0 == pytest.approx(0.001724, rel=1e-3)
    assert rates["t0"] * gamma0 == pytest.approx((2 - np.sqrt(2)) / 1.07)
    assert rates["w1_detected"] == pytest.approx(rates["w1"], rel=0.03)

    weak = read_table(tmp_path / "dynamics-weak.csv")
    assert list(weak.columns[:2]) == ["t", "Gamma0_t"]
    assert weak["Gamma0_t"].iloc[-1] == pytest.approx(6.0)
    assert np.all(weak["P_A"] + weak["P_B"] <= 1 + 1e-9)

    coupling = read_table(tmp_path / "coupling.csv").set_index("coefficient")
    assert coupling.loc["K_A*B", "real"] / gamma0 == pytest.approx(-0.02)
    assert coupling.loc["K_A*B", "imag"] / gamma0 == pytest.approx(0.06)

    header = (tmp_path / "rates.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header.startswith("# analysis: ")
    written = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert written["outputs"]["rates"] == "rates.csv"
    assert written["version"] == "0.1.0"
    assert written["inputs"]["atoms"]["overrides"]["gamma_ab"] == 0.04


def test_runs_are_byte_identical(transfer, tmp_path):
    run(transfer, output_dir=tmp_path / "first")
    run(transfer, output_dir=tmp_path / "second")
    for name in TRANSFER_TABLES:
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()


def test_existing_outputs_are_protected(transfer, tmp_path):
    run(transfer, output_dir=tmp_path)
    before = (tmp_path / "coupling.csv").stat().st_mtime_ns
    with pytest.raises(ConfigError, match="already exists"):
        run(transfer, output_dir=tmp_path)
    assert (tmp_path / "coupling.csv").stat().st_mtime_ns == before
    run(transfer, output_dir=tmp_path, force=True)


def test_json_format(transfer, tmp_path):
    run(transfer, output_dir=tmp_path, fmt="json")
    payload = json.loads((tmp_path / "coupling.json").read_text(encoding="utf-8"))
    assert payload["columns"] == ["coefficient", "real", "imag"]
    assert payload["metadata"]["analysis"] == "coupling"
    assert payload["metadata"]["mode"] == "overrides"


def test_failed_analysis_removes_partial_output(tmp_path):
    scenario = parse_scenario({
        "atoms": {"reference": {"omega": 3e15, "dipole": 1.6e-29},
                  "overrides": {"gamma_aa": 1.07, "gamma_bb": 1.07, "gamma_ab": 0.04, "delta_ab": 0.06}},
        "analysis": ["coupling", "dynamics-strong"],
        "numerics": {"resonance": {"linewidth": 0.01, "branch": "-"}},
    })
    with pytest.raises(AnalysisError, match=r"\[dynamics-strong\] numerics.resonance") as info:
        run(scenario, output_dir=tmp_path)
    assert info.value.exit_code == 3
    assert list(tmp_path.iterdir()) == []


def test_vacuum_pair(tmp_path):
    scenario = load_scenario(example_path("vacuum_pair") / "scenario.yaml")
    manifest = run(scenario, output_dir=tmp_path)
    assert manifest["summaries"]["coupling"]["gamma_minus"] < manifest["gamma0"]
    weak = read_table(tmp_path / "dynamics-weak.csv")
    markov = read_table(tmp_path / "volterra.csv")
    assert np.max(np.abs(weak["P_B"] - markov["P_B"])) < 1e-5
    assert manifest["summaries"]["volterra"]["kernel"] == "markovian"
    assert len(manifest["summaries"]["spectrum-finite-T"]["peaks"]) >= 1


def test_resonator_rabi(tmp_path):
    scenario = load_scenario(example_path("resonator_rabi") / "scenario.yaml")
    manifest = run(scenario, output_dir=tmp_path)
    gamma0 = manifest["gamma0"]
    assert manifest["summaries"]["dynamics-strong"]["omega_plus"] / gamma0 == pytest.approx(np.sqrt(2.0), rel=1e-4)
    strong = read_table(tmp_path / "dynamics-strong.csv")
    exact = read_table(tmp_path / "volterra.csv")
    assert np.max(np.abs(strong["P_A"] - exact["P_A"])) < 0.03
    positions = sorted(peak["position"] for peak in manifest["summaries"]["spectrum-strong"]["peaks"])
    assert len(positions) == 2
    assert (positions[1] - positions[0]) / gamma0 == pytest.approx(np.sqrt(2.0), rel=0.01)


def test_emitter(tmp_path):
    with pytest.raises(ConfigError, match="format"):
        Emitter(tmp_path, fmt="xlsx")
    emitter = Emitter(tmp_path / "out")
    df = pd.DataFrame({"x": [0.1, 1 / 3], "y": [1j, 2.0]})
    path = emitter.emit_table("demo", df.assign(y=df["y"].apply(abs)), {"z": 1 + 2j, "n": np.int64(3)})
    lines = path.read_text(encoding="utf-8").splitlines()
    assert lines[:2] == ['# n: 3', '# z: {"imag": 2.0, "real": 1.0}']
    assert lines[2] == "x,y"
    assert lines[4] == "0.333333333333,2"
    emitter.write_manifest({"outputs": {"demo": path.name}})
    assert (tmp_path / "out" / "manifest.json").exists()
    emitter.cleanup()
    assert list((tmp_path / "out").iterdir()) == []


def test_manifest_records_constants(transfer, tmp_path):
    manifest = run(transfer, output_dir=tmp_path)
    written = json.loads((tmp_path / "manifest.json").read_text(encoding="utf-8"))
    assert written["constants"] == manifest["constants"]
    assert manifest["constants"] == {
        "mid_frequency_tolerance": 1e-3,
        "split_linewidths": 10.0,
        "default_band": [0.5, 1.5],
        "pv_rtol": 1e-6,
        "quad_limit": 500,
        "golden_rule_widths": 40.0,
        "equal_gamma_tolerance": 1e-9,
        "rk4_stability": 2.5,
    }


@pytest.mark.parametrize("branch", ["+", "-"])
def test_resonance_follows_exchange_shift(branch, tmp_path):
    # Ω₊/Δω_m ≈ 141 and Ω₋/Δω_m ≈ 0.045 keep both branches clear of the crossover
    overrides = {"gamma_aa": 50.0, "gamma_bb": 50.0, "gamma_ab": 49.99999, "delta_ab": 5.0}
    if branch == "-":
        overrides = {"gamma_aa": 50.0, "gamma_bb": 50.0, "gamma_ab": -49.99999, "delta_ab": 5.0}
    scenario = parse_scenario({
        "atoms": {"reference": {"omega": 3e15, "dipole": 1.6e-29}, "overrides": overrides},
        "analysis": ["dynamics-strong", "volterra"],
        "numerics": {"time": {"t_max": 3 * 2 * np.pi / np.sqrt(2.0), "steps": 4001},
                     "resonance": {"linewidth": 0.01, "detuning": 0.0, "branch": branch},
                     "volterra": {"kernel": "lorentzian"}},
    })
    run(scenario, output_dir=tmp_path)
    strong = read_table(tmp_path / "dynamics-strong.csv")
    exact = read_table(tmp_path / "volterra.csv")
    assert np.max(np.abs(strong["P_A"] - exact["P_A"])) < 0.03
    assert np.max(np.abs(strong["P_B"] - exact["P_B"])) < 0.03


def test_tabulated_volterra_keeps_near_field_exchange(tmp_path):
    # ω̃R/c = 0.02, so the exchange shift comes from outside the kernel band
    scenario = parse_scenario({
        "units": {"length": "nm", "dipole": "debye"},
        "medium": {"kind": "vacuum"},
        "atoms": {"geometry": [
            {"label": "A", "position": [0.0, 0.0, 0.0], "dipole": [0.0, 0.0, 5.0], "frequency": 3e15},
            {"label": "B", "position": [0.02 * 299792458.0 / 3e15 / 1e-9, 0.0, 0.0], "dipole": [0.0, 0.0, 5.0],
             "frequency": 3e15},
        ]},
        "analysis": ["dynamics-weak", "volterra"],
        "numerics": {"time": {"t_max": 3e-5, "steps": 601}, "volterra": {"kernel": "tabulated"}},
    })
    run(scenario, output_dir=tmp_path)
    weak = read_table(tmp_path / "dynamics-weak.csv")
    exact = read_table(tmp_path / "volterra.csv")
    assert weak["P_B"].max() > 0.99
    assert np.max(np.abs(weak["P_B"] - exact["P_B"])) < 1e-3
