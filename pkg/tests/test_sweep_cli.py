import json
import math
from pathlib import Path

import numpy as np
import pytest
import yaml

from dsr_lab import benchmarks as bm
from dsr_lab import cli, recipes, sweep
from dsr_lab import receiver as rx
from dsr_lab.config import dump_config, load_config, parse_config
from dsr_lab.detection import PnrModel
from dsr_lab.errors import BracketError, ConfigError, InsufficientCutoffError

FIXTURES = Path(__file__).parent / "fixtures"

FULL = {
    "name": "demo",
    "scenario": "phase_diffusion",
    "beta": 0.25,
    "grid": {"start": 0.1, "stop": 1.5, "count": 5, "spacing": "log"},
    "detector": {"M": 4, "eta": 0.9, "nu": 0.01},
    "noise": {"sigma": 0.1},
    "priors": {"p0": 0.4, "p1": 0.6},
    "numerics": {"tail_tol": 1e-9, "quad_order": 21},
    "outputs": {"csv_path": "a.csv", "json_path": "a.json", "ratio_benchmarks": ["SQL_DSS_PD", "hb_cs"]},
}


def ideal(count=20, **outputs):
    return parse_config({"scenario": "ideal", "grid": {"start": 0.1, "stop": 2.0, "count": count},
                         "outputs": outputs})


def write_yaml(path, data):
    path.write_text(yaml.safe_dump(data), encoding="utf-8")
    return str(path)


def test_config_round_trip():
    cfg = parse_config(FULL)
    assert parse_config(yaml.safe_load(dump_config(cfg))) == cfg
    assert cfg.outputs.ratio_benchmarks == ("SQL_DSS_PD", "HB_CS")
    minimal = ideal()
    assert parse_config(yaml.safe_load(dump_config(minimal))) == minimal


@pytest.mark.parametrize("path,value,field", [
    (("colour",), 1, "colour"),
    (("detector", "eff"), 0.9, "detector.eff"),
    (("grid", "count"), 1, "grid.count"),
    (("grid", "start"), 2.0, "grid.start"),
    (("detector", "M"), 0, "detector.M"),
    (("detector", "M"), 2.5, "detector.M"),
    (("detector", "eta"), 0.0, "detector.eta"),
    (("detector", "nu"), -1, "detector.nu"),
    (("scenario",), "magic", "scenario"),
    (("numerics", "quad_order"), 40, "numerics.quad_order"),
    (("priors", "p0"), 0.9, "priors"),
    (("noise", "sigma"), None, "noise.sigma"),
    (("noise", "n_t"), 1e-3, "noise"),
    (("outputs", "ratio_benchmarks"), ["SQL_XYZ"], "outputs.ratio_benchmarks"),
    (("beta",), "high", "beta"),
])
def test_config_errors_name_the_field(path, value, field):
    raw = json.loads(json.dumps(FULL))
    node = raw
    for key in path[:-1]:
        node = node[key]
    node[path[-1]] = value
    with pytest.raises(ConfigError) as info:
        parse_config(raw)
    assert info.value.field == field
    assert str(info.value).startswith(field)


def test_ideal_scenario_needs_ideal_detector():
    with pytest.raises(ConfigError):
        parse_config({"scenario": "ideal", "grid": {"start": 0.1, "stop": 1, "count": 3},
                      "detector": {"M": 1, "eta": 0.9}})


def test_pd_ratio_needs_sigma():
    with pytest.raises(ConfigError):
        parse_config({"scenario": "pnr", "grid": {"start": 0.1, "stop": 1, "count": 3},
                      "outputs": {"ratio_benchmarks": ["SQL_DSS_PD"]}})


def test_ideal_sweep_matches_closed_form():
    rows = sweep.run_sweep(ideal())
    assert len(rows) == 20
    for row in rows:
        assert row.p_err_dsr == pytest.approx(0.5 * math.exp(-4 * row.N * (row.N + 1)), rel=1e-12, abs=1e-12)
        assert row.n_th == 1 and row.error is None


def test_rows_reproduce_library_calls():
    cfg = parse_config({**FULL, "outputs": {"ratio_benchmarks": ["SQL_DSS_PD", "HB_DSS"]}})
    for row in sweep.run_sweep(cfg):
        s = rx.SignalSpec(row.N, 0.25, 0.4, 0.6)
        d = rx.dsr_error_phase_diffusion(s, PnrModel(4, 0.9, 0.01),
                                         rx.PhaseDiffusionSpec(0.1, 21), 1e-9)
        assert (row.p_err_dsr, row.n_th) == (d.p_err, d.n_th)
        assert row.p_sql_dss == bm.sql_dss(row.N, 0.25)
        assert row.ratios["SQL_DSS_PD"] == bm.ratio_db(
            bm.sql_dss_phase_diffused(row.N, 0.1, 21, 0.25), d.p_err)
        assert 0 <= row.p_err_dsr <= 0.6


def pnr_config(**detector):
    return parse_config({"scenario": "pnr", "grid": {"start": 0.01, "stop": 4.0, "count": 400},
                         "detector": detector})


def test_dark_count_curve_oscillates_before_plateau():
    rows = sweep.run_sweep(pnr_config(M=5, eta=0.9, nu=1e-2))
    ratio = np.array([r.p_err_dsr / r.p_sql_dss for r in rows])
    n_th = np.array([r.n_th for r in rows])
    before = np.flatnonzero(n_th < 5)
    minima = [i for i in before[1:-1] if ratio[i] < ratio[i - 1] and ratio[i] < ratio[i + 1]]
    assert len(minima) >= 2


def test_thermal_sweep_threshold_steps_of_one():
    cfg = parse_config({"scenario": "thermal", "grid": {"start": 0.01, "stop": 4.0, "count": 400},
                        "detector": {"M": 10}, "noise": {"n_t": 1e-3}})
    n_th = [r.n_th for r in sweep.run_sweep(cfg)]
    assert set(np.diff(n_th)) <= {0, 1}
    assert n_th == sorted(n_th)


def test_emit_empty(tmp_path):
    cfg = ideal()
    sweep.emit([], cfg, tmp_path / "e.csv", tmp_path / "e.json")
    text = (tmp_path / "e.csv").read_text()
    assert text == ",".join(sweep.columns(cfg)) + "\n"
    doc = json.loads((tmp_path / "e.json").read_text())
    assert doc["rows"] == [] and doc["version"] and doc["config"]["scenario"] == "ideal"


def test_emit_is_deterministic_and_jobs_independent(tmp_path):
    cfg = ideal(count=12, ratio_benchmarks=["SQL_DSS", "HB_DSS"])
    a = sweep.rows_csv(sweep.run_sweep(cfg, 1), cfg)
    b = sweep.rows_csv(sweep.run_sweep(cfg, 1), cfg)
    c = sweep.rows_csv(sweep.run_sweep(cfg, 3), cfg)
    assert a == b == c
    assert "\r" not in a
    header = a.splitlines()[0].split(",")
    assert header == list(sweep.BASE_COLUMNS) + ["ratio_db_vs_sql_dss", "ratio_db_vs_hb_dss"]


def test_format_value():
    assert sweep.format_value(0.1) == "0.10000000000000001"
    assert sweep.format_value(3) == "3"
    assert sweep.format_value(math.nan) == "nan"
    assert sweep.format_value(-math.inf) == "-inf"
    assert sweep.format_value(None) == ""


def test_jobs_env_override(monkeypatch):
    monkeypatch.setenv("DSR_LAB_JOBS", "3")
    assert sweep.resolve_jobs(1) == 3
    monkeypatch.delenv("DSR_LAB_JOBS")
    assert sweep.resolve_jobs(None) == 1
    assert sweep.resolve_jobs(4) == 4


def test_crossover_examples():
    assert sweep.find_crossover(rx.dsr_error_ideal, bm.sql_cs, (0.1, 0.4)) == pytest.approx(0.21, abs=0.01)
    assert sweep.find_crossover(rx.dsr_error_ideal, bm.hb_cs, (0.2, 0.6)) == pytest.approx(0.40, abs=0.01)
    assert sweep.find_crossover(bm.sql_dss, bm.hb_cs, (0.4, 0.9)) == pytest.approx(0.659, abs=0.005)
    with pytest.raises(BracketError):
        sweep.find_crossover(rx.dsr_error_ideal, bm.sql_cs, (0.5, 1.0))


def test_crossover_bisection_tolerance():
    root = sweep.find_crossover(lambda x: x * x, lambda x: 2.0, (0, 3), xtol=1e-5)
    assert abs(root - math.sqrt(2)) < 1e-5


def test_curve_specs():
    assert sweep.curve(0.01)(5) == 0.01
    assert sweep.curve({"dsr_eta": 0.8})(1.0) == rx.dsr_error_eta(1.0, 0.8)
    with pytest.raises(ValueError):
        sweep.curve("bogus")


@pytest.mark.parametrize("N", [0.5, 1.0, 2.0])
def test_excess_error_monotone_in_noise(N):
    s, det, target = rx.SignalSpec(N), PnrModel(2), bm.sql_dss(N)
    grid = np.geomspace(1e-9, 1, 200)
    f = [rx.dsr_error_thermal(s, det, rx.ThermalSpec(n)).p_err - target for n in grid]
    assert np.all(np.diff(f) >= -1e-15)


@pytest.mark.parametrize("N", [0.4, 0.8, 1.5])
def test_tolerable_noise_region(N):
    det = PnrModel(2)
    n_max = sweep.max_tolerable_thermal(N, det)
    assert 0 < n_max < 1
    s = rx.SignalSpec(N)
    below = rx.dsr_error_thermal(s, det, rx.ThermalSpec(n_max * (1 - 1e-3))).p_err
    above = rx.dsr_error_thermal(s, det, rx.ThermalSpec(n_max * (1 + 1e-3))).p_err
    assert below <= bm.sql_dss(N) < above


def test_tolerable_noise_boundaries():
    assert sweep.max_tolerable_thermal(0.05, PnrModel(2)) == 0.0
    with pytest.raises(ValueError):
        sweep.max_tolerable_thermal(0.0, PnrModel(2))


def local_maxima(v):
    return [i for i in range(1, len(v) - 1) if v[i] > v[i - 1] and v[i] >= v[i + 1] and v[i] > 0]


@pytest.mark.parametrize("M", [1, 2, 3])
def test_tolerable_noise_has_M_peaks(M):
    Ns = np.arange(0.05, 3.0 + 1e-9, 0.02)
    v = [sweep.max_tolerable_thermal(N, PnrModel(M)) for N in Ns]
    assert len(local_maxima(v)) == M
    assert v[-1] < max(v) / 10


def test_population_table_unit_energy():
    cols = sweep.population_table(1.0, 24)
    assert cols["zeta1"][0] == pytest.approx(math.exp(-8), rel=1e-9)
    np.testing.assert_allclose(cols["rho0_input"], cols["rho1_input"], atol=1e-12)
    pd = sweep.population_table(1.0, 12, sigma=0.5)
    z0 = pd["zeta0"]
    assert any(z0[n] > z0[n - 1] and z0[n] > z0[n + 1] for n in range(2, 11, 2))


def test_fig4_recipe_matches_golden(tmp_path):
    written = recipes.reproduce_figure(4, tmp_path)
    assert [p.name for p in written] == ["fig4_ideal.csv", "fig4_ideal.json", "fig4_crossovers.csv"]
    for name in ("fig4_ideal.csv", "fig4_crossovers.csv"):
        assert (tmp_path / name).read_bytes() == (FIXTURES / name).read_bytes()


def test_unknown_figure():
    with pytest.raises(ConfigError):
        recipes.load_recipe(7)


# command line


def test_cli_sweep_writes_csv_and_json(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "c.yaml", {"scenario": "ideal", "grid": {"start": 0.5, "stop": 1, "count": 3}})
    out = tmp_path / "out" / "r.csv"
    assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    assert out.read_text().startswith("N,beta,")
    assert json.loads(out.with_suffix(".json").read_text())["rows"][0]["N"] == 0.5


def test_cli_sweep_to_stdout(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "c.yaml", {"scenario": "ideal", "grid": {"start": 0.5, "stop": 1, "count": 3}})
    assert cli.main(["sweep", "--config", cfg]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 4 and lines[0].startswith("N,")


def test_cli_config_errors(tmp_path, capsys):
    bad = write_yaml(tmp_path / "bad.yaml", {"scenario": "ideal", "grid": {"start": 0.5, "stop": 1, "count": 3},
                                              "detector": {"M": 1, "dark": 0.1}})
    assert cli.main(["sweep", "--config", bad]) == 2
    assert "detector.dark" in capsys.readouterr().err
    assert cli.main(["sweep", "--config", str(tmp_path / "missing.yaml")]) == 2
    (tmp_path / "broken.yaml").write_text("scenario: [unclosed")
    assert cli.main(["sweep", "--config", str(tmp_path / "broken.yaml")]) == 2


def test_cli_numeric_failure(tmp_path, capsys, monkeypatch):
    def boom(*args, **kwargs):
        raise InsufficientCutoffError("cutoff exhausted", achieved_norm=0.9, cutoff=2048)

    monkeypatch.setattr(rx, "dsr_error_thermal", boom)
    cfg = write_yaml(tmp_path / "t.yaml", {"scenario": "thermal", "grid": {"start": 0.5, "stop": 1, "count": 2},
                                            "noise": {"n_t": 1e-3}})
    out = tmp_path / "t.csv"
    assert cli.main(["sweep", "--config", cfg, "--out", str(out), "--jobs", "1"]) == 3
    assert "cutoff exhausted" in capsys.readouterr().err
    rows = json.loads(out.with_suffix(".json").read_text())["rows"]
    assert all("InsufficientCutoffError" in r["error"] for r in rows)
    assert "error" not in out.read_text().splitlines()[0]


def test_cli_io_error(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "c.yaml", {"scenario": "ideal", "grid": {"start": 0.5, "stop": 1, "count": 3}})
    (tmp_path / "taken").mkdir()
    assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / "taken")]) == 4
    assert "I/O error" in capsys.readouterr().err


def test_cli_benchmarks_verb(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "b.yaml", {"scenario": "ideal", "grid": {"start": 1, "stop": 2, "count": 2},
                                            "outputs": {"ratio_benchmarks": ["SQL_CS"]}})
    assert cli.main(["benchmarks", "--config", cfg]) == 0
    first = capsys.readouterr().out.splitlines()[1].split(",")
    assert float(first[-1]) == pytest.approx(21.32, abs=0.01)


def test_cli_crossover_verb(tmp_path, capsys):
    cfg = write_yaml(tmp_path / "x.yaml", {"crossovers": [{"a": "sql_dss", "b": "hb_cs", "bracket": [0.4, 0.9]}]})
    assert cli.main(["crossover", "--config", cfg]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "a,b,lo,hi,N_star"
    assert float(lines[1].split(",")[-1]) == pytest.approx(0.659, abs=0.005)
    bad = write_yaml(tmp_path / "y.yaml", {"crossovers": [{"a": "sql_dss", "b": "hb_cs", "bracket": [1, 2]}]})
    assert cli.main(["crossover", "--config", bad]) == 3


def test_cli_ntmax_verb(tmp_path):
    cfg = write_yaml(tmp_path / "n.yaml", {"scenario": "thermal", "grid": {"start": 0.4, "stop": 0.6, "count": 3},
                                            "detector": {"M": 1}})
    out = tmp_path / "n.csv"
    assert cli.main(["ntmax", "--config", cfg, "--out", str(out)]) == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "N,M,eta,nu,n_t_max" and len(lines) == 4
    assert load_config(cfg, require_noise=False).noise.n_t is None


def test_cli_rejects_unknown_figure(capsys):
    with pytest.raises(SystemExit) as info:
        cli.main(["reproduce-figure", "7"])
    assert info.value.code == 2
