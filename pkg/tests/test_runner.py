import csv
import json

import numpy as np
import pytest

from rggmax import cli, runner
from rggmax import limit_laws as ll
from rggmax import stats as st


def _cfg(tmp_path, **kw):
    base = {"kind": "threshold_weibull", "d": 1, "k": 1, "n": "1000", "replicates": 10, "seed": 5,
            "atlas_samples": 10 ** 4, "out": str(tmp_path)}
    base.update(kw)
    return runner.config_from_mapping(base)


def test_weibull_smoke_records(tmp_path):
    summary = runner.run_experiment(_cfg(tmp_path))
    rows = runner.read_records(tmp_path / "records.csv")
    assert len(rows) == 10
    assert list(rows[0])[:13] == runner.RECORD_COLUMNS
    for row in rows:
        # audit: the statistic is -n^2 S for d = k = 1
        assert float(row["statistic"]) == -1000.0 ** 2 * float(row["S_k"])
    assert summary["replicates"] == 10 and "checks" in summary
    assert (tmp_path / "plot_ecdf.csv").exists() and (tmp_path / "plot_qq.csv").exists()


def test_determinism_and_worker_independence(tmp_path):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    runner.run_experiment(_cfg(a))
    runner.run_experiment(_cfg(b))
    runner.run_experiment(_cfg(c, workers=2))
    ra = (a / "records.csv").read_bytes()
    assert ra == (b / "records.csv").read_bytes() == (c / "records.csv").read_bytes()


def test_dropping_replicates_keeps_the_rest(tmp_path):
    runner.run_experiment(_cfg(tmp_path / "ten"))
    runner.run_experiment(_cfg(tmp_path / "four", replicates=4))
    ten = (tmp_path / "ten" / "records.csv").read_text().splitlines()
    four = (tmp_path / "four" / "records.csv").read_text().splitlines()
    assert four == ten[:5]


def test_summary_recomputed_from_records(tmp_path):
    summary = runner.run_experiment(_cfg(tmp_path, d=2, n="2000", replicates=30))
    rows = runner.read_records(tmp_path / "records.csv")
    law = ll.WeibullLaw(summary["mu_dk"], summary["exponent"])
    stat = np.array([float(r["statistic"]) for r in rows])
    (check,) = summary["checks"]
    assert check["statistic"] == st.ks_distance(stat, law.cdf)
    assert check["replicates"] == 30 and check["seed_range"] == [5, 5]
    plot = np.loadtxt(tmp_path / "plot_ecdf.csv", delimiter=",", skiprows=1)
    assert np.all(np.isfinite(plot))
    assert runner.ks_from_plot(plot) == pytest.approx(check["statistic"], abs=1e-15)


def test_emit_plot_data():
    law = ll.GumbelLaw()
    rows = runner.emit_plot_data([0.3], law.cdf)
    assert rows.shape == (2, 3)
    assert rows[0, 1] == 0.0 and rows[1, 1] == 1.0
    x = law.ppf(np.random.default_rng(0).random(300))
    rows = runner.emit_plot_data(np.concatenate((x, x[:10])), law.cdf)
    assert np.all(np.diff(rows[:, 0]) > 0)
    assert runner.ks_from_plot(rows) == pytest.approx(st.ks_distance(np.concatenate((x, x[:10])), law.cdf))
    with pytest.raises(ValueError):
        runner.emit_plot_data([], law.cdf)


def test_mu_constants_against_quadrature(tmp_path):
    cfg = runner.config_from_mapping({"kind": "mu_constants", "d": 1, "k": 2, "atlas_samples": 10 ** 6,
                                      "seed": 1, "out": str(tmp_path)})
    summary = runner.run_experiment(cfg)
    by = {c["class"]: c for c in summary["classes"]}
    # both configuration integrals equal 3 on the line (area of the feasible region)
    for name in ("P3", "K3"):
        assert abs(by[name]["mu"] - 0.5) <= 3 * by[name]["se"] + 1e-3
    assert json.loads((tmp_path / "summary.json").read_text())["kind"] == "mu_constants"


@pytest.mark.parametrize("bad", [
    {"kind": "nonsense"},
    {"kind": "threshold_weibull", "k": 1, "replicates": 0},
    {"kind": "threshold_weibull"},
    {"kind": "threshold_gumbel", "d": 1, "n": "100000"},
    {"kind": "threshold_weibull", "k": 1, "n": "100000000", "d": 3},
    {"kind": "threshold_weibull", "k": 1, "norm": "l9"},
    {"kind": "threshold_weibull", "k": 1, "colour": "red"},
])
def test_invalid_configs(bad):
    with pytest.raises(ValueError):
        runner.config_from_mapping({"n": "1000", **bad}).validate()


def test_load_config_and_overrides(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text("kind = threshold_gumbel\nd = 2\nn = 10000 20000\nk_rule = loglog  # default rule\nreplicates = 3\n")
    cfg = runner.load_config(path, {"seed": 9})
    assert cfg.n == [10000, 20000] and cfg.seed == 9 and cfg.k_of(10000) == 5
    path.write_text("[experiment]\nkind = mu_constants\nk = 2\nd = 1\n")
    assert runner.load_config(path).k == 2


def test_cli_weibull_and_schedule(tmp_path, capsys):
    out = tmp_path / "w"
    assert cli.main(["weibull", "--d", "1", "--k", "1", "--n", "1000", "--replicates", "5",
                     "--out", str(out), "--atlas-samples", "1e4"]) == 0
    assert len(runner.read_records(out / "records.csv")) == 5
    assert cli.main(["schedule-dump", "--n", "10000", "100000", "--out", str(tmp_path / "s")]) == 0
    with open(tmp_path / "s" / "schedule.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["k_n"] for r in rows] == ["5", "5"]
    assert all(float(r["residual"]) < 1e-12 for r in rows)
    capsys.readouterr()
    assert cli.main(["weibull", "--k", "0", "--out", str(tmp_path / "x")]) == 2


def test_phi_fixed_and_concentration_smoke(tmp_path):
    s = runner.run_experiment(_cfg(tmp_path / "phi", kind="phi_fixed_k", k=2, n="2000", replicates=20))
    assert {"tv_W_k", "box_tv", "box_correlations"} <= set(s)
    assert (tmp_path / "phi" / "extremes.csv").exists()
    s = runner.run_experiment(_cfg(tmp_path / "c", kind="max_degree_concentration", d=2, k=3, n="5000",
                                   radius_exponent=-0.64, replicates=5))
    assert sum(s["histogram"].values()) == 5


def test_gumbel_and_growing_smoke(tmp_path):
    s = runner.run_experiment(_cfg(tmp_path / "g", kind="threshold_gumbel", d=2, k=None, k_rule="loglog",
                                   n="10000 20000", replicates=5))
    assert [e["n"] for e in s["per_n"]] == [10000, 20000]
    rows = runner.read_records(tmp_path / "g" / "records.csv")
    for row in rows:
        n, k, S = int(row["n"]), int(row["k"]), float(row["S_k"])
        assert float(row["statistic"]) == ll.gumbel_statistic(S, n, k, 2, np.pi)
    s = runner.run_experiment(_cfg(tmp_path / "pg", kind="phi_growing_k", d=2, k=None, k_rule="loglog",
                                   n="20000", replicates=5, density="radial:2"))
    assert s["scale_sub"] > 1


def test_bounds_and_palm_smoke(tmp_path):
    s = runner.run_experiment(_cfg(tmp_path / "p", kind="palm_suite", d=2, replicates=200, lam=50.0, r=0.1))
    assert len(s["functionals"]) == 2
