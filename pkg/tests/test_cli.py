import json

import numpy as np
import pytest
from scipy.special import kv

import prodfade
from prodfade import io as pio
from prodfade.cli import main
from prodfade.gammagamma import GammaGammaParams, gg_cdf, gg_pdf
from prodfade.mixture import ShadowedParams, cdf_single, pdf_single, sample_single
from prodfade.pdist import ProductModel
from prodfade.sysmodels import WpcConfig, wpc_sweep

KMS = {"mean_power": 1.5, "kappa": 2.0, "mu": 2, "m": 4}
PROD = {
    "link_a": {"kappa": 1.0, "mu": 1, "m": 2},
    "link_b": {"kappa": 3.0, "mu": 2, "m": 5, "mean_power": 2.0},
}
MANIFEST_KEYS = {"command", "config", "seed", "version", "created_utc", "output"}


def dump(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


def read_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
    body = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return header, body


def test_parse_grid_forms():
    np.testing.assert_array_equal(pio.parse_grid("1:5:5"), [1.0, 2.0, 3.0, 4.0, 5.0])
    np.testing.assert_allclose(
        pio.parse_grid("0.01:100:5:log"), np.geomspace(0.01, 100.0, 5), rtol=1e-15
    )
    assert pio.parse_grid("3:3:1").tolist() == [3.0]
    for bad in ("1:5", "a:5:3", "1:5:0", "1:5:4:cubic", "-1:5:3:log"):
        with pytest.raises(ValueError):
            pio.parse_grid(bad)


def test_format_float_roundtrips():
    for v in (1.0 / 3.0, 0.720268236366955, 1e300, 5e-324, -2.5):
        assert float(pio.format_float(v)) == v


def test_write_csv_validation(tmp_path):
    with pytest.raises(ValueError):
        pio.write_csv(tmp_path / "a.csv", ["a", "b"], [np.arange(3)])
    with pytest.raises(ValueError):
        pio.write_csv(tmp_path / "a.csv", ["a", "b"], [np.arange(3), np.arange(4)])


def test_eval_kms(tmp_path):
    out = tmp_path / "kms.csv"
    rc = main(["eval", "--dist", "kms", "--params", dump(tmp_path / "p.json", KMS),
               "--grid", "0.5:2:4", "--out", str(out)])
    assert rc == 0
    header, body = read_csv(out)
    assert header == ["x", "pdf", "cdf"]
    params = ShadowedParams(1.5, 2.0, 2, 4)
    np.testing.assert_allclose(body[:, 1], pdf_single(params, body[:, 0]), rtol=1e-15)
    np.testing.assert_allclose(body[:, 2], cdf_single(params, body[:, 0]), rtol=1e-15)
    manifest = json.loads((tmp_path / "kms.csv.manifest.json").read_text())
    assert set(manifest) == MANIFEST_KEYS
    assert manifest["command"] == "eval"
    assert manifest["version"] == prodfade.__version__
    assert manifest["output"] == str(out)
    assert manifest["config"]["params"]["kappa"] == 2.0


def test_eval_gg_rayleigh_product_point(tmp_path):
    params = {"m": 1, "m_hat": 1, "omega": 1.0, "omega_hat": 1.0}
    out = tmp_path / "gg.csv"
    rc = main(["eval", "--dist", "gg", "--params", dump(tmp_path / "p.json", params),
               "--grid", "1:1:1", "--out", str(out)])
    assert rc == 0
    _, body = read_csv(out)
    np.testing.assert_allclose(body[0, 2], 1.0 - 2.0 * kv(1, 2.0), rtol=1e-12)
    gp = GammaGammaParams(1, 1, 1.0, 1.0)
    np.testing.assert_allclose(body[0, 1], gg_pdf(gp, 1.0), rtol=1e-15)


def test_eval_prod(tmp_path):
    out = tmp_path / "prod.csv"
    rc = main(["eval", "--dist", "prod", "--params", dump(tmp_path / "p.json", PROD),
               "--grid", "0.1:10:6:log", "--out", str(out)])
    assert rc == 0
    _, body = read_csv(out)
    model = ProductModel(ShadowedParams(1.0, 1.0, 1, 2), ShadowedParams(2.0, 3.0, 2, 5))
    np.testing.assert_allclose(body[:, 1], model.pdf(body[:, 0]), rtol=1e-15)
    np.testing.assert_allclose(body[:, 2], model.cdf(body[:, 0]), rtol=1e-15)
    manifest = json.loads((tmp_path / "prod.csv.manifest.json").read_text())
    assert manifest["config"]["params"]["link_b"]["mean_power"] == 2.0


def test_eval_error_exit_codes(tmp_path):
    kms = dump(tmp_path / "p.json", KMS)
    out = str(tmp_path / "o.csv")
    # nonpositive grid point and malformed grid are validation failures
    assert main(["eval", "--dist", "kms", "--params", kms,
                 "--grid", "0:1:2", "--out", out]) == 2
    assert main(["eval", "--dist", "kms", "--params", kms,
                 "--grid", "1:5", "--out", out]) == 2
    # unreadable / malformed / incomplete inputs are ingestion failures
    assert main(["eval", "--dist", "kms", "--params", str(tmp_path / "nope.json"),
                 "--grid", "1:2:2", "--out", out]) == 3
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["eval", "--dist", "kms", "--params", str(bad),
                 "--grid", "1:2:2", "--out", out]) == 3
    gg_missing = dump(tmp_path / "gg.json", {"m": 1, "m_hat": 1, "omega": 1.0})
    assert main(["eval", "--dist", "gg", "--params", gg_missing,
                 "--grid", "1:2:2", "--out", out]) == 3
    # parses fine but violates a domain constraint
    neg = dump(tmp_path / "neg.json", {"kappa": -1.0, "mu": 1, "m": 1})
    assert main(["eval", "--dist", "kms", "--params", neg,
                 "--grid", "1:2:2", "--out", out]) == 2


def test_numerical_failure_exit_code(tmp_path):
    huge = {
        "link_a": {"kappa": 0.0, "mu": 1, "m": 1, "mean_power": 1e300},
        "link_b": {"kappa": 0.0, "mu": 1, "m": 1, "mean_power": 1e300},
    }
    rc = main(["eval", "--dist", "prod", "--params", dump(tmp_path / "p.json", huge),
               "--grid", "1:2:2", "--out", str(tmp_path / "o.csv")])
    assert rc == 4


def test_sample_reproducible_bytes(tmp_path):
    params = dump(tmp_path / "p.json", PROD)
    paths = [tmp_path / name for name in ("a.csv", "b.csv", "c.csv")]
    for path, seed in zip(paths, ("7", "7", "8")):
        rc = main(["sample", "--dist", "prod", "--params", params,
                   "--n", "400", "--seed", seed, "--out", str(path)])
        assert rc == 0
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert paths[0].read_bytes() != paths[2].read_bytes()
    # the data file is timestamp-free; only the manifests differ
    m0 = json.loads((tmp_path / "a.csv.manifest.json").read_text())
    m1 = json.loads((tmp_path / "b.csv.manifest.json").read_text())
    m0.pop("created_utc"), m1.pop("created_utc")
    m0.pop("output"), m1.pop("output")
    assert m0 == m1
    assert m0["seed"] == 7


def test_sample_matches_library_draws(tmp_path):
    out = tmp_path / "s.csv"
    rc = main(["sample", "--dist", "kms", "--params", dump(tmp_path / "p.json", KMS),
               "--n", "16", "--seed", "3", "--out", str(out)])
    assert rc == 0
    _, body = read_csv(out)
    expected = sample_single(ShadowedParams(1.5, 2.0, 2, 4),
                             np.random.default_rng(3), 16)
    np.testing.assert_array_equal(body[:, 0], expected)

    rc = main(["sample", "--dist", "prod", "--params", dump(tmp_path / "q.json", PROD),
               "--n", "16", "--seed", "5", "--out", str(out)])
    assert rc == 0
    _, body = read_csv(out)
    model = ProductModel(ShadowedParams(1.0, 1.0, 1, 2), ShadowedParams(2.0, 3.0, 2, 5))
    np.testing.assert_array_equal(
        body[:, 0], model.sample(np.random.default_rng(5), 16)
    )


def test_sample_count_validation(tmp_path):
    rc = main(["sample", "--dist", "kms", "--params", dump(tmp_path / "p.json", KMS),
               "--n", "0", "--seed", "1", "--out", str(tmp_path / "s.csv")])
    assert rc == 2


def test_match_kappa_stdout_and_json(tmp_path, capsys):
    assert main(["match-kappa", "--K", "10", "--mu", "1", "--m", "15"]) == 0
    assert capsys.readouterr().out.strip() == "14.948577431368578"
    out = tmp_path / "mk.json"
    assert main(["match-kappa", "--K", "10", "--mu", "1", "--m", "15",
                 "--out", str(out)]) == 0
    capsys.readouterr()
    payload = json.loads(out.read_text())
    np.testing.assert_allclose(payload["kappa"], 14.948577431368578, rtol=1e-12)
    assert payload["infinite_m"] is False
    assert (tmp_path / "mk.json.manifest.json").exists()
    # m <= mu has no finite root and is rejected up front
    assert main(["match-kappa", "--K", "10", "--mu", "2", "--m", "2"]) == 2
    assert main(["match-kappa", "--K", "10", "--mu", "1", "--m", "15",
                 "--infinite-m"]) == 0
    assert capsys.readouterr().out.strip() == "10"


def test_fit_cdf_cli_roundtrip(tmp_path, capsys):
    gen = ProductModel(ShadowedParams(1.0, 2.0, 1, 3), ShadowedParams(1.0, 2.0, 1, 3))
    draws = gen.sample(np.random.default_rng(21), 3000)
    data = tmp_path / "samples.csv"
    pio.write_csv(data, ["sample"], [draws])
    out = tmp_path / "fit.json"
    rc = main(["fit-cdf", "--data", str(data), "--out", str(out),
               "--mu", "1", "--m", "1,3", "--tie-links", "--starts", "2",
               "--max-points", "60", "--min-cdf", "1e-3", "--seed", "9"])
    assert rc == 0
    printed = capsys.readouterr().out
    assert printed.startswith("ks_error = ")
    assert "link_a:" in printed and "link_b:" in printed
    payload = json.loads(out.read_text())
    assert payload["objective"] == "ks_error"
    assert payload["seed"] == 9
    assert payload["trace_length"] >= 4
    # the command line is a thin shell over the library search
    from prodfade.fit import SearchConfig, fit_cdf

    cfg = SearchConfig(max_m=30, mu_grid=(1,), kappa_range=(0.0, 50.0),
                       tie_links=True, n_starts=2, max_points=60,
                       tie_tol=1e-3, m_grid=(1, 3), min_cdf=1e-3)
    expected = fit_cdf(pio.read_empirical_csv(str(data)), cfg)
    np.testing.assert_allclose(
        payload["objective_value"], expected.objective_value, rtol=1e-12
    )
    pars = payload["parameters"]
    assert pars["link_a"]["mu"] == 1
    assert pars["link_a"]["m"] == expected.model.link_a.m
    np.testing.assert_allclose(pars["link_a"]["kappa"], expected.model.link_a.kappa,
                               rtol=1e-12)
    # tied search returns identical links
    assert pars["link_a"]["kappa"] == pars["link_b"]["kappa"]
    manifest = json.loads((tmp_path / "fit.json.manifest.json").read_text())
    assert manifest["command"] == "fit-cdf"
    assert manifest["config"]["search"]["tie_links"] is True


def test_fit_kind_mismatch_exit_codes(tmp_path):
    xs = np.linspace(0.1, 3.0, 20)
    pdf_file = tmp_path / "pdf.csv"
    pio.write_csv(pdf_file, ["x", "pdf"], [xs, np.exp(-xs)])
    assert main(["fit-cdf", "--data", str(pdf_file),
                 "--out", str(tmp_path / "o.json")]) == 2
    sample_file = tmp_path / "s.csv"
    pio.write_csv(sample_file, ["sample"], [xs])
    assert main(["fit-pdf", "--data", str(sample_file),
                 "--out", str(tmp_path / "o.json")]) == 2
    bad_header = tmp_path / "h.csv"
    bad_header.write_text("x,foo\n1.0,2.0\n")
    assert main(["fit-cdf", "--data", str(bad_header),
                 "--out", str(tmp_path / "o.json")]) == 3
    ragged = tmp_path / "r.csv"
    ragged.write_text("x,cdf\n1.0\n")
    assert main(["fit-cdf", "--data", str(ragged),
                 "--out", str(tmp_path / "o.json")]) == 3


def test_fit_pdf_cli(tmp_path, capsys):
    from prodfade.pdist import EnvelopeModel

    gen = ProductModel(ShadowedParams(1.0, 1.5, 1, 2), ShadowedParams(1.0, 1.5, 1, 2))
    env = EnvelopeModel(gen, 1.2)
    r = np.linspace(0.05, 3.5, 80)
    data = tmp_path / "env.csv"
    pio.write_csv(data, ["x", "pdf"], [r, env.pdf(r)])
    out = tmp_path / "fit.json"
    rc = main(["fit-pdf", "--data", str(data), "--out", str(out),
               "--mu", "1", "--m", "2", "--tie-links", "--starts", "2"])
    assert rc == 0
    assert "envelope_scale=" in capsys.readouterr().out
    payload = json.loads(out.read_text())
    assert payload["objective"] == "mse_percent"
    assert payload["objective_value"] < 1e-4
    np.testing.assert_allclose(payload["parameters"]["envelope_scale"], 1.2, atol=1e-3)


def test_wpc_cli(tmp_path):
    cfg_obj = {"tx_power_over_noise": 1e5, "pb_antennas": 1, "rician_k": 0.0}
    out = tmp_path / "wpc.csv"
    rc = main(["wpc", "--config", dump(tmp_path / "c.json", cfg_obj),
               "--grid", "50:70:5", "--out", str(out)])
    assert rc == 0
    header, body = read_csv(out)
    assert header == ["p_over_n0_db", "outage", "throughput"]
    cfg = WpcConfig(1e5, 1, 0.0)
    _, outage, thr = wpc_sweep(cfg, np.linspace(50.0, 70.0, 5))
    np.testing.assert_allclose(body[:, 1], outage, rtol=1e-15)
    np.testing.assert_allclose(body[:, 2], thr, rtol=1e-15)

    rician = dict(cfg_obj, s_d_model={"kind": "rician", "k_factor": 5.0})
    assert main(["wpc", "--config", dump(tmp_path / "c2.json", rician),
                 "--grid", "60:70:3", "--out", str(out)]) == 0
    bad_kind = dict(cfg_obj, s_d_model={"kind": "weibull"})
    assert main(["wpc", "--config", dump(tmp_path / "c3.json", bad_kind),
                 "--grid", "60:70:3", "--out", str(out)]) == 3
    missing = {"pb_antennas": 1, "rician_k": 0.0}
    assert main(["wpc", "--config", dump(tmp_path / "c4.json", missing),
                 "--grid", "60:70:3", "--out", str(out)]) == 3
    bad_tau = dict(cfg_obj, harvest_fraction=1.5)
    assert main(["wpc", "--config", dump(tmp_path / "c5.json", bad_tau),
                 "--grid", "60:70:3", "--out", str(out)]) == 2


def test_backscatter_cli(tmp_path):
    cfg = {
        "mean_rx_power": 2.0,
        "forward": {"kappa": 0.0, "mu": 1, "m": 1},
        "reverse": {"kappa": 0.0, "mu": 1, "m": 1},
    }
    out = tmp_path / "bs.csv"
    rc = main(["backscatter", "--config", dump(tmp_path / "c.json", cfg),
               "--grid=-10:10:5", "--out", str(out)])
    assert rc == 0
    header, body = read_csv(out)
    assert header == ["power_db", "cdf"]
    z = 10.0 ** (body[:, 0] / 10.0) / 2.0
    np.testing.assert_allclose(
        body[:, 1], 1.0 - 2.0 * np.sqrt(z) * kv(1, 2.0 * np.sqrt(z)), rtol=1e-12
    )


def test_thread_env_equivalence(tmp_path, monkeypatch):
    params = dump(tmp_path / "p.json", KMS)
    single = tmp_path / "single.csv"
    # 150 points spans three sweep blocks, so the pool really engages
    assert main(["eval", "--dist", "kms", "--params", params,
                 "--grid", "0.1:8:150", "--out", str(single)]) == 0
    monkeypatch.setenv("PRODFADE_THREADS", "3")
    threaded = tmp_path / "threaded.csv"
    assert main(["eval", "--dist", "kms", "--params", params,
                 "--grid", "0.1:8:150", "--out", str(threaded)]) == 0
    assert single.read_bytes() == threaded.read_bytes()
    monkeypatch.setenv("PRODFADE_THREADS", "many")
    assert main(["eval", "--dist", "kms", "--params", params,
                 "--grid", "0.1:8:150", "--out", str(threaded)]) == 2


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == prodfade.__version__
