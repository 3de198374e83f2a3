import json
import math

import pytest

import nrmpp


def test_version_and_defaults():
    assert nrmpp.version().startswith("0.1.0")
    cfg = nrmpp.default_config()
    assert cfg["process.family"] == "poisson"
    assert cfg["chain.init_clusters"] == "10"


def test_gfc_matches_rising_factorial_for_k1():
    # C(n, 1; -a) = (-1)^n (a)_n
    for n in range(1, 7):
        expected = math.exp(nrmpp.log_pochhammer(0.5, n))
        assert (-1) ** n * nrmpp.gfc(n, 1, -0.5) == pytest.approx(expected, rel=1e-12)


def test_gamma_laplace_transform():
    assert nrmpp.psi(2.0, 2.0, 1.0) == pytest.approx((2.0 / 3.0) ** 2, rel=1e-12)
    assert nrmpp.kappa(2.0, 2.0, 1.0, 0) == pytest.approx(nrmpp.psi(2.0, 2.0, 1.0), rel=1e-12)


def test_poisson_mean_probability():
    for rate in (0.5, 2.0):
        m = nrmpp.prior_moments({"process.poisson.rate": str(rate)}, (-0.5, 0.5), (-0.5, 0.5))
        assert m["mean_p_a"] == pytest.approx(1.0 - math.exp(-rate), abs=1e-6)
        assert m["mean_mu_a"] == pytest.approx(rate, rel=1e-9)


def test_joint_law_poisson_is_translation_invariant():
    a = nrmpp.joint_kn_law({}, 5, [-0.1, 0.1])
    b = nrmpp.joint_kn_law({}, 5, [-0.3, 0.2])
    assert a > 0
    assert a == pytest.approx(b, rel=1e-9)


def test_unknown_key_rejected():
    with pytest.raises(ValueError):
        nrmpp.prior_moments({"process.nope": "1"}, (0, 1), (0, 1))


def test_fit_short_chain():
    data = nrmpp.synthetic("gaussmix2", 40, 3)
    assert len(data) == 40
    tr = nrmpp.fit({"chain.n_iter": "200", "chain.burn_in": "50", "process.region.lower": "-10",
                    "process.region.upper": "10", "process.poisson.rate": "0.2"}, data)
    assert len(tr["k"]) == 150
    assert all(k >= 1 for k in tr["k"])
    assert all(len(a) == 40 for a in tr["allocations"])


def test_run_simulate_writes_manifest(tmp_path):
    status = nrmpp.run("simulate", {"output.dir": str(tmp_path), "seed": "4"})
    assert status == 0
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert (tmp_path / "data.csv").exists()
