import math

import pytest

import lanpaint


def test_config_defaults_and_validation():
    cfg = lanpaint.LanPaintConfig()
    assert cfg.inner_steps == 5
    assert cfg.lambda_ == 8.0
    with pytest.raises(ValueError):
        lanpaint.LanPaintConfig(eta=-1.0)


def test_aux_free_particle_limit():
    # With A = 0 the discriminant is 1 and zeta2 = (1 - e^{-g}) / g.
    a = lanpaint.aux_functions(1.0, 1.0)
    assert a["zeta2"] == pytest.approx(1.0 - math.exp(-1.0), rel=1e-12)


def test_sho_moments_and_step_agree():
    kw = dict(gamma=2.0, a=1.5, c=[0.3] * 20000, d_coef=1.0, dtau=0.7)
    mom = lanpaint.sho_moments([0.5] * 20000, [0.1] * 20000, **kw)
    x, q = lanpaint.sho_step([0.5] * 20000, [0.1] * 20000, seed=3, **kw)
    mean_x = sum(x) / len(x)
    var_x = sum((v - mean_x) ** 2 for v in x) / (len(x) - 1)
    assert mean_x == pytest.approx(mom["mu_x"][0], abs=5 * math.sqrt(mom["s_xx"] / len(x)))
    assert var_x == pytest.approx(mom["s_xx"], rel=0.05)
    assert len(q) == len(x)


def test_scores_match_closed_form():
    s = lanpaint.gaussian_score([0.0, 0.0], [[1.0, 0.0], [0.0, 1.0]], [0.5, -1.0], 0.0)
    assert s == pytest.approx([-0.5, 1.0])
    g = lanpaint.gmm_score([1.0], [[0.0, 0.0]], [[[1.0, 0.0], [0.0, 1.0]]], [0.5, -1.0], 0.3)
    assert g == pytest.approx(s)


def test_inpaint_pins_observed_and_is_deterministic():
    args = ([0.0, 0.0], [[1.0, 0.8], [0.8, 1.0]], [False, True], [0.0, 1.0], 50)
    a = lanpaint.inpaint_gaussian(*args, seed=4)
    b = lanpaint.inpaint_gaussian(*args, seed=4, threads=2)
    assert a == b
    assert all(row[1] == 1.0 for row in a)
    with pytest.raises(ValueError):
        lanpaint.inpaint_gaussian(*args, method="bogus")


def test_gaussian_bench_separates_methods():
    lp = lanpaint.bench_gaussian("lanpaint", n_samples=5000)
    rp = lanpaint.bench_gaussian("replace", n_samples=5000)
    assert lp["kl"] < rp["kl"]
    assert rp["inner_steps"] == 0
    assert len(lp["sample_cov"]) == 1


def test_score_ratio_slope():
    lo, hi = math.log(1e-4), math.log(0.1)
    ts = [-math.log1p(-math.exp(hi + (lo - hi) * i / 9)) for i in range(10)]
    curve = lanpaint.score_ratio_curve(ts, n_draws=20000)
    slope = lanpaint.loglog_slope([(ab, r) for _, ab, r in curve])
    assert slope == pytest.approx(0.5, abs=0.1)
