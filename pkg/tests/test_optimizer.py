"""Portfolio construction: closed form, active set, sensitivities."""

import numpy as np
import pytest

from conftest import brute_force_min_variance, random_pd_matrix

from multiscale_markowitz import errors
from multiscale_markowitz.covariance import (
    METHOD_PRODUCT,
    MultiscaleCovariance,
    ScaledCovarianceSet,
    multiscale_cov,
)
from multiscale_markowitz.optimizer import (
    average_weights_across_scales,
    check_target_curve,
    correlation_hurst_sensitivity,
    correlation_sensitivity,
    correlation_sensitivity_analytic,
    max_sharpe,
    min_variance_closed_form,
    min_variance_long_only,
    sensitivity_to_hurst,
    sensitivity_to_variance,
)


def _set_for(matrices, scales, ids):
    return ScaledCovarianceSet(ids, tuple(scales), tuple(matrices),
                               tuple(100 for _ in scales), METHOD_PRODUCT,
                               "nonoverlapping")


# ---------------------------------------------------------------------------
# closed form


def test_closed_form_identity_matrix():
    w = min_variance_closed_form(np.eye(3))
    assert np.allclose(w.weights, 1.0 / 3.0, atol=1e-15)
    assert w.weights.sum() == pytest.approx(1.0, abs=1e-12)
    assert w.kkt_residual < 1e-12
    # lambda = 2 / (1' Sigma^{-1} 1)
    assert w.provenance["lagrange_multiplier"] == pytest.approx(2.0 / 3.0)


def test_closed_form_diagonal_matrix():
    w = min_variance_closed_form(np.diag([1.0, 2.0]))
    assert np.allclose(w.weights, [2.0 / 3.0, 1.0 / 3.0], atol=1e-14)


def test_closed_form_uniform_correlation():
    w = min_variance_closed_form(np.array([[1.0, 0.5], [0.5, 1.0]]))
    assert np.allclose(w.weights, [0.5, 0.5], atol=1e-14)


def test_closed_form_scale_invariant():
    rng = np.random.default_rng(11)
    m = random_pd_matrix(rng, 4)
    w1 = min_variance_closed_form(m).weights
    w2 = min_variance_closed_form(1000.0 * m).weights
    assert np.allclose(w1, w2, atol=1e-12)


def test_closed_form_accepts_blended_matrix():
    cs = _set_for((np.eye(2) * 1e-4,), (1,), ("x", "y"))
    ms = multiscale_cov(cs)
    assert isinstance(ms, MultiscaleCovariance)
    w = min_variance_closed_form(ms)
    assert w.asset_ids == ("x", "y")
    assert np.allclose(w.weights, 0.5)


def test_closed_form_singular_matrix():
    with pytest.raises(errors.SingularCovarianceError):
        min_variance_closed_form(np.ones((3, 3)))


def test_closed_form_ill_conditioned():
    with pytest.raises(errors.SingularCovarianceError):
        min_variance_closed_form(np.diag([1.0, 1e-15]))


def test_closed_form_can_short():
    # strong correlation pushes the high-variance asset negative
    m = np.array([[1.0, 0.9], [0.9, 1.0]]) * np.outer([1.0, 3.0], [1.0, 3.0])
    w = min_variance_closed_form(m)
    assert not w.long_only
    assert w.weights.min() < 0.0
    assert w.weights.sum() == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------------------
# long-only quadratic program


def test_long_only_matches_closed_form_when_interior():
    rng = np.random.default_rng(12)
    m = np.diag(rng.uniform(0.5, 2.0, size=3))  # diagonal: all weights positive
    w_free = min_variance_closed_form(m).weights
    w_box = min_variance_long_only(m)
    assert np.allclose(w_box.weights, w_free, atol=1e-10)
    assert w_box.kkt_residual < 1e-8


def test_long_only_clamps_shorted_asset():
    m = np.array([[1.0, 0.9], [0.9, 1.0]]) * np.outer([1.0, 3.0], [1.0, 3.0])
    w = min_variance_long_only(m)
    assert w.weights.min() == 0.0  # exact complementary slackness
    assert w.weights.sum() == pytest.approx(1.0, abs=1e-12)


def test_long_only_agrees_with_grid_search(rng):
    for _ in range(5):
        m = random_pd_matrix(rng, 3)
        w = min_variance_long_only(m)
        w_grid, obj_grid = brute_force_min_variance(m, n_steps=400)
        obj = float(w.weights @ m @ w.weights)
        assert obj <= obj_grid + 1e-4
        assert np.abs(w.weights - w_grid).max() < 0.01


def test_long_only_return_floor_binds():
    m = np.eye(3)
    mu = np.array([0.02, 0.05, 0.08])
    w = min_variance_long_only(m, mu=mu, mu_target=0.06)
    assert w.weights @ mu == pytest.approx(0.06, abs=1e-10)
    assert w.kkt_residual < 1e-8


def test_long_only_return_floor_slack_when_easy():
    m = np.eye(2)
    mu = np.array([0.10, 0.12])
    w = min_variance_long_only(m, mu=mu, mu_target=0.05)
    # unconstrained optimum already clears the floor
    assert np.allclose(w.weights, 0.5, atol=1e-10)


def test_long_only_infeasible_target():
    with pytest.raises(errors.InfeasibleError):
        min_variance_long_only(np.eye(2), mu=np.array([0.01, 0.02]), mu_target=0.5)


def test_long_only_floor_matches_grid_search(rng):
    for _ in range(3):
        m = random_pd_matrix(rng, 3)
        mu = rng.uniform(0.0, 0.1, size=3)
        target = 0.5 * (mu.min() + mu.max())
        w = min_variance_long_only(m, mu=mu, mu_target=target)
        w_grid, obj_grid = brute_force_min_variance(
            m, floor_vec=mu, floor_rhs=target, n_steps=400)
        assert float(w.weights @ m @ w.weights) <= obj_grid + 1e-4


def test_long_only_scale_invariant():
    rng = np.random.default_rng(13)
    m = random_pd_matrix(rng, 4)
    w1 = min_variance_long_only(m).weights
    w2 = min_variance_long_only(250.0 * m).weights
    assert np.allclose(w1, w2, atol=1e-9)


# ---------------------------------------------------------------------------
# tangency portfolio


def test_max_sharpe_identity_cov():
    w = max_sharpe(np.eye(2), np.array([0.02, 0.01]))
    assert np.allclose(w.weights, [2.0 / 3.0, 1.0 / 3.0], atol=1e-10)
    assert w.method == "max_sharpe"


def test_max_sharpe_short_path():
    w = max_sharpe(np.eye(2), np.array([0.10, -0.05]), long_only=False)
    # w proportional to Sigma^{-1} mu, normalized to sum one
    assert np.allclose(w.weights, [2.0, -1.0], atol=1e-10)


def test_max_sharpe_needs_positive_excess():
    with pytest.raises(errors.NoPositiveExcessReturnError):
        max_sharpe(np.eye(2), np.array([0.01, 0.02]), risk_free=0.05)


def test_max_sharpe_beats_random_feasible(rng):
    m = random_pd_matrix(rng, 4)
    mu = rng.uniform(0.01, 0.10, size=4)
    w = max_sharpe(m, mu)
    best = (w.weights @ mu) / np.sqrt(w.weights @ m @ w.weights)
    for _ in range(200):
        c = rng.dirichlet(np.ones(4))
        sharpe = (c @ mu) / np.sqrt(c @ m @ c)
        assert sharpe <= best + 1e-9


def test_max_sharpe_risk_free_shift():
    m = np.eye(2)
    w_a = max_sharpe(m, np.array([0.06, 0.03]), risk_free=0.0)
    w_b = max_sharpe(m, np.array([0.08, 0.05]), risk_free=0.02)
    assert np.allclose(w_a.weights, w_b.weights, atol=1e-10)


# ---------------------------------------------------------------------------
# weight averaging


def test_average_weights_requires_common_universe():
    a = min_variance_closed_form(np.eye(2), asset_ids=("x", "y"))
    b = min_variance_closed_form(np.eye(2), asset_ids=("x", "z"))
    with pytest.raises(errors.UniverseMismatchError):
        average_weights_across_scales([a, b])


def test_average_weights_mean_then_renormalize():
    a = min_variance_closed_form(np.diag([1.0, 2.0]))
    b = min_variance_closed_form(np.diag([2.0, 1.0]))
    avg = average_weights_across_scales([a, b])
    assert np.allclose(avg.weights, 0.5, atol=1e-12)
    assert avg.method == "averaged"


# ---------------------------------------------------------------------------
# sensitivities


def test_variance_sensitivity_identity_two_assets():
    rep = sensitivity_to_variance(np.eye(2), 0)
    assert rep.dweight_dvar == pytest.approx(-0.25, abs=1e-14)
    assert rep.dsolve_k_dvar == pytest.approx(-1.0)
    assert rep.dtotal_dvar == pytest.approx(-1.0)
    assert rep.weight == pytest.approx(0.5)


def test_variance_sensitivity_scales_inversely():
    for c in (0.5, 2.0, 10.0):
        rep = sensitivity_to_variance(c * np.eye(2), 0)
        assert rep.dweight_dvar == pytest.approx(-1.0 / (4.0 * c), rel=1e-12)


def test_variance_sensitivity_matches_finite_difference(rng):
    for _ in range(5):
        m = random_pd_matrix(rng, 4, scale=0.1, )
        k = int(rng.integers(0, 4))
        rep = sensitivity_to_variance(m, k)
        eps = 1e-7 * m[k, k]
        up, dn = m.copy(), m.copy()
        up[k, k] += eps
        dn[k, k] -= eps
        fd = (min_variance_closed_form(up).weights[k]
              - min_variance_closed_form(dn).weights[k]) / (2.0 * eps)
        assert rep.dweight_dvar == pytest.approx(fd, rel=1e-5, abs=1e-10)


def test_variance_sensitivity_warns_on_shorted_asset():
    m = np.array([[1.0, 0.9], [0.9, 1.0]]) * np.outer([1.0, 3.0], [1.0, 3.0])
    with pytest.warns(errors.SensitivitySignWarning):
        rep = sensitivity_to_variance(m, 1)
    assert rep.dweight_dvar >= 0.0


def test_hurst_sensitivity_scale_one_is_zero():
    cs = _set_for((np.eye(2) * 1e-4,), (1,), ("x", "y"))
    with pytest.warns(errors.ScaleOneWarning):
        assert sensitivity_to_hurst(cs, 0, 1) == 0.0


def test_hurst_sensitivity_matches_finite_difference():
    rng = np.random.default_rng(14)
    m21 = random_pd_matrix(rng, 3, scale=0.01)
    cs = _set_for((np.eye(3) * 1e-4, m21), (1, 21), ("a", "b", "c"))
    k = 1
    got = sensitivity_to_hurst(cs, k, 21)
    # bump the exponent: var(dt) multiplies by dt^(2 eps)
    eps = 1e-7
    out = []
    for sign in (+1.0, -1.0):
        mm = m21.copy()
        mm[k, k] *= 21.0 ** (2.0 * sign * eps)
        out.append(min_variance_closed_form(mm).weights[k])
    fd = (out[0] - out[1]) / (2.0 * eps)
    assert got == pytest.approx(fd, rel=1e-4)


def test_hurst_sensitivity_negative_for_long_asset():
    cs = _set_for((np.eye(3) * 1e-4, np.eye(3) * 2.1e-3), (1, 21), ("a", "b", "c"))
    assert sensitivity_to_hurst(cs, 0, 21) < 0.0


def test_correlation_sensitivity_analytic_matches_fd(rng):
    for _ in range(5):
        m = random_pd_matrix(rng, 3, scale=0.1)
        grad = correlation_sensitivity_analytic(m, 0, 1)
        fd_pair = correlation_sensitivity(m, 0, 1, eps=1e-7)
        assert grad[0] + grad[1] == pytest.approx(fd_pair, rel=1e-4, abs=1e-10)


def test_correlation_sensitivity_negative_for_diagonal_dominant():
    m = np.diag([1.0, 1.2, 0.8])
    assert correlation_sensitivity(m, 0, 1) < 0.0


def test_correlation_hurst_sensitivity_sign_and_scale_one():
    m = np.diag([1.0, 1.2, 0.8])
    with pytest.warns(errors.ScaleOneWarning):
        assert correlation_hurst_sensitivity(m, 0, 1, 1, 0.3) == 0.0
    val = correlation_hurst_sensitivity(m, 0, 1, 21, 0.3)
    assert val < 0.0


# ---------------------------------------------------------------------------
# risk-target verification


def test_target_curve_power_law():
    sig1 = np.eye(2) * 1e-4
    cs = _set_for(tuple(dt * sig1 for dt in (1, 5, 21)), (1, 5, 21), ("x", "y"))
    w = min_variance_closed_form(multiscale_cov(cs))
    # realized daily vol is sqrt(0.5e-4) ~ 0.71%; a 1% target clears every scale
    rep = check_target_curve(w, cs, sigma_target_daily=0.01, hurst_target=0.5)
    assert rep.all_within
    assert len(rep.rows) == 3
    # an impossible target fails at every scale
    rep_bad = check_target_curve(w, cs, sigma_target_daily=0.001, hurst_target=0.5)
    assert not rep_bad.all_within
    assert not any(r.within for r in rep_bad.rows)


def test_target_curve_ratio_definition():
    sig1 = np.eye(2) * 1e-4
    cs = _set_for((sig1,), (1,), ("x", "y"))
    w = min_variance_closed_form(multiscale_cov(cs))
    rep = check_target_curve(w, cs, sigma_target_daily=0.01, hurst_target=0.5)
    row = rep.rows[0]
    assert row.portfolio_variance == pytest.approx(0.5e-4)
    assert row.target_variance == pytest.approx(1e-4)
    assert row.ratio == pytest.approx(0.5)
