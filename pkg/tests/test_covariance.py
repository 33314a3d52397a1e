"""Per-scale covariance estimation and the blended working matrix."""

import numpy as np
import pytest

from multiscale_markowitz import errors
from multiscale_markowitz.covariance import (
    METHOD_L1,
    METHOD_PRODUCT,
    ScaledCovarianceSet,
    build_covariance_set,
    cov_at_scale,
    matrix_to_csv,
    multiscale_cov,
    psd_repair,
)
from multiscale_markowitz.synth import constant_correlation_cov, gen_correlated
from multiscale_markowitz.timeseries import (
    MODE_OVERLAPPING,
    panel_from_returns,
)


# ---------------------------------------------------------------------------
# single-scale estimates


def test_cov_identical_columns_rank_one():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(200)
    p = panel_from_returns(np.column_stack([x, x]), asset_ids=("x", "y"))
    m, n_obs = cov_at_scale(p, 1)
    assert n_obs == 200
    assert m[0, 0] == pytest.approx(m[0, 1])
    assert m[0, 0] == pytest.approx(x.var(ddof=1))


def test_cov_alternating_series_l1():
    # median 0, every absolute deviation 1: robust variance estimate is 1
    p = panel_from_returns(np.tile([-1.0, 1.0], 50))
    m, _ = cov_at_scale(p, 1, method=METHOD_L1)
    assert m[0, 0] == pytest.approx(1.0)


def test_cov_l1_gaussian_ratio():
    # E|X - med| = sigma sqrt(2/pi) for Gaussian X, so the robust diagonal
    # sits 2/pi below the product estimate
    rng = np.random.default_rng(2)
    p = panel_from_returns(rng.standard_normal(1 << 15) * 0.01)
    prod, _ = cov_at_scale(p, 1, method=METHOD_PRODUCT)
    l1, _ = cov_at_scale(p, 1, method=METHOD_L1)
    assert l1[0, 0] / prod[0, 0] == pytest.approx(2.0 / np.pi, rel=0.03)


def test_cov_l1_joint_matches_marginal_on_diag():
    rng = np.random.default_rng(3)
    p = panel_from_returns(rng.standard_normal((500, 2)) * 0.01)
    marginal, _ = cov_at_scale(p, 1, method=METHOD_L1, l1_joint=False)
    joint, _ = cov_at_scale(p, 1, method=METHOD_L1, l1_joint=True)
    assert marginal.shape == joint.shape == (2, 2)
    # both must be symmetric with positive diagonals
    for m in (marginal, joint):
        assert np.array_equal(m, m.T)
        assert np.all(np.diag(m) > 0)


def test_cov_brownian_scales_linearly():
    cov = constant_correlation_cov(3, 0.3, sigma_daily=0.01)
    p = gen_correlated(1 << 14, cov, seed=4)
    m1, _ = cov_at_scale(p, 1)
    m5, _ = cov_at_scale(p, 5)
    assert np.allclose(m5, 5.0 * m1, rtol=0.12, atol=2e-7)


def test_cov_degenerate_asset_warns_and_zeroes():
    rng = np.random.default_rng(5)
    x = rng.standard_normal(100)
    p = panel_from_returns(np.column_stack([x, np.zeros(100)]), asset_ids=("x", "flat"))
    with pytest.warns(errors.DegenerateAssetWarning):
        m, _ = cov_at_scale(p, 1)
    assert m[1, 1] == 0.0
    assert m[0, 1] == 0.0
    assert m[0, 0] > 0.0


def test_cov_scale_too_large():
    p = panel_from_returns(np.arange(20.0))
    with pytest.raises(errors.ScaleTooLargeError):
        cov_at_scale(p, 7)


def test_cov_overlapping_close_to_nonoverlapping():
    rng = np.random.default_rng(6)
    p = panel_from_returns(rng.standard_normal((2000, 2)) * 0.01)
    m_no, _ = cov_at_scale(p, 5)
    m_ov, _ = cov_at_scale(p, 5, aggregation=MODE_OVERLAPPING)
    assert np.allclose(m_no, m_ov, rtol=0.15, atol=2e-7)


# ---------------------------------------------------------------------------
# covariance sets


def test_build_covariance_set_shapes():
    rng = np.random.default_rng(7)
    p = panel_from_returns(rng.standard_normal((300, 2)) * 0.01)
    cs = build_covariance_set(p, (1, 2, 5))
    assert cs.scales == (1, 2, 5)
    assert len(cs.matrices) == 3
    assert cs.sample_counts[0] == 300
    assert cs.matrix_at(5).shape == (2, 2)
    with pytest.raises(KeyError):
        cs.matrix_at(3)


def test_covariance_set_validates_shapes():
    with pytest.raises(errors.DimensionMismatchError):
        ScaledCovarianceSet(("a", "b"), (1,), (np.eye(3),), (10,),
                            METHOD_PRODUCT, "nonoverlapping")


# ---------------------------------------------------------------------------
# eigenvalue clipping


def test_psd_repair_hand_example():
    m = np.array([[1.0, 2.0], [2.0, 1.0]])  # eigenvalues 3 and -1
    fixed = psd_repair(m)
    assert np.allclose(fixed, [[1.5, 1.5], [1.5, 1.5]], atol=1e-12)


def test_psd_repair_clips_negative_diagonal():
    fixed = psd_repair(np.diag([1.0, -0.1]))
    assert np.allclose(fixed, np.diag([1.0, 0.0]), atol=1e-15)


def test_psd_repair_identity_on_psd():
    m = np.array([[2.0, 0.5], [0.5, 1.0]])
    assert psd_repair(m) is m


def test_psd_repair_idempotent():
    m = np.array([[1.0, 2.0], [2.0, 1.0]])
    once = psd_repair(m)
    assert psd_repair(once) is once


def test_psd_repair_rejects_asymmetric():
    with pytest.raises(ValueError):
        psd_repair(np.array([[1.0, 2.0], [0.0, 1.0]]))


# ---------------------------------------------------------------------------
# blended matrix


def _manual_set(scales, matrices, ids=("a", "b")):
    n = len(ids)
    return ScaledCovarianceSet(ids, tuple(scales), tuple(matrices),
                               tuple(100 for _ in scales), METHOD_PRODUCT,
                               "nonoverlapping")


def test_multiscale_cov_normalizes_by_scale():
    cs = _manual_set((1, 2), (np.eye(2), 4.0 * np.eye(2)))
    ms = multiscale_cov(cs)
    # (I/1 + 4I/2) / 2 = 1.5 I
    assert np.allclose(ms.matrix, 1.5 * np.eye(2), atol=1e-15)
    assert ms.normalized_by_scale
    assert ms.scale_weights == (0.5, 0.5)


def test_multiscale_cov_single_scale_is_identity():
    m = np.array([[1.0e-4, 2.0e-5], [2.0e-5, 3.0e-4]])
    cs = _manual_set((1,), (m,))
    ms = multiscale_cov(cs, scale_weights=(1.0,))
    assert np.array_equal(ms.matrix, m)


def test_multiscale_cov_raw_average_option():
    cs = _manual_set((1, 2), (np.eye(2), 4.0 * np.eye(2)))
    ms = multiscale_cov(cs, normalize_by_scale=False)
    assert np.allclose(ms.matrix, 2.5 * np.eye(2), atol=1e-15)
    assert not ms.normalized_by_scale


def test_multiscale_cov_custom_weights():
    cs = _manual_set((1, 2), (np.eye(2), 4.0 * np.eye(2)))
    ms = multiscale_cov(cs, scale_weights=(1.0, 0.0))
    assert np.allclose(ms.matrix, np.eye(2), atol=1e-15)
    with pytest.raises(errors.DimensionMismatchError):
        multiscale_cov(cs, scale_weights=(1.0,))
    with pytest.raises(ValueError):
        multiscale_cov(cs, scale_weights=(-1.0, 2.0))


def test_multiscale_cov_auto_ridge():
    cs = _manual_set((1,), (np.eye(2) * 1.0e-4,))
    ms = multiscale_cov(cs, ridge="auto")
    assert ms.ridge == pytest.approx(1e-8 * 1.0e-4)
    assert np.allclose(ms.matrix, np.eye(2) * (1.0e-4 + ms.ridge))


def test_multiscale_cov_repairs_indefinite_input():
    bad = np.array([[1.0, 2.0], [2.0, 1.0]]) * 1e-4
    cs = _manual_set((1,), (bad,))
    ms = multiscale_cov(cs)
    assert ms.psd_repaired
    assert np.linalg.eigvalsh(ms.matrix).min() >= -1e-16


def test_matrix_to_csv_layout():
    text = matrix_to_csv(np.array([[1.0, 0.5], [0.5, 2.0]]), ("x", "y"))
    lines = text.strip().splitlines()
    assert lines[0].split(",")[1:] == ["x", "y"]
    assert lines[1].startswith("x,")
    assert float(lines[2].split(",")[2]) == 2.0
