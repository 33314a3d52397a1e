"""Per-scale covariance estimation and the scale-averaged blend.

Covariances are estimated on aggregated panels at each scale, divided by
their scale to bring them to a common per-period footing, and averaged.
A robust variant replaces the usual variance scale with mean absolute
deviation about the median, keeping the correlation structure.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateAssetWarning, DimensionMismatchError, ScaleTooLargeError
from .timeseries import (
    MODE_BASE,
    MODE_NONOVERLAPPING,
    MODE_OVERLAPPING,
    ReturnPanel,
    aggregate,
    all_phase_aggregates,
    min_phase_rows,
)

METHOD_PRODUCT = "product"
METHOD_L1 = "l1"

MIN_OBS_PER_PHASE = 4


def _sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


def _zero_variance_columns(x: np.ndarray) -> np.ndarray:
    return np.ptp(x, axis=0) == 0.0


def _cov_product(x: np.ndarray) -> np.ndarray:
    xc = x - x.mean(axis=0)
    return xc.T @ xc / (x.shape[0] - 1)


def _corr_with_guard(x: np.ndarray, dead: np.ndarray) -> np.ndarray:
    c = _cov_product(x)
    sd = np.sqrt(np.diag(c))
    sd_safe = np.where(sd > 0.0, sd, 1.0)
    rho = c / np.outer(sd_safe, sd_safe)
    rho[dead, :] = 0.0
    rho[:, dead] = 0.0
    return rho


def _cov_l1(x: np.ndarray, dead: np.ndarray, joint: bool) -> np.ndarray:
    # correlation times a mean-absolute-deviation scale; the deviation is
    # taken about the per-asset median
    dev = np.abs(x - np.median(x, axis=0))
    rho = _corr_with_guard(x, dead)
    if joint:
        scale = dev.T @ dev / x.shape[0]
    else:
        d = dev.mean(axis=0)
        scale = np.outer(d, d)
    return rho * scale


def cov_at_scale(panel: ReturnPanel, dt: int, method: str = METHOD_PRODUCT,
                 aggregation: str = MODE_NONOVERLAPPING,
                 l1_joint: bool = False) -> tuple[np.ndarray, int]:
    """Covariance of ``dt``-period returns, phase-averaged.

    Non-overlapping aggregation estimates one covariance per phase offset
    and averages the ``dt`` estimates; overlapping aggregation uses the
    single sliding-window panel. Returns ``(matrix, n_obs)`` where
    ``n_obs`` is the smallest number of observations behind any estimate.

    Assets with zero variance in some window get their rows and columns
    zeroed and raise ``DegenerateAssetWarning``. A scale leaving fewer
    than four observations in the worst phase raises
    ``ScaleTooLargeError``.
    """
    if panel.mode != MODE_BASE:
        raise ValueError("cov_at_scale starts from a base panel")
    if method not in (METHOD_PRODUCT, METHOD_L1):
        raise ValueError(f"unknown method {method!r}")
    if aggregation not in (MODE_NONOVERLAPPING, MODE_OVERLAPPING):
        raise ValueError(f"unknown aggregation {aggregation!r}")
    dt = int(dt)
    if dt < 1:
        raise ValueError("dt must be >= 1")
    if aggregation == MODE_NONOVERLAPPING:
        rows = min_phase_rows(panel.n_periods, dt)
        if rows < MIN_OBS_PER_PHASE:
            raise ScaleTooLargeError(
                f"scale {dt} leaves {rows} observations in the worst phase, "
                f"need >= {MIN_OBS_PER_PHASE}"
            )
        panels = all_phase_aggregates(panel, dt)
    else:
        agg = aggregate(panel, dt, MODE_OVERLAPPING)
        if agg.n_periods < MIN_OBS_PER_PHASE:
            raise ScaleTooLargeError(
                f"scale {dt} leaves {agg.n_periods} overlapping observations, "
                f"need >= {MIN_OBS_PER_PHASE}"
            )
        panels = [agg]

    acc = np.zeros((panel.n_assets, panel.n_assets))
    n_obs = None
    warned: set[str] = set()
    for p in panels:
        x = p.returns
        dead = _zero_variance_columns(x)
        for idx in np.flatnonzero(dead):
            aid = panel.asset_ids[idx]
            if aid not in warned:
                warned.add(aid)
                warnings.warn(
                    f"asset {aid!r} has zero variance at scale {dt}; "
                    "its covariance entries are zero",
                    DegenerateAssetWarning,
                    stacklevel=2,
                )
        if method == METHOD_PRODUCT:
            c = _cov_product(x)
            c[dead, :] = 0.0
            c[:, dead] = 0.0
        else:
            c = _cov_l1(x, dead, l1_joint)
        acc += c
        n_obs = x.shape[0] if n_obs is None else min(n_obs, x.shape[0])
    return _sym(acc / len(panels)), int(n_obs)


@dataclass(frozen=True, eq=False)
class ScaledCovarianceSet:
    """Covariance matrices of the same universe at several scales."""

    asset_ids: tuple[str, ...]
    scales: tuple[int, ...]
    matrices: tuple[np.ndarray, ...]
    sample_counts: tuple[int, ...]
    method: str
    aggregation: str

    def __post_init__(self):
        ids = tuple(str(a) for a in self.asset_ids)
        scales = tuple(int(s) for s in self.scales)
        if len(scales) == 0:
            raise ValueError("need at least one scale")
        if len(set(scales)) != len(scales):
            raise ValueError("scales must be distinct")
        if len(self.matrices) != len(scales) or len(self.sample_counts) != len(scales):
            raise DimensionMismatchError("one matrix and count per scale required")
        n = len(ids)
        mats = []
        for s, m in zip(scales, self.matrices):
            a = np.asarray(m, dtype=float)
            if a.shape != (n, n):
                raise DimensionMismatchError(
                    f"matrix at scale {s} has shape {a.shape}, expected ({n}, {n})"
                )
            if not np.all(np.isfinite(a)):
                raise ValueError(f"matrix at scale {s} has non-finite entries")
            if np.abs(a - a.T).max() > 1e-10 * max(np.abs(a).max(), 1e-300):
                raise ValueError(f"matrix at scale {s} is not symmetric")
            a = a.copy()
            a.setflags(write=False)
            mats.append(a)
        if any(c < 1 for c in self.sample_counts):
            raise ValueError("sample counts must be positive")
        object.__setattr__(self, "asset_ids", ids)
        object.__setattr__(self, "scales", scales)
        object.__setattr__(self, "matrices", tuple(mats))
        object.__setattr__(self, "sample_counts", tuple(int(c) for c in self.sample_counts))

    @property
    def n_assets(self) -> int:
        return len(self.asset_ids)

    def matrix_at(self, dt: int) -> np.ndarray:
        try:
            return self.matrices[self.scales.index(int(dt))]
        except ValueError:
            raise KeyError(f"scale {dt} not in {self.scales}") from None


def build_covariance_set(panel: ReturnPanel, scales, method: str = METHOD_PRODUCT,
                         aggregation: str = MODE_NONOVERLAPPING,
                         l1_joint: bool = False) -> ScaledCovarianceSet:
    """Estimate ``cov_at_scale`` for each requested scale."""
    scales = tuple(int(s) for s in scales)
    mats = []
    counts = []
    for dt in scales:
        m, c = cov_at_scale(panel, dt, method=method, aggregation=aggregation,
                            l1_joint=l1_joint)
        mats.append(m)
        counts.append(c)
    return ScaledCovarianceSet(panel.asset_ids, scales, tuple(mats), tuple(counts),
                               method, aggregation)


def psd_repair(matrix: np.ndarray) -> np.ndarray:
    """Clip negative eigenvalues to zero; identity on PSD input.

    Requires a symmetric matrix. Matrices whose smallest eigenvalue is
    within a relative 1e-12 of zero are returned unchanged, which makes
    the operation idempotent.
    """
    m = np.asarray(matrix, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"matrix must be square, got shape {m.shape}")
    if np.abs(m - m.T).max() > 1e-8 * max(np.abs(m).max(), 1e-300):
        raise ValueError("psd_repair needs a symmetric matrix")
    vals, vecs = np.linalg.eigh(_sym(m))
    tol = 1e-12 * max(np.abs(vals).max(), 1e-300)
    if vals.min() >= -tol:
        return matrix
    rebuilt = (vecs * np.clip(vals, 0.0, None)) @ vecs.T
    return _sym(rebuilt)


@dataclass(frozen=True, eq=False)
class MultiscaleCovariance:
    """Weighted average of per-scale covariances on a per-period footing.

    ``scale_weights`` are the effective weights applied per scale; when
    ``normalized_by_scale`` each matrix was divided by its scale first.
    ``ridge`` is the diagonal loading actually added and ``psd_repaired``
    records whether negative eigenvalues had to be clipped.
    """

    matrix: np.ndarray
    asset_ids: tuple[str, ...]
    scales: tuple[int, ...]
    scale_weights: tuple[float, ...]
    ridge: float
    psd_repaired: bool
    method: str
    aggregation: str
    normalized_by_scale: bool = True

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        n = len(self.asset_ids)
        if m.shape != (n, n):
            raise DimensionMismatchError(
                f"matrix shape {m.shape} does not match {n} assets"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix has non-finite entries")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "asset_ids", tuple(str(a) for a in self.asset_ids))
        object.__setattr__(self, "scales", tuple(int(s) for s in self.scales))
        object.__setattr__(self, "scale_weights", tuple(float(w) for w in self.scale_weights))

    @property
    def n_assets(self) -> int:
        return len(self.asset_ids)


def multiscale_cov(cov_set: ScaledCovarianceSet, ridge=0.0, scale_weights=None,
                   normalize_by_scale: bool = True) -> MultiscaleCovariance:
    """Average the per-scale covariances into one working matrix.

    Each matrix is divided by its scale (unless ``normalize_by_scale`` is
    off) and combined with ``scale_weights``, equal by default. Weights
    are used exactly as given, so a single scale with weight one
    reproduces that scale's matrix unchanged. ``ridge`` adds diagonal
    loading: a float, or ``"auto"`` for ``1e-8 * trace / n``.
    """
    k = len(cov_set.scales)
    if scale_weights is None:
        wts = np.full(k, 1.0 / k)
    else:
        wts = np.asarray(scale_weights, dtype=float)
        if wts.shape != (k,):
            raise DimensionMismatchError(
                f"need {k} scale weights, got shape {wts.shape}"
            )
        if np.any(wts < 0) or wts.sum() <= 0:
            raise ValueError("scale weights must be non-negative with positive sum")

    n = cov_set.n_assets
    acc = np.zeros((n, n))
    for w, dt, m in zip(wts, cov_set.scales, cov_set.matrices):
        acc += w * (m / dt if normalize_by_scale else m)
    acc = _sym(acc)

    if isinstance(ridge, str):
        if ridge != "auto":
            raise ValueError(f"ridge must be a float or 'auto', got {ridge!r}")
        ridge_val = 1e-8 * np.trace(acc) / n
    else:
        ridge_val = float(ridge)
        if ridge_val < 0:
            raise ValueError("ridge must be non-negative")
    if ridge_val > 0:
        acc = acc + ridge_val * np.eye(n)

    vals = np.linalg.eigvalsh(acc)
    repaired = False
    if vals.min() < -1e-12 * max(np.abs(vals).max(), 1e-300):
        acc = psd_repair(acc)
        repaired = True
    return MultiscaleCovariance(
        matrix=acc,
        asset_ids=cov_set.asset_ids,
        scales=cov_set.scales,
        scale_weights=tuple(float(w) for w in wts),
        ridge=ridge_val,
        psd_repaired=repaired,
        method=cov_set.method,
        aggregation=cov_set.aggregation,
        normalized_by_scale=normalize_by_scale,
    )


def matrix_to_csv(matrix: np.ndarray, asset_ids) -> str:
    """Render a square matrix with asset labels on both axes."""
    ids = [str(a) for a in asset_ids]
    m = np.asarray(matrix, dtype=float)
    if m.shape != (len(ids), len(ids)):
        raise DimensionMismatchError(
            f"matrix shape {m.shape} does not match {len(ids)} assets"
        )
    lines = ["asset," + ",".join(ids)]
    for i, aid in enumerate(ids):
        lines.append(aid + "," + ",".join(repr(float(v)) for v in m[i]))
    return "\n".join(lines) + "\n"
