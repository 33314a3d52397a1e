"""Scaling-law estimation: structure functions, Hurst exponents, MF-DFA,
and the scale dependence of cross-correlations.

The common thread is a log-log regression of some fluctuation statistic
against the observation scale. Structure functions read moments of block
sums directly; detrended fluctuation analysis works on the integrated
profile and is robust to polynomial trends; the correlation estimator
tracks how the dependence between two assets builds up with scale.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import (
    DegenerateSegmentsError,
    NonPositiveMomentError,
    ScaleTooLargeError,
    SeriesTooShortError,
    TooFewPointsError,
    ZeroMomentError,
)
from .timeseries import MODE_BASE, ReturnPanel, min_phase_rows

DEFAULT_SCALES = (1, 2, 5, 10, 21)
DEFAULT_Q_GRID = (-4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0)

# fitting a scaling exponent needs this many aggregated observations in
# every phase of every scale
MIN_OBS_FOR_FIT = 4


class PowerLawFit(NamedTuple):
    """Slope of log(moment) against log(scale) with OLS diagnostics."""

    exponent: float
    stderr: float
    r2: float


class HurstEstimate(NamedTuple):
    value: float
    stderr: float


def _series_and_name(obj, asset):
    """Accept a 1-D array or a panel plus asset id; return (values, name)."""
    if isinstance(obj, ReturnPanel):
        if obj.mode != MODE_BASE:
            raise ValueError("scaling estimators read base panels, not aggregates")
        if asset is None:
            if obj.n_assets != 1:
                raise ValueError("asset id required for a multi-asset panel")
            return obj.returns[:, 0], obj.asset_ids[0]
        return obj.column(asset), asset
    arr = np.asarray(obj, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D series, got shape {arr.shape}")
    return arr, ("series" if asset is None else str(asset))


def _check_scales(scales):
    out = []
    for s in scales:
        ds = int(s)
        if ds != s or ds < 1:
            raise ValueError(f"scales must be positive integers, got {s!r}")
        out.append(ds)
    if len(set(out)) != len(out):
        raise ValueError("scales must be distinct")
    return tuple(out)


def _phase_block_sums(cumsum, n, dt, phase):
    k = (n - phase) // dt
    starts = phase + dt * np.arange(k)
    return cumsum[starts + dt] - cumsum[starts]


def structure_function(series, asset=None, q: float = 2.0,
                       scales=DEFAULT_SCALES, min_obs: int = 1):
    """Mean absolute moments of block sums, phase-averaged per scale.

    For each scale ``dt`` the series is summed over non-overlapping blocks
    at every phase offset, ``mean(|block|^q)`` is taken per phase, and the
    phase means are averaged. Returns ``[(scale, moment), ...]``.

    Parameters
    ----------
    series : ReturnPanel or 1-D array
    asset : str, optional
        Column to read when ``series`` is a multi-asset panel.
    q : float
        Moment order, nonzero. Negative orders emphasize quiet blocks.
    min_obs : int
        Fewest blocks tolerated in any phase; scales leaving fewer raise
        ``ScaleTooLargeError``. Exponent fits use ``MIN_OBS_FOR_FIT``.
    """
    x, _ = _series_and_name(series, asset)
    if q == 0:
        raise ValueError("q must be nonzero")
    if not np.any(x != 0.0):
        raise ZeroMomentError("all base returns are zero")
    scales = _check_scales(scales)
    n = len(x)
    c = np.concatenate([[0.0], np.cumsum(x)])
    out = []
    for dt in scales:
        if min_phase_rows(n, dt) < min_obs:
            raise ScaleTooLargeError(
                f"scale {dt} leaves {min_phase_rows(n, dt)} blocks in the worst phase, "
                f"need >= {min_obs}"
            )
        if dt == 1:
            moment = float(np.mean(np.abs(x) ** q))
        else:
            per_phase = [
                np.mean(np.abs(_phase_block_sums(c, n, dt, p)) ** q)
                for p in range(dt)
            ]
            moment = float(np.mean(per_phase))
        out.append((float(dt), moment))
    return out


def fit_scaling_exponent(points) -> PowerLawFit:
    """OLS slope of log moment against log scale.

    Needs at least three points with strictly positive finite moments.
    ``r2`` is 1.0 for an exact fit, including the constant case.
    """
    pts = list(points)
    if len(pts) < 3:
        raise TooFewPointsError(f"need >= 3 scales to fit, got {len(pts)}")
    s = np.array([float(p[0]) for p in pts])
    m = np.array([float(p[1]) for p in pts])
    if np.any(s <= 0):
        raise ValueError("scales must be positive")
    if np.any(~np.isfinite(m)) or np.any(m <= 0):
        raise NonPositiveMomentError(
            "moments must be positive and finite for a log-log fit"
        )
    x, y = np.log(s), np.log(m)
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise ValueError("scales must be distinct")
    slope = float(xc @ y) / sxx
    resid = y - y.mean() - slope * xc
    ssr = float(resid @ resid)
    sst = float((y - y.mean()) @ (y - y.mean()))
    stderr = math.sqrt(ssr / (len(x) - 2) / sxx)
    # constant to machine precision counts as an exact fit
    tiny = (16.0 * np.finfo(float).eps * max(1.0, float(np.abs(y).max()))) ** 2 * len(y)
    r2 = 1.0 if sst <= tiny else 1.0 - ssr / sst
    return PowerLawFit(slope, stderr, r2)


def estimate_hurst(series, asset=None, scales=DEFAULT_SCALES) -> HurstEstimate:
    """Hurst exponent from the second structure function.

    Fits ``mean(|block sum|^2)`` against scale and halves the slope: a
    diffusive (uncorrelated) series gives 0.5, persistent series more,
    antipersistent less.
    """
    pts = structure_function(series, asset=asset, q=2.0, scales=scales,
                             min_obs=MIN_OBS_FOR_FIT)
    fit = fit_scaling_exponent(pts)
    return HurstEstimate(fit.exponent / 2.0, fit.stderr / 2.0)


@dataclass(frozen=True, eq=False)
class ScalingSpectrum:
    """Generalized scaling exponents over a grid of moment orders.

    ``zeta[i]`` is the scaling exponent of the ``q_grid[i]``-th moment and
    ``h_of_q[i] = zeta[i] / q_grid[i]``. A flat ``h_of_q`` means one
    exponent describes all moments; a decreasing profile is the signature
    of multifractality. ``nonmonotone`` flags any increase of ``h_of_q``
    beyond numerical tolerance.
    """

    asset_id: str
    q_grid: tuple[float, ...]
    zeta: np.ndarray
    h_of_q: np.ndarray
    stderr: np.ndarray
    fit_r2: np.ndarray
    scales: tuple[int, ...]
    method: str
    nonmonotone: bool = False

    def __post_init__(self):
        q = tuple(float(v) for v in self.q_grid)
        if any(v == 0 for v in q):
            raise ValueError("q grid must not contain zero")
        if any(b <= a for a, b in zip(q, q[1:])):
            raise ValueError("q grid must be strictly increasing")
        k = len(q)
        for name in ("zeta", "h_of_q", "stderr", "fit_r2"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (k,):
                raise ValueError(f"{name} must have shape ({k},)")
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "q_grid", q)

    def h_at(self, q: float) -> float:
        """h(q) for a grid value of q."""
        for qi, h in zip(self.q_grid, self.h_of_q):
            if qi == q:
                return float(h)
        raise KeyError(f"q={q} not on the grid {self.q_grid}")

    def h_spread(self, q_lo: float = -4.0, q_hi: float = 4.0) -> float:
        """h(q_lo) - h(q_hi); positive and large for multifractal series."""
        return self.h_at(q_lo) - self.h_at(q_hi)


def _check_q_grid(q_grid):
    q = tuple(float(v) for v in q_grid)
    if len(q) == 0:
        raise ValueError("q grid must be nonempty")
    if any(v == 0 for v in q):
        raise ValueError("q grid must not contain zero")
    if any(b <= a for a, b in zip(q, q[1:])):
        raise ValueError("q grid must be strictly increasing")
    return q


def _spectrum_flags(h):
    return bool(np.any(np.diff(h) > 1e-6))


def structure_spectrum(series, asset=None, q_grid=DEFAULT_Q_GRID,
                       scales=DEFAULT_SCALES) -> ScalingSpectrum:
    """Scaling exponents from structure functions over a grid of orders."""
    q_grid = _check_q_grid(q_grid)
    x, name = _series_and_name(series, asset)
    zeta = np.empty(len(q_grid))
    stderr = np.empty(len(q_grid))
    r2 = np.empty(len(q_grid))
    for i, q in enumerate(q_grid):
        pts = structure_function(x, q=q, scales=scales, min_obs=MIN_OBS_FOR_FIT)
        fit = fit_scaling_exponent(pts)
        zeta[i] = fit.exponent
        stderr[i] = fit.stderr
        r2[i] = fit.r2
    h = zeta / np.array(q_grid)
    return ScalingSpectrum(name, q_grid, zeta, h, stderr, r2,
                           _check_scales(scales), "structure",
                           nonmonotone=_spectrum_flags(h))


# ---------------------------------------------------------------------------
# multifractal detrended fluctuation analysis

def default_dfa_scales(n: int, n_scales: int = 12,
                       smallest: int = 16) -> tuple[int, ...]:
    """Log-spaced segment sizes from ``smallest`` up to ``n // 8``."""
    largest = n // 8
    if largest < smallest:
        raise SeriesTooShortError(
            f"series of length {n} supports no segment grid "
            f"({smallest}..{largest})"
        )
    grid = np.exp(np.linspace(math.log(smallest), math.log(largest), n_scales))
    return tuple(np.unique(np.round(grid).astype(int)))


def mfdfa(series, asset=None, q_grid=DEFAULT_Q_GRID, scales=None,
          detrend_order: int = 1) -> ScalingSpectrum:
    """Multifractal detrended fluctuation analysis of one series.

    The series is integrated into a profile, split into segments of each
    size from both ends of the record, and each segment is detrended by a
    least-squares polynomial of order ``detrend_order``. ``h(q)`` is the
    log-log slope of the order-``q`` mean of the residual fluctuations.

    Parameters
    ----------
    series : ReturnPanel or 1-D array
    q_grid : sequence of float
        Strictly increasing moment orders, zero excluded.
    scales : sequence of int, optional
        Segment sizes; default is a log grid from 16 to ``n // 8``. Every
        size must satisfy ``detrend_order + 2 <= s <= n // 4``.
    detrend_order : int
        Polynomial order removed per segment, at least 1.

    Raises
    ------
    SeriesTooShortError
        When the series cannot hold four segments of the largest size.
    DegenerateSegmentsError
        When every segment at some size has zero residual variance.
    """
    x, name = _series_and_name(series, asset)
    q_grid = _check_q_grid(q_grid)
    if detrend_order < 1:
        raise ValueError("detrend_order must be >= 1")
    n = len(x)
    if scales is None:
        scales = default_dfa_scales(n)
    scales = _check_scales(scales)
    if max(scales) * 4 > n:
        raise SeriesTooShortError(
            f"series of length {n} cannot hold 4 segments of size {max(scales)}"
        )
    if min(scales) < detrend_order + 2:
        raise ValueError(
            f"smallest scale {min(scales)} cannot pin an order-{detrend_order} polynomial"
        )

    profile = np.cumsum(x - x.mean())
    q_arr = np.array(q_grid)
    log_f = np.empty((len(scales), len(q_grid)))
    for si, s in enumerate(scales):
        ns = n // s
        fwd = profile[: ns * s].reshape(ns, s)
        bwd = profile[n - ns * s:].reshape(ns, s)
        segments = np.vstack([fwd, bwd])
        t = np.arange(s, dtype=float)
        design = np.vander(t, detrend_order + 1)
        proj = design @ np.linalg.pinv(design)
        resid = segments - segments @ proj.T
        f2 = np.mean(resid ** 2, axis=1)
        if not np.any(f2 > 0.0):
            raise DegenerateSegmentsError(
                f"all {2 * ns} segments of size {s} have zero residual variance"
            )
        with np.errstate(divide="ignore"):
            powed = f2[None, :] ** (q_arr[:, None] / 2.0)
        log_f[si] = np.log(np.mean(powed, axis=1)) / q_arr

    zeta = np.empty(len(q_grid))
    stderr = np.empty(len(q_grid))
    r2 = np.empty(len(q_grid))
    for qi in range(len(q_grid)):
        pts = list(zip(scales, np.exp(log_f[:, qi])))
        fit = fit_scaling_exponent(pts)
        zeta[qi] = fit.exponent * q_grid[qi]
        stderr[qi] = fit.stderr
        r2[qi] = fit.r2
    h = zeta / q_arr
    return ScalingSpectrum(name, q_grid, zeta, h, stderr, r2, scales, "dfa",
                           nonmonotone=_spectrum_flags(h))


# ---------------------------------------------------------------------------
# cross-correlation scaling

@dataclass(frozen=True, eq=False)
class CorrelationScaling:
    """Scale dependence of the correlation between two assets.

    ``h_rho`` is the log-log slope of the phase-averaged correlation
    against scale; ``h_cross_2`` the slope of the raw cross moment
    ``mean(r_i r_j)``. With the single-asset first-moment exponents the
    decomposition ``h_rho = h_cross_2 - (h_i_1 + h_j_1)`` should close;
    ``identity_residual`` measures how far it is from closing and
    ``combined_stderr`` propagates the four fit errors.
    """

    pair: tuple[str, str]
    scales: tuple[int, ...]
    rho_by_scale: np.ndarray
    comoment_by_scale: np.ndarray
    h_rho: float
    h_rho_stderr: float
    rho_fit_r2: float
    h_cross_2: float
    h_cross_2_stderr: float
    cross_fit_r2: float
    h_i_1: float
    h_i_1_stderr: float
    h_j_1: float
    h_j_1_stderr: float
    identity_residual: float
    combined_stderr: float
    negative_correlation: bool
    negative_comoment: bool


def estimate_correlation_scaling(panel: ReturnPanel, asset_i: str, asset_j: str,
                                 scales=DEFAULT_SCALES) -> CorrelationScaling:
    """Fit the growth of a pairwise correlation with observation scale.

    For each scale the correlation and the raw cross moment are computed
    per non-overlapping phase and phase-averaged. Fits run on absolute
    values; encountering a negative value sets the corresponding flag
    rather than raising, since noisy near-zero correlations are routine.
    """
    if not isinstance(panel, ReturnPanel):
        raise TypeError("estimate_correlation_scaling needs a ReturnPanel")
    if asset_i == asset_j:
        raise ValueError("need two distinct assets")
    xi = panel.column(asset_i)
    xj = panel.column(asset_j)
    scales = _check_scales(scales)
    n = len(xi)
    ci = np.concatenate([[0.0], np.cumsum(xi)])
    cj = np.concatenate([[0.0], np.cumsum(xj)])
    rho = np.empty(len(scales))
    cross = np.empty(len(scales))
    for si, dt in enumerate(scales):
        if min_phase_rows(n, dt) < MIN_OBS_FOR_FIT:
            raise ScaleTooLargeError(
                f"scale {dt} leaves under {MIN_OBS_FOR_FIT} blocks per phase"
            )
        rho_p = []
        cross_p = []
        for p in range(dt):
            bi = _phase_block_sums(ci, n, dt, p)
            bj = _phase_block_sums(cj, n, dt, p)
            si_std = bi.std()
            sj_std = bj.std()
            if si_std == 0.0 or sj_std == 0.0:
                raise NonPositiveMomentError(
                    f"zero variance at scale {dt}, phase {p}; correlation undefined"
                )
            rho_p.append(np.mean((bi - bi.mean()) * (bj - bj.mean())) / (si_std * sj_std))
            cross_p.append(np.mean(bi * bj))
        rho[si] = np.mean(rho_p)
        cross[si] = np.mean(cross_p)

    neg_rho = bool(np.any(rho < 0.0))
    neg_cross = bool(np.any(cross < 0.0))
    fit_rho = fit_scaling_exponent(zip(scales, np.abs(rho)))
    fit_cross = fit_scaling_exponent(zip(scales, np.abs(cross)))
    fit_i = fit_scaling_exponent(
        structure_function(xi, q=1.0, scales=scales, min_obs=MIN_OBS_FOR_FIT))
    fit_j = fit_scaling_exponent(
        structure_function(xj, q=1.0, scales=scales, min_obs=MIN_OBS_FOR_FIT))
    residual = fit_rho.exponent - (fit_cross.exponent - fit_i.exponent - fit_j.exponent)
    combined = math.sqrt(fit_rho.stderr ** 2 + fit_cross.stderr ** 2
                         + fit_i.stderr ** 2 + fit_j.stderr ** 2)
    return CorrelationScaling(
        pair=(asset_i, asset_j),
        scales=scales,
        rho_by_scale=rho,
        comoment_by_scale=cross,
        h_rho=fit_rho.exponent,
        h_rho_stderr=fit_rho.stderr,
        rho_fit_r2=fit_rho.r2,
        h_cross_2=fit_cross.exponent,
        h_cross_2_stderr=fit_cross.stderr,
        cross_fit_r2=fit_cross.r2,
        h_i_1=fit_i.exponent,
        h_i_1_stderr=fit_i.stderr,
        h_j_1=fit_j.exponent,
        h_j_1_stderr=fit_j.stderr,
        identity_residual=residual,
        combined_stderr=combined,
        negative_correlation=neg_rho,
        negative_comoment=neg_cross,
    )
