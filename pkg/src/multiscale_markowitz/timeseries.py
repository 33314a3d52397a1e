"""Price and return panels, CSV ingestion, and time-scale aggregation.

A base panel holds one-period log returns, one column per asset. Coarser
panels are built by summing log returns over blocks of ``dt`` consecutive
periods, either overlapping (every start index) or non-overlapping at a
given phase offset. Log returns make aggregation exact: the block sum is
the log return over the block.
"""
from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadPhaseError,
    DuplicateDateError,
    MissingValueError,
    NonPositivePriceError,
    ParseError,
    ScaleTooLargeError,
    TooShortError,
)

MODE_BASE = "base"
MODE_OVERLAPPING = "overlapping"
MODE_NONOVERLAPPING = "nonoverlapping"

_EPOCH = np.datetime64("2000-01-03", "D")


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, copy=True)
    out.setflags(write=False)
    return out


def _check_ids(asset_ids: tuple[str, ...]) -> None:
    if len(asset_ids) == 0:
        raise ValueError("at least one asset id required")
    if any(not aid for aid in asset_ids):
        raise ValueError("asset ids must be non-empty strings")
    if len(set(asset_ids)) != len(asset_ids):
        raise ValueError("asset ids must be unique")


def _check_dates(timestamps: np.ndarray) -> None:
    if timestamps.ndim != 1:
        raise ValueError("timestamps must be one-dimensional")
    if len(timestamps) > 1:
        diffs = np.diff(timestamps).astype("timedelta64[D]").astype(int)
        if np.any(diffs == 0):
            dup = timestamps[1:][diffs == 0][0]
            raise DuplicateDateError(f"duplicate date {dup}")
        if np.any(diffs < 0):
            raise ValueError("timestamps must be strictly increasing")


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Strictly positive price paths on an increasing date index.

    Attributes
    ----------
    asset_ids : tuple of str
        Unique column labels.
    timestamps : ndarray of datetime64[D], shape (T,)
    prices : ndarray of float, shape (T, n_assets)
    """

    asset_ids: tuple[str, ...]
    timestamps: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "asset_ids", tuple(str(a) for a in self.asset_ids))
        _check_ids(self.asset_ids)
        ts = np.asarray(self.timestamps, dtype="datetime64[D]")
        px = np.asarray(self.prices, dtype=float)
        if px.ndim != 2 or px.shape != (len(ts), len(self.asset_ids)):
            raise ValueError(
                f"prices shape {px.shape} does not match "
                f"{len(ts)} dates x {len(self.asset_ids)} assets"
            )
        _check_dates(ts)
        if not np.all(np.isfinite(px)):
            raise MissingValueError("prices contain NaN or infinite entries")
        if np.any(px <= 0.0):
            raise NonPositivePriceError("prices must be strictly positive")
        object.__setattr__(self, "timestamps", _readonly(ts))
        object.__setattr__(self, "prices", _readonly(px))

    @property
    def n_periods(self) -> int:
        return self.prices.shape[0]

    @property
    def n_assets(self) -> int:
        return self.prices.shape[1]


@dataclass(frozen=True, eq=False)
class ReturnPanel:
    """Log returns at a fixed observation scale.

    ``scale`` counts base periods per observation. ``mode`` records how the
    panel was produced: ``base`` for one-period returns, ``overlapping`` or
    ``nonoverlapping`` for block sums; ``phase`` is the start offset of the
    first non-overlapping block. Each timestamp is the date on which that
    row's return completes.
    """

    asset_ids: tuple[str, ...]
    timestamps: np.ndarray
    returns: np.ndarray
    scale: int = 1
    mode: str = MODE_BASE
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "asset_ids", tuple(str(a) for a in self.asset_ids))
        _check_ids(self.asset_ids)
        ts = np.asarray(self.timestamps, dtype="datetime64[D]")
        r = np.asarray(self.returns, dtype=float)
        if r.ndim != 2 or r.shape != (len(ts), len(self.asset_ids)):
            raise ValueError(
                f"returns shape {r.shape} does not match "
                f"{len(ts)} dates x {len(self.asset_ids)} assets"
            )
        _check_dates(ts)
        if not np.all(np.isfinite(r)):
            raise MissingValueError("returns contain NaN or infinite entries")
        if self.mode not in (MODE_BASE, MODE_OVERLAPPING, MODE_NONOVERLAPPING):
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.scale < 1:
            raise ValueError("scale must be >= 1")
        if self.mode == MODE_BASE and self.scale != 1:
            raise ValueError("base panels have scale 1")
        if self.mode == MODE_NONOVERLAPPING:
            if not 0 <= self.phase < self.scale:
                raise BadPhaseError(f"phase {self.phase} outside [0, {self.scale})")
        elif self.phase != 0:
            raise ValueError(f"phase is only meaningful for {MODE_NONOVERLAPPING!r}")
        object.__setattr__(self, "timestamps", _readonly(ts))
        object.__setattr__(self, "returns", _readonly(r))

    @property
    def n_periods(self) -> int:
        return self.returns.shape[0]

    @property
    def n_assets(self) -> int:
        return self.returns.shape[1]

    @property
    def aggregation_mode(self) -> str:
        if self.mode == MODE_NONOVERLAPPING:
            return f"{MODE_NONOVERLAPPING}({self.phase})"
        return self.mode

    def column(self, asset_id: str) -> np.ndarray:
        """Return one asset's series as a 1-D array."""
        try:
            j = self.asset_ids.index(asset_id)
        except ValueError:
            raise KeyError(f"unknown asset {asset_id!r}") from None
        return self.returns[:, j]

    def window(self, start: int, stop: int) -> "ReturnPanel":
        """Row slice [start, stop) as a panel of the same scale and mode."""
        if not 0 <= start < stop <= self.n_periods:
            raise ValueError(f"window [{start}, {stop}) outside panel of length {self.n_periods}")
        return ReturnPanel(
            self.asset_ids,
            self.timestamps[start:stop],
            self.returns[start:stop],
            scale=self.scale,
            mode=self.mode,
            phase=self.phase,
        )


def trading_dates(n: int, start: np.datetime64 = _EPOCH) -> np.ndarray:
    """Consecutive calendar dates for synthetic panels."""
    return np.asarray(start, dtype="datetime64[D]") + np.arange(n)


def panel_from_returns(returns: np.ndarray, asset_ids=None) -> ReturnPanel:
    """Wrap a plain array of one-period log returns as a base panel."""
    r = np.asarray(returns, dtype=float)
    if r.ndim == 1:
        r = r[:, None]
    if asset_ids is None:
        asset_ids = tuple(f"a{j + 1}" for j in range(r.shape[1]))
    return ReturnPanel(asset_ids, trading_dates(r.shape[0]), r)


# ---------------------------------------------------------------------------
# CSV ingestion

def load_prices(path) -> PriceSeries:
    """Load a price panel from CSV.

    Expected layout: header ``date,<id>,<id>,...`` then one row per day with
    ISO-8601 dates and strictly positive prices. Rows may arrive out of
    order and are sorted by date; a repeated date is an error. Error
    messages name the offending line and column.
    """
    with open(path, "r", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    if len(header) < 2 or header[0].lower() != "date":
        raise ParseError(f"{path}: header must be 'date,<asset>,...', got {rows[0]!r}")
    asset_ids = tuple(header[1:])
    try:
        _check_ids(asset_ids)
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from None

    dates: list[_dt.date] = []
    seen: dict[_dt.date, int] = {}
    values = np.empty((len(rows) - 1, len(asset_ids)))
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{path} line {r}: expected {len(header)} cells, got {len(row)}")
        raw_date = row[0].strip()
        try:
            d = _dt.date.fromisoformat(raw_date)
        except ValueError:
            raise ParseError(f"{path} line {r}: bad date {raw_date!r}") from None
        if d in seen:
            raise DuplicateDateError(f"{path} line {r}: date {d} already on line {seen[d]}")
        seen[d] = r
        for j, cell in enumerate(row[1:]):
            cell = cell.strip()
            if not cell:
                raise MissingValueError(f"{path} line {r}, column {asset_ids[j]!r}: empty cell")
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(
                    f"{path} line {r}, column {asset_ids[j]!r}: bad number {cell!r}"
                ) from None
            if np.isnan(v):
                raise MissingValueError(f"{path} line {r}, column {asset_ids[j]!r}: NaN")
            if not np.isfinite(v) or v <= 0.0:
                raise NonPositivePriceError(
                    f"{path} line {r}, column {asset_ids[j]!r}: price {cell} not positive"
                )
            values[r - 2, j] = v
        dates.append(d)

    order = np.argsort(np.array(dates, dtype="datetime64[D]"), kind="stable")
    ts = np.array(dates, dtype="datetime64[D]")[order]
    return PriceSeries(asset_ids, ts, values[order])


def prices_to_csv(series: PriceSeries) -> str:
    """Render a price panel in the same CSV layout ``load_prices`` reads.

    Floats use shortest round-trip formatting, so write/read is lossless.
    """
    lines = ["date," + ",".join(series.asset_ids)]
    for t in range(series.n_periods):
        cells = [str(series.timestamps[t])]
        cells += [repr(float(v)) for v in series.prices[t]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def to_price_series(panel: ReturnPanel, initial: float = 100.0) -> PriceSeries:
    """Compound a base return panel into prices starting at ``initial``.

    The price on the day before the first return is ``initial``; each later
    price multiplies by exp of that day's log return.
    """
    if initial <= 0:
        raise ValueError("initial price must be positive")
    log_path = np.vstack([np.zeros(panel.n_assets), np.cumsum(panel.returns, axis=0)])
    prices = initial * np.exp(log_path)
    ts = np.concatenate([[panel.timestamps[0] - np.timedelta64(1, "D")], panel.timestamps])
    return PriceSeries(panel.asset_ids, ts, prices)


# ---------------------------------------------------------------------------
# returns and aggregation

def to_log_returns(series: PriceSeries) -> ReturnPanel:
    """One-period log returns of a price panel.

    Row ``t`` of the result is ``ln(p[t+1] / p[t])``, stamped with the date
    on which the return realizes. Needs at least two price rows.
    """
    if series.n_periods < 2:
        raise TooShortError(f"need >= 2 price rows, got {series.n_periods}")
    r = np.diff(np.log(series.prices), axis=0)
    return ReturnPanel(series.asset_ids, series.timestamps[1:], r)


def aggregate(panel: ReturnPanel, dt: int, mode: str = MODE_NONOVERLAPPING,
              phase: int = 0) -> ReturnPanel:
    """Sum log returns over blocks of ``dt`` base periods.

    ``overlapping`` uses every start index and yields ``T - dt + 1`` rows.
    ``nonoverlapping`` starts at ``phase`` and steps by ``dt``, yielding
    ``floor((T - phase) / dt)`` rows. ``dt = 1`` is the identity and
    returns the panel unchanged.

    Raises ``ScaleTooLargeError`` when no complete block fits and
    ``BadPhaseError`` for a phase outside ``[0, dt)``.
    """
    if panel.mode != MODE_BASE:
        raise ValueError("aggregation starts from a base panel")
    if dt < 1:
        raise ValueError("dt must be >= 1")
    if dt == 1:
        return panel
    if mode not in (MODE_OVERLAPPING, MODE_NONOVERLAPPING):
        raise ValueError(f"unknown aggregation mode {mode!r}")
    T = panel.n_periods
    if mode == MODE_OVERLAPPING:
        if phase != 0:
            raise BadPhaseError("overlapping aggregation has no phase")
        if dt > T:
            raise ScaleTooLargeError(f"dt={dt} exceeds panel length {T}")
        c = np.vstack([np.zeros(panel.n_assets), np.cumsum(panel.returns, axis=0)])
        r = c[dt:] - c[:-dt]
        ts = panel.timestamps[dt - 1:]
        return ReturnPanel(panel.asset_ids, ts, r, scale=dt, mode=mode)
    if not 0 <= phase < dt:
        raise BadPhaseError(f"phase {phase} outside [0, {dt})")
    k = (T - phase) // dt
    if k < 1:
        raise ScaleTooLargeError(f"dt={dt}, phase={phase} leaves no complete block in {T} rows")
    blocks = panel.returns[phase:phase + k * dt].reshape(k, dt, panel.n_assets)
    r = blocks.sum(axis=1)
    ts = panel.timestamps[phase + dt - 1::dt][:k]
    return ReturnPanel(panel.asset_ids, ts, r, scale=dt, mode=mode, phase=phase)


def all_phase_aggregates(panel: ReturnPanel, dt: int) -> list[ReturnPanel]:
    """Non-overlapping aggregates at every phase ``0 .. dt-1``.

    Every base row is covered by at most ``dt`` of the returned panels, and
    rows away from the edges by exactly ``dt``. ``dt = 1`` returns the base
    panel itself as the only element.
    """
    if dt == 1:
        return [panel]
    return [aggregate(panel, dt, MODE_NONOVERLAPPING, p) for p in range(dt)]


def min_phase_rows(n_rows: int, dt: int) -> int:
    """Rows in the shortest phase panel at scale ``dt``: worst case over phases."""
    if dt == 1:
        return n_rows
    return (n_rows - dt + 1) // dt
