"""Price streams, log-returns, sliding-window lifts and empirical measures.

An empirical measure is stored as its sorted atom vector. Bulk code works on
an ``(M, h1)`` array whose rows are the sorted atoms of each window; the
:class:`EmpiricalMeasure` dataclass is the single-measure view of one row.

Variance is the population variance (divide by count) everywhere in the
package.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import datetime
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ConfigError, NonPositivePrice, StreamTooShort, TooShort, UnequalAtomCounts


@dataclass(frozen=True)
class PriceStream:
    timestamps: np.ndarray
    prices: np.ndarray

    def __post_init__(self):
        prices = np.asarray(self.prices, dtype=float)
        ts = np.asarray(self.timestamps)
        if prices.ndim != 1 or prices.size < 2:
            raise TooShort(f"need at least 2 prices, got {prices.size}")
        if ts.shape != prices.shape:
            raise ConfigError("timestamps and prices must have the same length")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise NonPositivePrice("prices must be finite and strictly positive")
        if np.any(np.diff(ts) <= 0):
            raise ConfigError("timestamps must be strictly increasing")
        object.__setattr__(self, "prices", prices)
        object.__setattr__(self, "timestamps", ts)

    @classmethod
    def from_prices(cls, prices) -> "PriceStream":
        prices = np.asarray(prices, dtype=float)
        return cls(np.arange(prices.size), prices)

    def __len__(self):
        return self.prices.size


@dataclass(frozen=True)
class WindowConfig:
    """Lift parameters: window length ``h1`` and overlap ``h2``.

    Consecutive windows start ``h1 - h2`` samples apart; ``h2 = 0`` gives
    disjoint windows.
    """

    h1: int
    h2: int = 0

    def __post_init__(self):
        if int(self.h1) != self.h1 or int(self.h2) != self.h2:
            raise ConfigError("h1 and h2 must be integers")
        if self.h1 < 2:
            raise ConfigError(f"h1 must be >= 2, got {self.h1}")
        if not 0 <= self.h2 < self.h1:
            raise ConfigError(f"need 0 <= h2 < h1, got h1={self.h1}, h2={self.h2}")

    @property
    def stride(self) -> int:
        return self.h1 - self.h2

    @property
    def max_multiplicity(self) -> int:
        """Most windows a single return can belong to."""
        return math.ceil(self.h1 / self.stride)


@dataclass(frozen=True)
class EmpiricalMeasure:
    atoms: np.ndarray
    source_span: tuple[int, int] | None = field(default=None, compare=False)

    def __post_init__(self):
        atoms = np.asarray(self.atoms, dtype=float)
        if atoms.ndim != 1:
            raise ConfigError("atoms must be one-dimensional")
        if not np.all(np.isfinite(atoms)):
            raise ConfigError("atoms must be finite")
        if atoms.size > 1 and np.any(np.diff(atoms) < 0):
            atoms = np.sort(atoms)
        object.__setattr__(self, "atoms", atoms)

    def __len__(self):
        return self.atoms.size

    def cdf(self, x):
        """Fraction of atoms ``<= x``."""
        return np.searchsorted(self.atoms, x, side="right") / self.atoms.size


def log_returns(prices) -> np.ndarray:
    """``r[i] = ln(p[i+1]) - ln(p[i])``.

    Accepts a :class:`PriceStream` or any 1-D sequence of prices.
    """
    if isinstance(prices, PriceStream):
        p = prices.prices
    else:
        p = np.asarray(prices, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise TooShort(f"need at least 2 prices, got {p.size}")
        if not np.all(np.isfinite(p)) or np.any(p <= 0):
            raise NonPositivePrice("prices must be finite and strictly positive")
    return np.diff(np.log(p))


def lift(n_returns: int, cfg: WindowConfig) -> np.ndarray:
    """Window index ranges as an ``(M, 2)`` array of half-open ``[start, stop)``.

    Windows that would run past the end of the stream are dropped, so every
    window holds exactly ``h1`` returns.
    """
    if n_returns < cfg.h1:
        raise StreamTooShort(f"stream of {n_returns} returns is shorter than h1={cfg.h1}")
    starts = np.arange(0, n_returns - cfg.h1 + 1, cfg.stride)
    return np.column_stack([starts, starts + cfg.h1])


def empirical_measure(returns, window) -> EmpiricalMeasure:
    start, stop = int(window[0]), int(window[1])
    returns = np.asarray(returns, dtype=float)
    if not 0 <= start < stop <= returns.size:
        raise ConfigError(f"window [{start}, {stop}) out of bounds for {returns.size} returns")
    return EmpiricalMeasure(np.sort(returns[start:stop]), (start, stop - 1))


def window_matrix(returns, cfg: WindowConfig, *, sort: bool = True):
    """Lift a return stream into windows.

    Returns ``(windows, atoms)`` where ``windows`` is the ``(M, 2)`` index
    array from :func:`lift` and ``atoms`` is ``(M, h1)``; rows are sorted
    unless ``sort=False`` (raw chronological order).
    """
    returns = np.asarray(returns, dtype=float)
    windows = lift(returns.size, cfg)
    mat = sliding_window_view(returns, cfg.h1)[:: cfg.stride][: len(windows)]
    mat = np.sort(mat, axis=1) if sort else np.array(mat)
    return windows, mat


def moment_map(atoms, p: int) -> np.ndarray:
    """Raw moments scaled by factorials: ``(E[x^n] / n!)`` for n = 1..p.

    ``atoms`` may be a single measure (1-D) or a stack of measures (2-D, one
    per row), in which case the result is ``(M, p)``.
    """
    if p < 1:
        raise ConfigError("p must be >= 1")
    a = atoms.atoms if isinstance(atoms, EmpiricalMeasure) else np.asarray(atoms, dtype=float)
    orders = np.arange(1, p + 1)
    factorials = np.array([math.factorial(n) for n in orders], dtype=float)
    raw = np.mean(a[..., None] ** orders, axis=-2)
    return raw / factorials


def standardize_columns(matrix) -> np.ndarray:
    """Column-wise z-scores with population variance.

    Constant columns map to zeros. A column counts as constant when its
    spread is at rounding level relative to its magnitude.
    """
    x = np.asarray(matrix, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise ConfigError("need a 2-D matrix with at least 2 rows")
    mean = x.mean(axis=0)
    sd = x.std(axis=0)
    out = np.zeros_like(x)
    ok = sd > 64 * np.finfo(float).eps * np.abs(x).max(axis=0)
    out[:, ok] = (x[:, ok] - mean[ok]) / sd[ok]
    return out


def mean_variance_projection(atoms) -> tuple[float, float]:
    """``(sd, mean)`` of a measure; rows of a 2-D input give arrays."""
    a = atoms.atoms if isinstance(atoms, EmpiricalMeasure) else np.asarray(atoms, dtype=float)
    return a.std(axis=-1), a.mean(axis=-1)


def _parse_timestamp(raw: str):
    raw = raw.strip()
    try:
        return int(raw)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(raw.replace("Z", "+00:00")).timestamp()
    except ValueError as exc:
        raise ConfigError(f"unparseable timestamp {raw!r}") from exc


def read_price_csv(path) -> PriceStream:
    """Read a ``timestamp,price`` CSV.

    Timestamps are integer indices or ISO-8601 strings; they must be strictly
    increasing (unsorted or duplicated timestamps are rejected).
    """
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames[:2]] != ["timestamp", "price"]:
            raise ConfigError(f"{path}: expected header 'timestamp,price'")
        ts, px = [], []
        for row in reader:
            ts.append(_parse_timestamp(row["timestamp"]))
            try:
                px.append(float(row["price"]))
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{path}: bad price {row['price']!r}") from exc
    kinds = {type(t) for t in ts}
    if len(kinds) > 1:
        raise ConfigError(f"{path}: mixed integer and ISO-8601 timestamps")
    return PriceStream(np.asarray(ts), np.asarray(px))


def write_price_csv(path, stream: PriceStream) -> None:
    """Write ``timestamp,price`` rows; ``path`` may also be an open text file."""
    if hasattr(path, "write"):
        _write_rows(path, stream)
        return
    with open(path, "w", newline="") as fh:
        _write_rows(fh, stream)


def _write_rows(fh, stream):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["timestamp", "price"])
    for t, p in zip(stream.timestamps.tolist(), stream.prices.tolist()):
        w.writerow([t, format(float(p), ".17g")])


def as_atom_matrix(measures: Sequence[EmpiricalMeasure] | np.ndarray) -> np.ndarray:
    """Stack measures into an ``(M, N)`` array of sorted atoms."""
    if isinstance(measures, np.ndarray):
        mat = np.asarray(measures, dtype=float)
        if mat.ndim != 2:
            raise ConfigError("atom matrix must be 2-D")
        return mat
    sizes = {len(m) for m in measures}
    if len(sizes) != 1:
        raise UnequalAtomCounts(f"measures have differing atom counts {sorted(sizes)}")
    return np.vstack([m.atoms for m in measures])
