"""Per-return regime accuracy.

Every return inherits the labels of all windows covering it. Label 0 is the
standard regime and label 1 the regime change; returns inside the schedule
intervals are regime-on.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, LengthMismatch, NoCoveredReturns
from .synthetic import RegimeSchedule


def membership_vectors(windows, assignments, n_returns: int, k: int) -> np.ndarray:
    """``(n_returns, k)`` counts of covering windows per label.

    ``windows`` holds half-open ``[start, stop)`` ranges, one row per entry of
    ``assignments``. Uncovered returns get a zero row.
    """
    windows = np.asarray(windows, dtype=np.int64).reshape(-1, 2)
    labels = np.asarray(assignments, dtype=np.int64)
    if labels.shape[0] != windows.shape[0]:
        raise LengthMismatch(f"{windows.shape[0]} windows but {labels.shape[0]} labels")
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise ConfigError(f"labels must lie in 0..{k - 1}")
    if windows.size and (windows.min() < 0 or windows[:, 1].max() > n_returns):
        raise ConfigError("window outside the return stream")
    # difference array per label, then prefix sums
    diff = np.zeros((n_returns + 1, k), dtype=np.int64)
    np.add.at(diff, (windows[:, 0], labels), 1)
    np.add.at(diff, (windows[:, 1], labels), -1)
    return np.cumsum(diff[:-1], axis=0)


def labels_as_memberships(labels, k: int) -> np.ndarray:
    """One-hot memberships for per-return labels (e.g. decoded HMM states)."""
    labels = np.asarray(labels, dtype=np.int64)
    out = np.zeros((labels.size, k), dtype=np.int64)
    out[np.arange(labels.size), labels] = 1
    return out


@dataclass
class AccuracyReport:
    TA: float
    RONS: float
    ROFS: float
    n_covered: int
    n_uncovered: int
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def _ratio(num, den):
    return float(num / den) if den else float("nan")


def accuracy_scores(memberships, schedule: RegimeSchedule | np.ndarray, metadata: dict | None = None) -> AccuracyReport:
    """TA, RONS and ROFS of a membership table against a regime schedule.

    ``schedule`` may be a :class:`RegimeSchedule` or a boolean regime-on mask
    over returns. A score is NaN when its region holds no covered return.
    """
    Y = np.asarray(memberships)
    if Y.ndim != 2 or Y.shape[1] < 2:
        raise ConfigError("memberships must be (n_returns, k) with k >= 2")
    on = schedule.mask() if isinstance(schedule, RegimeSchedule) else np.asarray(schedule, dtype=bool)
    if on.size != Y.shape[0]:
        raise LengthMismatch(f"schedule covers {on.size} returns, memberships {Y.shape[0]}")
    total = Y.sum(axis=1)
    covered = total > 0
    if not covered.any():
        raise NoCoveredReturns("no return is covered by any window")
    off = ~on
    on_hit, on_all = Y[on, 1].sum(), total[on].sum()
    off_hit, off_all = Y[off, 0].sum(), total[off].sum()
    return AccuracyReport(
        TA=_ratio(on_hit + off_hit, on_all + off_all),
        RONS=_ratio(on_hit, on_all),
        ROFS=_ratio(off_hit, off_all),
        n_covered=int(covered.sum()),
        n_uncovered=int((~covered).sum()),
        metadata=dict(metadata or {}),
    )


def colouring_series(memberships) -> np.ndarray:
    """Row-normalized memberships; uncovered returns give NaN rows."""
    Y = np.asarray(memberships, dtype=float)
    total = Y.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(total > 0, Y / np.where(total > 0, total, 1.0), np.nan)
