"""Regime-switching price paths.

Time is measured in years on a mesh of ``STEPS_PER_YEAR = 252 * 7`` steps (one
market hour). A :class:`RegimeSchedule` marks half-open step intervals
``[s, s + l)`` during which the "bear" parameters apply; every other step uses
the "bull" parameters.

All randomness is drawn by step index from counter-based streams (see
:mod:`regime_lab.rng`), so the draws for step ``i`` do not depend on the
regime of any other step. Swapping the bear parameters therefore changes only
the increments inside the schedule.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng as crng
from .errors import ConfigError, Infeasible
from .measures import PriceStream

STEPS_PER_YEAR = 252 * 7
MIN_GAP = 2  # s_i + l_i + MIN_GAP < s_{i+1}
MAX_ATTEMPTS = 10_000


@dataclass(frozen=True)
class RegimeSchedule:
    total_steps: int
    intervals: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple((int(s), int(l)) for s, l in self.intervals))
        self.validate()

    def validate(self):
        if self.total_steps < 1:
            raise ConfigError("total_steps must be positive")
        prev_end = None
        for s, l in self.intervals:
            if s < 0 or l < 1 or s + l > self.total_steps:
                raise ConfigError(f"interval ({s}, {l}) outside [0, {self.total_steps}]")
            if prev_end is not None and not prev_end + MIN_GAP < s:
                raise ConfigError(f"interval starting at {s} is too close to the previous one")
            prev_end = s + l

    def mask(self) -> np.ndarray:
        """Boolean array, True on regime-on steps."""
        m = np.zeros(self.total_steps, dtype=bool)
        for s, l in self.intervals:
            m[s : s + l] = True
        return m

    def to_dict(self) -> dict:
        return {"total_steps": self.total_steps, "intervals": [list(iv) for iv in self.intervals]}

    @classmethod
    def from_dict(cls, d) -> "RegimeSchedule":
        return cls(int(d["total_steps"]), tuple(tuple(iv) for iv in d["intervals"]))


@dataclass(frozen=True)
class GbmParams:
    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ConfigError("sigma must be > 0")


@dataclass(frozen=True)
class MertonParams:
    mu: float
    sigma: float
    lam: float
    gamma: float
    delta: float

    def __post_init__(self):
        if not (self.sigma > 0 and self.lam > 0 and self.delta > 0):
            raise ConfigError("sigma, lam and delta must be > 0")


@dataclass
class PathRecord:
    prices: PriceStream
    schedule: RegimeSchedule
    model: str
    bull: GbmParams | MertonParams
    bear: GbmParams | MertonParams
    seed: int
    dt: float = 1.0 / STEPS_PER_YEAR
    jump_counts: np.ndarray | None = field(default=None, repr=False)

    @property
    def returns(self) -> np.ndarray:
        return np.diff(np.log(self.prices.prices))

    def metadata(self) -> dict:
        return {
            "model": self.model,
            "bull": asdict(self.bull),
            "bear": asdict(self.bear),
            "seed": self.seed,
            "dt": self.dt,
            "schedule": self.schedule.to_dict(),
        }


def build_schedule(
    T_years: float,
    r: int,
    length: int = STEPS_PER_YEAR // 2,
    length_policy: str = "fixed",
    seed: int = 0,
    steps_per_year: int = STEPS_PER_YEAR,
) -> RegimeSchedule:
    """Place ``r`` regime-on intervals uniformly at random.

    ``length_policy="fixed"`` gives every interval ``length`` steps;
    ``"random"`` draws each length uniformly from ``[length // 2, 3 * length // 2]``.
    Start points are redrawn until the spacing rule holds, giving up after
    ``MAX_ATTEMPTS`` tries.
    """
    n_total = int(round(T_years * steps_per_year))
    if r < 0:
        raise ConfigError("r must be >= 0")
    if length < 1:
        raise ConfigError("length must be >= 1")
    if length_policy not in ("fixed", "random"):
        raise ConfigError(f"unknown length policy {length_policy!r}")
    if r == 0:
        return RegimeSchedule(n_total, ())
    if r * (length + MIN_GAP + 1) > n_total:
        raise Infeasible(f"{r} intervals of {length} steps do not fit in {n_total} steps")
    g = crng.generator(seed)
    for _ in range(MAX_ATTEMPTS):
        if length_policy == "fixed":
            lengths = np.full(r, length)
        else:
            lengths = g.integers(max(1, length // 2), 3 * length // 2, size=r, endpoint=True)
        starts = np.sort(g.integers(0, n_total - lengths.min(), size=r, endpoint=True))
        # lengths pair with starts in sorted order
        ends = starts + lengths
        if ends[-1] <= n_total and np.all(ends[:-1] + MIN_GAP < starts[1:]):
            return RegimeSchedule(n_total, tuple(zip(starts.tolist(), lengths.tolist())))
    raise Infeasible(f"no valid schedule found in {MAX_ATTEMPTS} attempts")


def _per_step(mask, bull, bear, name):
    return np.where(mask, getattr(bear, name), getattr(bull, name))


def gbm_increments(mask, bull: GbmParams, bear: GbmParams, dt: float, seed: int, start: int = 0):
    """Exact log-increments of a regime-switching gBm.

    Step ``i`` uses ``bear`` where ``mask[i]`` is set and ``bull`` elsewhere.
    ``start`` offsets the counter, so a slice of a long path can be rebuilt on
    its own.
    """
    mask = np.asarray(mask, dtype=bool)
    mu = _per_step(mask, bull, bear, "mu")
    sigma = _per_step(mask, bull, bear, "sigma")
    z = crng.normals(seed, crng.DIFFUSION, start, mask.size)
    return (mu - 0.5 * sigma**2) * dt + sigma * np.sqrt(dt) * z


def merton_increments(mask, bull: MertonParams, bear: MertonParams, dt: float, seed: int, start: int = 0):
    """Log-increments of a regime-switching Merton jump diffusion.

    Returns ``(increments, jump_counts)``. The number of jumps in a step is
    Poisson(lam * dt); their summed log-sizes are drawn in one go as
    Normal(K * gamma, K * delta^2), which has the same law as a sum of K
    independent Normal(gamma, delta^2) jumps.
    """
    mask = np.asarray(mask, dtype=bool)
    p = {name: _per_step(mask, bull, bear, name) for name in ("mu", "sigma", "lam", "gamma", "delta")}
    n = mask.size
    z = crng.normals(seed, crng.DIFFUSION, start, n)
    counts = crng.poissons(seed, crng.JUMP_COUNT, start, n, p["lam"] * dt)
    zj = crng.normals(seed, crng.JUMP_SIZE, start, n)
    jumps = counts * p["gamma"] + np.sqrt(counts) * p["delta"] * zj
    diffusion = (p["mu"] - 0.5 * p["sigma"] ** 2) * dt + p["sigma"] * np.sqrt(dt) * z
    return diffusion + jumps, counts


def _path(increments, s0):
    if not s0 > 0:
        raise ConfigError("s0 must be > 0")
    log_path = np.log(s0) + np.concatenate([[0.0], np.cumsum(increments)])
    return PriceStream(np.arange(log_path.size), np.exp(log_path))


def simulate_gbm(schedule: RegimeSchedule, bull: GbmParams, bear: GbmParams, s0: float = 100.0, seed: int = 0,
                 dt: float = 1.0 / STEPS_PER_YEAR) -> PathRecord:
    inc = gbm_increments(schedule.mask(), bull, bear, dt, seed)
    return PathRecord(_path(inc, s0), schedule, "gbm", bull, bear, seed, dt)


def simulate_merton(schedule: RegimeSchedule, bull: MertonParams, bear: MertonParams, s0: float = 100.0,
                    seed: int = 0, dt: float = 1.0 / STEPS_PER_YEAR) -> PathRecord:
    inc, counts = merton_increments(schedule.mask(), bull, bear, dt, seed)
    return PathRecord(_path(inc, s0), schedule, "merton", bull, bear, seed, dt, jump_counts=counts)


def true_moments(model: str, params, dt: float) -> tuple[float, float]:
    """Mean and variance of a single log-increment over ``dt``."""
    if not dt > 0:
        raise ConfigError("dt must be > 0")
    drift = params.mu - 0.5 * params.sigma**2
    if model == "gbm":
        return drift * dt, params.sigma**2 * dt
    if model == "merton":
        return (drift + params.lam * params.gamma) * dt, (params.sigma**2 + params.lam * (params.delta**2 + params.gamma**2)) * dt
    raise ConfigError(f"unknown model {model!r}")


# parameter sets used in the synthetic experiments
GBM_BULL = GbmParams(0.02, 0.2)
GBM_BEAR = GbmParams(-0.02, 0.3)
MERTON_BULL = MertonParams(0.05, 0.2, 5.0, 0.02, 0.0125)
MERTON_BEAR = MertonParams(-0.05, 0.4, 10.0, -0.04, 0.1)
