"""Counter-based random streams.

Uniforms come from Philox keyed by ``(seed, stream)``. Each double consumes a
single 64-bit output, so uniform ``i`` of a stream lives at a fixed counter
position and any slice can be produced independently of the others. Normals
and Poisson counts are obtained by inverse transform so they inherit that
property.
"""
import numpy as np
from scipy import special, stats

_MASK64 = (1 << 64) - 1

# stream ids used by the path simulators
DIFFUSION = 0
JUMP_COUNT = 1
JUMP_SIZE = 2


def _philox(seed, stream):
    return np.random.Philox(key=[int(seed) & _MASK64, int(stream) & _MASK64])


def uniforms(seed, stream, start, count):
    """Uniforms in (0, 1) at positions ``start .. start+count-1`` of a stream."""
    if start < 0 or count < 0:
        raise ValueError("start and count must be non-negative")
    bg = _philox(seed, stream)
    block, lane = divmod(int(start), 4)
    if block:
        bg.advance(block)
    u = np.random.Generator(bg).random(count + lane)[lane:]
    # random() is on [0, 1); nudge exact zeros so the inverse CDFs stay finite
    return np.where(u == 0.0, np.finfo(float).tiny, u)


def normals(seed, stream, start, count):
    return special.ndtri(uniforms(seed, stream, start, count))


def poissons(seed, stream, start, count, lam):
    """Poisson counts with per-position intensity ``lam`` (scalar or array)."""
    u = uniforms(seed, stream, start, count)
    return stats.poisson.ppf(u, lam).astype(np.int64)


def generator(seed):
    """A seeded Philox ``Generator`` for sampling that is not step-indexed."""
    return np.random.Generator(np.random.Philox(key=[int(seed) & _MASK64, 0xC1A5]))
