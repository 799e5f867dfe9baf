"""Reproducible Monte Carlo estimation.

Samples are generated in fixed-size chunks. Chunk ``c`` of stream ``s``
under seed ``k`` is drawn from a Philox generator keyed by ``(k, s)`` with
its counter starting at ``c << 64``. A chunk is therefore a pure
function of ``(seed, stream, chunk)``. Per-chunk statistics are merged
in chunk order, so the worker count never changes a result.
"""

from __future__ import annotations

import hashlib
import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np
from scipy.special import gammaln

CHUNK_SIZE = 1 << 15
WORKERS_ENV = "DIMRED_WORKERS"
_MASK64 = (1 << 64) - 1


class NonFiniteSampleError(FloatingPointError):
    def __init__(self, stream_index: int, sample_index: int, value: float):
        super().__init__(
            f"integrand returned {value!r} at sample {sample_index} of stream {stream_index}"
        )
        self.stream_index = stream_index
        self.sample_index = sample_index


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    std_error: float
    n_samples: int
    seed: int
    n_workers: int = 1

    def __post_init__(self):
        if not (self.std_error >= 0 and math.isfinite(self.std_error)):
            raise ValueError(f"std_error must be finite and >= 0, got {self.std_error}")

    def scaled(self, c: float) -> "MCEstimate":
        return replace(self, mean=self.mean * c, std_error=self.std_error * abs(c))

    def z_score(self, target: float) -> float:
        return _z(self.mean - target, self.std_error)

    @classmethod
    def exact(cls, value: float, seed: int = 0) -> "MCEstimate":
        return cls(float(value), 0.0, 0, seed)


def sum_independent(estimates: Iterable[MCEstimate]) -> MCEstimate:
    """Sum of independent estimates; errors add in quadrature."""
    ests = list(estimates)
    if not ests:
        raise ValueError("nothing to sum")
    mean = math.fsum(e.mean for e in ests)
    err = math.sqrt(math.fsum(e.std_error ** 2 for e in ests))
    return MCEstimate(mean, err, sum(e.n_samples for e in ests), ests[0].seed,
                      max(e.n_workers for e in ests))


def mean_and_error(x) -> tuple[float, float]:
    """(value, standard error) of an exact number or an MCEstimate."""
    if isinstance(x, MCEstimate):
        return x.mean, x.std_error
    if hasattr(x, "value"):
        return mean_and_error(x.value)
    return float(x), 0.0


def _z(diff: float, sigma: float) -> float:
    if sigma > 0:
        return abs(diff) / sigma
    return 0.0 if abs(diff) <= 1e-12 * max(1.0, abs(diff)) else math.inf


def z_score(a, b) -> float:
    """|a - b| / combined sigma for exact values or independent estimates."""
    ma, sa = mean_and_error(a)
    mb, sb = mean_and_error(b)
    diff = ma - mb
    sigma = math.hypot(sa, sb)
    if sigma > 0:
        return abs(diff) / sigma
    return 0.0 if abs(diff) <= 1e-12 * max(1.0, abs(ma), abs(mb)) else math.inf


# -- random streams -----------------------------------------------------------

def stream_id(*parts) -> int:
    """Stable 64-bit stream index derived from a label tuple."""
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8)
    return struct.unpack("<Q", h.digest())[0]


@dataclass(frozen=True)
class RandomStream:
    seed: int
    stream_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & _MASK64)
        object.__setattr__(self, "stream_index", int(self.stream_index) & _MASK64)

    def generator(self, chunk: int = 0) -> np.random.Generator:
        key = self.seed | (self.stream_index << 64)
        return np.random.Generator(np.random.Philox(key=key, counter=int(chunk) << 64))

    def substream(self, *label) -> "RandomStream":
        return RandomStream(self.seed, stream_id(self.stream_index, *label))


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        w = int(raw)
    except ValueError as exc:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if w < 1:
        raise ValueError(f"{WORKERS_ENV} must be >= 1, got {w}")
    return w


# -- samplers -------------------------------------------------------------------

def sample_unit_sphere(d: int, rng: np.random.Generator, size: int | tuple = ()) -> np.ndarray:
    """Uniform points on the unit sphere in R^d (normalized Gaussian draws)."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    shape = (size,) if isinstance(size, int) else tuple(size)
    while True:
        g = rng.standard_normal(shape + (d,))
        norm = np.linalg.norm(g, axis=-1, keepdims=True)
        if np.all(norm > 0):
            return g / norm


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere in R^d, ``2 pi^(d/2) / Gamma(d/2)``."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    return float(np.exp(math.log(2.0) + 0.5 * d * math.log(math.pi) - gammaln(0.5 * d)))


def uniform_box(half_width: float, shape: tuple) -> Callable:
    """Sampler for points uniform in ``[-h, h]`` per coordinate."""
    def draw(rng: np.random.Generator, m: int) -> np.ndarray:
        return rng.uniform(-half_width, half_width, size=(m,) + tuple(shape))
    return draw


# -- estimation -------------------------------------------------------------------

def _chunk_stats(integrand, sampler, stream: RandomStream, chunk: int, m: int, indicator: bool):
    rng = stream.generator(chunk)
    vals = np.asarray(integrand(sampler(rng, m)), dtype=float).reshape(-1)
    if vals.shape[0] != m:
        raise ValueError(f"integrand returned {vals.shape[0]} values for {m} points")
    bad = ~np.isfinite(vals)
    if bad.any():
        k = int(np.argmax(bad))
        raise NonFiniteSampleError(stream.stream_index, chunk * CHUNK_SIZE + k, float(vals[k]))
    if indicator:
        return m, int(np.count_nonzero(vals)), None
    mean = float(np.sum(vals)) / m
    m2 = float(np.sum((vals - mean) ** 2))
    return m, mean, m2


def estimate(integrand: Callable[[np.ndarray], np.ndarray],
             sampler: Callable[[np.random.Generator, int], np.ndarray],
             n_samples: int,
             seed: int,
             *,
             stream: int = 0,
             scale: float = 1.0,
             indicator: bool = False,
             workers: int | None = None) -> MCEstimate:
    """Monte Carlo mean of ``scale * integrand`` over ``sampler`` draws.

    ``sampler(rng, m)`` returns a batch of ``m`` points and ``integrand``
    maps a batch to ``m`` real values. With ``indicator=True`` the values
    must be 0/1 and the error uses the binomial formula on the hit count.
    """
    n_samples = int(n_samples)
    if n_samples < 2:
        raise ValueError("n_samples must be >= 2")
    workers = default_workers() if workers is None else max(1, int(workers))
    rs = RandomStream(seed, stream)
    n_chunks = -(-n_samples // CHUNK_SIZE)
    sizes = [CHUNK_SIZE] * (n_chunks - 1) + [n_samples - CHUNK_SIZE * (n_chunks - 1)]

    def job(c):
        return _chunk_stats(integrand, sampler, rs, c, sizes[c], indicator)

    if workers == 1 or n_chunks == 1:
        stats = [job(c) for c in range(n_chunks)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            stats = list(pool.map(job, range(n_chunks)))

    if indicator:
        hits = sum(s[1] for s in stats)
        p = hits / n_samples
        mean = p
        err = math.sqrt(p * (1.0 - p) / (n_samples - 1))
    else:
        # Chan et al. pairwise merge, fixed chunk order
        count, mean, m2 = 0, 0.0, 0.0
        for m, mu, s2 in stats:
            tot = count + m
            delta = mu - mean
            mean += delta * m / tot
            m2 += s2 + delta * delta * count * m / tot
            count = tot
        var = m2 / (n_samples - 1)
        err = math.sqrt(max(var, 0.0) / n_samples)
    return MCEstimate(mean * scale, err * abs(scale), n_samples, int(seed), workers)
