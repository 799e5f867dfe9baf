"""Continuum branched polymers: tree weights and generating-function coefficients.

A polymer on a labeled tree ``T`` is embedded in R^d with vertex 1 pinned at
the origin. Hard-core polymers have unit-length bonds and non-bonded
vertices at distance at least 1. Soft polymers draw each bond from the
density ``-2 v'(|y|^2)`` and carry ``exp(-v)`` on every pair.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from .combinatorics import TreeGraph, count_trees, enumerate_trees, sample_tree_uniform
from .mc_core import (
    MCEstimate,
    RandomStream,
    estimate,
    sample_unit_sphere,
    sphere_area,
    stream_id,
)

HARD_CORE_SLACK = 1e-12
BP_ENUMERATION_BOUND = 7
RADIAL_KNOTS = 1 << 12
TRUNCATION_LEVEL = 1e-12


class SamplerError(RuntimeError):
    pass


@dataclass(frozen=True)
class PotentialSpec:
    """A radial repulsive interaction.

    ``v`` and ``v_prime`` take the squared distance ``t``. ``edge_norm`` and
    ``edge_sampler`` are optional closed forms for the bond density
    ``-2 v'(|y|^2)``; without them a radial inverse-CDF table is built.
    """

    kind: str
    v: Callable | None = None
    v_prime: Callable | None = None
    label: str = "hard_core"
    params: tuple = ()
    edge_norm: Callable[[int], float] | None = field(default=None, compare=False)
    edge_sampler: Callable | None = field(default=None, compare=False)
    truncation_radius: float | None = None

    def __post_init__(self):
        if self.kind not in ("hard_core", "soft"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "soft" and (self.v is None or self.v_prime is None):
            raise ValueError("soft potentials need both v and v_prime")

    @property
    def is_hard_core(self) -> bool:
        return self.kind == "hard_core"

    def pair_factor(self, sq: np.ndarray) -> np.ndarray:
        """Boltzmann factor of a pair at squared distance ``sq``."""
        if self.is_hard_core:
            return (sq >= 1.0).astype(float)
        return np.exp(-self.v(sq))

    def edge_normalization(self, d: int) -> float:
        """Total mass of ``-2 v'(|y|^2) d^d y`` over R^d."""
        if self.is_hard_core:
            return sphere_area(d)
        if self.edge_norm is not None:
            return float(self.edge_norm(d))
        return _radial_table(self, d).total

    def sample_edges(self, rng: np.random.Generator, m: int, d: int) -> np.ndarray:
        if self.is_hard_core:
            return sample_unit_sphere(d, rng, m)
        if self.edge_sampler is not None:
            return self.edge_sampler(rng, m, d)
        return _radial_table(self, d).sample(rng, m)

    def interaction_range(self) -> float | None:
        """Radius beyond which the interaction is negligible (None if not found)."""
        if self.is_hard_core:
            return 1.0
        if self.truncation_radius is not None:
            return float(self.truncation_radius)
        return _find_truncation_radius(self.v)


HARD_CORE = PotentialSpec("hard_core")


def hard_core() -> PotentialSpec:
    return HARD_CORE


def gaussian(amplitude: float = 1.0, width: float = 1.0) -> PotentialSpec:
    """``v(t) = amplitude * exp(-t / width**2)``; bonds are exactly Gaussian."""
    a, w2 = float(amplitude), float(width) ** 2
    if a < 0 or w2 <= 0:
        raise ValueError("need amplitude >= 0 and width > 0")

    def v(t):
        return a * np.exp(-np.asarray(t) / w2)

    def v_prime(t):
        return -a / w2 * np.exp(-np.asarray(t) / w2)

    def norm(d):
        return 2.0 * a / w2 * (math.pi * w2) ** (d / 2)

    def sampler(rng, m, d):
        # density proportional to exp(-|y|^2 / w^2)
        return rng.standard_normal((m, d)) * math.sqrt(w2 / 2.0)

    trunc = 0.0 if a == 0 else math.sqrt(w2 * max(math.log(a / TRUNCATION_LEVEL), 0.0))
    return PotentialSpec("soft", v, v_prime, label="gaussian", params=(a, float(width)),
                         edge_norm=norm, edge_sampler=sampler, truncation_radius=trunc)


def soft(v: Callable, v_prime: Callable, label: str = "soft",
         truncation_radius: float | None = None) -> PotentialSpec:
    """Generic soft potential; bonds are drawn from a tabulated radial CDF."""
    return PotentialSpec("soft", v, v_prime, label=label, truncation_radius=truncation_radius)


def _find_truncation_radius(v: Callable, r_limit: float = 1e6) -> float | None:
    grid = np.geomspace(1e-3, r_limit, 2000)
    small = np.abs(v(grid ** 2)) < TRUNCATION_LEVEL
    if small.all():
        return 0.0
    if not small[-1]:
        return None
    last_big = np.nonzero(~small)[0][-1]
    lo, hi = grid[last_big], grid[last_big + 1]
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if abs(float(v(mid * mid))) < TRUNCATION_LEVEL:
            hi = mid
        else:
            lo = mid
    return float(hi)


class _RadialTable:
    """Inverse CDF of the radial bond density ``-2 v'(r^2) r^(d-1)``."""

    def __init__(self, potential: PotentialSpec, d: int, knots: int = RADIAL_KNOTS):
        self.d = d

        def radial(r):
            r = np.asarray(r, dtype=float)
            dens = -2.0 * potential.v_prime(r * r) * r ** (d - 1)
            neg = dens < 0
            if np.any(neg):
                bad = float(np.atleast_1d(r)[np.argmax(np.atleast_1d(neg))])
                raise SamplerError(f"bond density -2 v'(r^2) is negative at r = {bad:.6g}")
            return dens

        r_hi = 1.0
        peak = float(np.max(radial(np.linspace(0, 64, 4097))))
        if peak == 0.0:
            self.total = 0.0
            self._inv = None
            return
        while radial(r_hi) * r_hi > 1e-18 * peak or r_hi < 1.0:
            r_hi *= 1.25
            if r_hi > 1e6:
                raise SamplerError("bond density does not decay")
        r = np.concatenate([[0.0], np.geomspace(r_hi * 1e-8, r_hi, knots - 1)])
        xg, wg = np.polynomial.legendre.leggauss(8)
        a, b = r[:-1, None], r[1:, None]
        nodes = 0.5 * (b - a) * xg + 0.5 * (b + a)
        pieces = (0.5 * (b - a)[:, 0]) * (radial(nodes) @ wg)
        cdf = np.concatenate([[0.0], np.cumsum(pieces)])
        self.total = float(cdf[-1]) * sphere_area(d)
        u = cdf / cdf[-1]
        keep = np.concatenate([[True], np.diff(u) > 0])
        self._inv = PchipInterpolator(u[keep], r[keep])

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        if self._inv is None:
            raise SamplerError("bond density vanishes identically")
        radius = self._inv(rng.random(m))
        return sample_unit_sphere(self.d, rng, m) * radius[:, None]

    def quantile(self, u):
        return self._inv(u)


@functools.lru_cache(maxsize=64)
def _radial_table(potential: PotentialSpec, d: int) -> _RadialTable:
    return _RadialTable(potential, d)


def radial_table(potential: PotentialSpec, d: int) -> _RadialTable:
    if potential.is_hard_core:
        raise ValueError("hard-core bonds are unit vectors; no radial table")
    return _radial_table(potential, d)


# -- tree embeddings ---------------------------------------------------------

def tree_sampler(tree: TreeGraph, d: int, potential: PotentialSpec = HARD_CORE):
    """Sampler of embeddings ``(m, n, d)`` grown outward from vertex 1 at the origin."""
    order = [(c - 1, p - 1) for c, p in tree.bfs_parents(1)]
    n = tree.n

    def draw(rng, m):
        pos = np.zeros((m, n, d))
        if order:
            steps = potential.sample_edges(rng, m * len(order), d).reshape(m, len(order), d)
            for k, (c, p) in enumerate(order):
                pos[:, c] = pos[:, p] + steps[:, k]
        return pos

    return draw


def _pairs(n: int, pairs=None):
    if pairs is None:
        iu = np.triu_indices(n, 1)
        return iu[0], iu[1]
    if not pairs:
        return np.array([], int), np.array([], int)
    a = np.array(pairs) - 1
    return a[:, 0], a[:, 1]


def squared_distances(pos: np.ndarray, I, J) -> np.ndarray:
    diff = pos[:, I] - pos[:, J]
    return np.einsum("mkd,mkd->mk", diff, diff)


def hard_core_indicator(tree: TreeGraph):
    """Integrand: product over non-edges of 1{|y_ij| >= 1}."""
    I, J = _pairs(tree.n, tree.non_edges())

    def f(pos):
        if len(I) == 0:
            return np.ones(pos.shape[0])
        return np.all(squared_distances(pos, I, J) >= 1.0 - HARD_CORE_SLACK, axis=1).astype(float)

    return f


def tree_weight_hardcore(tree: TreeGraph, d: int, n_samples: int, seed: int, *,
                         stream: int | None = None, workers: int | None = None) -> MCEstimate:
    """Monte Carlo estimate of the hard-core weight W(T) in dimension d."""
    if d < 2:
        raise ValueError("polymer dimension must be >= 2")
    if tree.n == 1:
        return MCEstimate(1.0, 0.0, 0, int(seed))
    stream = stream_id("W", tree.edges, d) if stream is None else stream
    return estimate(hard_core_indicator(tree), tree_sampler(tree, d), n_samples, seed,
                    stream=stream, scale=sphere_area(d) ** (tree.n - 1), indicator=True,
                    workers=workers)


def soft_pair_product(n: int, potential: PotentialSpec):
    I, J = _pairs(n)

    def f(pos):
        return np.exp(-np.sum(potential.v(squared_distances(pos, I, J)), axis=1))

    return f


def tree_weight_soft(tree: TreeGraph, potential: PotentialSpec, d: int, n_samples: int, seed: int,
                     *, stream: int | None = None, workers: int | None = None) -> MCEstimate:
    """Monte Carlo estimate of the soft weight W_v(T) in dimension d."""
    if potential.is_hard_core:
        raise ValueError("tree_weight_soft needs a soft potential")
    if d < 2:
        raise ValueError("polymer dimension must be >= 2")
    if tree.n == 1:
        return MCEstimate(1.0, 0.0, 0, int(seed))
    norm = potential.edge_normalization(d)
    if norm == 0.0:
        return MCEstimate(0.0, 0.0, 0, int(seed))
    stream = stream_id("Wv", tree.edges, d, potential.label, potential.params) if stream is None else stream
    return estimate(soft_pair_product(tree.n, potential), tree_sampler(tree, d, potential),
                    n_samples, seed, stream=stream, scale=norm ** (tree.n - 1), workers=workers)


def tree_weight(tree: TreeGraph, d: int, potential: PotentialSpec, n_samples: int, seed: int,
                **kw) -> MCEstimate:
    if potential.is_hard_core:
        return tree_weight_hardcore(tree, d, n_samples, seed, **kw)
    return tree_weight_soft(tree, potential, d, n_samples, seed, **kw)


# -- generating-function coefficients ----------------------------------------

@dataclass(frozen=True)
class BPCoefficient:
    n: int
    d: int
    value: float | MCEstimate
    method: str


def bp_exact_log_coefficient(n: int, d: int) -> float:
    """log of the closed-form ``(1/n!) sum_T W(T)`` for d = 2, 3."""
    if n < 1:
        raise ValueError("n >= 1 required")
    if d == 2:
        return (n - 1) * math.log(2 * math.pi) - math.log(n)
    if d == 3:
        return math.fsum([(n - 1) * math.log(2 * math.pi), (n - 1) * math.log(n), -math.lgamma(n + 1)])
    raise ValueError(f"closed form only for d in (2, 3), got d={d}")


def bp_exact_coefficient(n: int, d: int) -> float:
    if n < 1:
        raise ValueError("n >= 1 required")
    if d == 2:
        return (2 * math.pi) ** (n - 1) / n
    if d == 3:
        if n <= 100:
            return float(n) ** (n - 1) / math.factorial(n) * (2 * math.pi) ** (n - 1)
        return math.exp(bp_exact_log_coefficient(n, 3))
    raise ValueError(f"closed form only for d in (2, 3), got d={d}")


def bp_coefficient(n: int, d: int, potential: PotentialSpec = HARD_CORE, n_samples: int = 10**6,
                   seed: int = 0, *, enumeration_bound: int = BP_ENUMERATION_BOUND,
                   workers: int | None = None) -> BPCoefficient:
    """``(1/n!) sum_T W(T)`` by Monte Carlo.

    Up to ``enumeration_bound`` every tree gets an equal share of the
    samples; beyond it trees are drawn uniformly via Pruefer codes.
    """
    if n < 1:
        raise ValueError("n >= 1 required")
    if n == 1:
        return BPCoefficient(1, d, MCEstimate(1.0, 0.0, 0, int(seed)), "enumerated_mc")
    tag = (potential.label, potential.params)
    fact = math.factorial(n)
    if n <= enumeration_bound:
        count = count_trees(n)
        per = max(2, int(n_samples) // count)
        total = 0.0
        var = 0.0
        used = 0
        nw = 1
        for k, tree in enumerate(enumerate_trees(n, n_max=max(enumeration_bound, n))):
            w = tree_weight(tree, d, potential, per, seed, stream=stream_id("bp", n, d, tag, k),
                            workers=workers)
            total += w.mean
            var += w.std_error ** 2
            used += w.n_samples
            nw = max(nw, w.n_workers)
        est = MCEstimate(total / fact, math.sqrt(var) / fact, used, int(seed), nw)
        return BPCoefficient(n, d, est, "enumerated_mc")

    n_trees = int(min(max(2, int(n_samples) // 2000), 20000))
    per = max(2, int(n_samples) // n_trees)
    rng = RandomStream(seed, stream_id("bp-trees", n, d, tag)).generator(0)
    vals = []
    nw = 1
    for k in range(n_trees):
        tree = sample_tree_uniform(n, rng)
        w = tree_weight(tree, d, potential, per, seed, stream=stream_id("bp-s", n, d, tag, k),
                        workers=workers)
        vals.append(w.mean)
        nw = max(nw, w.n_workers)
    vals = np.asarray(vals)
    factor = count_trees(n) / fact
    est = MCEstimate(float(vals.mean()) * factor,
                     float(vals.std(ddof=1) / math.sqrt(n_trees)) * factor,
                     per * n_trees, int(seed), nw)
    return BPCoefficient(n, d, est, "sampled_trees_mc")
