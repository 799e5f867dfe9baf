"""Repulsive gases in D dimensions: Boltzmann factors and Mayer coefficients.

The order-n pressure coefficient is

    a_n = (1/n!) * integral of J_c(0, x_2, ..., x_n) dx_2 ... dx_n,

with the connected part computed from the partition recursion at every
sampled configuration. J_c vanishes unless the overlap graph of the
configuration is connected, so with particle 1 pinned at the origin the
integrand lives in a box of half-width ``(n - 1) * range``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .analysis import DomainError, SeriesTable, tree_function
from .combinatorics import connected_parts_from_subsets, enumerate_partitions, subset_products
from .mc_core import MCEstimate, estimate, stream_id, uniform_box
from .polymer import HARD_CORE, PotentialSpec

GAS_N_MAX = 8
SELF_CHECK_STRIDE = 100
SELF_CHECK_TOL = 1e-12


class ConnectedPartCheckError(ArithmeticError):
    pass


@dataclass(frozen=True)
class GasCoefficient:
    n: int
    D: int
    value: float | MCEstimate
    potential: PotentialSpec
    method: str


def boltzmann(X, potential: PotentialSpec = HARD_CORE):
    """Boltzmann weight of positions ``X`` of shape ``(N, D)`` or a batch ``(m, N, D)``."""
    X = np.asarray(X, dtype=float)
    single = X.ndim == 2
    if single:
        X = X[None]
    m, N = X.shape[:2]
    if N < 2:
        out = np.ones(m)
    else:
        I, J = np.triu_indices(N, 1)
        diff = X[:, I] - X[:, J]
        sq = np.einsum("mkd,mkd->mk", diff, diff)
        out = np.prod(potential.pair_factor(sq), axis=1)
    return float(out[0]) if single else out


def _pair_matrix(X: np.ndarray, potential: PotentialSpec) -> np.ndarray:
    """Pair Boltzmann factors arranged ``(N, N, m)`` for subset products."""
    m, N = X.shape[:2]
    P = np.ones((N, N, m))
    I, J = np.triu_indices(N, 1)
    diff = X[:, I] - X[:, J]
    sq = np.einsum("mkd,mkd->mk", diff, diff)
    P[I, J] = potential.pair_factor(sq).T
    return P


@lru_cache(maxsize=None)
def _partition_masks(n: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for part in enumerate_partitions(range(n)):
        out.append(tuple(sum(1 << v for v in b) for b in part.blocks))
    return tuple(out)


def resum_check(J: np.ndarray, Jc: np.ndarray, n: int) -> float:
    """Largest relative defect of ``sum_partitions prod J_c`` against ``J`` (full set)."""
    total = np.zeros(J.shape[1:])
    scale = np.zeros(J.shape[1:])
    for blocks in _partition_masks(n):
        term = np.ones(J.shape[1:])
        for b in blocks:
            term = term * Jc[b]
        total += term
        scale += np.abs(term)
    defect = np.abs(total - J[-1]) / np.maximum(1.0, scale)
    return float(defect.max()) if defect.size else 0.0


def connected_configuration(n: int, potential: PotentialSpec, *, self_check: bool = True,
                            weight: Callable[[np.ndarray], np.ndarray] | None = None):
    """Integrand ``J_c(0, x_2..x_n) * weight(x)`` on batches ``(m, n-1, D)``."""

    def f(x):
        m, _, D = x.shape
        X = np.concatenate([np.zeros((m, 1, D)), x], axis=1)
        J = subset_products(_pair_matrix(X, potential))
        Jc = connected_parts_from_subsets(J)
        if self_check:
            sel = slice(0, m, SELF_CHECK_STRIDE)
            bad = resum_check(J[:, sel], Jc[:, sel], n)
            if bad > SELF_CHECK_TOL:
                raise ConnectedPartCheckError(f"partition resum defect {bad:.3g} at n={n}")
        out = Jc[-1]
        if weight is not None:
            out = out * weight(X)
        return out

    return f


def _check_orders(n: int, D: int):
    if not 2 <= n <= GAS_N_MAX:
        raise ValueError(f"need 2 <= n <= {GAS_N_MAX}, got {n}")
    if D < 1:
        raise ValueError(f"need D >= 1, got {D}")


def cluster_integral(n: int, D: int, potential: PotentialSpec, n_samples: int, seed: int, *,
                     weight=None, stream: int, workers: int | None = None,
                     self_check: bool = True) -> MCEstimate:
    """``(1/n!) * integral of J_c(0, x_2..x_n) * weight`` over the confining box."""
    r_int = potential.interaction_range()
    if r_int is None:
        raise ValueError(f"potential {potential.label!r} has no finite truncation radius")
    if r_int == 0.0:
        return MCEstimate(0.0, 0.0, 0, int(seed))
    half = (n - 1) * r_int
    volume = (2.0 * half) ** (D * (n - 1))
    return estimate(connected_configuration(n, potential, self_check=self_check, weight=weight),
                    uniform_box(half, (n - 1, D)), n_samples, seed, stream=stream,
                    scale=volume / math.factorial(n), workers=workers)


def mayer_coefficient_mc(n: int, D: int, potential: PotentialSpec = HARD_CORE,
                         n_samples: int = 10**6, seed: int = 0, *,
                         workers: int | None = None, self_check: bool = True) -> GasCoefficient:
    """Monte Carlo Mayer coefficient ``a_n`` of the pressure in D dimensions."""
    _check_orders(n, D)
    est = cluster_integral(n, D, potential, n_samples, seed, workers=workers, self_check=self_check,
                           stream=stream_id("gas", n, D, potential.label, potential.params))
    return GasCoefficient(n, D, est, potential, "mc_cluster")


def soft_gas_coefficient_mc(n: int, D: int, potential: PotentialSpec, n_samples: int = 10**6,
                            seed: int = 0, **kw) -> GasCoefficient:
    if potential.is_hard_core:
        raise ValueError("soft_gas_coefficient_mc needs a soft potential")
    return mayer_coefficient_mc(n, D, potential, n_samples, seed, **kw)


def pressure_exact(D: int, z: float) -> float:
    """Hard-core pressure: ``log(1+z)`` at D=0; the largest root of ``x e^x = z`` at D=1."""
    if D == 0:
        if z <= -1.0:
            raise DomainError("D=0 pressure needs z > -1")
        return math.log1p(z)
    if D == 1:
        if z <= -math.exp(-1.0):
            raise DomainError("D=1 pressure needs z > -1/e")
        x = -tree_function(-z)
        # polish: Newton on x e^x - z
        for _ in range(3):
            ex = math.exp(x)
            g = x * ex - z
            dg = (1.0 + x) * ex
            if dg <= 0 or g == 0:
                break
            nx = x - g / dg
            if abs(nx * math.exp(nx) - z) >= abs(g):
                break
            x = nx
        return x
    raise ValueError("exact pressure only for D in (0, 1)")


def exact_gas_coefficient(n: int, D: int) -> float:
    if n < 1:
        raise ValueError("n >= 1 required")
    sign = -1.0 if n % 2 == 0 else 1.0
    if D == 0:
        return sign / n
    if D == 1:
        return sign * math.exp((n - 1) * math.log(n) - math.lgamma(n + 1)) if n > 20 \
            else sign * n ** (n - 1) / math.factorial(n)
    raise ValueError("exact coefficients only for D in (0, 1)")


def series_exact(D: int, n_max: int) -> SeriesTable:
    """Hard-core pressure coefficients at D = 0 (log series) or D = 1 (tree function)."""
    vals = {n: exact_gas_coefficient(n, D) for n in range(1, n_max + 1)}
    return SeriesTable(vals, "exact", D, "hard_core_gas")
