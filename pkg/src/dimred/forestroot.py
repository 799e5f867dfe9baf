"""Numerical check of the Forest-Root formula

    f(0) = sum over rooted forests (F, R) of  int_{C^n} f^(F,R)(t) (d^2z / -pi)^n,

with ``t_ij = |z_i - z_j|^2`` and ``t_i = |z_i|^2``. Each term is a
2n-dimensional integral estimated by importance sampling from a product of
complex Gaussians.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.integrate import quad

from .combinatorics import RootedForest, enumerate_rooted_forests
from .mc_core import MCEstimate, estimate, stream_id, sum_independent

FOREST_ROOT_N_MAX = 5


class MissingDerivativeError(LookupError):
    pass


def bond_pairs(n: int) -> list[tuple[int, int]]:
    return list(itertools.combinations(range(1, n + 1), 2))


def bond_variables(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(t_bonds, t_vertices)`` for complex batches ``z`` of shape ``(m, n)``."""
    z = np.asarray(z)
    return _bond_variables_real(np.stack([z.real, z.imag], axis=-1))


def _bond_variables_real(g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # g: (m, n, 2) real and imaginary parts
    n = g.shape[1]
    I, J = np.triu_indices(n, 1)
    dg = g[:, I] - g[:, J]
    return np.einsum("mkc,mkc->mk", dg, dg), np.einsum("mkc,mkc->mk", g, g)


class SmoothTestFunction:
    """Interface for functions of bond and vertex variables.

    Subclasses provide ``value``, ``derivative`` (first derivative in every
    variable named by a rooted forest) and an ``envelope`` precision used
    for the importance density.
    """

    n: int
    envelope: float

    def value(self, t_bonds: np.ndarray, t_vertices: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def derivative(self, fr: RootedForest, t_bonds: np.ndarray, t_vertices: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def at_zero(self) -> float:
        m = len(bond_pairs(self.n))
        return float(self.value(np.zeros((1, m)), np.zeros((1, self.n)))[0])


@dataclass(frozen=True, eq=False)
class GaussianFamily(SmoothTestFunction):
    """``f(t) = exp(-sum a_ij t_ij - sum a_i t_i)`` with ``a_i > 0``, ``a_ij >= 0``."""

    vertex_rates: tuple[float, ...]
    bond_rates: tuple[float, ...]

    def __post_init__(self):
        n = len(self.vertex_rates)
        if len(self.bond_rates) != n * (n - 1) // 2:
            raise ValueError("need one bond rate per pair i<j")
        if min(self.vertex_rates) <= 0 or (self.bond_rates and min(self.bond_rates) < 0):
            raise ValueError("vertex rates must be > 0 and bond rates >= 0")

    @classmethod
    def uniform(cls, n: int, vertex: float = 1.0, bond: float = 1.0) -> "GaussianFamily":
        return cls((float(vertex),) * n, (float(bond),) * (n * (n - 1) // 2))

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "GaussianFamily":
        return cls(tuple(rng.uniform(0.5, 2.0, n)), tuple(rng.uniform(0.0, 1.0, n * (n - 1) // 2)))

    @property
    def n(self) -> int:
        return len(self.vertex_rates)

    @property
    def envelope(self) -> float:
        return min(self.vertex_rates)

    def scaled(self, lam: float) -> "GaussianFamily":
        """The function ``t -> f(lam * t)``."""
        return GaussianFamily(tuple(lam * a for a in self.vertex_rates),
                              tuple(lam * a for a in self.bond_rates))

    def value(self, t_bonds, t_vertices):
        return np.exp(-(t_bonds @ np.asarray(self.bond_rates)) - t_vertices @ np.asarray(self.vertex_rates))

    def coefficient(self, fr: RootedForest) -> float:
        idx = {p: k for k, p in enumerate(bond_pairs(self.n))}
        c = 1.0
        for e in fr.edges:
            c *= -self.bond_rates[idx[e]]
        for r in fr.roots:
            c *= -self.vertex_rates[r - 1]
        return c

    def derivative(self, fr, t_bonds, t_vertices):
        return self.coefficient(fr) * self.value(t_bonds, t_vertices)

    def quadratic_form(self) -> np.ndarray:
        """Matrix M with ``sum a_ij |z_i - z_j|^2 + sum a_i |z_i|^2 = z^* M z``."""
        n = self.n
        M = np.diag(np.asarray(self.vertex_rates, dtype=float))
        for (i, j), a in zip(bond_pairs(n), self.bond_rates):
            M[i - 1, i - 1] += a
            M[j - 1, j - 1] += a
            M[i - 1, j - 1] -= a
            M[j - 1, i - 1] -= a
        return M


def _complex_gaussian(n: int, lam: float):
    s = math.sqrt(0.5 / lam)

    def draw(rng, m):
        g = rng.standard_normal((m, n, 2))
        g *= s
        return g

    return draw


def _term_integrand(f: SmoothTestFunction, fr: RootedForest, lam: float):
    n = f.n
    # (d^2z/-pi)^n divided by the density prod (lam/pi) exp(-lam |z_i|^2)
    sign = (-1.0 / lam) ** n
    if isinstance(f, GaussianFamily):
        # one exponential: the envelope cancels part of the vertex rates
        c = sign * f.coefficient(fr)
        ab = np.asarray(f.bond_rates)
        av = np.asarray(f.vertex_rates) - lam

        def fast(g):
            tb, tv = _bond_variables_real(g)
            expo = -(tv @ av)
            if ab.size:
                expo -= tb @ ab
            return c * np.exp(expo)

        return fast

    def g(z):
        tb, tv = _bond_variables_real(z)
        try:
            d = f.derivative(fr, tb, tv)
        except (NotImplementedError, KeyError) as exc:
            raise MissingDerivativeError(f"no derivative for forest {fr.edges}, roots {sorted(fr.roots)}") from exc
        return sign * d * np.exp(lam * tv.sum(axis=1))

    return g


def forest_root_term(f: SmoothTestFunction, fr: RootedForest, n_samples: int, seed: int, *,
                     stream: int | None = None, workers: int | None = None) -> MCEstimate:
    """One summand ``int f^(F,R) (d^2z/-pi)^n``."""
    if fr.n != f.n:
        raise ValueError("forest and function disagree on n")
    if isinstance(f, GaussianFamily) and f.coefficient(fr) == 0.0:
        return MCEstimate(0.0, 0.0, 0, int(seed))
    lam = f.envelope
    stream = stream_id("frf", fr.edges, tuple(sorted(fr.roots))) if stream is None else stream
    return estimate(_term_integrand(f, fr, lam), _complex_gaussian(f.n, lam), n_samples, seed,
                    stream=stream, workers=workers)


def forest_root_sum(f: SmoothTestFunction, n_samples: int, seed: int, *,
                    workers: int | None = None) -> MCEstimate:
    """Sum of all ``(n+1)^(n-1)`` rooted-forest terms; compare with ``f(0)``."""
    n = f.n
    if not 1 <= n <= FOREST_ROOT_N_MAX:
        raise ValueError(f"forest_root_sum needs 1 <= n <= {FOREST_ROOT_N_MAX}")
    forests = list(enumerate_rooted_forests(n, n_max=FOREST_ROOT_N_MAX))
    per = max(2, int(n_samples) // len(forests))
    return sum_independent(
        forest_root_term(f, fr, per, seed, stream=stream_id("frs", n, k), workers=workers)
        for k, fr in enumerate(forests)
    )


# -- vertex-only functions ---------------------------------------------------------

@dataclass(frozen=True)
class VertexProduct:
    """``g(t_1..t_n) = prod_i g_i(t_i)`` given each factor and its derivative."""

    factors: Sequence[tuple[Callable, Callable]]
    envelope: float = 1.0

    @property
    def n(self) -> int:
        return len(self.factors)

    def at_zero(self) -> float:
        return math.prod(float(g(0.0)) for g, _ in self.factors)


def localization_check(g: VertexProduct, n: int | None = None, n_samples: int = 10**6,
                       seed: int = 0, *, method: str = "quadrature",
                       workers: int | None = None) -> MCEstimate:
    """``int_{C^n} d^n g / dt_1..dt_n (d^2z/-pi)^n``; equals ``g(0)``.

    ``quadrature`` evaluates ``-2 int g_i'(r^2) r dr`` per factor (the
    error field is then the propagated quadrature error bound); ``mc``
    samples the 2n-dimensional integral directly.
    """
    if n is not None and n != g.n:
        raise ValueError(f"function has {g.n} vertex variables, expected {n}")
    if method == "quadrature":
        vals, errs = [], []
        for _, dg in g.factors:
            v, e = quad(lambda r: -2.0 * float(dg(r * r)) * r, 0.0, np.inf, epsabs=1e-14, epsrel=1e-13)
            vals.append(v)
            errs.append(e)
        total = math.prod(vals)
        err = math.sqrt(sum((total / v * e) ** 2 for v, e in zip(vals, errs) if v))
        return MCEstimate(total, err, 0, int(seed))
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    lam = g.envelope
    sign = (-1.0 / lam) ** g.n

    def h(z):
        tv = np.einsum("mkc,mkc->mk", z, z)
        out = np.ones(z.shape[0])
        for k, (_, dg) in enumerate(g.factors):
            out = out * dg(tv[:, k])
        return sign * out * np.exp(lam * tv.sum(axis=1))

    return estimate(h, _complex_gaussian(g.n, lam), n_samples, seed,
                    stream=stream_id("loc", g.n), workers=workers)
