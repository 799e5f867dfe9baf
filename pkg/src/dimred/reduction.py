"""Order-by-order checks of the gas/polymer dimensional-reduction identities.

Expanding ``p(z) = -2pi Z_BP(-z/2pi)`` in powers of z gives

    a_n = (-1)^(n-1) (2pi)^(1-n) b_n,

where ``a_n`` is the D-dimensional gas coefficient and ``b_n`` the
(D+2)-dimensional polymer coefficient. The same mapping links the
order-n coefficients of the two-point functions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .combinatorics import count_trees, enumerate_trees
from .gas import GasCoefficient, cluster_integral, exact_gas_coefficient, mayer_coefficient_mc
from .mc_core import MCEstimate, estimate, mean_and_error, sphere_area, stream_id, z_score
from .polymer import (
    HARD_CORE,
    BPCoefficient,
    PotentialSpec,
    bp_coefficient,
    bp_exact_coefficient,
    hard_core_indicator,
    tree_sampler,
)

PASS_Z = 3.0


def mapping_constant(n: int) -> float:
    """Coefficient map ``b_n -> a_n``: ``(-1)^(n-1) (2pi)^(1-n)``."""
    return (-1.0) ** (n - 1) * (2.0 * math.pi) ** (1 - n)


def _mapped(value, n: int):
    c = mapping_constant(n)
    if isinstance(value, MCEstimate):
        return value.scaled(c)
    return float(value) * c


@dataclass(frozen=True)
class ReductionReport:
    n: int
    D: int
    lhs: GasCoefficient | MCEstimate | float
    rhs_raw: BPCoefficient | MCEstimate | float
    rhs_mapped: MCEstimate | float
    z_score: float
    passed: bool
    kind: str = "pressure"

    def __post_init__(self):
        if not math.isfinite(mean_and_error(self.rhs_mapped)[0]):
            raise ValueError("mapped right-hand side is not finite")


def _report(n, D, lhs, rhs_raw, kind) -> ReductionReport:
    mapped = _mapped(rhs_raw.value if hasattr(rhs_raw, "value") else rhs_raw, n)
    z = z_score(lhs, mapped)
    return ReductionReport(n, D, lhs, rhs_raw, mapped, z, z <= PASS_Z, kind)


def verify_order(n: int, D: int, potential: PotentialSpec = HARD_CORE, samples: int = 10**6,
                 seed: int = 0, *, workers: int | None = None) -> ReductionReport:
    """Gas coefficient in D dimensions against the mapped polymer coefficient in D+2."""
    if not 2 <= n <= 6:
        raise ValueError(f"verify_order needs 2 <= n <= 6, got {n}")
    if D not in (1, 2, 3):
        raise ValueError(f"verify_order needs D in (1, 2, 3), got {D}")
    lhs = mayer_coefficient_mc(n, D, potential, samples, seed, workers=workers)
    rhs = bp_coefficient(n, D + 2, potential, samples, seed, workers=workers)
    return _report(n, D, lhs, rhs, "pressure" if potential.is_hard_core else "soft_pressure")


def verify_soft_order(n: int, D: int, potential: PotentialSpec, samples: int = 10**6,
                      seed: int = 0, **kw) -> ReductionReport:
    if potential.is_hard_core:
        raise ValueError("verify_soft_order needs a soft potential")
    return verify_order(n, D, potential, samples, seed, **kw)


def exact_identity_defect(n: int, D: int) -> float:
    """Relative mismatch between the exact gas coefficient and the mapped exact polymer one."""
    a = exact_gas_coefficient(n, D)
    b = _mapped(bp_exact_coefficient(n, D + 2), n)
    return abs(a - b) / abs(a)


# -- two-point functions -----------------------------------------------------------

@dataclass(frozen=True)
class GreenTestFunction:
    """Continuous radial test function on R^D, zero beyond ``support_radius``."""

    profile: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    label: str = "custom"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r = np.sqrt(np.sum(x * x, axis=-1))
        out = np.zeros_like(r)
        inside = r < self.support_radius
        out[inside] = self.profile(r[inside])
        return out

    def at_zero(self) -> float:
        return float(self.profile(np.array(0.0)))


def gaussian_bump(radius: float = 1.5) -> GreenTestFunction:
    """Smooth bump ``exp(1 - 1/(1 - (r/R)^2))``, equal to 1 at the origin."""
    R = float(radius)

    def prof(r):
        s2 = (np.asarray(r) / R) ** 2
        return np.exp(1.0 - 1.0 / (1.0 - s2))

    return GreenTestFunction(prof, R, f"gaussian_bump({R:g})")


def raised_cosine(radius: float = 1.5) -> GreenTestFunction:
    R = float(radius)

    def prof(r):
        return 0.5 * (1.0 + np.cos(np.pi * np.minimum(np.asarray(r) / R, 1.0)))

    return GreenTestFunction(prof, R, f"raised_cosine({R:g})")


def _pair_sum(f: GreenTestFunction, D: int):
    """``sum_{j,k} f(x_k - x_j)`` on the first D coordinates of batches ``(m, n, d)``."""

    def w(X):
        x = X[..., :D]
        n = x.shape[1]
        total = n * f.at_zero() * np.ones(x.shape[0])
        for j in range(n):
            for k in range(j + 1, n):
                total = total + 2.0 * f(x[:, k] - x[:, j])
        return total

    return w


def green_coefficient_gas(n: int, D: int, f: GreenTestFunction, samples: int = 10**6,
                          seed: int = 0, *, potential: PotentialSpec = HARD_CORE,
                          workers: int | None = None) -> MCEstimate:
    """Order-n coefficient of ``int f(x) G_HC(dx; z)``."""
    if n == 1:
        return MCEstimate(f.at_zero(), 0.0, 0, int(seed))
    if not 2 <= n <= 6:
        raise ValueError(f"green_coefficient_gas needs 1 <= n <= 6, got {n}")
    return cluster_integral(n, D, potential, samples, seed, weight=_pair_sum(f, D),
                            stream=stream_id("green-gas", n, D, f.label), workers=workers)


def green_coefficient_bp(n: int, d: int, f: GreenTestFunction, samples: int = 10**6,
                         seed: int = 0, *, workers: int | None = None) -> MCEstimate:
    """Order-n coefficient of ``int f(x) G_BP(dy; z)`` with ``y = (x, extra)``.

    One insertion sits at the origin; f sees only the first ``d - 2``
    coordinates of the other, so the two extra coordinates are integrated.
    Non-bonded monomers keep their hard-core constraint.
    """
    if n == 1:
        return MCEstimate(f.at_zero(), 0.0, 0, int(seed))
    if not 2 <= n <= 6 or d < 3:
        raise ValueError(f"green_coefficient_bp needs 1 <= n <= 6 and d >= 3, got n={n}, d={d}")
    D = d - 2
    count = count_trees(n)
    per = max(2, int(samples) // count)
    weight = _pair_sum(f, D)
    total, var, used, nw = 0.0, 0.0, 0, 1
    for k, tree in enumerate(enumerate_trees(n)):
        ind = hard_core_indicator(tree)
        est = estimate(lambda X, ind=ind: ind(X) * weight(X), tree_sampler(tree, d), per, seed,
                       stream=stream_id("green-bp", n, d, f.label, k),
                       scale=sphere_area(d) ** (n - 1), workers=workers)
        total += est.mean
        var += est.std_error ** 2
        used += est.n_samples
        nw = max(nw, est.n_workers)
    fact = math.factorial(n)
    return MCEstimate(total / fact, math.sqrt(var) / fact, used, int(seed), nw)


def verify_green_order(n: int, D: int, f: GreenTestFunction, samples: int = 10**6,
                       seed: int = 0, *, workers: int | None = None) -> ReductionReport:
    """Gas two-point coefficient against ``-2pi (-1/2pi)^n`` times the polymer one."""
    if not 1 <= n <= 4:
        raise ValueError(f"verify_green_order needs 1 <= n <= 4, got {n}")
    lhs = green_coefficient_gas(n, D, f, samples, seed, workers=workers)
    rhs = green_coefficient_bp(n, D + 2, f, samples, seed, workers=workers)
    return _report(n, D, lhs, rhs, "green")
