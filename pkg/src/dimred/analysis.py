"""Series tables, the tree function, and critical-exponent estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mc_core import mean_and_error
from .polymer import bp_exact_coefficient, bp_exact_log_coefficient

INV_E = math.exp(-1.0)


class DomainError(ValueError):
    pass


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class SeriesTable:
    """Coefficients ``b_1, b_2, ...`` of a power series.

    Exact tables may also carry ``log_values`` (log|b_N|) so that orders
    beyond the double range stay usable; such entries hold ``inf`` in
    ``values``.
    """

    values: dict
    provenance: str = "exact"
    dimension: int | None = None
    model: str = ""
    log_values: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        orders = sorted(self.values)
        if orders != list(range(1, len(orders) + 1)):
            raise ValueError("orders must be contiguous from 1")
        if self.provenance not in ("exact", "mc"):
            raise ValueError(f"unknown provenance {self.provenance!r}")
        for k, v in self.values.items():
            m, _ = mean_and_error(v)
            if not math.isfinite(m) and not (self.log_values and k in self.log_values):
                raise ValueError(f"order {k} is not finite")

    @property
    def orders(self) -> list[int]:
        return sorted(self.values)

    def __getitem__(self, n: int):
        return self.values[n]

    def __len__(self):
        return len(self.values)

    def mean(self, n: int) -> float:
        return mean_and_error(self.values[n])[0]

    def log_abs(self, n: int) -> float:
        if self.log_values is not None and n in self.log_values:
            return self.log_values[n]
        return math.log(abs(self.mean(n)))

    def sign(self, n: int) -> int:
        m = self.mean(n)
        return (m > 0) - (m < 0)

    def log_sigma(self, n: int) -> float:
        m, s = mean_and_error(self.values[n])
        return s / abs(m) if m else math.inf


def exact_bp_table(d: int, n_max: int) -> SeriesTable:
    """Closed-form polymer coefficients for d = 2 or 3, orders 1..n_max."""
    logs = {n: bp_exact_log_coefficient(n, d) for n in range(1, n_max + 1)}
    vals = {n: (bp_exact_coefficient(n, d) if lv < 700.0 else math.inf) for n, lv in logs.items()}
    return SeriesTable(vals, "exact", d, "bp", log_values=logs)


# -- tree function ---------------------------------------------------------------

def tree_function(z: float) -> float:
    """Principal solution ``T`` of ``T exp(-T) = z`` (``T <= 1``), for ``z <= 1/e``.

    Safeguarded Newton on the bracket ``[z, 0]`` (``z < 0``) or ``[0, 1]``,
    started from the branch-point expansion near ``1/e`` and from the
    Taylor series near 0.
    """
    z = float(z)
    if math.isnan(z) or z > INV_E:
        if 0.0 <= z - INV_E <= 4 * np.finfo(float).eps:
            z = INV_E
        else:
            raise DomainError(f"tree function undefined for z = {z} > 1/e")
    if z == 0.0:
        return 0.0
    gap = 1.0 - math.e * z
    if gap <= 0.0:
        return 1.0
    if gap < 0.3:
        p = math.sqrt(2.0 * gap)
        t = 1.0 - p + p * p / 3.0 - 11.0 / 72.0 * p ** 3
    elif abs(z) < 0.1:
        t = z + z * z + 1.5 * z ** 3 + 8.0 / 3.0 * z ** 4
    elif z > 0:
        t = 0.5
    else:
        t = -math.log1p(-z)
    lo, hi = (0.0, 1.0) if z > 0 else (z, 0.0)
    t = min(max(t, lo), hi)
    for _ in range(200):
        e = math.exp(-t)
        g = t * e - z
        if g == 0.0:
            break
        if g > 0:
            hi = t
        else:
            lo = t
        slope = (1.0 - t) * e
        nt = t - g / slope if slope > 0 else 0.5 * (lo + hi)
        if not lo <= nt <= hi:
            nt = 0.5 * (lo + hi)
        if abs(nt - t) <= 2e-16 * max(1.0, abs(t)):
            t = nt
            break
        t = nt
    return t


def tree_function_series(z: float, n_max: int = 200) -> float:
    """Partial sum ``sum_{N<=n_max} N^(N-1) z^N / N!``."""
    if z == 0:
        return 0.0
    lz = math.log(abs(z))
    terms = []
    for k in range(1, n_max + 1):
        mag = math.exp((k - 1) * math.log(k) - math.lgamma(k + 1) + k * lz)
        terms.append(-mag if z < 0 and k % 2 else mag)
    return math.fsum(terms)


def stirling_asymptotic(n: int) -> float:
    """Leading large-N form of the d = 3 coefficient, ``(2pi)^(N-3/2) e^N N^(-3/2)``.

    Returns ``inf`` once the value leaves the double range (N > ~250).
    """
    if n < 1:
        raise ValueError("n >= 1 required")
    lv = (n - 1.5) * math.log(2 * math.pi) + n - 1.5 * math.log(n)
    return math.exp(lv) if lv < 709.0 else math.inf


# -- exponent estimators --------------------------------------------------------------

@dataclass(frozen=True)
class ExponentFit:
    theta: float
    z_c: float
    residual: float
    orders: tuple[int, int]


def _normalized_logs(table: SeriesTable, orders):
    signs = [table.sign(n) for n in orders]
    if all(s > 0 for s in signs):
        pass
    elif all(s * (-1) ** (n - 1) == signs[0] * (-1) ** (orders[0] - 1) and s != 0
             for s, n in zip(signs, orders)):
        pass  # alternating series: fit magnitudes, singularity on the negative axis
    else:
        raise FitError("coefficients are not positive after sign normalization")
    return np.array([table.log_abs(n) for n in orders])


def fit_theta(table: SeriesTable, window: tuple[int, int] = (10, 50)) -> ExponentFit:
    """Least squares of ``log b_N = -theta log N - N log z_c + c`` over the window."""
    lo, hi = window
    orders = [n for n in table.orders if lo <= n <= hi]
    if len(orders) < 4:
        raise FitError(f"need >= 4 orders in window {window}, have {len(orders)}")
    y = _normalized_logs(table, orders)
    N = np.array(orders, dtype=float)
    A = np.column_stack([-np.log(N), -N, np.ones_like(N)])
    if table.provenance == "mc":
        sig = np.array([table.log_sigma(n) for n in orders])
        if not np.all(np.isfinite(sig)):
            raise FitError("infinite relative error in fit window")
        w = 1.0 / np.where(sig > 0, sig, sig[sig > 0].min() if np.any(sig > 0) else 1.0)
    else:
        w = np.ones_like(N)
    coef, *_ = np.linalg.lstsq(A * w[:, None], y * w, rcond=None)
    theta, log_zc, _ = coef
    resid = float(np.sqrt(np.mean(((A @ coef - y) * w) ** 2)))
    return ExponentFit(float(theta), float(math.exp(log_zc)), resid, (orders[0], orders[-1]))


def ratio_extrapolate(table: SeriesTable) -> tuple[float, float]:
    """Ratio-method estimates ``(z_c, theta)`` with first-order Richardson acceleration.

    Uses ``b_N / b_(N-1) = (1 - theta/N + O(N^-2)) / z_c``.
    """
    orders = table.orders
    if len(orders) < 6:
        raise FitError("ratio method needs >= 6 orders")
    logs = _normalized_logs(table, orders)
    r = np.exp(np.diff(logs))
    N = np.array(orders[1:], dtype=float)
    mu = N[1:] * r[1:] - N[:-1] * r[:-1]
    inv_zc = float(mu[-1])
    th = N * (1.0 - r / inv_zc)
    theta = float(N[-1] * th[-1] - N[-2] * th[-2])
    return 1.0 / inv_zc, theta
