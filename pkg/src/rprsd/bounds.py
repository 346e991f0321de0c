"""Closed-form coherence, support-detection and measurement-count bounds.

All quantities are double precision.  ``g > 2`` is the free Chernoff
parameter shared by the tail, CDF and guarantee bounds; ``g_opt`` minimizes
the required RPR measurement count and is obtained in closed form through
the lower real branch of the Lambert W function.
"""

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

from .errors import DomainError

INV_E = math.exp(-1.0)
# 1/e split as hi + lo so that z + 1/e is accurate near the branch point
_INV_E_HI = 0.36787944117144233
_INV_E_LO = -1.2428753672788363e-17
_BRANCH_SERIES_CUTOFF = 1e-6


class BoundValue(float):
    """A float carrying a ``vacuous`` flag (bound outside ``[0, 1]``)."""

    vacuous: bool

    def __new__(cls, value, vacuous=False):
        obj = super().__new__(cls, value)
        obj.vacuous = bool(vacuous)
        return obj

    def __repr__(self):
        tag = ", vacuous" if self.vacuous else ""
        return f"BoundValue({float(self)!r}{tag})"


class MeasurementCount(NamedTuple):
    m_real: float
    m_int: int

    @property
    def rounded(self):
        return int(math.floor(self.m_real + 0.5))


@dataclass(frozen=True)
class BoundInputs:
    M: int
    N: int
    K: int
    eps: float
    g: float

    def __post_init__(self):
        for name in ("M", "N", "K"):
            v = getattr(self, name)
            if v < 0 or int(v) != v:
                raise DomainError(f"{name} must be a non-negative integer, got {v}")
        if self.N < 1 or self.K < 1:
            raise DomainError("N and K must be positive")
        _check_g(self.g)
        _check_eps(self.eps)
        if not self.K <= self.M < self.N:
            warnings.warn(
                f"outside the K <= M < N regime (M={self.M}, N={self.N}, K={self.K})",
                RuntimeWarning,
                stacklevel=3,
            )


def _check_g(g):
    if not g > 2:
        raise DomainError(f"g must exceed 2, got {g}")


def _check_eps(eps):
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")


def _check_positive_int(name, v):
    if int(v) != v or v < 1:
        raise DomainError(f"{name} must be a positive integer, got {v}")


def _chernoff_prefactor(g):
    # (1 - 2/g)^(-1/2)
    return math.exp(-0.5 * math.log1p(-2.0 / g))


def tail_bound(delta, M, g):
    """``Pr(|p^H u| >= delta) <= (1 - 2/g)^(-1/2) exp(-delta^2 M / g)``.

    Values above one are returned unclamped with ``vacuous`` set.
    """
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    _check_g(g)
    val = _chernoff_prefactor(g) * math.exp(-delta * delta * M / g)
    return BoundValue(val, val > 1.0)


def bernstein_tail_bound(delta, M):
    """Matrix-Bernstein comparison bound ``4 exp(-3 M d^2 / (2 d sqrt(M) + 6))``."""
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    if M < 1:
        raise DomainError(f"M must be positive, got {M}")
    val = 4.0 * math.exp(-3.0 * M * delta * delta / (2.0 * delta * math.sqrt(M) + 6.0))
    return BoundValue(val, val > 1.0)


def coherence_cdf_bound(delta, M, N, g):
    """Lower bound on ``Pr(mu(A) < delta)`` for an ``M x N`` RPR matrix.

    The per-pair base ``1 - tail_bound`` is clamped to ``[0, 1]`` before it is
    raised to the number of column pairs, so the result is a probability.
    """
    if int(N) != N or N < 2:
        raise DomainError(f"N must be an integer >= 2, got {N}")
    base = 1.0 - float(tail_bound(delta, M, g))
    base = min(max(base, 0.0), 1.0)
    pairs = N * (N - 1) // 2
    if base == 0.0:
        return 0.0
    return math.exp(pairs * math.log(base))


def ssd_prob_bound(inp):
    """``1 - (1 - 2/g)^(-1/2) K N exp(-M / (g K^2))``; may be negative (vacuous)."""
    K, N, M, g = inp.K, inp.N, inp.M, inp.g
    val = 1.0 - _chernoff_prefactor(g) * K * N * math.exp(-M / (g * K * K))
    return BoundValue(val, val < 0.0)


def required_m_rpr(N, K, eps, g):
    """Measurements sufficient for ``Pr(SSD) >= 1 - eps`` with RPR matrices.

    ``m_real = g K^2 ln(K N / (eps sqrt(1 - 2/g)))`` and ``m_int = ceil(m_real)``.
    """
    _check_g(g)
    _check_eps(eps)
    _check_positive_int("N", N)
    _check_positive_int("K", K)
    m = g * K * K * _log_ratio(N, K, eps, g)
    return MeasurementCount(m, max(1, math.ceil(m)))


def _log_ratio(N, K, eps, g):
    # ln(K N / (eps sqrt(1 - 2/g)))
    return math.log(K * N / eps) - 0.5 * math.log1p(-2.0 / g)


def objective(g, N, K, eps):
    """Measurement count as a function of ``g`` (convex on ``g > 2``)."""
    return g * K * K * _log_ratio(N, K, eps, g)


def objective_derivative(g, N, K, eps):
    return K * K * _log_ratio(N, K, eps, g) - K * K / (g - 2.0)


def objective_second_derivative(g, K):
    return 2.0 * K * K / (g * (g - 2.0) ** 2)


def lambert_w_m1(z):
    """Lower real branch ``W_{-1}(z)`` for ``-1/e <= z < 0``.

    Returns ``w <= -1`` with ``w exp(w) = z``.  Within ``1e-6`` of the branch
    point (in ``1 + e z``) the branch-point series is returned directly;
    elsewhere Halley iterations start from the series (near the branch point)
    or from ``ln(-z) - ln(-ln(-z))``.
    """
    z = float(z)
    if not z < 0.0:
        raise DomainError(f"W_-1 is defined on [-1/e, 0), got {z}")
    q = (z + _INV_E_HI) + _INV_E_LO  # z + 1/e
    if q < 0.0:
        if q > -4e-17:
            q = 0.0
        else:
            raise DomainError(f"W_-1 is defined on [-1/e, 0), got {z}")
    s = math.e * q  # 1 + e z
    if s == 0.0:
        return -1.0
    p = -math.sqrt(2.0 * s)
    if s < _BRANCH_SERIES_CUTOFF:
        return _branch_series(p)
    if s < 0.25:
        w = _branch_series(p)
    else:
        lz = math.log(-z)
        w = lz - math.log(-lz)
    for _ in range(64):
        ew = math.exp(w)
        f = w * ew - z
        wp1 = w + 1.0
        dw = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_new = w - dw
        if w_new > -1.0:
            w_new = 0.5 * (w - 1.0)
        if abs(w_new - w) <= 4.0 * 2.220446049250313e-16 * abs(w_new):
            return w_new
        w = w_new
    return w


def _branch_series(p):
    # W = -1 + p - p^2/3 + 11/72 p^3 - 43/540 p^4 + 769/17280 p^5 - 221/8505 p^6, p = -sqrt(2(1 + e z))
    return -1.0 + p * (
        1.0
        + p
        * (
            -1.0 / 3.0
            + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * (769.0 / 17280.0 + p * (-221.0 / 8505.0))))
        )
    )


def lambert_argument(N, K, eps):
    return -((eps / (K * N)) ** 2) * INV_E


def g_opt(N, K, eps, check=True):
    """Closed-form minimizer of :func:`objective` over ``g > 2``.

    With ``alpha = -1 / W_{-1}(-(eps / (K N))^2 / e)`` the optimum is
    ``g = 2 / (1 - alpha)``.  When ``check`` is set the first-order condition
    and the optimal-value identity ``f(g) = g K^2 / (g - 2)`` are verified.
    """
    _check_eps(eps)
    _check_positive_int("N", N)
    _check_positive_int("K", K)
    z = lambert_argument(N, K, eps)
    if not -INV_E < z < 0.0:
        raise DomainError(f"Lambert argument {z} outside (-1/e, 0)")
    alpha = -1.0 / lambert_w_m1(z)
    g = 2.0 / (1.0 - alpha)
    if check:
        fp = objective_derivative(g, N, K, eps)
        f = objective(g, N, K, eps)
        ident = g * K * K / (g - 2.0)
        # f' is a difference of two O(f/g) terms; scale the tolerance accordingly
        if abs(fp) > 1e-8 * max(1.0, K * K / (g - 2.0)) or abs(f - ident) > 1e-8 * abs(ident):
            raise ArithmeticError(f"g_opt={g!r} failed its optimality cross-check (f'={fp!r})")
    return g


def golden_section_g(N, K, eps, lo=2.0 + 1e-9, hi=500.0, tol=1e-13, max_iter=500):
    """Derivative-free minimizer of :func:`objective` on ``[lo, hi]``."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc = objective(c, N, K, eps)
    fd = objective(d, N, K, eps)
    for _ in range(max_iter):
        if b - a <= tol * max(1.0, abs(a)):
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = objective(c, N, K, eps)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = objective(d, N, K, eps)
    return 0.5 * (a + b)


def required_m_gaussian(N, K, eps, C=11.0):
    """Coherence-based Gaussian baseline ``C K ln(N / eps)``."""
    if not C > 0:
        raise DomainError(f"C must be positive, got {C}")
    _check_eps(eps)
    _check_positive_int("N", N)
    _check_positive_int("K", K)
    m = C * K * math.log(N / eps)
    return MeasurementCount(m, max(1, math.ceil(m)))


def required_m_rip(N, K):
    """RIP-route comparison ``16 K^2 ln(N / K)``; ``N`` may be real."""
    if not K > 0:
        raise DomainError(f"K must be positive, got {K}")
    if not K < N:
        raise DomainError(f"need K < N, got K={K}, N={N}")
    return 16.0 * K * K * math.log(N / K)
