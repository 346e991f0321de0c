"""Seeded Monte Carlo harness for support detection and bound verification.

Every estimator is a pure function of its arguments.  Trial ``i`` at sweep
point ``m`` uses seed ``derive_seed(base_seed, m, i)``, so results do not
depend on how trials are distributed across worker processes; aggregation
only sums integer success counts.
"""

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _backend, bounds
from .ensembles import Ensemble, generate_matrix, generate_signal, measure
from .errors import DegenerateColumnsError, InvalidDimensionError
from .omp import OmpConfig, omp_detect
from .seeding import derive_seed, make_rng

log = logging.getLogger(__name__)

Z95 = 1.959963984540054
SIGMA_SLACK = 3.0
_SIGNAL_STREAM = 1


def wilson_interval(successes, trials, z=Z95):
    """Wilson score interval for a binomial proportion ``successes / trials``."""
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not 0 <= successes <= trials:
        raise ValueError("successes must lie in [0, trials]")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    centre = (p + z2 / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z2 / (4 * trials * trials)) / denom
    # clamp so the interval always contains p despite rounding
    return min(max(centre - half, 0.0), p), max(min(centre + half, 1.0), p)


def binomial_se(p, n):
    return math.sqrt(max(p * (1.0 - p), 0.0) / n)


def binomial_sigma(count, n):
    """One-sigma uncertainty of ``count / n``: half-width of the z=1 Wilson interval.

    Agrees with :func:`binomial_se` away from the boundary but stays
    positive at ``count`` of 0 or ``n``, where the plug-in estimate is zero.
    """
    lo, hi = wilson_interval(count, n, z=1.0)
    return 0.5 * (hi - lo)


@dataclass(frozen=True)
class SweepConfig:
    N: int
    K: int
    m_values: tuple
    trials: int = 10_000
    base_seed: int = 0
    ensemble: Ensemble = Ensemble.RPR
    signal_mode: str = "unit_coefficients"

    def __post_init__(self):
        object.__setattr__(self, "m_values", tuple(int(m) for m in self.m_values))
        object.__setattr__(self, "ensemble", Ensemble.parse(self.ensemble))
        if not self.m_values:
            raise ValueError("m_values must not be empty")
        if any(m < self.K for m in self.m_values):
            raise InvalidDimensionError(f"every m must be >= K={self.K}")
        if self.trials < 100:
            raise ValueError(f"trials must be at least 100, got {self.trials}")
        if self.signal_mode != "unit_coefficients":
            raise ValueError("sweeps support unit_coefficients signals only")


@dataclass(frozen=True)
class TrialBatchResult:
    m: int
    successes: int
    trials: int
    error_rate: float
    ci_low: float
    ci_high: float
    ensemble: str = "rpr"
    failures_degenerate: int = 0

    @classmethod
    def from_counts(cls, m, successes, trials, ensemble="rpr", degenerate=0):
        errors = trials - successes
        lo, hi = wilson_interval(errors, trials)
        return cls(m, successes, trials, errors / trials, lo, hi, str(ensemble), degenerate)

    @property
    def half_width(self):
        return 0.5 * (self.ci_high - self.ci_low)


@dataclass(frozen=True)
class EmpiricalCdf:
    """Empirical CDF using the strict convention ``F(d) = #{v < d} / n``."""

    sorted_values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.sort(np.asarray(self.sorted_values, dtype=np.float64))
        v.setflags(write=False)
        object.__setattr__(self, "sorted_values", v)

    @property
    def sample_count(self):
        return self.sorted_values.size

    def __call__(self, delta):
        idx = np.searchsorted(self.sorted_values, delta, side="left")
        return idx / self.sample_count

    def tail(self, delta):
        """Fraction of samples ``>= delta``."""
        return 1.0 - self(delta)


# ---------------------------------------------------------------- trials ---


def run_trial(N, K, M, ensemble, trial_seed, detail=False):
    """One noiseless detection trial; True iff OMP recovers the exact support.

    The matrix is drawn with ``trial_seed`` and the unit-coefficient signal
    with ``derive_seed(trial_seed, 1)``.  A degenerate least-squares step is
    a failed trial; with ``detail`` the return value is
    ``(success, reason)`` where ``reason`` is ``None`` or ``"degenerate"``.
    """
    if K > M:
        raise InvalidDimensionError(f"K={K} exceeds M={M}")
    A = generate_matrix(ensemble, M, N, trial_seed)
    x = generate_signal(N, K, "unit_coefficients", derive_seed(trial_seed, _SIGNAL_STREAM))
    y = measure(A, x)
    try:
        trace = omp_detect(A, y, OmpConfig(K))
    except DegenerateColumnsError as exc:
        log.debug("trial seed %d degenerate: %s", trial_seed, exc)
        return (False, "degenerate") if detail else False
    ok = trace.detected == frozenset(x.support)
    return (ok, None) if detail else ok


def _run_chunk(args):
    N, K, m, ensemble, base_seed, start, stop = args
    successes = degenerate = 0
    for i in range(start, stop):
        ok, reason = run_trial(N, K, m, ensemble, derive_seed(base_seed, m, i), detail=True)
        successes += ok
        degenerate += reason == "degenerate"
    return m, successes, degenerate


def _chunks(cfg, chunk_size):
    for m in cfg.m_values:
        for start in range(0, cfg.trials, chunk_size):
            stop = min(start + chunk_size, cfg.trials)
            yield (cfg.N, cfg.K, m, cfg.ensemble.value, cfg.base_seed, start, stop)


def sweep_error_rate(cfg, workers=1, chunk_size=500):
    """Support-detection error rate at every ``m`` in ``cfg.m_values``."""
    succ = dict.fromkeys(cfg.m_values, 0)
    degen = dict.fromkeys(cfg.m_values, 0)
    jobs = list(_chunks(cfg, chunk_size))
    if workers <= 1:
        results = map(_run_chunk, jobs)
    else:
        pool = ProcessPoolExecutor(max_workers=workers)
        results = pool.map(_run_chunk, jobs)
    try:
        for m, s, d in results:
            succ[m] += s
            degen[m] += d
    finally:
        if workers > 1:
            pool.shutdown()
    return [
        TrialBatchResult.from_counts(m, succ[m], cfg.trials, cfg.ensemble.value, degen[m])
        for m in cfg.m_values
    ]


# ------------------------------------------------- inner-product samples ---


def _flat_inner_abs(M, samples, seed, chunk=1 << 16):
    rng = make_rng(seed)
    out = np.empty(samples)
    scale = 1.0 / M
    for start in range(0, samples, chunk):
        n = min(chunk, samples - start)
        theta = (2.0 * np.pi) * rng.random((n, M))
        # p^H u with u_m = 1/sqrt(M) is (1/M) sum_m exp(-j theta_m)
        s = np.exp(-1j * theta).sum(axis=1) * scale
        out[start : start + n] = np.abs(s)
    return out


def sample_inner_product(M, samples, seed):
    """Empirical CDF of ``|p^H u|`` with ``p`` an RPR column and ``u`` flat."""
    if M < 1:
        raise InvalidDimensionError("M must be positive")
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    return EmpiricalCdf(_flat_inner_abs(M, samples, seed))


@dataclass(frozen=True)
class GridVerdict:
    """One bound-dominance check at a grid point."""

    params: dict
    empirical: float
    bound: float
    sigma: float
    passed: bool


def verify_tail(M_values, deltas, g_values, samples, seed):
    """Empirical ``Pr(|p^H u| >= d)`` against the Chernoff tail bound.

    A point passes when ``empirical <= bound + 3 sigma`` with sigma from
    :func:`binomial_sigma`.
    """
    out = []
    for M in M_values:
        cdf = sample_inner_product(M, samples, derive_seed(seed, M))
        for d in deltas:
            p = float(cdf.tail(d))
            sig = binomial_sigma(int(round(p * samples)), samples)
            for g in g_values:
                b = float(bounds.tail_bound(d, M, g))
                out.append(GridVerdict({"M": M, "delta": d, "g": g}, p, b, sig, p <= b + SIGMA_SLACK * sig))
    return out


# --------------------------------------------------------------- moments ---


def rpr_moment_exact(M, k):
    """``E|p^H u|^{2k}`` for flat ``u``: exact by multinomial counting.

    ``E|sum_m e^{j theta_m}|^{2k}`` equals the sum over compositions
    ``k_1 + .. + k_M = k`` of ``(k! / prod k_m!)^2``.
    """
    total = 0
    for comp in _compositions(k, M):
        c = math.factorial(k)
        for km in comp:
            c //= math.factorial(km)
        total += c * c
    return total / M ** (2 * k)


def _compositions(k, M):
    # weak compositions of k into M parts, via multiplicity counting
    if M == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, M - 1):
            yield (first,) + rest


def bernoulli_moment_exact(M, k):
    """``E|q^H u|^{2k}`` for Rademacher ``q / sqrt(M)`` and flat ``u``.

    Exhaustive over the ``2^M`` sign patterns, grouped by number of minus
    signs.  Limited to ``M <= 20``.
    """
    if M > 20:
        raise ValueError("exhaustive Bernoulli moments are limited to M <= 20")
    total = sum(math.comb(M, j) * (M - 2 * j) ** (2 * k) for j in range(M + 1))
    return total / (2**M * M ** (2 * k))


def bernoulli_moment_enumerated(M, k):
    """Literal enumeration of all sign vectors (small ``M`` oracle)."""
    acc = 0
    for signs in itertools.product((1, -1), repeat=M):
        acc += sum(signs) ** (2 * k)
    return acc / (2**M * M ** (2 * k))


@dataclass(frozen=True)
class MomentRow:
    k: int
    rpr_estimate: float
    rpr_se: float
    bernoulli_value: float
    bernoulli_se: float
    bernoulli_exact: bool
    verdict: str

    @property
    def passed(self):
        if self.k <= 1:
            return self.verdict == "equality"
        return self.verdict != "violation"


def _moment_verdict(k, lhs, lse, rhs, rse):
    slack = SIGMA_SLACK * math.hypot(lse, rse)
    if abs(lhs - rhs) <= slack and k <= 1:
        return "equality"
    if lhs + slack < rhs:
        return "strict"
    if lhs - slack > rhs:
        return "violation"
    return "equality" if abs(lhs - rhs) <= slack else "inconclusive"


def verify_moment_dominance(M, k_max, samples, seed):
    """Compare ``E|p^H u|^{2k}`` (sampled) with ``E|q^H u|^{2k}`` for ``k = 0..k_max``.

    The Bernoulli side is exact by enumeration for ``M <= 20``; otherwise
    closed forms for ``k <= 2`` and sampling above.
    """
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    if samples < 100_000:
        raise ValueError("need at least 1e5 samples")
    v = _flat_inner_abs(M, samples, derive_seed(seed, 0)) ** 2
    q = None
    if M > 20 and k_max > 2:
        rng = make_rng(derive_seed(seed, 1))
        q = np.empty(samples)
        for start in range(0, samples, 1 << 16):
            n = min(1 << 16, samples - start)
            z = rng.integers(0, 2, size=(n, M), dtype=np.int8) * 2 - 1
            q[start : start + n] = (z.sum(axis=1, dtype=np.int64) / M) ** 2
    rows = []
    for k in range(k_max + 1):
        pk = v**k
        lhs = float(pk.mean())
        lse = float(pk.std(ddof=1) / math.sqrt(samples)) if k > 0 else 0.0
        if M <= 20:
            rhs, rse, exact = bernoulli_moment_exact(M, k), 0.0, True
        elif k <= 2:
            rhs = (1.0, 1.0 / M, (3.0 * M - 2.0) / M**3)[k]
            rse, exact = 0.0, True
        else:
            qk = q**k
            rhs, rse, exact = float(qk.mean()), float(qk.std(ddof=1) / math.sqrt(samples)), False
        rows.append(MomentRow(k, lhs, lse, rhs, rse, exact, _moment_verdict(k, lhs, lse, rhs, rse)))
    return rows


# ------------------------------------------------------- coherence CDF ---


def coherence_samples(M, N, ensemble, samples, seed, batch=2048):
    """Exact coherence of ``samples`` independent matrices, matrix ``i`` seeded by ``derive_seed(seed, i)``."""
    out = np.empty(samples)
    for start in range(0, samples, batch):
        n = min(batch, samples - start)
        stack = np.empty((n, M, N), dtype=np.complex128)
        for j in range(n):
            stack[j] = generate_matrix(ensemble, M, N, derive_seed(seed, start + j)).entries
        out[start : start + n] = _backend.kernels.batch_coherence(stack)
    return out


def empirical_coherence_cdf(M, N, ensemble, samples, seed):
    if N < 2:
        raise InvalidDimensionError("coherence needs N >= 2")
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    return EmpiricalCdf(coherence_samples(M, N, ensemble, samples, seed))


def delta_grid(n=32, hi=1.0):
    """``n`` equally spaced points on ``(0, hi]``."""
    return [hi * (i + 1) / n for i in range(n)]


def verify_coherence_cdf(M, N, ensemble, samples, seed, deltas=None, g_values=(2.1, 3.0, 5.0, 10.0)):
    """Empirical ``Pr(mu(A) < d)`` against the coherence CDF lower bound.

    A point passes when ``empirical >= bound - 3 sigma`` with sigma from
    :func:`binomial_sigma`.
    """
    cdf = empirical_coherence_cdf(M, N, ensemble, samples, seed)
    deltas = delta_grid() if deltas is None else deltas
    out = []
    for d in deltas:
        p = float(cdf(d))
        sig = binomial_sigma(int(round(p * samples)), samples)
        for g in g_values:
            b = bounds.coherence_cdf_bound(d, M, N, g)
            out.append(
                GridVerdict({"M": M, "N": N, "delta": d, "g": g}, p, b, sig, p >= b - SIGMA_SLACK * sig)
            )
    return out


def bernstein_comparison(M_values=None, deltas=None, g_lo=2.0 + 1e-9, g_hi=500.0):
    """Grid comparison of the optimized Chernoff tail against the Bernstein bound.

    Returns ``(rows, violations)``; each row is
    ``(M, delta, best_chernoff, bernstein)``.  A violation is a point where
    the optimized Chernoff value is at most one yet exceeds the Bernstein
    bound; these are logged, not raised.
    """
    M_values = [16 * 2**i for i in range(7)] if M_values is None else M_values
    deltas = [0.05 * (i + 1) for i in range(10)] if deltas is None else deltas
    rows, violations = [], []
    for M in M_values:
        for d in deltas:
            best = _min_tail_over_g(d, M, g_lo, g_hi)
            bb = float(bounds.bernstein_tail_bound(d, M))
            rows.append((M, d, best, bb))
            if best <= 1.0 and best > bb:
                violations.append((M, d, best, bb))
                log.warning("Chernoff tail %.4g exceeds Bernstein %.4g at M=%d delta=%.2f", best, bb, M, d)
    return rows, violations


def _min_tail_over_g(d, M, lo, hi):
    # the log-bound is stationary at g = 2 s / (s - 1), s = d^2 M, and
    # decreasing in g when s <= 1
    s = d * d * M
    g = hi if s <= 1.0 else 2.0 * s / (s - 1.0)
    g = min(max(g, lo), hi)
    return float(bounds.tail_bound(d, M, g))
