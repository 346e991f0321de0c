"""Orthogonal matching pursuit for support detection.

Runs exactly ``K`` greedy iterations: pick the unselected column most
correlated with the residual (lowest index on ties), refit the selected
block by least squares, and replace the residual with the part of ``y``
orthogonal to the selected columns.  No residual-based early stopping.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from . import _backend
from ._pykernels import lstsq_qr
from .ensembles import MeasurementMatrix
from .errors import DegenerateRatioError, DimensionMismatchError, InvalidDimensionError


@dataclass(frozen=True)
class OmpConfig:
    K: int
    rank_tolerance: float = 1e-10
    tie_break: str = "lowest_index"

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise InvalidDimensionError(f"K must be a positive integer, got {self.K}")
        if not self.rank_tolerance > 0:
            raise ValueError("rank_tolerance must be positive")
        if self.tie_break != "lowest_index":
            raise ValueError(f"unsupported tie_break {self.tie_break!r}")


@dataclass(frozen=True, eq=False)
class OmpTrace:
    """Per-iteration record of one OMP run.

    Attributes
    ----------
    selected : tuple of int
        Chosen column indices in selection order.
    residual_norms : tuple of float
        ``||r_0||, ..., ||r_K||``.
    coefficient_estimates : list of ndarray
        Least-squares coefficients on the selected block after each iteration.
    residuals : ndarray
        ``(K+1, M)`` array whose rows are ``r_0, ..., r_K``.
    greedy_ratios : tuple of float or None
        ``rho(r_{t-1})`` for ``t = 1..K`` when the true support was supplied.
    """

    selected: tuple
    residual_norms: tuple
    coefficient_estimates: list
    residuals: np.ndarray
    greedy_ratios: tuple = None

    @property
    def detected(self):
        return frozenset(self.selected)

    def condition_held(self):
        """True when every recorded greedy ratio is below one."""
        if self.greedy_ratios is None:
            raise ValueError("trace has no greedy ratios; pass true_support to omp_detect")
        return all(r < 1.0 for r in self.greedy_ratios)

    def to_dict(self, one_based=False):
        off = 1 if one_based else 0
        return {
            "selected": [i + off for i in self.selected],
            "residual_norms": list(self.residual_norms),
            "greedy_ratios": None if self.greedy_ratios is None else list(self.greedy_ratios),
        }

    def to_json(self, one_based=False):
        return json.dumps(self.to_dict(one_based))


def _entries(A):
    return A.entries if isinstance(A, MeasurementMatrix) else np.asfortranarray(A, dtype=np.complex128)


def least_squares(A_S, y, rank_tolerance=1e-10):
    """Minimize ``||y - A_S z||_2`` through an orthogonal factorization.

    Raises :class:`DegenerateColumnsError` when the smallest ``|R_ii|`` is
    below ``rank_tolerance`` times the largest.
    """
    A_S = np.asarray(A_S, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    if A_S.ndim == 1:
        A_S = A_S[:, None]
    if A_S.shape[0] != y.shape[0]:
        raise DimensionMismatchError(f"A_S has {A_S.shape[0]} rows but y has length {y.shape[0]}")
    if A_S.shape[1] > A_S.shape[0]:
        raise DimensionMismatchError("least squares needs t <= M columns")
    return lstsq_qr(A_S, y, rank_tolerance)


def greedy_ratio(A, support, r):
    """``max_{n not in S} |a_n^H r| / max_{n in S} |a_n^H r|``."""
    entries = _entries(A)
    N = entries.shape[1]
    support = sorted(set(int(i) for i in support))
    if not support or len(support) >= N:
        raise ValueError("support must be a nonempty strict subset of the columns")
    if support[0] < 0 or support[-1] >= N:
        raise InvalidDimensionError("support index out of range")
    r = np.asarray(r, dtype=np.complex128)
    if not np.any(r):
        raise ValueError("residual must be nonzero")
    corr = np.abs(entries.conj().T @ r)
    on = np.zeros(N, dtype=bool)
    on[support] = True
    den = corr[on].max()
    if den == 0.0:
        raise DegenerateRatioError("residual is orthogonal to every support column")
    return float(corr[~on].max() / den)


def omp_detect(A, y, cfg, true_support=None):
    """Run ``cfg.K`` OMP iterations on ``y`` and return the trace.

    ``y`` may be a :class:`~rprsd.ensembles.Measurement` or a plain vector.
    With ``true_support`` the greedy ratio of every pre-iteration residual
    is recorded; an undefined ratio (zero denominator) is stored as ``inf``.
    """
    if not isinstance(cfg, OmpConfig):
        cfg = OmpConfig(int(cfg))
    entries = _entries(A)
    vec = getattr(y, "vector", y)
    vec = np.ascontiguousarray(vec, dtype=np.complex128)
    M, N = entries.shape
    if vec.shape != (M,):
        raise DimensionMismatchError(f"y has shape {vec.shape}, expected ({M},)")
    if cfg.K > min(M, N):
        raise InvalidDimensionError(f"K={cfg.K} exceeds min(M, N)={min(M, N)}")

    sel, norms, coefs, resid = _backend.kernels.omp(entries, vec, cfg.K, cfg.rank_tolerance)

    ratios = None
    if true_support is not None:
        ratios = []
        for t in range(cfg.K):
            try:
                ratios.append(greedy_ratio(entries, true_support, resid[t]))
            except (DegenerateRatioError, ValueError):
                ratios.append(math.inf)
        ratios = tuple(ratios)

    return OmpTrace(
        selected=tuple(int(i) for i in sel),
        residual_norms=tuple(float(v) for v in norms),
        coefficient_estimates=[coefs[t, : t + 1].copy() for t in range(cfg.K)],
        residuals=resid,
        greedy_ratios=ratios,
    )
