"""Measurement ensembles, sparse test signals and noiseless measurements.

Matrices are stored column-major (Fortran order) as ``complex128``, i.e.
interleaved ``(re, im)`` doubles, so a column is a contiguous block of ``M``
values.  Every generated matrix is a pure function of
``(ensemble, M, N, seed)``.
"""

import csv
import enum
import io
import json
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import DimensionMismatchError, InvalidDimensionError
from .seeding import check_seed, make_rng


class Ensemble(str, enum.Enum):
    """Random matrix families understood by :func:`generate_matrix`.

    ``IDENTITY`` is a deterministic test hook (first ``N`` standard basis
    vectors of length ``M``, requires ``M >= N``).  ``REAL_GAUSSIAN`` is the
    real-valued comparison variant, used only for empirical curves.
    """

    RPR = "rpr"
    BERNOULLI = "bernoulli"
    GAUSSIAN = "gaussian"
    REAL_GAUSSIAN = "real_gaussian"
    IDENTITY = "identity"
    CUSTOM = "custom"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("-", "_")
        aliases = {"complex_gaussian": "gaussian", "complexgaussian": "gaussian"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            names = ", ".join(e.value for e in cls if e is not cls.CUSTOM)
            raise ValueError(f"unknown ensemble {value!r}; expected one of {names}") from None


def _frozen(arr):
    arr = np.asfortranarray(arr, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MeasurementMatrix:
    """Complex ``M x N`` measurement matrix plus the descriptor that made it."""

    entries: np.ndarray
    ensemble: Ensemble = Ensemble.CUSTOM
    seed: int = None

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(self.entries))
        if self.entries.ndim != 2:
            raise InvalidDimensionError("measurement matrix must be 2-D")
        if 0 in self.entries.shape:
            raise InvalidDimensionError(f"matrix shape {self.entries.shape} has a zero dimension")

    @classmethod
    def from_array(cls, arr):
        return cls(np.asarray(arr), Ensemble.CUSTOM, None)

    @property
    def rows(self):
        return self.entries.shape[0]

    @property
    def cols(self):
        return self.entries.shape[1]

    @property
    def shape(self):
        return self.entries.shape

    def column(self, n):
        return self.entries[:, n]

    def descriptor(self):
        """JSON-able regeneration descriptor ``{ensemble, M, N, seed}``."""
        if self.ensemble is Ensemble.CUSTOM:
            raise ValueError("custom matrices have no regeneration descriptor")
        return {"ensemble": self.ensemble.value, "M": self.rows, "N": self.cols, "seed": self.seed}

    def to_json(self):
        return json.dumps(self.descriptor(), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text) if isinstance(text, str) else dict(text)
        return generate_matrix(d["ensemble"], d["M"], d["N"], d["seed"])

    def to_csv(self, fh=None):
        """Raw dump with header ``m,n,re,im``; returns the text if ``fh`` is None."""
        out = fh if fh is not None else io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["m", "n", "re", "im"])
        for n in range(self.cols):
            col = self.entries[:, n]
            for m in range(self.rows):
                w.writerow([m, n, repr(float(col[m].real)), repr(float(col[m].imag))])
        if fh is None:
            return out.getvalue()

    @classmethod
    def from_csv(cls, fh):
        if isinstance(fh, str):
            fh = io.StringIO(fh)
        rows = list(csv.DictReader(fh))
        M = 1 + max(int(r["m"]) for r in rows)
        N = 1 + max(int(r["n"]) for r in rows)
        arr = np.zeros((M, N), dtype=np.complex128, order="F")
        for r in rows:
            arr[int(r["m"]), int(r["n"])] = complex(float(r["re"]), float(r["im"]))
        return cls.from_array(arr)


def _check_dims(M, N):
    for name, v in (("M", M), ("N", N)):
        if int(v) != v or v < 1:
            raise InvalidDimensionError(f"{name} must be a positive integer, got {v}")
    return int(M), int(N)


def generate_matrix(ensemble, M, N, seed):
    """Draw an ``M x N`` matrix from ``ensemble``.

    RPR entries are ``exp(j*2*pi*U) / sqrt(M)`` with ``U ~ U[0, 1)``,
    Bernoulli entries are ``+-1/sqrt(M)``, complex Gaussian entries are
    ``(g1 + j*g2) / sqrt(2M)``.  Draws are made column by column, so column
    ``n`` consumes stream values ``n*M .. (n+1)*M - 1``.
    """
    ensemble = Ensemble.parse(ensemble)
    M, N = _check_dims(M, N)
    seed = check_seed(seed)
    if ensemble is Ensemble.CUSTOM:
        raise ValueError("custom matrices cannot be generated")
    if ensemble is Ensemble.IDENTITY:
        if M < N:
            raise InvalidDimensionError(f"identity ensemble needs M >= N, got M={M}, N={N}")
        return MeasurementMatrix(np.eye(M, N, dtype=np.complex128), ensemble, seed)

    rng = make_rng(seed)
    scale = 1.0 / np.sqrt(M)
    if ensemble is Ensemble.RPR:
        cols = _backend.kernels.rpr_phasors(rng.random((N, M)), scale)
    elif ensemble is Ensemble.BERNOULLI:
        signs = rng.integers(0, 2, size=(N, M), dtype=np.int8)
        cols = np.where(signs == 1, scale, -scale).astype(np.complex128)
    elif ensemble is Ensemble.GAUSSIAN:
        g = rng.standard_normal((N, 2 * M))
        cols = (g[:, :M] + 1j * g[:, M:]) * np.sqrt(0.5 / M)
    else:  # REAL_GAUSSIAN
        cols = (rng.standard_normal((N, M)) * scale).astype(np.complex128)
    # (N, M) C-order transposed is (M, N) Fortran order without a copy
    return MeasurementMatrix(cols.T, ensemble, seed)


def coherence(A):
    """Mutual coherence: max over ``i < j`` of ``|a_i^H a_j|``, all pairs."""
    entries = A.entries if isinstance(A, MeasurementMatrix) else np.asarray(A, dtype=np.complex128)
    if entries.shape[1] < 2:
        raise InvalidDimensionError("coherence needs at least two columns")
    return float(_backend.kernels.max_offdiag_gram(np.asfortranarray(entries, dtype=np.complex128)))


@dataclass(frozen=True, eq=False)
class SparseSignal:
    """K-sparse complex vector of length ``dim`` given by support and values."""

    dim: int
    support: tuple
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        support = tuple(int(i) for i in self.support)
        values = np.array(self.values, dtype=np.complex128).reshape(-1)
        if self.dim < 1:
            raise InvalidDimensionError(f"signal dimension must be positive, got {self.dim}")
        if len(support) != len(values):
            raise DimensionMismatchError("support and values differ in length")
        if len(support) == 0 or len(support) > self.dim:
            raise InvalidDimensionError(f"need 1 <= K <= N, got K={len(support)}, N={self.dim}")
        if len(set(support)) != len(support):
            raise ValueError("support indices must be distinct")
        if min(support) < 0 or max(support) >= self.dim:
            raise InvalidDimensionError("support index out of range")
        if np.any(values == 0):
            raise ValueError("signal coefficients on the support must be nonzero")
        order = np.argsort(support, kind="stable")
        values = values[order]
        values.setflags(write=False)
        object.__setattr__(self, "support", tuple(support[i] for i in order))
        object.__setattr__(self, "values", values)

    @property
    def K(self):
        return len(self.support)

    def dense(self):
        x = np.zeros(self.dim, dtype=np.complex128)
        x[list(self.support)] = self.values
        return x

    def to_json(self):
        return json.dumps(
            {
                "dim": self.dim,
                "support": list(self.support),
                "values": [[float(v.real), float(v.imag)] for v in self.values],
            }
        )

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(d["dim"], d["support"], [complex(re, im) for re, im in d["values"]])


def generate_signal(N, K, mode="unit_coefficients", seed=0, values=None):
    """Draw a support of size ``K`` uniformly without replacement from ``range(N)``.

    In ``unit_coefficients`` mode every coefficient is ``1``; in ``given`` mode
    the ``K`` supplied values are placed on the sorted support.
    """
    if int(N) != N or N < 1:
        raise InvalidDimensionError(f"N must be a positive integer, got {N}")
    if int(K) != K or K < 1:
        raise InvalidDimensionError(f"K must be a positive integer, got {K}")
    if K > N:
        raise InvalidDimensionError(f"sparsity K={K} exceeds dimension N={N}")
    N, K = int(N), int(K)
    if mode == "unit_coefficients":
        vals = np.ones(K, dtype=np.complex128)
    elif mode == "given":
        if values is None or len(values) != K:
            raise DimensionMismatchError("given mode needs exactly K values")
        vals = np.asarray(values, dtype=np.complex128)
        if np.any(vals == 0):
            raise ValueError("given values must all be nonzero")
    else:
        raise ValueError(f"unknown signal mode {mode!r}")
    rng = make_rng(seed)
    support = np.sort(rng.choice(N, size=K, replace=False))
    return SparseSignal(N, tuple(int(i) for i in support), vals)


@dataclass(frozen=True, eq=False)
class Measurement:
    vector: np.ndarray
    matrix: MeasurementMatrix
    signal: SparseSignal = None


def measure(A, x):
    """Noiseless measurement ``y = A x`` touching only the support columns."""
    if A.cols != x.dim:
        raise DimensionMismatchError(f"matrix has {A.cols} columns but signal has dimension {x.dim}")
    y = A.entries[:, list(x.support)] @ x.values
    y.setflags(write=False)
    return Measurement(y, A, x)
