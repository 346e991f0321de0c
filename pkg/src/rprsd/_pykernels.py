"""Pure numpy implementations of the hot kernels.

These are the reference path and the fallback when the compiled extension
``rprsd._ckernels`` is unavailable.  Both modules expose the same functions
with the same signatures and error behaviour.
"""

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateColumnsError

NAME = "python"


def rpr_phasors(u, scale):
    """``scale * exp(j 2 pi u)`` elementwise."""
    return np.exp(1j * ((2.0 * np.pi) * u)) * scale


def max_offdiag_gram(A):
    n = A.shape[1]
    G = np.abs(A.conj().T @ A)
    iu = np.triu_indices(n, 1)
    return float(G[iu].max())


def batch_coherence(stack):
    """Coherence of each matrix in an ``(S, M, N)`` stack."""
    n = stack.shape[2]
    G = np.abs(np.einsum("smi,smj->sij", stack.conj(), stack))
    iu = np.triu_indices(n, 1)
    return G[:, iu[0], iu[1]].max(axis=1)


def lstsq_qr(A_S, y, rank_tolerance=1e-10):
    """Least squares through a Householder QR; raises on a small pivot."""
    Q, R = np.linalg.qr(A_S, mode="reduced")
    piv = np.abs(np.diag(R))
    if piv.size == 0 or piv.min() < rank_tolerance * piv.max() or piv.max() == 0.0:
        raise DegenerateColumnsError(
            f"rank deficient column set: pivot ratio {piv.min() / max(piv.max(), 1e-300):.3e}"
        )
    return solve_triangular(R, Q.conj().T @ y, lower=False)


def omp(A, y, K, rank_tolerance):
    """Run ``K`` OMP iterations.

    Returns ``(selected, residual_norms, coefs, residuals)`` where ``coefs``
    is ``K x K`` with row ``t`` holding the ``t+1`` estimates after
    iteration ``t`` and ``residuals`` stacks ``r_0 .. r_K`` as rows.
    """
    M, N = A.shape
    selected = np.empty(K, dtype=np.int64)
    norms = np.empty(K + 1)
    coefs = np.zeros((K, K), dtype=np.complex128)
    residuals = np.empty((K + 1, M), dtype=np.complex128)
    mask = np.zeros(N, dtype=bool)
    r = np.array(y, dtype=np.complex128)
    residuals[0] = r
    norms[0] = np.linalg.norm(r)
    AH = A.conj().T
    for t in range(K):
        corr = np.abs(AH @ r)
        corr[mask] = -np.inf
        i = int(np.argmax(corr))
        selected[t] = i
        mask[i] = True
        A_S = A[:, selected[: t + 1]]
        xs = lstsq_qr(A_S, y, rank_tolerance)
        coefs[t, : t + 1] = xs
        r = y - A_S @ xs
        residuals[t + 1] = r
        norms[t + 1] = np.linalg.norm(r)
    return selected, norms, coefs, residuals
