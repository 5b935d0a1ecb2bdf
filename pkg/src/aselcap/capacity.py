"""
Sum-rate evaluation and receive antenna selection.

The log-det objective log2 det(I_L + rho Gs Gs^H) is always evaluated in its
K x K form log2 det(I_K + rho Gs^H Gs) through a Cholesky factorization, which
is what makes exhaustive enumeration of millions of subsets affordable.
"""

from dataclasses import dataclass
from functools import lru_cache
import itertools
import math

import numpy as np

from .errors import CapExceededError, DomainError, NumericalError

__all__ = ['SelectionResult', 'sum_rate', 'full_rate', 'select_exhaustive',
           'select_greedy', 'select_by_norm', 'upper_bound_rate',
           'DEFAULT_ES_CAP']

DEFAULT_ES_CAP = 10 ** 7

# Rates within this relative distance of the best are ties, resolved in
# favour of the lexicographically smallest subset.
_TIE_RTOL = 1e-12
_BATCH_ELEMENTS = 1 << 21


@dataclass(frozen=True)
class SelectionResult:
    """Selected antenna rows (0-based, ascending) and the achieved sum rate in bits/s/Hz."""
    indices: tuple
    rate: float


def _check_rho(rho):
    if not (rho >= 0 and math.isfinite(rho)):
        raise DomainError(f"SNR must be finite and non-negative, got {rho!r}")


def _logdet2_batch(gram):
    """log2 det of a stack of Hermitian positive-definite matrices."""
    try:
        chol = np.linalg.cholesky(gram)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("Gram matrix is not positive definite") from exc
    diag = np.diagonal(chol, axis1=-2, axis2=-1).real
    if not np.all(np.isfinite(diag)):
        raise NumericalError("non-finite Cholesky factor")
    return 2.0 * np.sum(np.log2(diag), axis=-1)


def sum_rate(g_sub, rho):
    """
    Sum rate log2 det(I_K + rho Gs^H Gs) of a selected sub-matrix.

    Equal to log2 det(I_L + rho Gs Gs^H) by Sylvester's determinant identity.

    Parameters
    ----------
    g_sub : array_like, shape (L, K)
    rho : float
        Linear SNR, non-negative.

    Returns
    -------
    float
        Rate in bits/s/Hz.
    """
    _check_rho(rho)
    g_sub = np.asarray(g_sub)
    if g_sub.ndim != 2:
        raise ValueError("expected a 2-D channel sub-matrix")
    if not np.all(np.isfinite(g_sub)):
        raise NumericalError("channel contains NaN or Inf")
    k = g_sub.shape[1]
    gram = np.eye(k) + rho * (g_sub.conj().T @ g_sub)
    return max(0.0, float(_logdet2_batch(gram)))


def full_rate(g, rho):
    """Capacity of the full array, no antenna selection."""
    return sum_rate(g, rho)


@lru_cache(maxsize=32)
def _combinations(n, l):
    combos = np.fromiter(itertools.chain.from_iterable(itertools.combinations(range(n), l)),
                         dtype=np.intp, count=math.comb(n, l) * l)
    combos = combos.reshape(-1, l)
    combos.setflags(write=False)
    return combos


def _combination_batches(n, l, batch):
    if math.comb(n, l) * l <= 4 * _BATCH_ELEMENTS:
        combos = _combinations(n, l)
        for start in range(0, len(combos), batch):
            yield combos[start:start + batch]
        return
    it = itertools.combinations(range(n), l)
    while True:
        chunk = list(itertools.islice(it, batch))
        if not chunk:
            return
        yield np.asarray(chunk, dtype=np.intp)


def _check_selection_args(g, l, rho):
    _check_rho(rho)
    g = np.asarray(g)
    if g.ndim != 2:
        raise ValueError("expected an N x K channel matrix")
    n = g.shape[0]
    if not (1 <= l <= n):
        raise DomainError(f"need 1 <= L <= N, got L={l}, N={n}")
    if not np.all(np.isfinite(g)):
        raise NumericalError("channel contains NaN or Inf")
    return g


def select_exhaustive(g, l, rho, cap=DEFAULT_ES_CAP):
    """
    Optimal L-row subset of ``g`` by enumerating every combination.

    Combinations are visited in lexicographic order and ties keep the first
    one seen, so the lexicographically smallest optimal subset wins.

    Raises
    ------
    CapExceededError
        If binomial(N, L) exceeds ``cap``; use :func:`select_greedy` instead.
    """
    g = _check_selection_args(g, l, rho)
    n, k = g.shape
    count = math.comb(n, l)
    if count > cap:
        raise CapExceededError(
            f"binomial({n}, {l}) = {count} subsets exceeds the cap of {cap}; "
            "use greedy selection for this size")
    eye = np.eye(k)
    batch = max(1, _BATCH_ELEMENTS // (l * k))
    best_rate, best_idx = -math.inf, None
    for combos in _combination_batches(n, l, batch):
        sub = g[combos]
        gram = eye + rho * (np.swapaxes(sub.conj(), -1, -2) @ sub)
        rates = _logdet2_batch(gram)
        top = rates.max()
        if best_idx is None or top > best_rate + _TIE_RTOL * max(1.0, abs(best_rate)):
            first = np.flatnonzero(rates >= top - _TIE_RTOL * max(1.0, abs(top)))[0]
            best_rate, best_idx = top, combos[first]
    indices = tuple(int(i) for i in best_idx)
    return SelectionResult(indices, sum_rate(g[list(indices)], rho))


def select_greedy(g, l, rho):
    """
    Greedy forward selection on the log-det objective.

    Each step adds the row with the largest rate increment.  By the matrix
    determinant lemma the increment of row r is log2(1 + rho g_r^T A^-1 g_r*),
    where A is the current K x K Gram matrix.  Ties go to the smallest index.
    """
    g = _check_selection_args(g, l, rho)
    n, k = g.shape
    gram = np.eye(k, dtype=complex)
    available = np.ones(n, dtype=bool)
    chosen = []
    for _ in range(l):
        a_inv = np.linalg.inv(gram)
        gain = np.einsum('ni,ij,nj->n', g, a_inv, g.conj()).real
        gain[~available] = -np.inf
        top = gain.max()
        r = int(np.flatnonzero(gain >= top - _TIE_RTOL * max(1.0, abs(top)))[0])
        chosen.append(r)
        available[r] = False
        row = g[r]
        gram = gram + rho * np.outer(row.conj(), row)
    indices = tuple(sorted(chosen))
    return SelectionResult(indices, sum_rate(g[list(indices)], rho))


def select_by_norm(g, l, rho):
    """Keep the L rows with the largest squared norms (ties: smallest index)."""
    g = _check_selection_args(g, l, rho)
    norms = np.sum(np.abs(g) ** 2, axis=1)
    order = np.argsort(-norms, kind='stable')[:l]
    indices = tuple(int(i) for i in np.sort(order))
    return SelectionResult(indices, sum_rate(g[list(indices)], rho))


def upper_bound_rate(h, beta, l, rho):
    """
    Order-statistics upper bound on the selected sum rate.

    Every user independently keeps its L strongest antennas:
    sum_k log2(1 + rho beta_k * sum of the L largest |h_nk|^2).
    It is tight for a single user.

    Parameters
    ----------
    h : array_like, shape (N, K)
        Fast fading (without large-scale gains).
    beta : array_like, shape (K,)
    l : int
    rho : float
    """
    _check_rho(rho)
    h = np.asarray(h)
    beta = np.asarray(beta, dtype=float)
    if h.ndim != 2 or beta.shape != (h.shape[1],):
        raise ValueError(f"dimension mismatch: H {h.shape} vs beta {beta.shape}")
    if not (1 <= l <= h.shape[0]):
        raise DomainError(f"need 1 <= L <= N, got L={l}, N={h.shape[0]}")
    gains = np.abs(h) ** 2
    if l < gains.shape[0]:
        gains = -np.partition(-gains, l - 1, axis=0)[:l]
    # descending order statistics |h_(1)|^2 >= ... >= |h_(L)|^2, summed in that order
    top = -np.sort(-gains, axis=0, kind='stable')[:l]
    return float(np.sum(np.log2(1.0 + rho * beta * top.sum(axis=0))))
