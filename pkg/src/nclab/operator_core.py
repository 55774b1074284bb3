"""Matrix arithmetic, Hermitian spectral calculus, singular values and ideal norms.

Operators are plain ``numpy`` arrays or ``scipy.sparse`` matrices.  Large
truncated models are sparse and block diagonal (per mode) or banded, so the
spectral routines detect that structure and never densify a large matrix.
"""
from __future__ import annotations

from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

HERMITIAN_RTOL = 1e-12
DENSE_LIMIT = 3000


class StructuralError(ValueError):
    """Shape or dimension mismatch."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class NumericFailure(RuntimeError):
    """A spectral computation could not be carried out."""


# -- basic plumbing ---------------------------------------------------------

def is_sparse(A) -> bool:
    return sp.issparse(A)


def dim(A) -> int:
    return A.shape[0]


def check_square(A) -> None:
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise StructuralError(f"expected a square matrix, got shape {A.shape}")


def check_finite(A) -> None:
    data = A.data if is_sparse(A) else A
    if not np.all(np.isfinite(data)):
        raise DomainError("operator has non-finite entries")


def as_operator(A):
    """Normalize input to a complex CSR matrix or a complex ndarray."""
    if is_sparse(A):
        A = sp.csr_matrix(A, dtype=complex)
    else:
        A = np.asarray(A, dtype=complex)
        if A.ndim == 1:
            A = np.diag(A)
    check_square(A)
    check_finite(A)
    return A


def to_dense(A) -> np.ndarray:
    return A.toarray() if is_sparse(A) else np.asarray(A)


def identity_like(A):
    n = dim(A)
    return sp.identity(n, dtype=complex, format="csr") if is_sparse(A) else np.eye(n, dtype=complex)


def adjoint(A):
    return A.conj().T.tocsr() if is_sparse(A) else A.conj().T


def max_abs(A) -> float:
    if is_sparse(A):
        return float(np.abs(A.data).max()) if A.nnz else 0.0
    return float(np.abs(A).max()) if A.size else 0.0


def trace(A) -> complex:
    return complex(A.diagonal().sum())


def is_hermitian(A, rtol: float = HERMITIAN_RTOL) -> bool:
    scale = max_abs(A)
    return max_abs(A - adjoint(A)) <= rtol * max(scale, 1.0)


def hermitian_part(A):
    return (A + adjoint(A)) / 2


def _check_same_dim(A, B) -> None:
    check_square(A)
    check_square(B)
    if A.shape != B.shape:
        raise StructuralError(f"dimension mismatch {A.shape} vs {B.shape}")


def commutator(A, B):
    """[A, B] = AB - BA."""
    _check_same_dim(A, B)
    return A @ B - B @ A


def anticommutator(A, B):
    """{A, B} = AB + BA."""
    _check_same_dim(A, B)
    return A @ B + B @ A


# -- structure detection ----------------------------------------------------

def block_size(A, candidates=(1, 2, 4, 8, 16)) -> int | None:
    """Smallest aligned block size for which a sparse ``A`` is block diagonal."""
    if not is_sparse(A):
        return None
    coo = A.tocoo()
    n = A.shape[0]
    for s in candidates:
        if n % s:
            continue
        if coo.nnz == 0 or np.all(coo.row // s == coo.col // s):
            return s
    return None


def bandwidth(A) -> int:
    coo = sp.coo_matrix(A)
    if coo.nnz == 0:
        return 0
    return int(np.abs(coo.row - coo.col).max())


def diagonal_blocks(A, s: int) -> np.ndarray:
    """Stack of the aligned s x s diagonal blocks of a sparse matrix."""
    n = A.shape[0]
    coo = A.tocoo()
    blocks = np.zeros((n // s, s, s), dtype=complex)
    np.add.at(blocks, (coo.row // s, coo.row % s, coo.col % s), coo.data)
    return blocks


def from_blocks(blocks: np.ndarray):
    """Inverse of :func:`diagonal_blocks`."""
    nb, s, _ = blocks.shape
    base = np.arange(nb)[:, None, None] * s
    rows = np.broadcast_to(base + np.arange(s)[None, :, None], blocks.shape)
    cols = np.broadcast_to(base + np.arange(s)[None, None, :], blocks.shape)
    keep = blocks != 0
    return sp.csr_matrix((blocks[keep], (rows[keep], cols[keep])), shape=(nb * s, nb * s))


def _banded_lower(H, bw: int) -> np.ndarray:
    n = H.shape[0]
    coo = sp.coo_matrix(H)
    low = coo.row >= coo.col
    ab = np.zeros((bw + 1, n), dtype=complex)
    ab[coo.row[low] - coo.col[low], coo.col[low]] = coo.data[low]
    return ab


# -- spectra ----------------------------------------------------------------

def eigvalsh(H) -> np.ndarray:
    """Eigenvalues (ascending) of a Hermitian operator, structure aware."""
    check_square(H)
    if not is_sparse(H):
        return np.linalg.eigvalsh(hermitian_part(H))
    H = hermitian_part(sp.csr_matrix(H))
    s = block_size(H)
    if s is not None:
        return np.sort(np.linalg.eigvalsh(diagonal_blocks(H, s)).ravel())
    n = H.shape[0]
    if n <= DENSE_LIMIT:
        return np.linalg.eigvalsh(H.toarray())
    bw = bandwidth(H)
    if bw * n > 4e7:
        raise NumericFailure(f"bandwidth {bw} too large for a banded solve at dim {n}")
    try:
        return sla.eig_banded(_banded_lower(H, bw), lower=True, eigvals_only=True)
    except np.linalg.LinAlgError as exc:
        raise NumericFailure(str(exc)) from exc


def mu(T) -> np.ndarray:
    """Singular values sorted non-increasing: the step function mu_t = mu[floor(t)]."""
    check_square(T)
    if not is_sparse(T):
        try:
            return np.linalg.svd(np.asarray(T), compute_uv=False)
        except np.linalg.LinAlgError as exc:
            raise NumericFailure(str(exc)) from exc
    T = sp.csr_matrix(T)
    s = block_size(T)
    if s is not None:
        return np.sort(np.linalg.svd(diagonal_blocks(T, s), compute_uv=False).ravel())[::-1]
    gram = (adjoint(T) @ T).tocsr()
    if block_size(gram) is None and T.shape[0] <= DENSE_LIMIT:
        vals = np.linalg.svd(T.toarray(), compute_uv=False)
    else:
        # shifts: T*T is block diagonal even when T is not
        vals = np.sqrt(np.clip(eigvalsh(gram), 0.0, None))
    return np.sort(vals)[::-1]


def opnorm(T) -> float:
    """Operator norm (largest singular value)."""
    if dim(T) == 0:
        return 0.0
    return float(mu(T)[0])


def apply_function(T, f: Callable[[np.ndarray], np.ndarray]):
    """U f(Lambda) U* for Hermitian T; sparse block-diagonal input stays sparse."""
    check_square(T)
    if not is_hermitian(T):
        raise DomainError("apply_function requires a Hermitian operator")
    if is_sparse(T):
        s = block_size(T)
        if s is None:
            if T.shape[0] > DENSE_LIMIT:
                raise NumericFailure("functional calculus needs block-diagonal structure at this size")
            return sp.csr_matrix(apply_function(T.toarray(), f))
        blocks = diagonal_blocks(hermitian_part(T), s)
        w, V = np.linalg.eigh(blocks)
        fw = np.asarray(f(w))
        out = np.einsum("bij,bj,bkj->bik", V, fw, V.conj())
        return from_blocks(out).tocsr()
    w, V = np.linalg.eigh(hermitian_part(np.asarray(T)))
    return (V * np.asarray(f(w))) @ V.conj().T


# -- ideal norms ------------------------------------------------------------

def _values(T) -> np.ndarray:
    """Accept an operator or an already computed singular value vector."""
    if isinstance(T, np.ndarray) and T.ndim == 1:
        return np.sort(np.abs(T))[::-1]
    return mu(T)


def _check_p(p: float) -> None:
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")


def schatten_norm(T, p: float) -> float:
    """(sum mu_k^p)^(1/p)."""
    _check_p(p)
    m = _values(T)
    if m.size == 0 or m[0] == 0:
        return 0.0
    return float(m[0] * np.sum((m / m[0]) ** p) ** (1.0 / p))


def psi_p(t, p: float):
    """t for t <= 1 and t^(1-1/p) for t >= 1."""
    t = np.asarray(t, dtype=float)
    return np.where(t <= 1, t, np.power(np.maximum(t, 1.0), 1 - 1.0 / p))


def weak_weight(t, p: float):
    """log(1+t) for p = 1, psi_p(t) otherwise."""
    return np.log1p(t) if p == 1 else psi_p(t, p)


def partial_integrals(values: np.ndarray) -> np.ndarray:
    """S_k = int_0^k mu_s ds for k = 0..len(values)."""
    return np.concatenate([[0.0], np.cumsum(values)])


def norm_p_infty(T, p: float, iters: int = 80) -> float:
    """sup_t (1/w(t)) int_0^t mu_s ds, with w = log(1+t) (p=1) or psi_p (p>1).

    The integral is linear on each unit segment; the sup on every segment is
    located by a vectorised golden-section search.
    """
    _check_p(p)
    m = _values(T)
    if m.size == 0 or m[0] == 0:
        return 0.0
    S = partial_integrals(m)
    k = np.arange(m.size, dtype=float)

    def ratio(s):
        t = k + s
        with np.errstate(divide="ignore", invalid="ignore"):
            r = (S[:-1] + m * s) / weak_weight(t, p)
        return np.where(t > 0, r, m if p > 1 else 0.0)

    lo = np.zeros_like(k)
    hi = np.ones_like(k)
    g = (np.sqrt(5) - 1) / 2
    for _ in range(iters):
        a = hi - g * (hi - lo)
        b = lo + g * (hi - lo)
        left = ratio(a) >= ratio(b)
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
    best = max(ratio((lo + hi) / 2).max(), ratio(np.ones_like(k)).max())
    if p > 1:
        best = max(best, float(m[0]))  # t <= 1 plateau: mu_0 t / t
    return float(best)


def norm_p1(T, p: float) -> float:
    """sum_k mu_k (k^(1/p) - (k-1)^(1/p)), k = 1, 2, ..."""
    _check_p(p)
    m = _values(T)
    k = np.arange(1, m.size + 1, dtype=float)
    return float(np.sum(m * (k ** (1 / p) - (k - 1) ** (1 / p))))


def submajorized(T1, T2, tol: float = 1e-12) -> bool:
    """Partial sums of mu(T1) dominated by those of mu(T2) at every k."""
    m1, m2 = _values(T1), _values(T2)
    if m1.size != m2.size:
        raise StructuralError("submajorization needs operators of equal dimension")
    return bool(np.all(np.cumsum(m1) <= np.cumsum(m2) + tol))
