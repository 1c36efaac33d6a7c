"""Complex dense/sparse matrix helpers and a Hermitian eigensolver.

Dense matrices are plain ``complex128`` numpy arrays. Sparse matrices are
``scipy.sparse.csr_matrix`` instances kept in canonical form (sorted column
indices, no duplicates, no explicitly stored zeros).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

HERMITIAN_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-7


class DimensionError(ValueError):
    pass


class SymmetryError(ValueError):
    def __init__(self, deviation: float, tol: float):
        super().__init__(f"matrix is not Hermitian: max deviation {deviation:.3e} > {tol:.1e}")
        self.deviation = deviation


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues in ascending order and the matching unit eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T


def as_complex(m) -> np.ndarray:
    """Dense complex128 copy of ``m`` (dense array or sparse matrix)."""
    if sp.issparse(m):
        return m.toarray().astype(np.complex128)
    return np.asarray(m, dtype=np.complex128)


def csr(m, shape=None) -> sp.csr_matrix:
    """Canonical complex CSR matrix from a dense array, sparse matrix or COO triple."""
    if isinstance(m, tuple):
        out = sp.csr_matrix(m, shape=shape, dtype=np.complex128)
    elif sp.issparse(m):
        out = sp.csr_matrix(m, dtype=np.complex128, copy=True)
    else:
        out = sp.csr_matrix(np.asarray(m, dtype=np.complex128))
    out.sum_duplicates()
    out.sort_indices()
    out.eliminate_zeros()
    return out


def check_csr(m: sp.csr_matrix) -> None:
    """Raise ``ValueError`` if ``m`` violates the canonical CSR layout."""
    offsets, cols = m.indptr, m.indices
    if offsets[0] != 0 or offsets[-1] != m.nnz or np.any(np.diff(offsets) < 0):
        raise ValueError("row offsets are not monotone or do not end at nnz")
    for i in range(m.shape[0]):
        row = cols[offsets[i]:offsets[i + 1]]
        if np.any(np.diff(row) <= 0):
            raise ValueError(f"column indices not strictly increasing in row {i}")
    if np.any(m.data == 0):
        raise ValueError("explicit zero stored")


def conj_transpose(m):
    if sp.issparse(m):
        return csr(m.conj().T)
    return np.asarray(m).conj().T


def _accumulate(out: np.ndarray, rows: np.ndarray, coef: np.ndarray, rhs: np.ndarray) -> None:
    """``out[rows] += coef[:, None] * rhs`` spelled out in real arithmetic.

    numpy's complex multiply may round differently between its vectorized
    and strided loops; separate real multiplies and adds do not.
    """
    ar = coef.real[:, None]
    ai = coef.imag[:, None]
    out.real[rows] += ar * rhs.real - ai * rhs.imag
    out.imag[rows] += ar * rhs.imag + ai * rhs.real


def matmul(a, b) -> np.ndarray:
    """Complex product ``a @ b`` with a fixed per-row summation order.

    Each output row accumulates the terms ``a[i, k] * b[k]`` in increasing
    ``k``. The CSR path visits stored entries in the same order (column
    indices are sorted), so sparse and densified inputs give equal results.
    """
    b = np.asarray(b, dtype=np.complex128)
    squeeze = b.ndim == 1
    if squeeze:
        b = b[:, None]
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    if sp.issparse(a):
        a = csr(a)
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.complex128)
        counts = np.diff(a.indptr)
        rows = np.repeat(np.arange(a.shape[0]), counts)
        pos = np.arange(a.nnz) - np.repeat(a.indptr[:-1], counts)
        # step p adds the p-th stored term of every row; rows are distinct within a step
        for p in range(int(counts.max(initial=0))):
            sel = pos == p
            _accumulate(out, rows[sel], a.data[sel], b[a.indices[sel]])
    else:
        a = np.asarray(a, dtype=np.complex128)
        out = np.zeros((a.shape[0], b.shape[1]), dtype=np.complex128)
        for k in range(a.shape[1]):
            col = a[:, k]
            nz = np.flatnonzero(col != 0)
            if len(nz):
                _accumulate(out, nz, col[nz], b[k][None, :])
    return out[:, 0] if squeeze else out


def hermitian_deviation(m) -> float:
    """max |m(u,v) - conj(m(v,u))|."""
    if sp.issparse(m):
        diff = m - m.conj().T
        return float(np.abs(diff.data).max()) if diff.nnz else 0.0
    m = np.asarray(m)
    if m.size == 0:
        return 0.0
    return float(np.abs(m - m.conj().T).max())


def real_embedding(m: np.ndarray) -> np.ndarray:
    """Real symmetric ``[[Re, -Im], [Im, Re]]`` block form of a Hermitian matrix."""
    re, im = m.real, m.imag
    return np.block([[re, -im], [im, re]])


def hermitian_eig(m, tol: float = HERMITIAN_TOL, method: str = "lapack") -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian matrix through its real symmetric embedding.

    The 2N x 2N embedding has every eigenvalue of ``m`` twice; for each
    eigenvalue cluster the embedded eigenvectors ``[a; b]`` are mapped back to
    ``a + ib`` and an orthonormal basis of their complex span is extracted.

    Args:
        m: square Hermitian matrix, dense or sparse.
        tol: Hermitian check tolerance.
        method: ``"lapack"`` solves the real symmetric problem with
            ``numpy.linalg.eigh``; ``"jacobi"`` uses the cyclic Jacobi solver
            below (slow, meant for small cross-checks).
    """
    m = as_complex(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    dev = hermitian_deviation(m)
    if dev > tol:
        raise SymmetryError(dev, tol)
    n = m.shape[0]
    if n == 0:
        return SpectralDecomposition(np.zeros(0), np.zeros((0, 0), dtype=np.complex128))
    m = 0.5 * (m + m.conj().T)
    emb = real_embedding(m)
    if method == "lapack":
        w, v = np.linalg.eigh(emb)
    elif method == "jacobi":
        w, v = jacobi_eigh(emb)
    else:
        raise ValueError(f"unknown method {method!r}")

    scale = max(float(np.abs(m).max()), 1.0)
    gap = 1e-9 * scale
    vals = np.empty(n)
    vecs = np.empty((n, n), dtype=np.complex128)
    filled = 0
    start = 0
    while start < 2 * n:
        stop = start + 1
        while stop < 2 * n and w[stop] - w[stop - 1] <= gap:
            stop += 1
        k = (stop - start) // 2
        if k:
            cand = v[:n, start:stop] + 1j * v[n:, start:stop]
            left, _, _ = np.linalg.svd(cand, full_matrices=False)
            vecs[:, filled:filled + k] = left[:, :k]
            vals[filled:filled + k] = w[start:stop:2][:k]
            filled += k
        start = stop
    if filled != n:
        raise np.linalg.LinAlgError("eigenvalue pairs of the real embedding could not be matched")
    return SpectralDecomposition(vals, vecs)


def jacobi_eigh(a: np.ndarray, tol: float = 1e-14, max_sweeps: int = 100):
    """Cyclic Jacobi eigensolver for a real symmetric matrix.

    Returns eigenvalues ascending and orthonormal eigenvectors as columns.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    norm = np.linalg.norm(a)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * max(norm, 1e-300):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta != 0 else 1.0
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap, aq = a[:, p].copy(), a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                ap, aq = a[p, :].copy(), a[q, :].copy()
                a[p, :] = c * ap - s * aq
                a[q, :] = s * ap + c * aq
                vp, vq = v[:, p].copy(), v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]
