"""Phase matrix, Hermitian adjacency and magnetic Laplacians of a signed digraph.

Every edge ``u -> v`` with sign ``s`` contributes ``exp(i*theta)`` to the
numerator of the phase entry ``(u, v)`` and its conjugate to ``(v, u)``, with
``theta = q`` for ``s = +1`` and ``pi + q`` for ``s = -1``. The phase entry is
the numerator divided by ``|numerator| + epsilon``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.io
import scipy.sparse as sp

from .graph import SignedDigraph
from .linalg import csr, hermitian_deviation, hermitian_eig, matmul

DENSE_CAP = 4096
PSD_TOL = 1e-9
CANCEL_TOL = 8 * np.finfo(float).eps


class SizeError(ValueError):
    pass


class Kind(str, Enum):
    UNNORMALIZED = "unnormalized"
    NORMALIZED = "normalized"
    RENORMALIZED = "renormalized"


@dataclass(frozen=True)
class PhaseParams:
    q: float = 0.1 * math.pi
    epsilon: float = 1e-12

    def __post_init__(self):
        if not (0.0 <= self.q <= math.pi / 2 + 1e-15):
            raise ValueError(f"q must lie in [0, pi/2], got {self.q}")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be positive")


@dataclass(frozen=True, eq=False)
class HermitianAdjacency:
    matrix: sp.csr_matrix
    params: PhaseParams
    sym_adjacency: sp.csr_matrix  # A_s, values in {0, 1/2, 1}
    sym_degree: np.ndarray  # diagonal of D_s
    phase: sp.csr_matrix

    @property
    def num_nodes(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class MagneticLaplacian:
    matrix: sp.csr_matrix
    kind: Kind
    params: PhaseParams


def _params(params) -> PhaseParams:
    if params is None:
        return PhaseParams()
    if isinstance(params, PhaseParams):
        return params
    return PhaseParams(q=float(params))


def _phase_parts(g: SignedDigraph, params: PhaseParams):
    """Phase matrix and symmetrized adjacency as canonical CSR matrices."""
    n = g.num_nodes
    e = g.edges
    u, v, s = e[:, 0], e[:, 1], e[:, 2]
    # exp(i(pi + q)) = -exp(iq); negating keeps opposite-sign pairs exactly cancelling
    fwd = np.where(s > 0, 1.0, -1.0) * np.exp(1j * params.q)
    rows = np.concatenate([u, v])
    cols = np.concatenate([v, u])
    numer = sp.coo_matrix((np.concatenate([fwd, fwd.conj()]), (rows, cols)), shape=(n, n)).tocsr()
    numer.sum_duplicates()
    numer.sort_indices()
    half = sp.coo_matrix((np.full(2 * len(e), 0.5), (rows, cols)), shape=(n, n)).tocsr()
    half.sum_duplicates()
    half.sort_indices()
    phase = numer.copy()
    mag = np.abs(numer.data)
    # two unit terms that cancel leave only rounding noise, which epsilon would inflate
    mag[mag < CANCEL_TOL] = 0.0
    phase.data = np.where(mag > 0, numer.data, 0) / (mag + params.epsilon)
    # both share the sparsity pattern of A + A^T
    return phase, half


def phase_matrix(g: SignedDigraph, params: PhaseParams | float | None = None) -> sp.csr_matrix:
    phase, _ = _phase_parts(g, _params(params))
    return csr(phase)


def hermitian_adjacency(g: SignedDigraph, params: PhaseParams | float | None = None) -> HermitianAdjacency:
    params = _params(params)
    phase, half = _phase_parts(g, params)
    h = phase.copy()
    h.data = phase.data * half.data
    degree = np.asarray(half.sum(axis=1)).ravel()
    return HermitianAdjacency(csr(h), params, csr(half), degree, csr(phase))


def _inv_sqrt(d: np.ndarray) -> np.ndarray:
    out = np.zeros_like(d, dtype=np.float64)
    pos = d > 0
    out[pos] = 1.0 / np.sqrt(d[pos])
    return out


def normalized_propagation(h: HermitianAdjacency, self_loops: bool = False) -> sp.csr_matrix:
    """``(D^-1/2 A D^-1/2) (.) P`` on A_s, or on ``A_s + I`` with phase 1 on the diagonal."""
    n = h.num_nodes
    adj = h.sym_adjacency
    deg = h.sym_degree
    phase = h.phase
    if self_loops:
        adj = csr(adj + sp.identity(n, dtype=np.complex128, format="csr"))
        phase = csr(phase + sp.identity(n, dtype=np.complex128, format="csr"))
        deg = deg + 1.0
    scale = _inv_sqrt(deg)
    coo = adj.tocoo()
    vals = coo.data.real * scale[coo.row] * scale[coo.col]
    prop = sp.csr_matrix((vals.astype(np.complex128), (coo.row, coo.col)), shape=(n, n))
    prop.sort_indices()
    return csr(prop.multiply(phase))


def magnetic_laplacian(h: HermitianAdjacency, kind: Kind | str = Kind.NORMALIZED) -> MagneticLaplacian:
    """Unnormalized ``D_s - H``, normalized ``I - (D_s^-1/2 A_s D_s^-1/2) (.) P`` or
    the renormalized propagation operator of the convolution layer.

    Nodes with zero degree get a unit diagonal in the normalized form.
    """
    kind = Kind(kind)
    n = h.num_nodes
    if kind is Kind.UNNORMALIZED:
        m = sp.diags(h.sym_degree.astype(np.complex128), format="csr") - h.matrix
    elif kind is Kind.NORMALIZED:
        m = sp.identity(n, dtype=np.complex128, format="csr") - normalized_propagation(h)
    else:
        m = normalized_propagation(h, self_loops=True)
    return MagneticLaplacian(csr(m), kind, h.params)


def laplacian(g: SignedDigraph, q: PhaseParams | float | None = None, kind: Kind | str = Kind.NORMALIZED) -> MagneticLaplacian:
    return magnetic_laplacian(hermitian_adjacency(g, q), kind)


@dataclass
class PsdReport:
    n: int
    q: float
    kind: str
    min_eig: float | None
    max_eig: float | None
    hermitian_dev: float
    passed: bool

    def to_dict(self) -> dict:
        return {"n": self.n, "q": self.q, "kind": self.kind, "min_eig": self.min_eig,
                "max_eig": self.max_eig, "hermitian_dev": self.hermitian_dev, "pass": self.passed}


def verify_psd(lap: MagneticLaplacian, cap: int = DENSE_CAP, tol: float = PSD_TOL,
               hermitian_tol: float = 1e-12) -> PsdReport:
    """Check positive semi-definiteness (and the [0, 2] bound for the normalized kind).

    A non-Hermitian matrix fails outright; its eigenvalue range is still
    reported for the Hermitian part.
    """
    m = lap.matrix
    n = m.shape[0]
    if n > cap:
        raise SizeError(f"{n} nodes exceeds the dense cap of {cap}; verify on sampled induced subgraphs instead")
    dev = hermitian_deviation(m)
    dense = m.toarray()
    herm = dev <= hermitian_tol
    if not herm:
        dense = 0.5 * (dense + dense.conj().T)
    if n:
        w = hermitian_eig(dense).eigenvalues
        lo, hi = float(w[0]), float(w[-1])
    else:
        lo = hi = None
    ok = herm and (lo is None or lo >= -tol)
    if ok and lap.kind is Kind.NORMALIZED and hi is not None:
        ok = hi <= 2.0 + tol
    return PsdReport(n, lap.params.q, lap.kind.value, lo, hi, dev, bool(ok))


def fourier_transform(u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Graph Fourier coefficients ``U^H x`` for an eigenvector matrix ``u``."""
    if u.shape[0] != np.shape(x)[0]:
        raise ValueError(f"signal length {np.shape(x)[0]} does not match {u.shape[0]} nodes")
    return u.conj().T @ np.asarray(x, dtype=np.complex128)


def inverse_fourier_transform(u: np.ndarray, xhat: np.ndarray) -> np.ndarray:
    if u.shape[1] != np.shape(xhat)[0]:
        raise ValueError(f"coefficient length {np.shape(xhat)[0]} does not match {u.shape[1]} modes")
    return u @ np.asarray(xhat, dtype=np.complex128)


def estimate_lambda_max(m: sp.csr_matrix, steps: int = 30, rtol: float = 1e-6, seed: int = 0) -> float:
    """Largest eigenvalue of a PSD Hermitian matrix by power iteration."""
    n = m.shape[0]
    if n == 0 or m.nnz == 0:
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(n) + 0j
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(steps):
        y = m @ x
        new = float(np.real(np.vdot(x, y)))
        norm = np.linalg.norm(y)
        if norm == 0:
            return 0.0
        x = y / norm
        if lam and abs(new - lam) <= rtol * abs(new):
            lam = new
            break
        lam = new
    return lam


def chebyshev_filter(lap: MagneticLaplacian, coeffs, x: np.ndarray, lambda_max: float | None = None) -> np.ndarray:
    """``sum_k coeffs[k] T_k(L~) x`` with ``L~ = (2 / lambda_max) L - I``.

    The polynomials are applied through the three-term recurrence with sparse
    products only. ``lambda_max`` defaults to 2 for the normalized kind and to
    a power-iteration estimate otherwise.
    """
    coeffs = list(coeffs)
    if len(coeffs) == 0:
        raise ValueError("need at least one coefficient (K >= 0)")
    if lambda_max is None:
        lambda_max = 2.0 if lap.kind is Kind.NORMALIZED else estimate_lambda_max(lap.matrix)
    n = lap.matrix.shape[0]
    scaled = csr((2.0 / lambda_max) * lap.matrix - sp.identity(n, dtype=np.complex128, format="csr"))
    x = np.asarray(x, dtype=np.complex128)
    t_prev = x
    out = coeffs[0] * t_prev
    if len(coeffs) == 1:
        return out
    t_cur = matmul(scaled, x)
    out = out + coeffs[1] * t_cur
    for c in coeffs[2:]:
        t_prev, t_cur = t_cur, 2.0 * matmul(scaled, t_cur) - t_prev
        out = out + c * t_cur
    return out


def export_matrix_market(m: sp.spmatrix, path, comment: str = "") -> None:
    scipy.io.mmwrite(str(path), sp.coo_matrix(m), comment=comment, field="complex")
