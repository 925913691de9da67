"""Block Lanczos with full reorthogonalisation for the lowest eigenpairs of a sparse Hermitian matrix.

A block of ``p`` start vectors resolves eigenvalues of multiplicity up to ``p``;
single-vector Lanczos sees only one vector per exactly degenerate eigenspace,
which matters on symmetric tori. Full reorthogonalisation keeps the basis
orthonormal so no spurious copies appear. When the basis reaches its size
limit the iteration restarts from the current lowest Ritz vectors.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from ..errors import LanczosError, ParameterError

log = logging.getLogger(__name__)


@dataclass
class EDResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    residuals: np.ndarray
    iterations: int
    dimension: int
    degeneracy: object = None  # DegeneracyInfo, filled in by callers that cluster the spectrum

    @property
    def gap(self):
        return None if self.degeneracy is None else self.degeneracy.gap

    @property
    def lambda_order(self):
        return None if self.degeneracy is None else self.degeneracy.lambda_order


def _as_operator(ham):
    mat = getattr(ham, "matrix", ham)
    return mat


def _norm_bound(mat) -> float:
    if hasattr(mat, "tocsr"):
        return float(np.max(np.asarray(abs(mat).sum(axis=1)))) if mat.shape[0] else 0.0
    return float(np.max(np.sum(np.abs(mat), axis=1)))


def _expand(W, Q, drop_tol):
    """Orthonormalise W against Q (two passes) and itself, dropping null directions."""
    for _ in range(2):
        if Q.shape[1]:
            W = W - Q @ (Q.conj().T @ W)
    if W.shape[1] == 0:
        return W
    V, B, piv = la.qr(W, mode="economic", pivoting=True)
    rank = int(np.sum(np.abs(np.diag(B)) > drop_tol))
    V = V[:, :rank]
    # one more pass: QR of a nearly dependent block leaves O(eps/drop_tol) overlap
    if Q.shape[1] and rank:
        V = V - Q @ (Q.conj().T @ V)
        V, _ = la.qr(V, mode="economic")
    return V


def _random_block(rng, n, p):
    return rng.standard_normal((n, p)) + 1j * rng.standard_normal((n, p))


def lanczos_lowest(ham, k: int = 13, *, tol: float = 1e-10, block_size: int = 4,
                   max_basis: int | None = None, max_restarts: int = 50, seed: int = 12345,
                   return_vectors: bool = True, start=None) -> EDResult:
    """Lowest ``k`` eigenpairs of a Hermitian operator.

    Converged when every wanted Ritz pair has residual ||H v - theta v|| below
    ``tol * ||H||`` (row-sum bound). The Rayleigh-Ritz matrix is formed from
    the stored products H Q rather than from the three-term recurrence, so
    the residuals are exact even when the new Lanczos block becomes tiny.
    ``start`` optionally seeds the first block with known vectors (e.g. the
    previous point of a parameter scan); remaining columns come from a
    generator seeded with ``seed``.
    """
    mat = _as_operator(ham)
    n = mat.shape[0]
    if k < 1:
        raise ParameterError("k must be positive")
    if k > n:
        raise ParameterError(f"asked for {k} eigenpairs of a {n}-dimensional matrix")
    rng = np.random.default_rng(seed)
    hnorm = max(_norm_bound(mat), 1e-300)
    p = max(1, min(block_size, n))
    if max_basis is None:
        max_basis = max(8 * k + 12 * p, 120)
    max_basis = min(max_basis, n)

    if n <= max(4 * p, 64, k + 2 * p):
        dense = mat.toarray() if hasattr(mat, "toarray") else np.asarray(mat)
        w, v = la.eigh(dense, subset_by_index=[0, k - 1])
        res = np.linalg.norm(dense @ v - v * w, axis=0)
        return EDResult(w, v if return_vectors else None, res, 0, n)

    block = _random_block(rng, n, p)
    if start is not None:
        start = np.asarray(start, dtype=complex).reshape(n, -1)
        m = min(start.shape[1], p)
        block[:, :m] = start[:, :m]
    cur = _expand(block, np.zeros((n, 0), complex), 1e-14)
    Q = np.zeros((n, 0), complex)
    HQ = np.zeros((n, 0), complex)
    T = np.zeros((0, 0), complex)
    matvecs = 0
    res = np.full(k, np.inf)

    for restart in range(max_restarts + 1):
        while True:
            Hcur = np.asarray(mat @ cur)
            matvecs += cur.shape[1]
            # grow the projected matrix by the new block row/column
            cross = Q.conj().T @ Hcur
            diag = cur.conj().T @ Hcur
            diag = 0.5 * (diag + diag.conj().T)
            m0 = T.shape[0]
            Tn = np.zeros((m0 + cur.shape[1],) * 2, complex)
            Tn[:m0, :m0] = T
            Tn[:m0, m0:] = cross
            Tn[m0:, :m0] = cross.conj().T
            Tn[m0:, m0:] = diag
            T = Tn
            Q = np.hstack([Q, cur])
            HQ = np.hstack([HQ, Hcur])

            theta, S = la.eigh(T)
            want = min(k, theta.size)
            Y = Q @ S[:, :want]
            R = HQ @ S[:, :want] - Y * theta[:want]
            res = np.linalg.norm(R, axis=0)
            if want == k and np.all(res < tol * hnorm):
                vecs = Y
                log.debug("lanczos converged: dim=%d basis=%d restarts=%d", n, Q.shape[1], restart)
                return EDResult(theta[:k], vecs if return_vectors else None, res, matvecs, n)
            if Q.shape[1] >= n:
                raise LanczosError("Krylov space exhausted without convergence", residuals=res)

            nxt = _expand(Hcur, Q, 1e-10 * hnorm)
            if nxt.shape[1] == 0:
                # invariant subspace: continue with fresh directions
                nxt = _expand(_random_block(rng, n, p), Q, 1e-10)
            room = min(max_basis, n) - Q.shape[1]
            if room <= 0:
                break
            cur = nxt[:, :room]

        # thick restart: keep the lowest Ritz pairs and their images under H
        keep = min(k + p, S.shape[1])
        Q = Q @ S[:, :keep]
        HQ = HQ @ S[:, :keep]
        T = np.diag(theta[:keep]).astype(complex)
        active = np.argsort(-res)[:p] if want == k else np.arange(min(p, want))
        R = HQ[:, :want] - Q[:, :want] * theta[:want]
        cur = _expand(R[:, active], Q, 1e-14 * hnorm)
        if cur.shape[1] == 0:
            cur = _expand(_random_block(rng, n, p), Q, 1e-10)
        log.debug("lanczos restart %d, worst residual %.2e", restart, float(np.max(res)))
    raise LanczosError(f"Lanczos did not converge after {max_restarts} restarts",
                       residuals=res)


def dense_lowest(ham, k: int | None = None) -> np.ndarray:
    """Reference eigenvalues by dense diagonalisation."""
    mat = _as_operator(ham)
    dense = mat.toarray() if hasattr(mat, "toarray") else np.asarray(mat)
    if k is None:
        return la.eigvalsh(dense)
    return la.eigh(dense, eigvals_only=True, subset_by_index=[0, k - 1])
