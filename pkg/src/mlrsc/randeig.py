"""Randomized block Krylov eigensolver and a dense oracle.

The basis spans ``{M Om, M^3 Om, ..., M^(2q+1) Om}`` for a random test
block ``Om``. Blocks are built one at a time as ``M^2`` times the previous
orthonormal block and re-orthogonalized against everything accumulated so
far; numerically dependent columns are dropped instead of kept as noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, TextIO

import numpy as np
import scipy.linalg as sla

from .errors import CapacityError, RankDeficiencyError, ValidationError

__all__ = [
    "KrylovConfig",
    "Embedding",
    "DenseOperator",
    "default_q",
    "draw_test_matrix",
    "krylov_basis",
    "rayleigh_ritz",
    "randomized_eigs",
    "dense_top_eigs",
    "select_k_by_eigengap",
    "write_embedding",
    "read_embedding",
]

DROP_TOL = 1e-10
DENSE_EIG_MAX_N = 2000


def default_q(n: int) -> int:
    return max(1, math.ceil(math.log2(max(n, 2))))


@dataclass(frozen=True)
class KrylovConfig:
    K: int
    q: Optional[int] = None
    seed: int = 0
    test_distribution: str = "gaussian"

    def __post_init__(self):
        if self.K < 1:
            raise ValidationError("K must be >= 1")
        if self.q is not None and self.q < 0:
            raise ValidationError("q must be >= 0")
        if self.test_distribution not in ("gaussian", "rademacher"):
            raise ValidationError(f"unknown test distribution {self.test_distribution!r}")

    def resolved_q(self, n: int) -> int:
        return default_q(n) if self.q is None else self.q


@dataclass(frozen=True)
class Embedding:
    """Orthonormal ``n x K`` eigenvector estimate and its Ritz values (descending)."""

    vectors: np.ndarray
    values: np.ndarray

    @property
    def K(self) -> int:
        return self.vectors.shape[1]


class DenseOperator:
    """Present a dense symmetric matrix through the ``op @ X`` interface."""

    def __init__(self, matrix):
        self.matrix = np.asarray(matrix, dtype=np.float64)
        self.shape = self.matrix.shape

    def __matmul__(self, X):
        return self.matrix @ X


def draw_test_matrix(n: int, K: int, distribution: str = "gaussian",
                     seed: int = 0) -> np.ndarray:
    if K > n:
        raise ValidationError(f"test matrix needs K <= n, got K={K}, n={n}")
    rng = np.random.default_rng(seed)
    if distribution == "gaussian":
        return rng.standard_normal((n, K))
    if distribution == "rademacher":
        return rng.choice(np.array([-1.0, 1.0]), size=(n, K))
    raise ValidationError(f"unknown test distribution {distribution!r}")


def _orthonormalize_against(Q, W, ref_norm):
    """Project ``W`` off ``Q`` twice, then return an orthonormal basis of what is left.

    Columns whose pivoted-QR diagonal falls below ``DROP_TOL * ref_norm``
    are treated as dependent and dropped.
    """
    for _ in range(2):
        if Q.shape[1]:
            W = W - Q @ (Q.T @ W)
    if W.shape[1] == 0 or ref_norm == 0:
        return W[:, :0]
    Qw, R, _ = sla.qr(W, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > DROP_TOL * ref_norm))
    Qw = Qw[:, :rank]
    # one more pass keeps the new block orthogonal to Q at round-off level
    if Q.shape[1] and rank:
        Qw = Qw - Q @ (Q.T @ Qw)
        Qw, _ = np.linalg.qr(Qw)
    return Qw


def krylov_basis(op, cfg: KrylovConfig, omega: Optional[np.ndarray] = None) -> np.ndarray:
    """Orthonormal basis of the odd-power block Krylov subspace of ``op``.

    Returns an ``n x m`` matrix with ``m <= (q + 1) K``; ``m`` is smaller
    when blocks become numerically dependent.
    """
    n = op.shape[0]
    if op.shape[0] != op.shape[1]:
        raise ValidationError(f"operator must be square, got {op.shape}")
    q = cfg.resolved_q(n)
    if (q + 1) * cfg.K > n:
        raise ValidationError(f"(q+1)*K = {(q + 1) * cfg.K} exceeds n = {n}")
    if omega is None:
        omega = draw_test_matrix(n, cfg.K, cfg.test_distribution, cfg.seed)
    elif omega.shape[0] != n:
        raise ValidationError("test matrix row count does not match the operator")

    first = op @ omega
    Q = _orthonormalize_against(np.empty((n, 0)), first, np.linalg.norm(first))
    block = Q
    for _ in range(q):
        if block.shape[1] == 0:
            break
        W = op @ (op @ block)
        block = _orthonormalize_against(Q, W, np.linalg.norm(W))
        Q = np.hstack([Q, block])
    return Q


def _fix_signs(vectors):
    # largest-magnitude entry of each column made positive, for reproducibility
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def rayleigh_ritz(op, Q: np.ndarray, K: int) -> Embedding:
    """Top-``K`` (algebraic) Ritz pairs of ``op`` on the span of ``Q``."""
    if Q.shape[1] < K:
        raise RankDeficiencyError(
            f"Krylov basis has {Q.shape[1]} columns, fewer than K={K}; "
            "lower K or q for this operator"
        )
    C = Q.T @ (op @ Q)
    C = (C + C.T) / 2
    vals, vecs = np.linalg.eigh(C)
    order = np.argsort(vals)[::-1][:K]
    U = Q @ vecs[:, order]
    return Embedding(_fix_signs(U), vals[order])


def randomized_eigs(op, cfg: KrylovConfig) -> Embedding:
    return rayleigh_ritz(op, krylov_basis(op, cfg), cfg.K)


def dense_top_eigs(matrix, K: int) -> Embedding:
    """Top-``K`` eigenpairs (by algebraic value) of a dense symmetric matrix."""
    A = np.asarray(matrix, dtype=np.float64)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ValidationError("matrix must be square")
    if n > DENSE_EIG_MAX_N:
        raise CapacityError(f"dense eigensolver guard: n={n} > {DENSE_EIG_MAX_N}")
    if not 1 <= K <= n:
        raise ValidationError(f"need 1 <= K <= n, got K={K}")
    scale = max(1.0, np.abs(A).max()) if A.size else 1.0
    if np.abs(A - A.T).max() > 1e-8 * scale:
        raise ValidationError("matrix is not symmetric within 1e-8")
    A = (A + A.T) / 2
    vals, vecs = sla.eigh(A, subset_by_index=[n - K, n - 1])
    return Embedding(_fix_signs(vecs[:, ::-1]), vals[::-1])


def select_k_by_eigengap(values, max_k: Optional[int] = None, eps: float = 1e-12) -> int:
    """Suggest a cluster count from the largest ratio of consecutive |eigenvalues|."""
    vals = np.abs(np.asarray(values, dtype=float))
    if vals.size < 2:
        raise ValidationError("need at least two eigenvalues")
    vals = -np.sort(-vals)
    hi = vals.size if max_k is None else min(max_k, vals.size)
    ratios = vals[: hi - 1] / (vals[1:hi] + eps)
    return int(np.argmax(ratios)) + 1


def write_embedding(emb: Embedding, stream: TextIO):
    stream.write("# ritz " + " ".join(repr(float(v)) for v in emb.values) + "\n")
    np.savetxt(stream, emb.vectors, fmt="%.17g")


def read_embedding(stream: TextIO) -> Embedding:
    header = stream.readline().split()
    if header[:2] != ["#", "ritz"]:
        raise ValidationError("embedding file must start with '# ritz'")
    values = np.array([float(v) for v in header[2:]])
    vectors = np.loadtxt(stream, ndmin=2)
    return Embedding(vectors.reshape(-1, values.size), values)
