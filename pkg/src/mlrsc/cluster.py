"""k-means and the end-to-end clustering pipelines.

``rsc_pipeline`` runs sampling, the matrix-free debiased operator, block
Krylov Rayleigh-Ritz and k-means without ever forming an ``n x n`` matrix.
``sc_pipeline`` is the non-randomized baseline on the exact aggregate,
either through a dense eigensolver (``dense=True``, ``n <= 2000``) or the
same Krylov code at ``p = 1`` with a generous power parameter.
"""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, RankDeficiencyError, ValidationError
from .graph import MultiLayerNetwork
from .randeig import (
    Embedding,
    KrylovConfig,
    default_q,
    dense_top_eigs,
    draw_test_matrix,
    krylov_basis,
    rayleigh_ritz,
)
from .sbm import Membership
from .sketch import DENSE_MAX_N, SamplingConfig, build_operator, sparsify

__all__ = [
    "ClusterResult",
    "PipelineConfig",
    "PipelineResult",
    "CoClusterResult",
    "kmeans",
    "rsc_pipeline",
    "sc_pipeline",
    "rsc_coclustering",
    "sc_coclustering",
    "stage_seeds",
]

log = logging.getLogger(__name__)


@dataclass
class ClusterResult:
    labels: Membership
    centroids: np.ndarray
    inertia: float
    iterations: int
    inertia_history: list = field(default_factory=list, repr=False)


def _sq_dists(X, centers, x_sq):
    d = x_sq[:, None] - 2.0 * X @ centers.T + np.sum(centers**2, axis=1)[None, :]
    np.maximum(d, 0.0, out=d)
    return d


def _kmeanspp(X, K, rng, x_sq):
    n = X.shape[0]
    centers = np.empty((K, X.shape[1]))
    centers[0] = X[rng.integers(n)]
    closest = _sq_dists(X, centers[:1], x_sq)[:, 0]
    for k in range(1, K):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=closest / total)
        centers[k] = X[idx]
        closest = np.minimum(closest, _sq_dists(X, centers[k:k + 1], x_sq)[:, 0])
    return centers


def _lloyd(X, centers, max_iter, x_sq, debug):
    K = centers.shape[0]
    n = X.shape[0]
    d = _sq_dists(X, centers, x_sq)
    labels = np.argmin(d, axis=1)
    history = [float(d[np.arange(n), labels].sum())]
    it = 0
    for it in range(1, max_iter + 1):
        counts = np.bincount(labels, minlength=K)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, X)
        new_centers = centers.copy()
        nonempty = counts > 0
        new_centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        for k in np.flatnonzero(~nonempty):
            # reseed an empty cluster at the point farthest from its centroid
            own = np.sum((X - new_centers[labels]) ** 2, axis=1)
            far = int(np.argmax(own))
            new_centers[k] = X[far]
            labels[far] = k
        centers = new_centers
        d = _sq_dists(X, centers, x_sq)
        new_labels = np.argmin(d, axis=1)
        history.append(float(d[np.arange(n), new_labels].sum()))
        if debug and history[-1] > history[-2] * (1 + 1e-9) + 1e-12:
            raise AssertionError(f"k-means inertia increased at iteration {it}: {history[-2:]}")
        if np.array_equal(new_labels, labels):
            labels = new_labels
            break
        labels = new_labels
    return labels, centers, history, it


def kmeans(rows, K: int, seed: int = 0, restarts: int = 10, max_iter: int = 300,
           debug: bool = False) -> ClusterResult:
    """Lloyd's algorithm from k-means++ seeds, best of ``restarts`` by inertia.

    With ``debug`` every Lloyd step asserts that inertia did not increase.
    """
    X = np.asarray(rows, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not 1 <= K <= n:
        raise ValidationError(f"need 1 <= K <= n, got K={K}, n={n}")
    if restarts < 1 or max_iter < 1:
        raise ValidationError("restarts and max_iter must be >= 1")
    rng = np.random.default_rng(seed)
    x_sq = np.sum(X**2, axis=1)
    best = None
    for _ in range(restarts):
        centers = _kmeanspp(X, K, rng, x_sq)
        labels, centers, history, iters = _lloyd(X, centers, max_iter, x_sq, debug)
        inertia = float(np.sum((X - centers[labels]) ** 2))
        if best is None or inertia < best.inertia:
            best = ClusterResult(Membership(labels, K), centers, inertia, iters, history)
    return best


@dataclass(frozen=True)
class PipelineConfig:
    """Inputs to the pipelines.

    ``k`` is the community count (row communities for co-clustering) and
    ``k_col`` the column community count, defaulting to ``k``. ``q=None``
    means ``ceil(log2 n)``.
    """

    k: int
    p: float = 0.7
    q: Optional[int] = 4
    seed: int = 0
    kmeans_restarts: int = 10
    kmeans_max_iter: int = 300
    test_distribution: str = "gaussian"
    k_col: Optional[int] = None

    def __post_init__(self):
        if self.k < 1 or (self.k_col is not None and self.k_col < 1):
            raise ValidationError("cluster counts must be >= 1")
        if not 0 < self.p <= 1:
            raise ValidationError(f"p must be in (0, 1], got {self.p}")
        if self.kmeans_restarts < 1:
            raise ValidationError("kmeans_restarts must be >= 1")


class PipelineResult(NamedTuple):
    cluster: ClusterResult
    embedding: Embedding
    timings: dict


class CoClusterResult(NamedTuple):
    row: ClusterResult
    col: ClusterResult
    embeddings: tuple
    timings: dict


def stage_seeds(seed: int) -> dict:
    """Independent sub-seeds for each randomized stage of a pipeline."""
    children = np.random.SeedSequence(int(seed) & (2**64 - 1)).spawn(3)
    names = ("sample", "omega", "kmeans")
    return {name: int(c.generate_state(1, np.uint64)[0]) for name, c in zip(names, children)}


class _Timer:
    def __init__(self):
        self.timings = {}

    @contextmanager
    def stage(self, name):
        start = time.perf_counter()
        try:
            yield
        except Exception as exc:
            if not getattr(exc, "stage", None):
                exc.stage = name
            raise
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - start


def _complete_basis(Q, K, omega):
    # degenerate operators (e.g. an empty network) leave Q short; pad with
    # directions from the test block so the pipeline still returns labels
    n = Q.shape[0]
    rng = np.random.default_rng(0)
    extra = omega
    while Q.shape[1] < K:
        W = extra - Q @ (Q.T @ extra)
        Qw, R = np.linalg.qr(W)
        keep = np.abs(np.diag(R)) > 1e-12 * max(1.0, np.abs(W).max())
        Q = np.hstack([Q, Qw[:, keep][:, : K - Q.shape[1]]])
        extra = rng.standard_normal((n, K))
    return Q


def _eigen_stage(op, K, q, seed, dist, timer, prefix=""):
    cfg = KrylovConfig(K, q, seed, dist)
    omega = draw_test_matrix(op.shape[0], K, dist, seed)
    with timer.stage(prefix + "krylov"):
        Q = krylov_basis(op, cfg, omega)
        if Q.shape[1] < K:
            log.warning("Krylov basis has rank %d < K=%d; padding", Q.shape[1], K)
            Q = _complete_basis(Q, K, omega)
    with timer.stage(prefix + "rayleigh_ritz"):
        return rayleigh_ritz(op, Q, K)


def _clamp_q(n, K, q):
    # the basis cannot have more than n columns
    return max(0, min(q, n // K - 1))


def rsc_pipeline(network: MultiLayerNetwork, cfg: PipelineConfig) -> PipelineResult:
    """Randomized spectral clustering of an undirected multi-layer network."""
    if network.directed:
        raise ValidationError("rsc_pipeline needs an undirected network; use rsc_coclustering")
    seeds = stage_seeds(cfg.seed)
    timer = _Timer()
    t0 = time.perf_counter()
    with timer.stage("sparsify"):
        sampled = sparsify(network, SamplingConfig(cfg.p, seeds["sample"]))
    with timer.stage("operator"):
        op = build_operator(sampled, cfg.p, "undirected")
    q = cfg.q if cfg.q is not None else default_q(network.n)
    emb = _eigen_stage(op, cfg.k, _clamp_q(network.n, cfg.k, q), seeds["omega"],
                       cfg.test_distribution, timer)
    with timer.stage("kmeans"):
        res = kmeans(emb.vectors, cfg.k, seeds["kmeans"], cfg.kmeans_restarts,
                     cfg.kmeans_max_iter)
    timer.timings["total"] = time.perf_counter() - t0
    return PipelineResult(res, emb, timer.timings)


def exact_dense_matrix(network: MultiLayerNetwork, variant: str = "undirected") -> np.ndarray:
    """Dense exact aggregate ``(1/(L n)) sum_l (A_l A_l - D_l)`` or its directed forms.

    Uses one sparse product per layer; the result is ``n x n`` and guarded.
    """
    n = network.n
    if n > DENSE_MAX_N:
        raise CapacityError(f"dense guard: n={n} > {DENSE_MAX_N}")
    acc = np.zeros((n, n))
    for layer in network.layers:
        a = layer.csr
        if variant == "undirected":
            prod, deg = a @ a, np.diff(a.indptr)
        elif variant == "row":
            prod, deg = a @ a.T, np.diff(a.indptr)
        elif variant == "col":
            prod, deg = a.T @ a, np.bincount(a.indices, minlength=n)
        else:
            raise ValidationError(f"unknown variant {variant!r}")
        acc += sp.csr_matrix(prod).toarray()
        acc[np.diag_indices(n)] -= deg
    acc /= network.L * n
    return acc


def _exact_embedding(network, K, variant, dense, seed, timer, prefix=""):
    if dense:
        with timer.stage(prefix + "operator"):
            M = exact_dense_matrix(network, variant)
        with timer.stage(prefix + "eigen"):
            return dense_top_eigs(M, K)
    with timer.stage(prefix + "operator"):
        op = build_operator(network, 1.0, "exact-" + variant)
    q = _clamp_q(network.n, K, default_q(network.n) + 4)
    return _eigen_stage(op, K, q, seed, "gaussian", timer, prefix)


def sc_pipeline(network: MultiLayerNetwork, k: int, seed: int = 0, restarts: int = 10,
                max_iter: int = 300, dense: bool = True) -> PipelineResult:
    """Spectral clustering on the exact (non-sampled) aggregate.

    ``dense=True`` is the validation oracle and is limited to ``n <= 2000``;
    ``dense=False`` runs the matrix-free exact operator with
    ``q = ceil(log2 n) + 4``. k-means uses the same sub-seed as
    :func:`rsc_pipeline` with the same ``seed``.
    """
    if network.directed:
        raise ValidationError("sc_pipeline needs an undirected network; use sc_coclustering")
    seeds = stage_seeds(seed)
    timer = _Timer()
    t0 = time.perf_counter()
    emb = _exact_embedding(network, k, "undirected", dense, seeds["omega"], timer)
    with timer.stage("kmeans"):
        res = kmeans(emb.vectors, k, seeds["kmeans"], restarts, max_iter)
    timer.timings["total"] = time.perf_counter() - t0
    return PipelineResult(res, emb, timer.timings)


def rsc_coclustering(network: MultiLayerNetwork, cfg: PipelineConfig) -> CoClusterResult:
    """Randomized spectral co-clustering of a directed multi-layer network.

    One sampling pass feeds two branches: the row operator (sending
    patterns, ``cfg.k`` clusters) and the column operator (receiving
    patterns, ``cfg.k_col`` clusters). Both branches share the test-matrix
    and k-means seeds.
    """
    if not network.directed:
        raise ValidationError("rsc_coclustering needs a directed network")
    k_row, k_col = cfg.k, cfg.k_col or cfg.k
    seeds = stage_seeds(cfg.seed)
    timer = _Timer()
    t0 = time.perf_counter()
    with timer.stage("sparsify"):
        sampled = sparsify(network, SamplingConfig(cfg.p, seeds["sample"]))
    q = cfg.q if cfg.q is not None else default_q(network.n)
    results, embs = [], []
    for variant, K in (("row", k_row), ("col", k_col)):
        prefix = variant + "_"
        with timer.stage(prefix + "operator"):
            op = build_operator(sampled, cfg.p, variant)
        emb = _eigen_stage(op, K, _clamp_q(network.n, K, q), seeds["omega"],
                           cfg.test_distribution, timer, prefix)
        with timer.stage(prefix + "kmeans"):
            results.append(kmeans(emb.vectors, K, seeds["kmeans"], cfg.kmeans_restarts,
                                  cfg.kmeans_max_iter))
        embs.append(emb)
    timer.timings["total"] = time.perf_counter() - t0
    return CoClusterResult(results[0], results[1], tuple(embs), timer.timings)


def sc_coclustering(network: MultiLayerNetwork, k_row: int, k_col: Optional[int] = None,
                    seed: int = 0, restarts: int = 10, max_iter: int = 300,
                    dense: bool = True) -> CoClusterResult:
    """Exact directed spectral co-clustering baseline."""
    if not network.directed:
        raise ValidationError("sc_coclustering needs a directed network")
    k_col = k_col or k_row
    seeds = stage_seeds(seed)
    timer = _Timer()
    t0 = time.perf_counter()
    results, embs = [], []
    for variant, K in (("row", k_row), ("col", k_col)):
        prefix = variant + "_"
        emb = _exact_embedding(network, K, variant, dense, seeds["omega"], timer, prefix)
        with timer.stage(prefix + "kmeans"):
            results.append(kmeans(emb.vectors, K, seeds["kmeans"], restarts, max_iter))
        embs.append(emb)
    timer.timings["total"] = time.perf_counter() - t0
    return CoClusterResult(results[0], results[1], tuple(embs), timer.timings)
