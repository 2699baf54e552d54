"""Edge sampling and the bias-corrected squared-adjacency operator.

The operator

    Mbar = (1/L) sum_l [ At_l At_l / n - diag(dt_l) / (n p^2) ]

is never formed; :meth:`DebiasedOperator.apply` multiplies a block by it
using two sparse products per layer. The directed variants replace
``At At`` with ``At At'`` (row) or ``At' At`` (col) and use out-/in-degree
counts of retained edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, ValidationError
from .graph import MultiLayerNetwork, SparseLayer, degrees
from .sbm import layer_rng

__all__ = [
    "SamplingConfig",
    "DebiasedOperator",
    "VARIANTS",
    "sparsify",
    "build_operator",
    "apply",
    "dense_reference",
    "DENSE_MAX_N",
]

DENSE_MAX_N = 2000
VARIANTS = ("undirected", "row", "col", "exact-undirected", "exact-row", "exact-col")

# stream id for sampling draws, distinct from the generator's stream 0
_SAMPLING_STREAM = 1


@dataclass(frozen=True)
class SamplingConfig:
    p: float
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.p <= 1:
            raise ValidationError(f"sampling probability must be in (0, 1], got {self.p}")


def sparsify(network: MultiLayerNetwork, cfg: SamplingConfig) -> MultiLayerNetwork:
    """Keep each edge independently with probability ``p``, rescaled to ``1/p``.

    Undirected layers draw once per unordered pair and mirror the outcome.
    Directed layers draw once per ordered pair. Only stored entries are
    visited, so the cost is linear in the number of edges.
    """
    p = cfg.p
    for idx, layer in enumerate(network.layers):
        if layer.nnz and not np.all(layer.csr.data == 1.0):
            raise ValidationError(f"sparsify expects 0/1 layers (layer {idx})")
    if p == 1.0:
        return network
    out = []
    for l, layer in enumerate(network.layers):
        rng = layer_rng(cfg.seed, l, _SAMPLING_STREAM)
        if network.directed:
            coo = layer.csr.tocoo()
            keep = rng.random(coo.nnz) < p
            kept = sp.coo_matrix(
                (np.full(keep.sum(), 1.0 / p), (coo.row[keep], coo.col[keep])),
                shape=coo.shape,
            )
        else:
            upper = sp.triu(layer.csr, k=1, format="coo")
            keep = rng.random(upper.nnz) < p
            r, c = upper.row[keep], upper.col[keep]
            vals = np.full(2 * r.size, 1.0 / p)
            kept = sp.coo_matrix(
                (vals, (np.concatenate([r, c]), np.concatenate([c, r]))),
                shape=upper.shape,
            )
        out.append(SparseLayer(kept.tocsr(), check=False))
    return MultiLayerNetwork(network.n, tuple(out), network.directed)


class DebiasedOperator:
    """Matrix-free symmetric operator for the aggregated debiased matrix.

    Supports ``op @ X`` for vectors and ``n x b`` blocks. Immutable once
    built; concurrent ``apply`` calls are safe.
    """

    def __init__(self, layers, p, variant, directed):
        self.layers = tuple(layers)
        self.p = float(p)
        self.variant = variant
        self.directed = directed
        self.n = self.layers[0].n
        base = variant.replace("exact-", "")
        self._mode = base
        deg_mode = "col" if base == "col" else "row"
        self._csr = tuple(layer.csr for layer in self.layers)
        # transposes cached once; undirected layers are their own transpose
        self._csr_t = (
            tuple(m.T.tocsr() for m in self._csr) if base in ("row", "col") else self._csr
        )
        self.degree_vectors = tuple(degrees(layer, deg_mode) for layer in self.layers)
        scale = 1.0 / (self.n * self.p**2)
        self._diag = sum(self.degree_vectors) * scale if self.n else np.zeros(0)

    @property
    def shape(self):
        return (self.n, self.n)

    @property
    def L(self):
        return len(self.layers)

    def apply(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        vector = X.ndim == 1
        if vector:
            X = X[:, None]
        if X.ndim != 2 or X.shape[0] != self.n:
            raise ValidationError(f"block must have {self.n} rows, got shape {X.shape}")
        acc = np.zeros_like(X)
        for a, at in zip(self._csr, self._csr_t):
            if self._mode == "undirected":
                acc += a @ (a @ X)
            elif self._mode == "row":
                acc += a @ (at @ X)
            else:
                acc += at @ (a @ X)
        acc /= self.n
        acc -= self._diag[:, None] * X
        acc /= self.L
        return acc[:, 0] if vector else acc

    def __matmul__(self, X):
        return self.apply(X)

    def __repr__(self):
        return (f"DebiasedOperator(n={self.n}, L={self.L}, p={self.p}, "
                f"variant={self.variant!r})")


def build_operator(network: MultiLayerNetwork, p: float = 1.0,
                   variant: str = "undirected") -> DebiasedOperator:
    """Wrap (possibly sampled) layers as a :class:`DebiasedOperator`.

    ``p`` must be the probability the layers were sampled with. The
    ``exact-*`` variants are the non-randomized aggregates and need
    ``p == 1`` on unsampled 0/1 layers.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    if not 0 < p <= 1:
        raise ValidationError(f"sampling probability must be in (0, 1], got {p}")
    base = variant.replace("exact-", "")
    if base in ("row", "col") and not network.directed:
        raise ValidationError(f"variant {variant!r} requires a directed network")
    if base == "undirected":
        network.check_symmetric()
    if variant.startswith("exact-"):
        if p != 1:
            raise ValidationError("exact variants require p = 1")
        for idx, layer in enumerate(network.layers):
            if layer.nnz and not np.all(layer.csr.data == 1.0):
                raise ValidationError(f"exact variant needs unsampled 0/1 layers (layer {idx})")
    return DebiasedOperator(network.layers, p, variant, network.directed)


def apply(op: DebiasedOperator, X) -> np.ndarray:
    return op.apply(X)


def dense_reference(op, block: int = 256) -> np.ndarray:
    """Materialize ``op`` by applying it to identity column blocks."""
    n = op.shape[0]
    if n > DENSE_MAX_N:
        raise CapacityError(f"dense_reference guard: n={n} > {DENSE_MAX_N}")
    out = np.empty((n, n))
    for start in range(0, n, block):
        stop = min(start + block, n)
        eye = np.zeros((n, stop - start))
        eye[np.arange(start, stop), np.arange(stop - start)] = 1.0
        out[:, start:stop] = op @ eye
    return out
