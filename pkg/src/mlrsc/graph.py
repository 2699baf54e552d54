"""Sparse multi-layer graphs: storage, edge-list I/O, SpMV and degrees.

Each layer is held as a ``scipy.sparse.csr_matrix`` with canonical
(sorted, duplicate-free) indices. Values are reals so that the same type
holds both raw 0/1 adjacency and sampled layers rescaled to ``1/p``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, TextIO

import numpy as np
import scipy.sparse as sp

from .errors import ParseError, ValidationError

__all__ = [
    "SparseLayer",
    "MultiLayerNetwork",
    "layer_from_edges",
    "load_edge_list",
    "write_edge_list",
    "spmv",
    "degrees",
]


class SparseLayer:
    """One layer's weighted adjacency in CSR form.

    Parameters
    ----------
    matrix : scipy.sparse matrix
        Square ``n x n`` matrix. It is converted to canonical CSR, and its
        buffers are frozen so the layer can be shared between threads.
    check : bool
        Validate the invariants (no diagonal, nonnegative values).
    """

    __slots__ = ("_csr",)

    def __init__(self, matrix, check=True):
        csr = sp.csr_matrix(matrix, dtype=np.float64)
        if csr.shape[0] != csr.shape[1]:
            raise ValidationError(f"layer must be square, got shape {csr.shape}")
        csr.sum_duplicates()
        csr.sort_indices()
        csr.eliminate_zeros()
        if check:
            if np.any(csr.diagonal() != 0):
                raise ValidationError("layer has nonzero diagonal entries")
            if csr.nnz and csr.data.min() < 0:
                raise ValidationError("layer has negative entries")
        for arr in (csr.data, csr.indices, csr.indptr):
            arr.flags.writeable = False
        self._csr = csr

    @property
    def csr(self) -> sp.csr_matrix:
        return self._csr

    @property
    def n(self) -> int:
        return self._csr.shape[0]

    @property
    def nnz(self) -> int:
        return self._csr.nnz

    def is_symmetric(self) -> bool:
        diff = self._csr - self._csr.T
        return diff.nnz == 0 or not np.any(diff.data)

    def entries(self) -> Iterator[tuple[int, int, float]]:
        """Yield ``(row, col, value)`` in row-major index order."""
        csr = self._csr
        for i in range(self.n):
            lo, hi = csr.indptr[i], csr.indptr[i + 1]
            for j, v in zip(csr.indices[lo:hi], csr.data[lo:hi]):
                yield i, int(j), float(v)

    def __repr__(self):
        return f"SparseLayer(n={self.n}, nnz={self.nnz})"


def layer_from_edges(n, rows, cols, values=None, symmetrize=False, check=True):
    """Build a layer from coordinate arrays, dropping duplicate pairs.

    With ``symmetrize`` each ``(i, j)`` is also stored as ``(j, i)``.
    Duplicates keep the first occurrence's value rather than being summed.
    """
    rows = np.asarray(rows, dtype=np.int64).ravel()
    cols = np.asarray(cols, dtype=np.int64).ravel()
    if values is None:
        values = np.ones(rows.shape[0])
    values = np.asarray(values, dtype=np.float64).ravel()
    if symmetrize:
        rows, cols = np.concatenate([rows, cols]), np.concatenate([cols, rows])
        values = np.concatenate([values, values])
    if rows.size:
        key = rows * n + cols
        _, first = np.unique(key, return_index=True)
        rows, cols, values = rows[first], cols[first], values[first]
    idx_dtype = np.int32 if n < 2**31 - 1 else np.int64
    coo = sp.coo_matrix(
        (values, (rows.astype(idx_dtype), cols.astype(idx_dtype))), shape=(n, n)
    )
    return SparseLayer(coo.tocsr(), check=check)


@dataclass(frozen=True)
class MultiLayerNetwork:
    """``L`` layers over a common node set ``0..n-1``."""

    n: int
    layers: tuple
    directed: bool = False

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ValidationError("a network needs at least one layer")
        for idx, layer in enumerate(layers):
            if layer.n != self.n:
                raise ValidationError(
                    f"layer {idx} has {layer.n} nodes, expected {self.n}"
                )

    @property
    def L(self) -> int:
        return len(self.layers)

    @property
    def nnz(self) -> int:
        return sum(layer.nnz for layer in self.layers)

    def check_symmetric(self):
        for idx, layer in enumerate(self.layers):
            if not layer.is_symmetric():
                raise ValidationError(f"layer {idx} is not symmetric")

    def permuted(self, perm) -> "MultiLayerNetwork":
        """Relabel nodes so that old node ``i`` becomes ``perm[i]``."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        layers = [SparseLayer(layer.csr[inv][:, inv]) for layer in self.layers]
        return MultiLayerNetwork(self.n, tuple(layers), self.directed)


def _iter_lines(source) -> Iterable[str]:
    if isinstance(source, str):
        return source.splitlines()
    return source


def load_edge_list(source: TextIO | str, n: int, L: int, directed: bool = False,
                   weighted: bool = False) -> MultiLayerNetwork:
    """Read ``layer i j`` lines into a network.

    Layers are 1-based, nodes 0-based; fields are whitespace separated and
    lines starting with ``#`` are skipped. Undirected input is symmetrized.
    With ``weighted`` a fourth ``value`` column is read (sampled layers).
    """
    if n < 0 or L < 1:
        raise ValidationError("need n >= 0 and L >= 1")
    ncols = 4 if weighted else 3
    buckets = [([], [], []) for _ in range(L)]
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) != ncols:
            raise ParseError(f"expected {ncols} fields, got {len(fields)}", lineno)
        try:
            layer, i, j = int(fields[0]), int(fields[1]), int(fields[2])
            value = float(fields[3]) if weighted else 1.0
        except ValueError as exc:
            raise ParseError(f"non-numeric field in {line!r}", lineno) from exc
        if not 1 <= layer <= L:
            raise ValidationError(f"line {lineno}: layer {layer} outside [1, {L}]")
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationError(f"line {lineno}: node index outside [0, {n})")
        if i == j:
            raise ValidationError(f"line {lineno}: self-loop on node {i}")
        rows, cols, vals = buckets[layer - 1]
        rows.append(i)
        cols.append(j)
        vals.append(value)
    layers = []
    for rows, cols, vals in buckets:
        if not directed and rows:
            # one canonical orientation per unordered pair before mirroring
            r = np.asarray(rows)
            c = np.asarray(cols)
            rows, cols = np.minimum(r, c), np.maximum(r, c)
        layers.append(layer_from_edges(n, rows, cols, vals, symmetrize=not directed))
    return MultiLayerNetwork(n, tuple(layers), directed)


def write_edge_list(network: MultiLayerNetwork, stream: TextIO, weighted=False):
    """Write the network in the format read by :func:`load_edge_list`.

    Undirected layers are written once per unordered pair (``i < j``).
    """
    for idx, layer in enumerate(network.layers, start=1):
        coo = layer.csr.tocoo()
        mask = np.ones(coo.nnz, dtype=bool) if network.directed else coo.row < coo.col
        for i, j, v in zip(coo.row[mask], coo.col[mask], coo.data[mask]):
            if weighted:
                stream.write(f"{idx}\t{i}\t{j}\t{float(v)!r}\n")
            else:
                stream.write(f"{idx}\t{i}\t{j}\n")


def spmv(layer: SparseLayer, x, transpose: bool = False) -> np.ndarray:
    """Return ``A @ x`` or ``A.T @ x`` for one layer."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != layer.n:
        raise ValidationError(f"vector has length {x.shape[0]}, layer has n={layer.n}")
    csr = layer.csr
    return csr.T @ x if transpose else csr @ x


def degrees(layer: SparseLayer, mode: str = "row") -> np.ndarray:
    """Count stored entries per row (out-degree) or per column (in-degree).

    This is an unweighted count, so for a sampled layer it gives the number
    of retained edges regardless of the ``1/p`` rescaling.
    """
    csr = layer.csr
    if mode == "row":
        return np.diff(csr.indptr).astype(np.float64)
    if mode == "col":
        return np.bincount(csr.indices, minlength=layer.n).astype(np.float64)
    raise ValidationError(f"mode must be 'row' or 'col', got {mode!r}")
