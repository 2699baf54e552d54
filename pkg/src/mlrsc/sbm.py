"""Multi-layer SBM / ScBM generators, population matrix and Models 1-4."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import CapacityError, ValidationError
from .graph import MultiLayerNetwork, layer_from_edges

__all__ = [
    "Membership",
    "BlockModel",
    "layer_rng",
    "sample_msbm",
    "sample_mscbm",
    "model_preset",
    "population_pi",
    "preset_blocks",
    "PI_MAX_N",
]

PI_MAX_N = 5000


@dataclass(frozen=True)
class Membership:
    """Community labels in ``[0, K)`` for ``n`` nodes."""

    labels: np.ndarray
    K: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        if labels.ndim != 1:
            raise ValidationError("labels must be one-dimensional")
        if self.K < 1:
            raise ValidationError("K must be >= 1")
        if labels.size and (labels.min() < 0 or labels.max() >= self.K):
            raise ValidationError(f"labels must lie in [0, {self.K})")
        labels.flags.writeable = False
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.labels.shape[0]

    @classmethod
    def from_sizes(cls, sizes: Sequence[int]) -> "Membership":
        """Contiguous assignment: the first ``sizes[0]`` nodes get label 0, etc."""
        sizes = [int(s) for s in sizes]
        return cls(np.repeat(np.arange(len(sizes)), sizes), len(sizes))

    @classmethod
    def from_proportions(cls, n: int, proportions: Sequence[float]) -> "Membership":
        return cls.from_sizes(_apportion(n, proportions))

    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.K)

    def theta(self) -> np.ndarray:
        """Dense ``n x K`` 0/1 membership matrix."""
        out = np.zeros((self.n, self.K))
        out[np.arange(self.n), self.labels] = 1.0
        return out


def _apportion(n, proportions):
    # largest-remainder rounding so sizes sum to n
    props = np.asarray(proportions, dtype=float)
    raw = props / props.sum() * n
    sizes = np.floor(raw).astype(int)
    short = n - sizes.sum()
    order = np.argsort(-(raw - sizes), kind="stable")
    sizes[order[:short]] += 1
    return sizes


@dataclass(frozen=True)
class BlockModel:
    """Multi-layer block model with layer matrices ``rho * blocks[l]``.

    ``col`` is ``None`` for an undirected SBM; for an ScBM it holds the
    column (receiver) membership and ``row`` the sender membership.
    """

    row: Membership
    blocks: tuple
    rho: float = 1.0
    col: Optional[Membership] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        blocks = tuple(np.array(b, dtype=float) for b in self.blocks)
        if not blocks:
            raise ValidationError("need at least one layer")
        if self.rho < 0:
            raise ValidationError("rho must be nonnegative")
        kz = self.col.K if self.col is not None else self.row.K
        for idx, b in enumerate(blocks):
            if b.shape != (self.row.K, kz):
                raise ValidationError(
                    f"block {idx} has shape {b.shape}, expected {(self.row.K, kz)}"
                )
            if self.col is None and not np.allclose(b, b.T, atol=1e-12):
                raise ValidationError(f"block {idx} must be symmetric for an SBM")
            probs = self.rho * b
            if probs.min() < 0 or probs.max() > 1:
                raise ValidationError(
                    f"layer {idx}: rho * B has entries outside [0, 1]"
                )
            b.flags.writeable = False
        if self.col is not None and self.col.n != self.row.n:
            raise ValidationError("row and column memberships differ in n")
        object.__setattr__(self, "blocks", blocks)

    @property
    def n(self) -> int:
        return self.row.n

    @property
    def L(self) -> int:
        return len(self.blocks)

    @property
    def directed(self) -> bool:
        return self.col is not None

    def probabilities(self, layer: int) -> np.ndarray:
        return self.rho * self.blocks[layer]

    def with_rho(self, rho: float) -> "BlockModel":
        return BlockModel(self.row, self.blocks, rho, self.col, self.name)


def layer_rng(seed: int, layer: int, stream: int = 0) -> np.random.Generator:
    """Independent counter-based generator for one layer.

    Streams are keyed on ``(seed, stream, layer)`` so layers can be drawn
    in any order, or in parallel, with identical results.
    """
    ss = np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=(stream, layer))
    return np.random.Generator(np.random.Philox(ss))


def _bernoulli_rectangle(rng, rows_nodes, cols_nodes, prob):
    """Independent Bernoulli(prob) draw on every cell of a node rectangle.

    Draws a binomial count and then a uniform subset of that size, which is
    the same joint law as one Bernoulli per cell but costs O(edges).
    """
    total = rows_nodes.size * cols_nodes.size
    if total == 0 or prob <= 0:
        return np.empty(0, np.int64), np.empty(0, np.int64)
    if prob >= 1:
        flat = np.arange(total)
    else:
        m = rng.binomial(total, prob)
        flat = np.sort(rng.choice(total, size=m, replace=False))
    width = cols_nodes.size
    return rows_nodes[flat // width], cols_nodes[flat % width]


def _groups(membership):
    return [np.flatnonzero(membership.labels == k) for k in range(membership.K)]


def sample_msbm(model: BlockModel, seed: int) -> MultiLayerNetwork:
    """Draw an undirected multi-layer SBM network.

    Every pair ``i < j`` in layer ``l`` is an edge independently with
    probability ``rho * B_l[g_i, g_j]``; the diagonal is empty.
    """
    if model.directed:
        raise ValidationError("sample_msbm needs an undirected model; use sample_mscbm")
    groups = _groups(model.row)
    layers = []
    for l in range(model.L):
        rng = layer_rng(seed, l)
        probs = model.probabilities(l)
        rows, cols = [], []
        for a in range(model.row.K):
            for b in range(a, model.row.K):
                r, c = _bernoulli_rectangle(rng, groups[a], groups[b], probs[a, b])
                if a == b:
                    keep = r < c
                    r, c = r[keep], c[keep]
                else:
                    r, c = np.minimum(r, c), np.maximum(r, c)
                rows.append(r)
                cols.append(c)
        layers.append(
            layer_from_edges(model.n, np.concatenate(rows), np.concatenate(cols),
                             symmetrize=True)
        )
    return MultiLayerNetwork(model.n, tuple(layers), directed=False)


def sample_mscbm(model: BlockModel, seed: int) -> MultiLayerNetwork:
    """Draw a directed multi-layer ScBM network.

    Every ordered pair ``i != j`` is an edge independently with probability
    ``rho * B_l[row_i, col_j]``.
    """
    if not model.directed:
        raise ValidationError("sample_mscbm needs row and column memberships")
    row_groups = _groups(model.row)
    col_groups = _groups(model.col)
    layers = []
    for l in range(model.L):
        rng = layer_rng(seed, l)
        probs = model.probabilities(l)
        rows, cols = [], []
        for a, ra in enumerate(row_groups):
            for b, cb in enumerate(col_groups):
                r, c = _bernoulli_rectangle(rng, ra, cb, probs[a, b])
                keep = r != c
                rows.append(r[keep])
                cols.append(c[keep])
        layers.append(
            layer_from_edges(model.n, np.concatenate(rows), np.concatenate(cols))
        )
    return MultiLayerNetwork(model.n, tuple(layers), directed=True)


# -- presets -----------------------------------------------------------------

_R2 = np.sqrt(2.0) / 2.0

# shared eigenbasis of Models 1, 3 and the row basis of Model 4
_U = np.array([
    [0.5, 0.5, -_R2],
    [0.5, 0.5, _R2],
    [_R2, -_R2, 0.0],
])

_V = np.array([
    [_R2, -_R2, 0.0],
    [0.5, 0.5, -_R2],
    [0.5, 0.5, _R2],
])


def _model2_basis():
    # Only a 2-decimal rounding of this basis is published. Keep the exact
    # first column, orthogonalize the second against it and complete with
    # the cross product, signed to match the rounded third column.
    rounded = np.array([
        [0.5, 0.84, -0.19],
        [0.5, -0.46, -0.73],
        [0.71, -0.27, 0.65],
    ])
    u1 = np.array([0.5, 0.5, _R2])
    u2 = rounded[:, 1] - (rounded[:, 1] @ u1) * u1
    u2 /= np.linalg.norm(u2)
    u3 = np.cross(u1, u2)
    if u3 @ rounded[:, 2] < 0:
        u3 = -u3
    return np.column_stack([u1, u2, u3])


def preset_blocks(model_id: int) -> tuple[np.ndarray, np.ndarray]:
    """Return the exact ``(B1, B2)`` base matrices for Models 1-4."""
    if model_id == 1:
        return (_U @ np.diag([1.5, 0.2, 0.4]) @ _U.T,
                _U @ np.diag([1.5, 0.2, -0.4]) @ _U.T)
    if model_id == 2:
        U2 = _model2_basis()
        return (U2 @ np.diag([1.5, 0.4, 0.0]) @ U2.T,
                U2 @ np.diag([1.5, -0.4, 0.0]) @ U2.T)
    if model_id == 3:
        return (_U @ np.diag([1.5, 0.2, 0.4]) @ _U.T,
                _U @ np.diag([1.0, 0.4, 0.2]) @ _U.T)
    if model_id == 4:
        return (_U @ np.diag([1.5, 0.2, 0.4]) @ _V.T,
                _U @ np.diag([1.5, 0.2, -0.4]) @ _V.T)
    raise ValidationError(f"model id must be 1..4, got {model_id}")


def model_preset(model_id: int, n: int, L: int, rho: float,
                 allow_odd_layers: bool = False) -> BlockModel:
    """Block model for simulation Models 1-4.

    The first half of the layers use ``rho * B1`` and the rest ``rho * B2``.
    ``L`` must be even unless ``allow_odd_layers`` is set, in which case the
    first ``L // 2`` layers get ``B1``.
    """
    if model_id not in (1, 2, 3, 4):
        raise ValidationError(f"model id must be 1..4, got {model_id}")
    if L < 1:
        raise ValidationError("L must be >= 1")
    if L % 2 and not allow_odd_layers:
        raise ValidationError(f"preset models need an even number of layers, got {L}")
    b1, b2 = preset_blocks(model_id)
    # clip round-off so exact zeros/ones stay inside [0, 1]
    b1 = np.where(np.abs(b1) < 1e-15, 0.0, b1)
    b2 = np.where(np.abs(b2) < 1e-15, 0.0, b2)
    if model_id != 4:
        b1 = (b1 + b1.T) / 2
        b2 = (b2 + b2.T) / 2
    half = L // 2
    blocks = tuple([b1] * half + [b2] * (L - half))
    row = Membership.from_proportions(n, (0.3, 0.4, 0.3))
    col = Membership.from_proportions(n, (0.4, 0.3, 0.3)) if model_id == 4 else None
    return BlockModel(row, blocks, rho, col, name=f"model{model_id}")


def population_pi(model: BlockModel) -> np.ndarray:
    """Dense population matrix ``(1/L) sum_l P_l^2 / n`` with ``P_l = T B_l T'``.

    ``P_l`` keeps its diagonal. Computed through the ``K x K`` core
    ``B_l diag(sizes) B_l`` so only the final ``n x n`` matrix is dense.
    """
    if model.directed:
        raise ValidationError("population_pi is defined for undirected models")
    n = model.n
    if n > PI_MAX_N:
        raise CapacityError(f"population_pi materializes n x n; n={n} > {PI_MAX_N}")
    sizes = model.row.sizes().astype(float)
    core = np.zeros((model.row.K, model.row.K))
    for l in range(model.L):
        b = model.probabilities(l)
        core += b @ np.diag(sizes) @ b
    core /= model.L * n
    lab = model.row.labels
    return core[np.ix_(lab, lab)]
