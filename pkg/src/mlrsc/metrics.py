"""Partition comparison: misclassification rate, ARI and AMI.

The misclassification rate follows the membership-matrix definition
``min_Psi (1/n) ||Theta_hat Psi - Theta||_0``. Each wrongly assigned node
differs from the truth in two entries of its 0/1 row, so the rate is twice
the misclassified fraction and lies in ``[0, 2]``.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import gammaln

from .errors import ValidationError
from .sbm import Membership

__all__ = [
    "ConfusionTable",
    "confusion_table",
    "misclassification_rate",
    "fraction_misclassified",
    "max_assignment",
    "ari",
    "ami",
]

BRUTE_FORCE_MAX_K = 8


@dataclass(frozen=True)
class ConfusionTable:
    counts: np.ndarray
    n: int


def _labels_and_k(x):
    if isinstance(x, Membership):
        return x.labels, x.K
    labels = np.asarray(x)
    if labels.ndim != 1:
        raise ValidationError("labels must be one-dimensional")
    if labels.size and labels.min() < 0:
        raise ValidationError("labels must be nonnegative")
    return labels.astype(np.int64), (int(labels.max()) + 1 if labels.size else 0)


def confusion_table(a, b, ka=None, kb=None) -> ConfusionTable:
    la, ka0 = _labels_and_k(a)
    lb, kb0 = _labels_and_k(b)
    if la.shape != lb.shape:
        raise ValidationError(f"label vectors differ in length: {la.size} vs {lb.size}")
    ka = ka0 if ka is None else ka
    kb = kb0 if kb is None else kb
    counts = np.zeros((ka, kb), dtype=np.int64)
    np.add.at(counts, (la, lb), 1)
    return ConfusionTable(counts, la.size)


@functools.lru_cache(maxsize=None)
def _permutations(K):
    return np.array(list(itertools.permutations(range(K))), dtype=np.intp)


def max_assignment(counts, method="auto") -> int:
    """Largest total count over one-to-one matchings of rows to columns.

    ``method`` is ``"brute"`` (all permutations), ``"hungarian"`` or
    ``"auto"`` (brute force up to K = 8).
    """
    counts = np.asarray(counts)
    K = max(counts.shape) if counts.size else 0
    if counts.shape[0] != counts.shape[1]:
        padded = np.zeros((K, K), dtype=counts.dtype)
        padded[: counts.shape[0], : counts.shape[1]] = counts
        counts = padded
    if K == 0:
        return 0
    if method == "auto":
        method = "brute" if K <= BRUTE_FORCE_MAX_K else "hungarian"
    if method == "brute":
        perms = _permutations(K)
        return int(counts[np.arange(K), perms].sum(axis=1).max())
    if method == "hungarian":
        r, c = linear_sum_assignment(counts, maximize=True)
        return int(counts[r, c].sum())
    raise ValidationError(f"unknown method {method!r}")


def misclassification_rate(truth, estimate, pad_k=False, method="auto") -> float:
    """Permutation-minimized membership-matrix distance, in ``[0, 2]``.

    Both partitions must have the same number of communities unless
    ``pad_k`` is set, which pads the smaller side with empty clusters.
    """
    _, kt = _labels_and_k(truth)
    _, ke = _labels_and_k(estimate)
    if kt != ke and not pad_k:
        raise ValidationError(f"community counts differ: truth K={kt}, estimate K={ke}")
    K = max(kt, ke)
    table = confusion_table(truth, estimate, K, K)
    if table.n == 0:
        return 0.0
    matched = max_assignment(table.counts, method)
    return 2.0 * (table.n - matched) / table.n


def fraction_misclassified(truth, estimate, pad_k=False) -> float:
    return misclassification_rate(truth, estimate, pad_k) / 2.0


def _comb2(x):
    # exact Python integers, so ARI rounds only once
    return sum(int(v) * (int(v) - 1) // 2 for v in np.ravel(x))


def ari(a, b) -> float:
    """Adjusted Rand index (Hubert-Arabie), from integer pair counts."""
    table = confusion_table(a, b)
    counts = table.counts
    if table.n < 2:
        return 1.0
    index = _comb2(counts)
    sum_a = _comb2(counts.sum(axis=1))
    sum_b = _comb2(counts.sum(axis=0))
    pairs = _comb2([table.n])
    # (index - E) / (max - E) with E = sum_a sum_b / pairs, scaled by 2 * pairs
    num = 2 * (index * pairs - sum_a * sum_b)
    den = (sum_a + sum_b) * pairs - 2 * sum_a * sum_b
    if den == 0:
        # only reachable when both partitions are all-singletons or one block
        return 1.0
    return num / den


def _entropy(sizes, n):
    p = sizes[sizes > 0] / n
    return float(-np.sum(p * np.log(p)))


def _mutual_info(counts, n):
    a = counts.sum(axis=1)
    b = counts.sum(axis=0)
    nz = counts > 0
    nij = counts[nz].astype(float)
    outer = np.outer(a, b)[nz].astype(float)
    return float(np.sum(nij / n * (np.log(nij * n) - np.log(outer))))


def _expected_mutual_info(a, b, n):
    """Exact E[MI] under the hypergeometric permutation model."""
    a = a[a > 0].astype(np.int64)
    b = b[b > 0].astype(np.int64)
    lg_n = gammaln(n + 1)
    lg_a, lg_na = gammaln(a + 1), gammaln(n - a + 1)
    lg_b, lg_nb = gammaln(b + 1), gammaln(n - b + 1)
    emi = 0.0
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            lo = max(1, ai + bj - n)
            hi = min(ai, bj)
            if lo > hi:
                continue
            nij = np.arange(lo, hi + 1, dtype=np.float64)
            term = nij / n * (np.log(n * nij) - np.log(float(ai) * float(bj)))
            log_p = (lg_a[i] + lg_b[j] + lg_na[i] + lg_nb[j] - lg_n
                     - gammaln(nij + 1) - gammaln(ai - nij + 1) - gammaln(bj - nij + 1)
                     - gammaln(n - ai - bj + nij + 1))
            emi += float(np.sum(term * np.exp(log_p)))
    return emi


def ami(a, b) -> float:
    """Adjusted mutual information, max-normalized.

    ``(MI - E[MI]) / (max(H(a), H(b)) - E[MI])``; two single-cluster (or
    two all-singleton) partitions score 1.
    """
    table = confusion_table(a, b)
    counts, n = table.counts, table.n
    rows, cols = counts.sum(axis=1), counts.sum(axis=0)
    ka, kb = np.count_nonzero(rows), np.count_nonzero(cols)
    if (ka == kb == 1) or (ka == kb == n) or n == 0:
        return 1.0
    mi = _mutual_info(counts, n)
    emi = _expected_mutual_info(rows, cols, n)
    h = max(_entropy(rows, n), _entropy(cols, n))
    denom = h - emi
    eps = np.finfo(np.float64).eps
    denom = min(denom, -eps) if denom < 0 else max(denom, eps)
    return float((mi - emi) / denom)
