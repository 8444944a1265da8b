"""Clustering accuracy, NMI, pairwise F-score and permutation recovery."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import is_bijection
from .errors import InvalidArgumentError
from .linalg import optimal_assignment


@dataclass
class EvaluationReport:
    acc: float
    nmi: float
    fscore: float
    perm_recovery: list = field(default_factory=list)
    wall_time_seconds: float = 0.0


def _pair(truth, pred):
    truth, pred = np.asarray(truth), np.asarray(pred)
    if truth.shape != pred.shape or truth.ndim != 1:
        raise InvalidArgumentError(f"label vectors differ in shape: {truth.shape} vs {pred.shape}")
    return truth, pred


def contingency(truth, pred) -> np.ndarray:
    truth, pred = _pair(truth, pred)
    _, ti = np.unique(truth, return_inverse=True)
    _, pj = np.unique(pred, return_inverse=True)
    table = np.zeros((ti.max(initial=-1) + 1, pj.max(initial=-1) + 1))
    np.add.at(table, (ti, pj), 1)
    return table


def accuracy(truth, pred) -> float:
    """Best fraction of agreement over one-to-one relabelings of ``pred``."""
    table = contingency(truth, pred)
    if table.size == 0:
        return 1.0
    size = max(table.shape)
    padded = np.zeros((size, size))
    padded[: table.shape[0], : table.shape[1]] = table
    perm = optimal_assignment(-padded)
    return float(padded[np.arange(size), perm].sum() / table.sum())


def _entropy(counts):
    p = counts[counts > 0] / counts.sum()
    return float(-np.sum(p * np.log(p)))


def nmi(truth, pred) -> float:
    """Mutual information over the geometric mean of the two entropies."""
    table = contingency(truth, pred)
    n = table.sum()
    if n == 0:
        return 0.0
    h_t, h_p = _entropy(table.sum(axis=1)), _entropy(table.sum(axis=0))
    if h_t == 0 or h_p == 0:
        return 0.0
    nz = table > 0
    outer = np.outer(table.sum(axis=1), table.sum(axis=0))
    mi = float(np.sum(table[nz] / n * np.log(table[nz] * n / outer[nz])))
    return float(np.clip(mi / np.sqrt(h_t * h_p), 0.0, 1.0))


def pairwise_fscore(truth, pred) -> float:
    """F-measure over unordered sample pairs placed in the same cluster."""
    table = contingency(truth, pred)
    if table.sum() < 2:
        raise InvalidArgumentError("pairwise F-score needs at least two samples")

    def pairs(c):
        return float(np.sum(c * (c - 1) / 2))

    both = pairs(table)
    same_pred = pairs(table.sum(axis=0))
    same_truth = pairs(table.sum(axis=1))
    if same_pred == 0 and same_truth == 0:
        # both partitions are all singletons, hence identical
        return 1.0
    precision = both / same_pred if same_pred else 0.0
    recall = both / same_truth if same_truth else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def permutation_recovery(est, truth, aligned_count: int) -> float:
    """Fraction of unaligned positions where ``est`` agrees with ``truth``."""
    est, truth = np.asarray(est), np.asarray(truth)
    if est.shape != truth.shape or not is_bijection(est) or not is_bijection(truth):
        raise InvalidArgumentError("both arguments must be permutations of equal length")
    tail = slice(aligned_count, None)
    if est[tail].size == 0:
        return 1.0
    return float(np.mean(est[tail] == truth[tail]))


def evaluate(truth_labels, pred_labels, est_perms=(), truth_perms=(), aligned_count=0, seconds=0.0):
    return EvaluationReport(
        acc=accuracy(truth_labels, pred_labels),
        nmi=nmi(truth_labels, pred_labels),
        fscore=pairwise_fscore(truth_labels, pred_labels),
        perm_recovery=[permutation_recovery(e, t, aligned_count) for e, t in zip(est_perms, truth_perms)],
        wall_time_seconds=seconds,
    )
