"""Cross-view correspondence recovery and template selection.

Graph columns are probability vectors over the shared anchors, so the
product ``g_i[:, j] @ g_t[:, s]`` is the probability of walking from sample
``j`` of view ``i`` to sample ``s`` of the template through one anchor. The
matching visits the unaligned samples of view ``i`` from the highest
initial-state probability down, and hands each the still unmatched template
sample with the largest two-step score.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .data import inverse_permutation


def initial_state_probs(x, eps_guard: float = 1e-8) -> np.ndarray:
    """Per-sample variance, normalized to sum to one.

    ``x`` is rows x samples (raw features or a graph); the population
    variance of each column is used. Falls back to uniform when every column
    is (near) constant.
    """
    x = np.asarray(x, dtype=float)
    var = x.var(axis=0)
    if np.all(var <= eps_guard):
        return np.full(x.shape[1], 1.0 / x.shape[1])
    return var / var.sum()


def two_step_score(g_i_col, g_t_col, p0: float) -> float:
    """Probability ``p0 * g_i . g_t`` of the two-hop walk through any anchor.

    Summed with ``math.fsum`` so the result is the correctly rounded total of
    the per-anchor path terms, independent of BLAS summation order.
    """
    return math.fsum(p0 * a * b for a, b in zip(np.asarray(g_i_col, dtype=float), np.asarray(g_t_col, dtype=float)))


def processing_order(probs) -> np.ndarray:
    """Indices by descending probability, lower index first on ties."""
    return np.argsort(-np.asarray(probs), kind="stable")


@njit(cache=True)
def _greedy_match(scores, order):
    n = scores.shape[0]
    taken = np.zeros(n, dtype=np.bool_)
    match = np.empty(n, dtype=np.int64)
    for r in range(n):
        j = order[r]
        best = -1
        best_val = -np.inf
        row = scores[j]
        for s in range(n):
            if not taken[s] and row[s] > best_val:
                best_val = row[s]
                best = s
        taken[best] = True
        match[j] = best
    return match


def greedy_match(scores, order) -> np.ndarray:
    """Sequential masked argmax: ``match[j]`` is the column given to row ``j``.

    Rows are visited in ``order``; each takes the highest-scoring column not
    yet taken, lowest column index on ties.
    """
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    order = np.ascontiguousarray(order, dtype=np.int64)
    return _greedy_match(scores, order)


def derive_permutation(g_i, g_t, probs_i, aligned_count: int) -> np.ndarray:
    """Permutation ``pi`` with ``g_i[:, pi]`` aligned to ``g_t``.

    The first ``aligned_count`` samples are fixed. ``pi[s] = j`` records that
    column ``j`` of view ``i`` was matched to template column ``s``.
    """
    n = g_i.shape[1]
    a = aligned_count
    pi = np.arange(n)
    if a >= n:
        return pi
    probs = np.asarray(probs_i)[a:]
    # scaling source columns first keeps the n x n work to the single product
    scores = (g_i[:, a:] * probs).T @ g_t[:, a:]
    match = greedy_match(scores, processing_order(probs))
    pi[a + match] = a + np.arange(n - a)
    return pi


def alignment_score(g_i, g_t, pi) -> float:
    """``trace(Pi^T G_i^T G_t)``; larger means a closer fit to the template."""
    return float(np.sum(g_i[:, pi] * g_t))


def select_template(phi) -> int:
    """Index of the largest view weight; the lowest index wins ties."""
    return int(np.argmax(phi))


def reframe(pi: list, new_template: int) -> list:
    """Re-express permutations relative to a new template view.

    ``G_i[:, pi_i]`` is in the old template's sample order; composing with
    the inverse of the new template's permutation moves every view into the
    new template's order, leaving the new template's own permutation as the
    identity.
    """
    inv = inverse_permutation(pi[new_template])
    return [p[inv] for p in pi]
