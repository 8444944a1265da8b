"""Dense numerical kernels: SVD, Procrustes, simplex projection, k-means, assignment."""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InvalidArgumentError, InvalidInputError, InvalidShapeError


class SvdFactors(NamedTuple):
    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.left * self.singular) @ self.right.T


def _as_finite_matrix(x, name="x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[0] < 1 or x.shape[1] < 1:
        raise InvalidShapeError(f"{name} must be a non-empty 2-D matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    return x


def thin_svd(x) -> SvdFactors:
    """Economy SVD with a deterministic sign convention.

    Each singular pair is flipped so that the largest-magnitude entry of the
    left vector is positive.
    """
    x = _as_finite_matrix(x)
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    v = vt.T
    pivot = np.argmax(np.abs(u), axis=0)
    signs = np.sign(u[pivot, np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return SvdFactors(u * signs, s, v * signs)


def truncated_svd(x, k: int) -> SvdFactors:
    x = _as_finite_matrix(x)
    if not 1 <= k <= min(x.shape):
        raise InvalidArgumentError(f"k must lie in [1, {min(x.shape)}], got {k}")
    f = thin_svd(x)
    return SvdFactors(f.left[:, :k], f.singular[:k], f.right[:, :k])


def procrustes_maximizer(b) -> np.ndarray:
    """Return ``Y`` with orthonormal columns maximizing ``trace(Y.T @ b)``.

    ``b`` is p x q with p >= q; the maximizer is ``U @ V.T`` from the thin SVD.
    """
    b = _as_finite_matrix(b, "b")
    p, q = b.shape
    if p < q:
        raise InvalidShapeError(f"procrustes needs rows >= cols, got {b.shape}")
    f = thin_svd(b)
    return f.left @ f.right.T


def simplex_project(h) -> np.ndarray:
    """Euclidean projection onto the probability simplex.

    A 1-D input is projected as a vector; a 2-D input is projected column by
    column. Sort-based threshold search, exact up to rounding.
    """
    h = np.asarray(h, dtype=float)
    if h.size == 0:
        raise InvalidArgumentError("cannot project an empty vector")
    if not np.all(np.isfinite(h)):
        raise InvalidInputError("h contains non-finite entries")
    if h.ndim == 1:
        return _project_columns(h[:, None])[:, 0]
    if h.ndim != 2:
        raise InvalidShapeError(f"expected a vector or matrix, got ndim={h.ndim}")
    return _project_columns(h)


def _project_columns(h: np.ndarray) -> np.ndarray:
    m = h.shape[0]
    s = -np.sort(-h, axis=0)
    css = np.cumsum(s, axis=0) - 1.0
    idx = np.arange(1, m + 1)[:, None]
    cond = s - css / idx > 0
    # number of active coordinates; cond is monotone so the last True is the count
    rho = m - np.argmax(cond[::-1], axis=0)
    theta = css[rho - 1, np.arange(h.shape[1])] / rho
    g = np.maximum(h - theta, 0.0)
    # renormalize the support so the column sum is exact to rounding
    g /= g.sum(axis=0, keepdims=True)
    return g


def _kmeanspp(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    centers = np.empty((k, points.shape[1]))
    centers[0] = points[rng.integers(n)]
    d2 = np.sum((points - centers[0]) ** 2, axis=1)
    for c in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = rng.choice(n, p=d2 / total)
        centers[c] = points[idx]
        d2 = np.minimum(d2, np.sum((points - centers[c]) ** 2, axis=1))
    return centers


def _sq_dists(points, centers):
    return (
        np.sum(points**2, axis=1)[:, None]
        - 2.0 * points @ centers.T
        + np.sum(centers**2, axis=1)[None, :]
    ).clip(min=0.0)


def lloyd(points, centers, max_iter: int = 100):
    """Run Lloyd iterations from ``centers``.

    Returns ``(labels, centers, inertia_history)``; the history holds the
    within-cluster sum of squares after every assignment step.
    """
    points = np.asarray(points, dtype=float)
    centers = np.array(centers, dtype=float)
    k = centers.shape[0]
    history = []
    labels = None
    for _ in range(max_iter):
        d2 = _sq_dists(points, centers)
        new_labels = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(len(points)), new_labels].sum()))
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for c in range(k):
            members = labels == c
            if members.any():
                centers[c] = points[members].mean(axis=0)
            else:
                # re-seed an empty cluster at the worst-served point
                far = np.argmax(d2[np.arange(len(points)), labels])
                centers[c] = points[far]
                labels[far] = c
    return new_labels, centers, history


def kmeans(points, k: int, seed: int = 0, n_init: int = 10, max_iter: int = 100) -> np.ndarray:
    """k-means++ seeded Lloyd clustering; returns 0-based labels.

    Runs ``n_init`` restarts from one seeded generator and keeps the lowest
    inertia, earliest restart on ties.
    """
    points = _as_finite_matrix(points, "points")
    n = points.shape[0]
    if not 1 <= k <= n:
        raise InvalidArgumentError(f"k must lie in [1, {n}], got {k}")
    rng = np.random.default_rng(seed)
    best_labels, best_inertia = None, np.inf
    for _ in range(n_init):
        labels, _, history = lloyd(points, _kmeanspp(points, k, rng), max_iter)
        if history[-1] < best_inertia:
            best_labels, best_inertia = labels, history[-1]
    return best_labels


def optimal_assignment(cost) -> np.ndarray:
    """Permutation ``p`` minimizing ``sum(cost[i, p[i]])``."""
    cost = _as_finite_matrix(cost, "cost")
    if cost.shape[0] != cost.shape[1]:
        raise InvalidShapeError(f"cost must be square, got {cost.shape}")
    rows, cols = linear_sum_assignment(cost)
    perm = np.empty(cost.shape[0], dtype=int)
    perm[rows] = cols
    return perm
