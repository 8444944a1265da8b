"""Optimization state and the block-coordinate updates of the clustering objective.

The objective is::

    sum_i phi_i**alpha * ||Q_i X_i - A G_i||_{2,1}
        + mu * sum_{i != t} ||G_i[:, pi_i] - G_t||_F**2

with ``Q_i Q_i^T = I``, ``A^T A = I``, graph columns on the simplex and
``phi`` on the simplex. The l2,1 term is handled by iterative reweighting:
``lam_i[j] = 1 / (2 ||e_ij||)`` turns it into the weighted quadratic
``sum_j lam_i[j] ||e_ij||**2`` that the Q, A and G updates minimize.
Permutations are stored as index vectors so ``G @ Pi == G[:, pi]``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError
from .linalg import procrustes_maximizer, simplex_project, thin_svd


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 1.5
    mu: float = 1e-2
    anchors: int | None = None
    latent_dim: int | None = None
    max_iter: int = 60
    rel_tol: float = 1e-7
    eps_guard: float = 1e-8
    seed: int = 0
    align: bool = True
    init: str = "pca"
    state_probs: str = "graph"
    normalize: bool = True

    def __post_init__(self):
        if not self.alpha > 1:
            raise ConfigurationError(f"alpha must exceed 1, got {self.alpha}")
        if not self.mu > 0:
            raise ConfigurationError(f"mu must be positive, got {self.mu}")
        if self.max_iter < 0:
            raise ConfigurationError(f"max_iter must be non-negative, got {self.max_iter}")
        if not self.rel_tol >= 0:
            raise ConfigurationError(f"rel_tol must be non-negative, got {self.rel_tol}")
        if not self.eps_guard > 0:
            raise ConfigurationError(f"eps_guard must be positive, got {self.eps_guard}")
        if self.init not in ("pca", "random"):
            raise ConfigurationError(f"init must be 'pca' or 'random', got {self.init!r}")
        if self.state_probs not in ("graph", "features"):
            raise ConfigurationError(f"state_probs must be 'graph' or 'features', got {self.state_probs!r}")

    def resolve(self, dataset) -> SolverConfig:
        """Fill in ``anchors = k`` and ``latent_dim = anchors`` and check dimensions."""
        k = dataset.k
        if k is None:
            raise ConfigurationError("dataset does not declare the number of clusters k")
        m = k if self.anchors is None else self.anchors
        dl = m if self.latent_dim is None else self.latent_dim
        dmin = min(dataset.dims)
        if not k <= m <= dl <= dmin:
            raise ConfigurationError(
                f"need k <= anchors <= latent_dim <= min view dim, got {k} <= {m} <= {dl} <= {dmin}"
            )
        if m > dataset.n:
            raise ConfigurationError(f"anchors ({m}) exceed sample count ({dataset.n})")
        return replace(self, anchors=m, latent_dim=dl)


@dataclass
class ModelState:
    q: list
    a: np.ndarray
    g: list
    lam: list
    pi: list
    phi: np.ndarray
    template: int = 0
    aligned: int = 0

    @property
    def v(self) -> int:
        return len(self.g)

    def copy(self) -> ModelState:
        return ModelState(
            q=[x.copy() for x in self.q], a=self.a.copy(), g=[x.copy() for x in self.g],
            lam=[x.copy() for x in self.lam], pi=[x.copy() for x in self.pi],
            phi=self.phi.copy(), template=self.template, aligned=self.aligned,
        )


def _orthonormal_rows(rng, rows, cols):
    # QR of a Gaussian cols x rows matrix gives orthonormal columns; transpose
    qmat, r = np.linalg.qr(rng.standard_normal((cols, rows)))
    return (qmat * np.sign(np.diag(r))).T


def init_state(dataset, config: SolverConfig) -> ModelState:
    """Seeded starting point.

    ``A`` is an orthonormalized Gaussian draw. With ``init="random"`` every
    ``G_i`` column is a normalized uniform draw and every ``Q_i`` an
    orthonormalized Gaussian. With ``init="pca"`` (default) ``Q_i`` holds the
    leading principal directions of ``X_i`` and ``G_i`` is the simplex
    projection of ``A^T Q_i X_i``; both commute with column shuffles of
    ``X_i``, so views that are shuffled copies of each other start from
    shuffled copies of the same graph.
    """
    config = config.resolve(dataset)
    rng = np.random.default_rng(config.seed)
    m, dl, n, v = config.anchors, config.latent_dim, dataset.n, dataset.v
    a = _orthonormal_rows(rng, m, dl).T
    g = []
    for _ in range(v):
        w = rng.uniform(0.0, 1.0, size=(m, n)) + 1e-12
        g.append(w / w.sum(axis=0))
    q = [_orthonormal_rows(rng, dl, d) for d in dataset.dims]
    if config.init == "pca":
        for i, x in enumerate(dataset.views):
            q[i] = thin_svd(x).left[:, :dl].T
            g[i] = simplex_project(a.T @ q[i] @ x)
    return ModelState(
        q=q, a=a, g=g,
        lam=[np.ones(n) for _ in range(v)],
        pi=[np.arange(n) for _ in range(v)],
        phi=np.full(v, 1.0 / v),
        template=0,
        aligned=dataset.aligned_count,
    )


def residual(state: ModelState, dataset, i: int) -> np.ndarray:
    """Reconstruction residual of view ``i`` in its own feature space.

    ``X_i - Q_i^T A G_i`` has the same column norms as ``Q_i X_i - A G_i``
    whenever ``Q_i`` is square. For ``latent_dim < d_i`` it is the residual
    that the closed-form Q, A and G updates minimize exactly, since
    ``||Q_i^T y|| = ||y||`` under ``Q_i Q_i^T = I``.
    """
    return dataset.views[i] - state.q[i].T @ (state.a @ state.g[i])


def residual_norms(state: ModelState, dataset, i: int) -> np.ndarray:
    return np.linalg.norm(residual(state, dataset, i), axis=0)


def weighted_residual(state: ModelState, dataset, i: int) -> float:
    """``trace(E_i Lam_i E_i^T)`` with the current reweighting vector."""
    return float(np.sum(state.lam[i] * residual_norms(state, dataset, i) ** 2))


def update_q(state: ModelState, dataset, i: int) -> np.ndarray:
    """Procrustes maximizer of ``trace(Q B)`` with ``B = X Lam G^T A^T``."""
    b = (dataset.views[i] * state.lam[i]) @ (state.a @ state.g[i]).T
    return procrustes_maximizer(b).T


def update_a(state: ModelState, dataset, alpha: float) -> np.ndarray:
    c = sum(
        state.phi[i] ** alpha * (state.g[i] * state.lam[i]) @ (state.q[i] @ dataset.views[i]).T
        for i in range(state.v)
    )
    return procrustes_maximizer(c.T)


def _gamma(state, i, alpha):
    return state.phi[i] ** alpha * state.lam[i]


def update_g_nontemplate(state: ModelState, dataset, i: int, alpha: float, mu: float) -> np.ndarray:
    t = state.template
    if i == t:
        raise ValueError("use update_g_template for the template view")
    gamma = _gamma(state, i, alpha)
    recon = state.a.T @ state.q[i] @ dataset.views[i]
    # column j of G_t Pi_i^T is column inv(pi_i)[j] of G_t
    inv = np.empty_like(state.pi[i])
    inv[state.pi[i]] = np.arange(len(inv))
    target = state.g[t][:, inv]
    h = (gamma * recon + mu * target) / (gamma + mu)
    return simplex_project(h)


def update_g_template(state: ModelState, dataset, alpha: float, mu: float) -> np.ndarray:
    t, v = state.template, state.v
    gamma = _gamma(state, t, alpha)
    recon = state.a.T @ state.q[t] @ dataset.views[t]
    pulled = np.zeros_like(state.g[t])
    for i in range(v):
        if i != t:
            pulled += state.g[i][:, state.pi[i]]
    h = (gamma * recon + mu * pulled) / (gamma + mu * (v - 1))
    return simplex_project(h)


def update_lambda(state: ModelState, dataset, i: int, eps_guard: float) -> np.ndarray:
    return 1.0 / (2.0 * np.maximum(residual_norms(state, dataset, i), eps_guard))


def phi_from_errors(eps, alpha: float, eps_guard: float = 1e-8) -> np.ndarray:
    """Closed-form view weights for reconstruction errors ``eps``."""
    eps = np.asarray(eps, dtype=float)
    tiny = eps <= eps_guard
    if tiny.any():
        return tiny / tiny.sum()
    # eps**(1/(1-alpha)) normalized, evaluated in log space
    logw = np.log(eps) / (1.0 - alpha)
    w = np.exp(logw - logw.max())
    return w / w.sum()


def view_errors(state: ModelState, dataset) -> np.ndarray:
    """Per-view l2,1 reconstruction error."""
    return np.array([residual_norms(state, dataset, i).sum() for i in range(state.v)])


def update_phi(state: ModelState, dataset, alpha: float, eps_guard: float = 1e-8) -> np.ndarray:
    return phi_from_errors(view_errors(state, dataset), alpha, eps_guard)


def alignment_term(state: ModelState) -> float:
    t = state.template
    gt = state.g[t]
    return float(sum(np.sum((state.g[i][:, state.pi[i]] - gt) ** 2) for i in range(state.v) if i != t))


def objective(state: ModelState, dataset, alpha: float, mu: float) -> float:
    recon = float(np.sum(state.phi**alpha * view_errors(state, dataset)))
    return recon + mu * alignment_term(state)
