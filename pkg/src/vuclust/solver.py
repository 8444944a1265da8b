"""Alternating minimization driver, graph fusion and the spectral clustering step."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import alignment, model
from .data import scale_views
from .errors import InvalidArgumentError, NumericalFailure
from .linalg import kmeans, truncated_svd

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    objective: float
    errors: np.ndarray
    phi: np.ndarray
    template: int
    seconds: float


@dataclass
class IterationTrace:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def objective(self) -> np.ndarray:
        return np.array([r.objective for r in self.records])


@dataclass
class ClusteringResult:
    fused_graph: np.ndarray
    embedding: np.ndarray
    labels: np.ndarray
    state: model.ModelState
    trace: IterationTrace
    config: model.SolverConfig
    initial_objective: float
    converged: bool = False

    @property
    def objective(self) -> float:
        if self.trace.records:
            return self.trace.records[-1].objective
        return self.initial_objective

    @property
    def iterations(self) -> int:
        return len(self.trace)

    def correspondences(self) -> list:
        """Estimated view-1 index of every column of every view.

        Same convention as ``MultiViewDataset.truth_perms``.
        """
        return view1_correspondences(self.state)


def view1_correspondences(state: model.ModelState) -> list:
    # template column s <-> column pi_i[s] of view i <-> column pi_0[s] of view 1
    out = []
    for p in state.pi:
        est = np.empty_like(p)
        est[p] = state.pi[0]
        out.append(est)
    return out


def fuse_graphs(state: model.ModelState) -> np.ndarray:
    """Average of the permutation-aligned graphs, in template sample order."""
    return sum(g[:, p] for g, p in zip(state.g, state.pi)) / state.v


def embed_and_cluster(fused, k: int, seed: int = 0):
    """Rank-k SVD of the fused m x n graph, then k-means on the n x k sample factor."""
    fused = np.asarray(fused, dtype=float)
    if not 1 <= k <= min(fused.shape):
        raise InvalidArgumentError(f"k must lie in [1, {min(fused.shape)}], got {k}")
    embedding = truncated_svd(fused, k).right
    return embedding, kmeans(embedding, k, seed=seed)


def _state_probs(state, dataset, config, i):
    if config.state_probs == "graph":
        return alignment.initial_state_probs(state.g[i], config.eps_guard)
    return alignment.initial_state_probs(dataset.views[i], config.eps_guard)


def update_permutations(state: model.ModelState, dataset, config: model.SolverConfig) -> None:
    """Greedy re-derivation of every non-template permutation.

    The greedy matching is not a global optimum of the alignment score, so
    a candidate that scores below the current permutation is rejected.
    """
    t = state.template
    for i in range(state.v):
        if i == t:
            continue
        probs = _state_probs(state, dataset, config, i)
        cand = alignment.derive_permutation(state.g[i], state.g[t], probs, state.aligned)
        current = alignment.alignment_score(state.g[i], state.g[t], state.pi[i])
        if alignment.alignment_score(state.g[i], state.g[t], cand) >= current:
            state.pi[i] = cand


def switch_template(state: model.ModelState, dataset, config: model.SolverConfig, new_t: int) -> bool:
    """Move the template to ``new_t`` unless that raises the objective.

    With three or more views the alignment sum depends on which graph is
    the reference, so a switch is committed only when the objective after
    re-deriving the permutations is no larger than before.
    """
    if new_t == state.template:
        return False
    before = model.objective(state, dataset, config.alpha, config.mu)
    old_t, old_pi = state.template, [p.copy() for p in state.pi]
    state.pi = alignment.reframe(state.pi, new_t)
    state.template = new_t
    if config.align:
        update_permutations(state, dataset, config)
    after = model.objective(state, dataset, config.alpha, config.mu)
    if after <= before + 1e-12 * abs(before):
        return True
    state.template, state.pi = old_t, old_pi
    return False


def iterate(state: model.ModelState, dataset, config: model.SolverConfig) -> None:
    """One pass of Q, A, G, Lam, Pi, phi updates followed by template re-selection."""
    alpha, mu = config.alpha, config.mu
    for i in range(state.v):
        state.q[i] = model.update_q(state, dataset, i)
    state.a = model.update_a(state, dataset, alpha)
    for i in range(state.v):
        if i != state.template:
            state.g[i] = model.update_g_nontemplate(state, dataset, i, alpha, mu)
    state.g[state.template] = model.update_g_template(state, dataset, alpha, mu)
    for i in range(state.v):
        state.lam[i] = model.update_lambda(state, dataset, i, config.eps_guard)
    if config.align:
        update_permutations(state, dataset, config)
    state.phi = model.update_phi(state, dataset, alpha, config.eps_guard)
    switch_template(state, dataset, config, alignment.select_template(state.phi))


def prepare(dataset, config: model.SolverConfig):
    """Resolve defaults and rescale the views the solver will work on.

    With ``normalize`` every view is scaled so its mean column norm is
    ``1/sqrt(anchors)``, the norm of the anchor-simplex centroid; graph
    columns then stay inside the simplex instead of saturating at vertices.
    """
    config = config.resolve(dataset)
    if config.normalize:
        dataset = scale_views(dataset, 1.0 / np.sqrt(config.anchors))
    return dataset, config


def fit(dataset, config: model.SolverConfig | None = None, callback=None) -> ClusteringResult:
    """Run the alternating solver and cluster the fused graph.

    ``callback(iteration, state)`` is invoked after every completed
    iteration. Stops when the relative objective decrease drops below
    ``rel_tol`` (checked from the second iteration on, since the first
    iteration starts from unit reweighting) or after ``max_iter`` iterations.
    Labels are returned in view-1 sample order.
    """
    dataset, config = prepare(dataset, config or model.SolverConfig())
    state = model.init_state(dataset, config)
    prev = initial = model.objective(state, dataset, config.alpha, config.mu)
    trace = IterationTrace()
    converged = False
    start = time.perf_counter()
    for it in range(1, config.max_iter + 1):
        iterate(state, dataset, config)
        obj = model.objective(state, dataset, config.alpha, config.mu)
        if not np.isfinite(obj):
            raise NumericalFailure(f"objective became non-finite at iteration {it}", iteration=it)
        trace.records.append(
            IterationRecord(
                iteration=it, objective=obj, errors=model.view_errors(state, dataset),
                phi=state.phi.copy(), template=state.template, seconds=time.perf_counter() - start,
            )
        )
        log.debug("iter %d objective %.10g template %d", it, obj, state.template + 1)
        if callback is not None:
            callback(it, state)
        if it >= 2 and (obj == 0 or (prev - obj) / obj < config.rel_tol):
            converged = True
            break
        prev = obj

    fused = fuse_graphs(state)
    embedding, template_labels = embed_and_cluster(fused, dataset.k, seed=config.seed)
    labels = np.empty_like(template_labels)
    labels[state.pi[0]] = template_labels
    return ClusteringResult(
        fused_graph=fused, embedding=embedding, labels=labels, state=state, trace=trace,
        config=config, initial_objective=initial, converged=converged,
    )
