"""Multi-view datasets, their on-disk directory format, and unaligned synthesis.

A dataset directory holds::

    manifest.txt    key=value lines: n, v, k, rho, seed, view_<i>_file, view_<i>_rows
    view_<i>.txt    one matrix row per line, space separated, 17 significant digits
    labels.txt      optional, one 1-based class id per line in view-1 sample order
    perm_<i>.txt    optional, line j holds the 1-based view-1 index of view-i column j

Views are stored features x samples. In memory, labels and permutations are
0-based integer arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError, LoadError

FLOAT_FMT = "%.17g"


def aligned_count(rho: float, n: int) -> int:
    """Number of leading samples whose correspondence is known."""
    # guard against 0.5 * 4 -> 2.0000000000000004 style rounding
    return min(n, math.ceil(round(rho * n, 9)))


def is_bijection(perm, n: int | None = None) -> bool:
    perm = np.asarray(perm)
    n = len(perm) if n is None else n
    return perm.shape == (n,) and np.array_equal(np.sort(perm), np.arange(n))


def inverse_permutation(perm) -> np.ndarray:
    perm = np.asarray(perm)
    inv = np.empty_like(perm)
    inv[perm] = np.arange(len(perm))
    return inv


@dataclass(frozen=True)
class MultiViewDataset:
    views: list
    labels: np.ndarray | None = None
    rho: float = 1.0
    truth_perms: list | None = None
    k: int | None = None
    seed: int | None = None

    def __post_init__(self):
        views = [np.asarray(x, dtype=float) for x in self.views]
        if not views:
            raise InvalidArgumentError("a dataset needs at least one view")
        n = views[0].shape[1]
        for i, x in enumerate(views):
            if x.ndim != 2 or x.shape[1] != n:
                raise InvalidArgumentError(f"view {i + 1} has shape {x.shape}, expected (*, {n})")
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidArgumentError(f"rho must lie in [0, 1], got {self.rho}")
        object.__setattr__(self, "views", views)
        if self.truth_perms is None:
            perms = [np.arange(n) for _ in views]
        else:
            perms = [np.asarray(p, dtype=int) for p in self.truth_perms]
        if len(perms) != len(views):
            raise InvalidArgumentError("need one truth permutation per view")
        a = aligned_count(self.rho, n)
        for i, p in enumerate(perms):
            if not is_bijection(p, n):
                raise InvalidArgumentError(f"truth permutation of view {i + 1} is not a bijection")
            if not np.array_equal(p[:a], np.arange(a)):
                raise InvalidArgumentError(f"truth permutation of view {i + 1} moves the aligned block")
        object.__setattr__(self, "truth_perms", perms)
        if self.labels is not None:
            labels = np.asarray(self.labels, dtype=int)
            if labels.shape != (n,):
                raise InvalidArgumentError(f"labels must have length {n}")
            object.__setattr__(self, "labels", labels)
        if self.k is None and self.labels is not None:
            object.__setattr__(self, "k", int(len(np.unique(self.labels))))

    @property
    def n(self) -> int:
        return self.views[0].shape[1]

    @property
    def v(self) -> int:
        return len(self.views)

    @property
    def dims(self) -> list[int]:
        return [x.shape[0] for x in self.views]

    @property
    def aligned_count(self) -> int:
        return aligned_count(self.rho, self.n)

    def realigned(self) -> MultiViewDataset:
        """Undo the recorded shuffles, returning the fully aligned dataset."""
        views = []
        for x, p in zip(self.views, self.truth_perms):
            views.append(x[:, inverse_permutation(p)])
        return replace(self, views=views, rho=1.0, truth_perms=None)


@dataclass
class DatasetManifest:
    n: int
    v: int
    k: int | None
    rho: float
    seed: int | None
    files: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"n={self.n}", f"v={self.v}"]
        lines.append(f"k={'' if self.k is None else self.k}")
        lines.append(f"rho={self.rho!r}")
        lines.append(f"seed={'' if self.seed is None else self.seed}")
        for i, (name, rows) in enumerate(zip(self.files, self.rows), start=1):
            lines.append(f"view_{i}_file={name}")
            lines.append(f"view_{i}_rows={rows}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str, path=None) -> DatasetManifest:
        kv = {}
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise LoadError(f"line {lineno} is not key=value", path)
            key, value = line.split("=", 1)
            kv[key.strip()] = value.strip()
        try:
            n, v = int(kv["n"]), int(kv["v"])
            k = int(kv["k"]) if kv.get("k") else None
            rho = float(kv.get("rho", "1"))
            seed = int(kv["seed"]) if kv.get("seed") else None
            files = [kv[f"view_{i}_file"] for i in range(1, v + 1)]
            rows = [int(kv[f"view_{i}_rows"]) for i in range(1, v + 1)]
        except KeyError as exc:
            raise LoadError(f"missing manifest key {exc.args[0]}", path) from None
        except ValueError as exc:
            raise LoadError(f"bad manifest value ({exc})", path) from None
        return cls(n=n, v=v, k=k, rho=rho, seed=seed, files=files, rows=rows)


def _read_matrix(path: Path) -> np.ndarray:
    try:
        x = np.loadtxt(path, dtype=float, ndmin=2)
    except (OSError, ValueError) as exc:
        raise LoadError(f"unreadable matrix ({exc})", path) from None
    if not np.all(np.isfinite(x)):
        raise LoadError("non-finite entries", path)
    return x


def _read_ints(path: Path) -> np.ndarray:
    try:
        return np.loadtxt(path, dtype=int, ndmin=1)
    except (OSError, ValueError) as exc:
        raise LoadError(f"unreadable integer list ({exc})", path) from None


def load_dataset(path) -> MultiViewDataset:
    root = Path(path)
    manifest_path = root / "manifest.txt"
    try:
        text = manifest_path.read_text()
    except OSError as exc:
        raise LoadError(f"cannot read manifest ({exc.strerror})", manifest_path) from None
    manifest = DatasetManifest.parse(text, manifest_path)

    views = []
    for name, rows in zip(manifest.files, manifest.rows):
        x = _read_matrix(root / name)
        if x.shape != (rows, manifest.n):
            raise LoadError(f"expected {rows}x{manifest.n} matrix, found {x.shape[0]}x{x.shape[1]}", root / name)
        views.append(x)

    labels = None
    if (root / "labels.txt").exists():
        labels = _read_ints(root / "labels.txt") - 1
        if labels.shape != (manifest.n,):
            raise LoadError(f"expected {manifest.n} labels, found {labels.size}", root / "labels.txt")

    perm_files = [root / f"perm_{i}.txt" for i in range(1, manifest.v + 1)]
    if any(p.exists() for p in perm_files):
        perms, rho = [], manifest.rho
        for p in perm_files:
            perm = _read_ints(p) - 1 if p.exists() else np.arange(manifest.n)
            if not is_bijection(perm, manifest.n):
                raise LoadError("not a permutation of 1..n", p)
            perms.append(perm)
    else:
        perms, rho = None, 1.0

    try:
        return MultiViewDataset(views, labels=labels, rho=rho, truth_perms=perms, k=manifest.k, seed=manifest.seed)
    except InvalidArgumentError as exc:
        raise LoadError(str(exc), root) from None


def save_dataset(dataset: MultiViewDataset, path) -> Path:
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    files = [f"view_{i}.txt" for i in range(1, dataset.v + 1)]
    manifest = DatasetManifest(
        n=dataset.n, v=dataset.v, k=dataset.k, rho=dataset.rho, seed=dataset.seed,
        files=files, rows=dataset.dims,
    )
    (root / "manifest.txt").write_text(manifest.to_text())
    for name, x in zip(files, dataset.views):
        np.savetxt(root / name, x, fmt=FLOAT_FMT, delimiter=" ")
    if dataset.labels is not None:
        np.savetxt(root / "labels.txt", dataset.labels + 1, fmt="%d")
    for i, p in enumerate(dataset.truth_perms, start=1):
        np.savetxt(root / f"perm_{i}.txt", p + 1, fmt="%d")
    return root


def scale_views(dataset: MultiViewDataset, target: float) -> MultiViewDataset:
    """Rescale every view by one scalar so its mean column norm equals ``target``."""
    views = []
    for x in dataset.views:
        mean_norm = np.linalg.norm(x, axis=0).mean()
        views.append(x * (target / mean_norm) if mean_norm > 0 else x.copy())
    return replace(dataset, views=views)


def synthesize_unaligned(dataset: MultiViewDataset, rho: float, seed: int) -> MultiViewDataset:
    """Shuffle the unaligned tail of views 2..v with independent seeded permutations.

    View 1 keeps its order and the labels stay in view-1 order. The applied
    shuffles are recorded so that ``truth_perms[i][j]`` is the view-1 index of
    column ``j`` of view ``i``.
    """
    if not 0.0 <= rho <= 1.0:
        raise InvalidArgumentError(f"rho must lie in [0, 1], got {rho}")
    if any(not np.array_equal(p, np.arange(dataset.n)) for p in dataset.truth_perms):
        raise InvalidArgumentError("input dataset must be fully aligned")
    n, a = dataset.n, aligned_count(rho, dataset.n)
    rng = np.random.default_rng(seed)
    views, perms = [dataset.views[0].copy()], [np.arange(n)]
    for x in dataset.views[1:]:
        perm = np.arange(n)
        perm[a:] = a + rng.permutation(n - a)
        views.append(x[:, perm])
        perms.append(perm)
    return MultiViewDataset(views, labels=dataset.labels, rho=rho, truth_perms=perms, k=dataset.k, seed=seed)


def make_blobs(n: int, k: int, v: int, dims, separation: float, seed: int = 0, noise: float = 1.0) -> MultiViewDataset:
    """Gaussian clusters sharing one label vector across ``v`` views.

    In every view the ``k`` cluster means sit on a regular simplex with
    pairwise distance ``separation``, randomly rotated into the view's
    feature space, and samples get isotropic noise of scale ``noise``.
    """
    dims = list(dims)
    if len(dims) != v:
        raise InvalidArgumentError(f"dims has {len(dims)} entries for {v} views")
    if not n >= k >= 1:
        raise InvalidArgumentError(f"need n >= k >= 1, got n={n}, k={k}")
    rng = np.random.default_rng(seed)
    labels = np.sort(np.arange(n) % k)
    # regular simplex with unit edge, expressed in k - 1 coordinates
    vertices = np.eye(k) / np.sqrt(2.0)
    u, s, _ = np.linalg.svd(vertices - vertices.mean(axis=0))
    simplex = u[:, : k - 1] * s[: k - 1]
    views = []
    for d in dims:
        # random orthonormal embedding; isometric whenever d >= k - 1
        width = max(d, k - 1, 1)
        basis, _ = np.linalg.qr(rng.standard_normal((width, width)))
        means = separation * simplex @ basis[: k - 1, :d]
        x = means[labels] + noise * rng.standard_normal((n, d))
        views.append(x.T)
    return MultiViewDataset(views, labels=labels, rho=1.0, k=k, seed=seed)
