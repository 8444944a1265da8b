"""Command-line driver: ``synth``, ``run`` and ``eval`` subcommands.

Exit codes: 0 success, 1 runtime or numerical failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import metrics
from .data import load_dataset, make_blobs, save_dataset, synthesize_unaligned
from .errors import ConfigurationError, LoadError, NumericalFailure, VuclustError
from .model import SolverConfig
from .solver import fit

log = logging.getLogger("vuclust")

REPORT_FMT = "%.9g"


class UsageError(Exception):
    pass


def parse_blobs(text: str) -> dict:
    """Parse ``n=300,k=3,v=3,dims=5:5:5,sep=20[,noise=1]``."""
    fields = {}
    for part in text.split(","):
        if "=" not in part:
            raise UsageError(f"--blobs entry {part!r} is not key=value")
        key, value = (s.strip() for s in part.split("=", 1))
        fields[key] = value
    try:
        out = {
            "n": int(fields.pop("n")),
            "k": int(fields.pop("k")),
            "v": int(fields.pop("v")),
            "separation": float(fields.pop("sep")),
        }
        dims = fields.pop("dims", None)
        out["dims"] = [int(d) for d in dims.split(":")] if dims else [out["k"]] * out["v"]
        if "noise" in fields:
            out["noise"] = float(fields.pop("noise"))
    except KeyError as exc:
        raise UsageError(f"--blobs is missing {exc.args[0]}=") from None
    except ValueError as exc:
        raise UsageError(f"--blobs has a bad value ({exc})") from None
    if fields:
        raise UsageError(f"--blobs has unknown keys: {', '.join(sorted(fields))}")
    return out


def write_report(path, values: dict) -> None:
    lines = []
    for key, value in values.items():
        if isinstance(value, (int, np.integer)):
            lines.append(f"{key}={int(value)}")
        else:
            lines.append(f"{key}={REPORT_FMT % value}")
    Path(path).write_text("\n".join(lines) + "\n")


def read_report(path) -> dict:
    out = {}
    for line in Path(path).read_text().splitlines():
        if "=" in line:
            key, value = line.split("=", 1)
            out[key] = int(value) if value.lstrip("-").isdigit() else float(value)
    return out


def write_trace(path, result) -> None:
    v = result.state.v
    header = ["iter", "objective", "template"] + [f"phi_{i}" for i in range(1, v + 1)]
    lines = [",".join(header)]
    for rec in result.trace:
        row = [str(rec.iteration), REPORT_FMT % rec.objective, str(rec.template + 1)]
        row += [REPORT_FMT % p for p in rec.phi]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n")


def _load(path):
    if not Path(path).is_dir():
        raise UsageError(f"dataset directory {path} does not exist")
    return load_dataset(path)


def cmd_synth(args) -> int:
    if not 0.0 <= args.rho <= 1.0:
        raise UsageError("--rho must lie in [0, 1]")
    if (args.blobs is None) == (args.input is None):
        raise UsageError("give exactly one of --blobs or --input")
    if args.blobs is not None:
        params = parse_blobs(args.blobs)
        try:
            base = make_blobs(seed=args.seed, **params)
        except VuclustError as exc:
            raise UsageError(str(exc)) from None
    else:
        base = _load(args.input)
    dataset = synthesize_unaligned(base, args.rho, args.seed)
    save_dataset(dataset, args.out)
    log.info("wrote %d-view dataset (n=%d, rho=%g) to %s", dataset.v, dataset.n, dataset.rho, args.out)
    return 0


def _config_from_args(args, seed) -> SolverConfig:
    try:
        return SolverConfig(
            alpha=args.alpha, mu=args.mu, anchors=args.anchors, latent_dim=args.latent_dim,
            max_iter=args.max_iter, rel_tol=args.rel_tol, seed=seed, align=not args.no_align,
            init=args.init, state_probs=args.state_probs, normalize=not args.no_normalize,
        )
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None


def cmd_run(args) -> int:
    if args.restarts < 1:
        raise UsageError("--restarts must be at least 1")
    configs = [_config_from_args(args, args.seed + r) for r in range(args.restarts)]
    dataset = _load(args.data)
    try:
        configs[0].resolve(dataset)
    except ConfigurationError as exc:
        raise UsageError(str(exc)) from None

    start = time.perf_counter()
    best = None
    for config in configs:
        result = fit(dataset, config)
        log.info("seed %d: objective %.9g after %d iterations", config.seed, result.objective, result.iterations)
        if best is None or result.objective < best.objective:
            best = result
    seconds = time.perf_counter() - start

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    report = {}
    if dataset.labels is not None:
        report["acc"] = metrics.accuracy(dataset.labels, best.labels)
        report["nmi"] = metrics.nmi(dataset.labels, best.labels)
        report["fscore"] = metrics.pairwise_fscore(dataset.labels, best.labels)
    est = best.correspondences()
    for i, (e, t) in enumerate(zip(est, dataset.truth_perms), start=1):
        report[f"perm_recovery_{i}"] = metrics.permutation_recovery(e, t, dataset.aligned_count)
    report["objective"] = best.objective
    report["iters"] = best.iterations
    report["seconds"] = seconds
    write_report(out / "report.txt", report)
    write_trace(out / "trace.csv", best)
    np.savetxt(out / "labels.txt", best.labels + 1, fmt="%d")
    for i, e in enumerate(est, start=1):
        np.savetxt(out / f"est_perm_{i}.txt", e + 1, fmt="%d")
    return 0


def cmd_eval(args) -> int:
    dataset = _load(args.data)
    if dataset.labels is None:
        raise UsageError(f"dataset {args.data} has no labels.txt")
    try:
        pred = np.loadtxt(args.pred, dtype=int, ndmin=1) - 1
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read predicted labels {args.pred} ({exc})") from None
    if pred.shape != dataset.labels.shape:
        raise UsageError(f"{args.pred} has {pred.size} labels, dataset has {dataset.n}")
    report = {
        "acc": metrics.accuracy(dataset.labels, pred),
        "nmi": metrics.nmi(dataset.labels, pred),
        "fscore": metrics.pairwise_fscore(dataset.labels, pred),
    }
    if args.perms is not None:
        for i, truth in enumerate(dataset.truth_perms, start=1):
            path = Path(args.perms) / f"est_perm_{i}.txt"
            try:
                est = np.loadtxt(path, dtype=int, ndmin=1) - 1
            except (OSError, ValueError) as exc:
                raise UsageError(f"cannot read {path} ({exc})") from None
            try:
                report[f"perm_recovery_{i}"] = metrics.permutation_recovery(est, truth, dataset.aligned_count)
            except VuclustError as exc:
                raise UsageError(f"{path}: {exc}") from None
    out = Path(args.out)
    if out.suffix != ".txt":
        out.mkdir(parents=True, exist_ok=True)
        out = out / "report.txt"
    else:
        out.parent.mkdir(parents=True, exist_ok=True)
    write_report(out, report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vuclust", description="View-unaligned multi-view clustering.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a view-unaligned dataset directory")
    p.add_argument("--blobs", help="n=..,k=..,v=..,dims=d1:d2:..,sep=..[,noise=..]")
    p.add_argument("--input", help="aligned dataset directory to shuffle instead of blobs")
    p.add_argument("--rho", type=float, required=True, help="fraction of samples kept aligned")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="cluster a dataset and write report.txt and trace.csv")
    p.add_argument("data", help="dataset directory")
    p.add_argument("--alpha", type=float, default=1.5, help="view-weight exponent, > 1")
    p.add_argument("--mu", type=float, default=1e-2, help="alignment trade-off, > 0")
    p.add_argument("--anchors", type=int, default=None, help="number of anchors (default k)")
    p.add_argument("--latent-dim", type=int, default=None, help="latent dimension (default anchors)")
    p.add_argument("--max-iter", type=int, default=60)
    p.add_argument("--rel-tol", type=float, default=1e-7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--restarts", type=int, default=1, help="keep the lowest objective over this many seeds")
    p.add_argument("--no-align", action="store_true", help="keep every permutation at the identity")
    p.add_argument("--init", choices=("pca", "random"), default="pca")
    p.add_argument("--state-probs", choices=("graph", "features"), default="graph",
                   help="statistic whose variance orders the matching")
    p.add_argument("--no-normalize", action="store_true", help="use the views at their raw scale")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score predicted labels against a dataset")
    p.add_argument("--data", required=True, help="dataset directory with labels.txt")
    p.add_argument("--pred", required=True, help="predicted labels, one 1-based id per line")
    p.add_argument("--perms", default=None, help="directory holding est_perm_<i>.txt files")
    p.add_argument("--out", required=True, help="output directory or .txt report path")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))
    except NumericalFailure as exc:
        print(f"error: numerical failure at iteration {exc.iteration}: {exc}", file=sys.stderr)
        return 1
    except (LoadError, VuclustError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
