"""Command-line entry point: ``ismap gen | embed | classify``.

Every run writes a JSON echo of the fully resolved configuration so it can
be repeated exactly.  Exit codes: 0 success, 2 configuration or usage error,
3 I/O or parse error, 4 numerical abort.
"""

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from ._kernels import BACKEND, HAS_NUMBA
from .classify import nearest_centroid_baseline, save_predictions_csv, score
from .constraints import ANCHOR_STRATEGIES
from .dataset import (
    LABELINGS,
    Dataset,
    SwissRollSpec,
    gen_swiss_roll,
    load_csv,
    load_magic_gamma,
    save_csv,
    split_train_test,
    subsample,
)
from .embed import save_coords_csv, save_spectrum_csv
from .errors import NumericalAbort, ParameterError, ParseError
from .pipeline import MODES, embed_dataset
from .solver import INITS, SolverConfig

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 0, 2, 3, 4

# flags that map one-to-one onto SolverConfig fields
_SOLVER_FLAGS = ("rank", "seed", "init", "max_outer", "max_inner", "feas_tol")
# bookkeeping dests that may not appear in a --config file
_RESERVED = ("command", "config", "func")


def _add_common(p):
    p.add_argument("--config", metavar="JSON", help="JSON file whose keys override flags")
    p.add_argument("--threads", type=int, default=None,
                   help="numba worker threads (default: all cores)")


def _add_solver(p, mode=True):
    if mode:
        p.add_argument("--mode", choices=MODES, default="ism")
    p.add_argument("--k", type=int, default=5, help="neighbourhood size")
    p.add_argument("--rank", type=int, default=3, help="embedding dimension")
    p.add_argument("--objective", choices=("mvu", "mfnu"), default="mfnu",
                   help="objective used with --mode ism")
    p.add_argument("--margin", type=float, default=0.0, help="separation margin")
    p.add_argument("--anchors", choices=ANCHOR_STRATEGIES, default="first_labeled")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--init", choices=INITS, default="random_gaussian")
    p.add_argument("--max-outer", type=int, default=50)
    p.add_argument("--max-inner", type=int, default=1000)
    p.add_argument("--feas-tol", type=float, default=0.1,
                   help="target relative RMS equality error, in percent")


def build_parser():
    parser = argparse.ArgumentParser(prog="ismap", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ismap {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic dataset")
    g.add_argument("--swiss-roll", action="store_true", required=True)
    g.add_argument("--n", type=int, default=1500)
    g.add_argument("--labeling", choices=LABELINGS, default="none")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--height", type=float, default=15.0)
    g.add_argument("--noise-sd", type=float, default=0.0)
    g.add_argument("--out", required=True)
    _add_common(g)
    g.set_defaults(func=cmd_gen)

    e = sub.add_parser("embed", help="unfold a dataset, optionally with class constraints")
    e.add_argument("--input", required=True)
    e.add_argument("--header", action="store_true", help="skip the first CSV row")
    _add_solver(e)
    e.add_argument("--out", required=True, metavar="PREFIX")
    _add_common(e)
    e.set_defaults(func=cmd_embed)

    c = sub.add_parser("classify", help="transductive classification of unlabeled points")
    src = c.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="CSV with partial labels in the last column")
    src.add_argument("--magic", metavar="FILE", help="UCI magic04.data file")
    c.add_argument("--header", action="store_true")
    c.add_argument("--n-sub", type=int, default=None, help="subsample this many rows first")
    c.add_argument("--n-train", type=int, default=None,
                   help="keep labels on this many points, hide the rest")
    c.add_argument("--split-seed", type=int, default=0)
    c.add_argument("--truth", default=None, help="CSV of ground-truth labels, one row per point")
    c.add_argument("--standardize", action="store_true", help="z-score features before the run")
    _add_solver(c, mode=False)
    c.add_argument("--out", required=True, metavar="PREFIX")
    _add_common(c)
    c.set_defaults(func=cmd_classify, mode="ism")
    return parser


def _apply_config(args):
    """Override parsed flags from ``--config``; returns the extra solver dict."""
    if not args.config:
        return {}
    with open(args.config) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParameterError("config", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise ParameterError("config", "top level must be an object")
    allowed = set(vars(args)) - set(_RESERVED)
    solver = doc.pop("solver", {})
    if not isinstance(solver, dict):
        raise ParameterError("solver", "must be an object")
    for key, value in doc.items():
        dest = key.replace("-", "_")
        if dest not in allowed:
            raise ParameterError(key, "unknown config key")
        setattr(args, dest, value)
    return solver


def _solver_config(args, extra):
    d = {name: getattr(args, name) for name in _SOLVER_FLAGS}
    d.update(extra)
    return SolverConfig.from_dict(d)


def _set_threads(n):
    # numba already defaults to every core; only touch the pool when asked
    if n is None or not HAS_NUMBA:
        return
    import numba

    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the kernels are serial; skip probing an outdated TBB install
        numba.config.THREADING_LAYER = "workqueue"
    top = numba.config.NUMBA_NUM_THREADS
    if not 1 <= n <= top:
        raise ParameterError("threads", f"must be in 1..{top}")
    numba.set_num_threads(n)


def _echo(args, solver=None):
    doc = {k: v for k, v in vars(args).items() if k not in ("func",)}
    if solver is not None:
        doc["solver"] = solver.to_dict()
    doc["backend"] = BACKEND
    doc["version"] = __version__
    return doc


def _write_json(path, doc):
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialise {type(o).__name__}")


def _summary(report, extra=""):
    r = report
    status = "converged" if r.converged else "not converged"
    print(f"{status}: eq_rrmse={r.eq_rrmse:.4g}% violation_rate={r.sep_violation_rate:.4g} "
          f"outer={r.outer_iterations} inner={r.inner_iterations} time={r.wall_time:.1f}s{extra}")


def cmd_gen(args, solver_extra):
    if solver_extra:
        raise ParameterError("solver", "not used by gen")
    spec = SwissRollSpec(n_points=args.n, height=args.height, noise_sd=args.noise_sd,
                         labeling=args.labeling, seed=args.seed)
    ds = gen_swiss_roll(spec)
    save_csv(ds, args.out)
    print(f"wrote {ds.n_points} points to {args.out}")
    return EXIT_OK


def _report_doc(result, args, config):
    doc = result.report.to_dict()
    doc["spectrum"] = result.spectrum
    doc["energy"] = result.energy
    doc["config"] = _echo(args, config)
    return doc


def cmd_embed(args, solver_extra):
    config = _solver_config(args, solver_extra)
    ds = load_csv(args.input, header=args.header)
    result = embed_dataset(ds, mode=args.mode, k=args.k, config=config, objective=args.objective,
                           margin=args.margin, anchor_strategy=args.anchors, seed=args.seed)
    save_coords_csv(result, f"{args.out}.coords.csv", labels=ds.labels)
    save_spectrum_csv(result, f"{args.out}.spectrum.csv")
    doc = _report_doc(result, args, config)
    extra = ""
    if result.prediction is not None:
        mask = ds.labeled_mask
        doc["labeled_score"] = score(result.prediction, ds.labels, mask)
        doc["anchors"] = result.anchors.anchors
        extra = f" labeled_score={doc['labeled_score']:.2f}%"
    _write_json(f"{args.out}.report.json", doc)
    _summary(result.report, extra)
    return EXIT_OK


def _read_truth(path, n):
    try:
        truth = np.loadtxt(path, delimiter=",", dtype=np.int64, ndmin=1)
    except ValueError:
        # a dataset CSV: take its label column
        ds = load_csv(path, has_labels=True)
        truth = ds.labels
    if truth.ndim == 2:
        truth = truth[:, -1]
    if truth.shape != (n,):
        raise ParameterError("truth", f"need {n} labels, got {truth.shape[0]}")
    return truth


def _load_classify_input(args):
    if args.magic:
        ds = load_magic_gamma(args.magic)
    else:
        ds = load_csv(args.input, header=args.header)
    if args.n_sub is not None:
        ds = subsample(ds, args.n_sub, args.split_seed)
    if args.n_train is not None:
        ds = split_train_test(ds, args.n_train, args.split_seed)
    elif args.magic:
        raise ParameterError("n_train", "required with --magic")
    if args.truth is not None:
        if ds.truth is not None:
            raise ParameterError("truth", "ground truth already comes from --n-train")
        truth = _read_truth(args.truth, ds.n_points)
        ds = Dataset(points=ds.points, labels=ds.labels, ids=ds.ids, truth=truth)
    if args.standardize:
        sd = ds.points.std(axis=0)
        pts = (ds.points - ds.points.mean(axis=0)) / np.where(sd > 0, sd, 1.0)
        ds = Dataset(points=pts, labels=ds.labels, ids=ds.ids, truth=ds.truth)
    return ds


def cmd_classify(args, solver_extra):
    config = _solver_config(args, solver_extra)
    ds = _load_classify_input(args)
    if ds.labels is None or not ds.labeled_mask.any():
        raise ParameterError("mode", "ism requires labels")
    result = embed_dataset(ds, mode="ism", k=args.k, config=config, objective=args.objective,
                           margin=args.margin, anchor_strategy=args.anchors, seed=args.seed)
    pred = result.prediction
    save_predictions_csv(pred, f"{args.out}.predictions.csv", ids=ds.ids)
    labeled = ds.labeled_mask
    doc = _report_doc(result, args, config)
    doc["labeled_score"] = score(pred, ds.labels, labeled)
    doc["score"] = None
    doc["baseline_score"] = None
    test = ~labeled
    if ds.truth is not None and test.any():
        doc["score"] = score(pred, ds.truth, test)
        base = nearest_centroid_baseline(ds.points, ds.labels)
        doc["baseline_score"] = score(base, ds.truth, test)
    doc["n_labeled"] = int(labeled.sum())
    doc["n_test"] = int(test.sum())
    _write_json(f"{args.out}.score.json", doc)
    extra = f" labeled_score={doc['labeled_score']:.2f}%"
    if doc["score"] is not None:
        extra += f" score={doc['score']:.2f}% baseline={doc['baseline_score']:.2f}%"
    _summary(result.report, extra)
    return EXIT_OK


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        solver_extra = _apply_config(args)
        _set_threads(args.threads)
        return args.func(args, solver_extra)
    except ParameterError as exc:
        print(f"ismap: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ParseError, OSError) as exc:
        print(f"ismap: error: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalAbort as exc:
        print(f"ismap: numerical abort: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
