"""Command-line entry point: ``stmc model sample | dist | check | experiment``."""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import discretize as D
from . import distances as Dist
from . import harness as H
from . import models as M
from .core import (
    StructureError,
    TimedMetricSpace,
    causal_relation,
    check_causal_axioms,
    load,
    save,
    validate,
)

EXIT_OK = 0
EXIT_FLAGS = 2
EXIT_DISCONNECTED = 3
EXIT_IO = 4
EXIT_PRECONDITION = 5
EXIT_INVALID = 6
EXIT_EXPERIMENT = 7

DIST_OPS = ("gh", "kappa-gh", "timeless", "level-sup", "level-lp", "strip-sup", "strip-lp", "tau-h", "bb-gh", "fd-hh")


class CliError(Exception):
    def __init__(self, code: int, msg: str):
        super().__init__(msg)
        self.code = code


# ---------------------------------------------------------------------------
# flag grammar


def _floats(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()] if text else []


def parse_warp(text: str) -> M.Warp:
    """``family:param[,param]``, e.g. ``const:1`` or ``sinusoidal:0.5,6.283``."""
    fam, _, rest = text.partition(":")
    vals = _floats(rest)
    names = {"const": ["c"], "linear": [], "one_minus_t": [], "sinusoidal": ["a", "omega"]}
    fam = fam.replace("-", "_")
    if fam not in names or len(vals) > len(names[fam]):
        raise argparse.ArgumentTypeError(f"bad warp {text!r}")
    return M.Warp(fam, dict(zip(names[fam], vals)))


def parse_space(text: str) -> M.Spatial:
    """``circle:L``, ``torus:L1,L2`` or ``euclidean:dim[,extent]``."""
    typ, _, rest = text.partition(":")
    vals = _floats(rest)
    if typ == "circle" and len(vals) <= 1:
        return M.Spatial("circle", dict(zip(["L"], vals)))
    if typ in ("torus", "flat_torus", "flat-torus") and len(vals) <= 2:
        return M.Spatial("flat_torus", dict(zip(["L1", "L2"], vals)))
    if typ == "euclidean" and 1 <= len(vals) <= 2:
        return M.Spatial("euclidean", dict(zip(["dim", "extent"], vals)))
    raise argparse.ArgumentTypeError(f"bad space {text!r}")


def parse_window(text: str) -> tuple[float, float]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise argparse.ArgumentTypeError(f"window must be lo:hi, got {text!r}")
    return float(lo), float(hi)


def parse_region(text: str) -> M.Region:
    """``strip``, ``past-of-point:t,x...`` or ``past-of-ring:R,tau_max``."""
    typ, _, rest = text.partition(":")
    typ = typ.replace("-", "_")
    vals = _floats(rest)
    if typ == "strip":
        return M.Region("strip")
    if typ == "past_of_point" and len(vals) >= 2:
        return M.Region("past_of_point", {"apex": vals})
    if typ == "past_of_ring" and len(vals) == 2:
        return M.Region("past_of_ring", {"R": vals[0], "tau_max": vals[1]})
    raise argparse.ArgumentTypeError(f"bad region {text!r}")


def parse_nx(text: str):
    vals = [int(v) for v in text.split(",")]
    return vals[0] if len(vals) == 1 else tuple(vals)


# ---------------------------------------------------------------------------
# output helpers


def _dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=1, allow_nan=False)


def _writable(path: Path, force: bool) -> Path:
    if path.exists() and not force:
        raise CliError(EXIT_IO, f"{path} exists; pass --force to overwrite")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise CliError(EXIT_IO, str(e)) from e
    return path


def _write_text(path: Path, text: str, force: bool) -> None:
    _writable(path, force)
    try:
        path.write_text(text)
    except OSError as e:
        raise CliError(EXIT_IO, str(e)) from e


def _load_space(path: str) -> TimedMetricSpace:
    try:
        return load(path)
    except OSError as e:
        raise CliError(EXIT_IO, str(e)) from e
    except (StructureError, json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
        raise CliError(EXIT_INVALID, f"{path}: {e}") from e


def _threads(args) -> int | None:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("STMC_THREADS")
    return int(env) if env else None


# ---------------------------------------------------------------------------
# subcommands


def cmd_model_sample(args) -> int:
    kind = {"warped": "warped_product", "minkowski": "minkowski_region"}.get(args.kind, args.kind)
    try:
        model = M.SpacetimeModel(kind, args.space, args.warp, args.window, args.region)
        nodes = D.sample_grid(model, args.nt, args.nx, t_range=args.t_range, jitter=args.jitter, seed=args.seed)
        graph = D.build_causal_graph(model, nodes, args.window_radius)
    except (M.ModelError, ValueError) as e:
        raise CliError(EXIT_FLAGS, str(e)) from e
    try:
        space = D.null_distance_matrix(graph, _threads(args))
    except D.DisconnectedGraphError as e:
        raise CliError(EXIT_DISCONNECTED, str(e)) from e
    tau_hat = D.cosmological_time(graph)
    space = space.with_markers(
        coords={"t": graph.t.tolist(), "x": graph.x.tolist()},
        cosmological_time=tau_hat.tolist(),
    )
    if args.augment_bigbang:
        try:
            space = D.augment_big_bang(space)
        except D.AugmentationError as e:
            raise CliError(EXIT_PRECONDITION, str(e)) from e
    elif args.mark_initial is not None:
        space = D.mark_initial_set(space, args.mark_initial, slack=graph.meta["grid_spacing"])

    summary = {
        "n": space.n,
        "edges": int(len(graph.src)),
        "diameter": space.diameter(),
        "tau_range": [float(space.tau.min()), float(space.tau.max())],
        "cosmological_time_range": [float(tau_hat.min()), float(tau_hat.max())],
        "basepoint": space.basepoint,
        "initial_set_size": None if space.initial_set is None else len(space.initial_set),
        "big_bang_guard": space.meta.get("big_bang"),
    }
    if args.output:
        out = Path(args.output)
        _writable(out / "space.json", args.force)
        try:
            save(space, out / "space.json")
        except OSError as e:
            raise CliError(EXIT_IO, str(e)) from e
        _write_text(out / "graph.json", _dumps(graph.to_json()) + "\n", args.force)
        _write_text(out / "model.json", _dumps(model.to_json()) + "\n", args.force)
        summary["files"] = [str(out / f) for f in ("space.json", "graph.json", "model.json")]
    print(_dumps(summary))
    return EXIT_OK


def cmd_dist(args) -> int:
    X, Y = _load_space(args.a), _load_space(args.b)
    for name, S in (("first", X), ("second", Y)):
        if S.n:
            rep = validate(S, args.tol)
            if not rep.ok:
                raise CliError(EXIT_INVALID, f"{name} input is invalid: {sorted(rep.kinds())}")
    try:
        opts = Dist.Options(exact_max_n=args.exact_max_n, budget=args.budget, seed=args.seed,
                            normalized=args.normalized)
    except (ValueError, Dist.CapabilityError) as e:
        raise CliError(EXIT_FLAGS, str(e)) from e
    bins = None
    if args.bins:
        bins = Dist.Bins(tuple(_floats(args.bins)), args.half_width)
    grid = None
    if args.strip_levels:
        lo, hi = Dist.tau_range(X, Y)
        lv = np.linspace(lo, hi, args.strip_levels)
        grid = [(float(s), float(t)) for i, s in enumerate(lv) for t in lv[i:]]
    try:
        b = Dist.compute(args.op, X, Y, opts, p=args.p, bins=bins, grid=grid)
    except Dist.PreconditionError as e:
        raise CliError(EXIT_PRECONDITION, str(e)) from e
    except ValueError as e:
        raise CliError(EXIT_FLAGS, str(e)) from e
    text = _dumps(b.to_json(X.point_ids, Y.point_ids))
    if args.output:
        _write_text(Path(args.output), text + "\n", args.force)
    print(text)
    return EXIT_OK


def cmd_check(args) -> int:
    S = _load_space(args.space)
    rep = validate(S, args.tol)
    rel = causal_relation(S, args.eps)
    axioms = check_causal_axioms(rel, S)
    coords = S.meta.get("coords")
    model_doc = S.meta.get("model")
    n = S.n
    if coords is not None and model_doc is not None:
        model = M.model_from_json(model_doc)
        t = np.asarray(coords["t"], float)
        x = np.asarray(coords["x"], float).reshape(len(t), model.spatial.dim)
        idx = np.arange(len(t))
        i, j = np.meshgrid(idx, idx, indexing="ij")
        truth = M.causal_mask(model, t[i.ravel()], x[i.ravel()], t[j.ravel()], x[j.ravel()]).reshape(len(t), len(t))
        ours = rel.pairs[: len(t), : len(t)]
        reference = "model"
    else:
        truth = causal_relation(S, 0.0).pairs
        ours = rel.pairs
        reference = "exact"
    fraction = float((ours == truth).mean()) if n else 1.0
    out = {
        "valid": rep.ok,
        "validation": rep.to_dict(),
        "axioms": axioms.to_dict(),
        "eps": args.eps,
        "encoding_reference": reference,
        "encoding_fraction": fraction,
    }
    text = _dumps(H._clean(out))
    if args.output:
        _write_text(Path(args.output), text + "\n", args.force)
    print(text)
    return EXIT_OK if rep.ok else EXIT_INVALID


def cmd_experiment(args) -> int:
    try:
        cfg = H.load_config(args.config)
    except OSError as e:
        raise CliError(EXIT_IO, str(e)) from e
    except (ValueError, KeyError, TypeError, M.ModelError) as e:
        raise CliError(EXIT_FLAGS, f"bad config: {e}") from e
    if args.seed_given:
        cfg.seed = args.seed
    if _threads(args):
        cfg.threads = _threads(args)
    report = H.run(cfg)
    outdir = Path(args.output or cfg.output or ".")
    files = []
    if args.output or cfg.output:
        from .plotting import render

        _write_text(outdir / "report.json", _dumps(report.to_json()) + "\n", args.force)
        _write_text(outdir / "series.csv", report.csv(), args.force)
        for f in ("series.png", "sandwich.png", "definiteness.png"):
            _writable(outdir / f, args.force)
        files = [str(outdir / "report.json"), str(outdir / "series.csv")] + [str(p) for p in render(report, outdir)]
    summary = {
        "kind": report.kind,
        "verdict": "pass" if report.passed else "fail",
        "cases": len(report.cases),
        "failures": [c.name for c in report.failures()],
        "files": files,
    }
    print(_dumps(summary))
    return EXIT_OK if report.passed else EXIT_EXPERIMENT


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FLAGS, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0x5EED)")
    g.add_argument("--tol", type=float, default=argparse.SUPPRESS, help="validation tolerance (default 1e-9)")
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS, help="worker cap (env STMC_THREADS)")
    g.add_argument("--force", action="store_true", default=argparse.SUPPRESS, help="overwrite existing outputs")
    g.add_argument("-o", "--output", default=argparse.SUPPRESS, help="output file or directory")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = _Parser(prog="stmc", description=__doc__, parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    model = sub.add_parser("model", help="analytic models", parents=[common])
    msub = model.add_subparsers(dest="model_command", required=True, parser_class=_Parser)
    s = msub.add_parser("sample", help="sample a model into a timed metric space", parents=[common])
    s.add_argument("--kind", choices=["warped", "minkowski", "warped_product", "minkowski_region"], required=True)
    s.add_argument("--warp", type=parse_warp, default=M.Warp("const", {"c": 1.0}))
    s.add_argument("--space", type=parse_space, required=True)
    s.add_argument("--window", type=parse_window, required=True)
    s.add_argument("--region", type=parse_region, default=None)
    s.add_argument("--nt", type=int, required=True)
    s.add_argument("--nx", type=parse_nx, required=True)
    s.add_argument("--t-range", type=parse_window, default=None)
    s.add_argument("--window-radius", type=float, default=None)
    s.add_argument("--jitter", type=float, default=0.0)
    s.add_argument("--augment-bigbang", action="store_true")
    s.add_argument("--mark-initial", type=float, default=None, metavar="TOL")
    s.set_defaults(func=cmd_model_sample)

    d = sub.add_parser("dist", help="bound a distance between two spaces", parents=[common])
    d.add_argument("op", choices=DIST_OPS)
    d.add_argument("a")
    d.add_argument("b")
    d.add_argument("--exact-max-n", type=int, default=4)
    d.add_argument("--budget", type=int, default=10_000)
    d.add_argument("--p", type=float, default=1.0)
    d.add_argument("--bins", default=None, help="comma-separated level centers")
    d.add_argument("--half-width", type=float, default=0.0)
    d.add_argument("--strip-levels", type=int, default=None)
    d.add_argument("--normalized", action="store_true", help="take the p-th root of lp sums")
    d.set_defaults(func=cmd_dist)

    c = sub.add_parser("check", help="validate a space and its causal encoding", parents=[common])
    c.add_argument("space")
    c.add_argument("--eps", type=float, default=0.0)
    c.set_defaults(func=cmd_check)

    e = sub.add_parser("experiment", help="run an experiment config", parents=[common])
    e.add_argument("config")
    e.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = hasattr(args, "seed")
    defaults = {"seed": Dist.DEFAULT_SEED, "tol": 1e-9, "threads": None, "force": False, "output": None}
    for k, v in defaults.items():
        if not hasattr(args, k):
            setattr(args, k, v)
    if args.threads is not None and args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except CliError as e:
        print(f"stmc: {e}", file=sys.stderr)
        return e.code


if __name__ == "__main__":
    sys.exit(main())
