"""Command-line front end.

File-based composition: generate writes clouds or signals, distmat turns a
cloud into a distance matrix, ph turns a matrix into a diagram, bottleneck
and distortion compare, mds/embed project, changepoints runs the signal
pipeline end to end, experiment reproduces a named study. Every output
carries the effective configuration in its header, and every command is
reproducible from (config, seed).
"""

import argparse
import json
import math
import sys
from pathlib import Path

from . import _kernels, io
from .comparison import bottleneck, metric_distortion
from .experiments import EXPERIMENTS, run_experiment
from .geometry import (MANIFOLD_KINDS, gen_eyeglasses, gen_outliers,
                       gen_trefoil, gen_uniform_manifold, lorenz_series)
from .metric import (FermatParams, euclidean_matrix, fermat_matrix, knn_matrix,
                     mds_project, quotient_matrix, rescale_fermat)
from .persistence import persistent_homology, rips_filtration
from .signal import DelayParams, change_point_score, delay_embed, detect_peaks, evolving_diagrams

GENERATOR_KINDS = ("eyeglasses", "trefoil", "outliers", "lorenz") + MANIFOLD_KINDS


class UsageError(Exception):
    pass


def _parser():
    top = argparse.ArgumentParser(prog="fermatph", description=__doc__)
    top.add_argument("--threads", type=int, default=None,
                     help="worker threads, 0 = all cores (env FERMATPH_THREADS)")
    top.add_argument("--config", type=Path, default=None,
                     help="JSON file with defaults; explicit flags win")
    sub = top.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic cloud or signal")
    g.add_argument("--kind", required=True, choices=GENERATOR_KINDS)
    g.add_argument("--n", type=int)
    g.add_argument("--noise-sd", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--reach", type=float)
    g.add_argument("--center-dist", type=float)
    g.add_argument("--cloud", type=Path, help="base cloud (outliers)")
    g.add_argument("--m", type=int, help="outlier count")
    g.add_argument("--min-gap", type=float)
    g.add_argument("--t-max", type=float)
    g.add_argument("--dt", type=float)
    g.add_argument("--sigma", type=float)
    g.add_argument("--rho", type=float)
    g.add_argument("--beta", type=float)
    g.add_argument("--x0", type=str, help="comma-separated initial state")
    g.add_argument("--out", type=Path, required=True)

    d = sub.add_parser("distmat", help="distance matrix of a cloud")
    d.add_argument("--in", dest="inp", type=Path, required=True)
    d.add_argument("--kind", required=True, choices=("euclidean", "fermat", "knn", "quotient"))
    d.add_argument("--p", type=float)
    d.add_argument("--k", type=int)
    d.add_argument("--prune-k", type=int)
    d.add_argument("--outliers", type=Path, help="outlier cloud (quotient)")
    d.add_argument("--mu", type=float, help="rescale a fermat matrix by n^((p-1)/d)/mu")
    d.add_argument("--intrinsic-dim", type=int)
    d.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("ph", help="persistence diagram of a distance matrix")
    p.add_argument("--in", dest="inp", type=Path, required=True)
    p.add_argument("--max-dim", type=int)
    p.add_argument("--r", type=float)
    p.add_argument("--out", type=Path, required=True)

    b = sub.add_parser("bottleneck", help="bottleneck distance of two diagrams")
    b.add_argument("--dgm1", type=Path, required=True)
    b.add_argument("--dgm2", type=Path, required=True)
    b.add_argument("--degree", type=int)
    b.add_argument("--witness", type=Path, help="write the optimal matching JSON here")

    t = sub.add_parser("distortion", help="sup |D1 - D2| and the GH upper bound")
    t.add_argument("--d1", type=Path, required=True)
    t.add_argument("--d2", type=Path, required=True)

    m = sub.add_parser("mds", help="classical MDS projection of a matrix")
    m.add_argument("--in", dest="inp", type=Path, required=True)
    m.add_argument("--dim", type=int)
    m.add_argument("--out", type=Path, required=True)

    e = sub.add_parser("embed", help="delay embedding of a signal")
    e.add_argument("--in", dest="inp", type=Path, required=True)
    e.add_argument("--tau", type=int)
    e.add_argument("--dim", type=int)
    e.add_argument("--stride", type=int)
    e.add_argument("--out", type=Path, required=True)

    c = sub.add_parser("changepoints", help="bottleneck-derivative change-point scores")
    c.add_argument("--in", dest="inp", type=Path, required=True)
    c.add_argument("--tau", type=int)
    c.add_argument("--dim", type=int)
    c.add_argument("--stride", type=int)
    c.add_argument("--p", type=float)
    c.add_argument("--step", type=int)
    c.add_argument("--degree", type=int)
    c.add_argument("--window", type=int)
    c.add_argument("--z", type=float)
    c.add_argument("--recompute-prefixes", action="store_true", default=None)
    c.add_argument("--out", type=Path, required=True)

    x = sub.add_parser("experiment", help="run a named reproduction experiment")
    x.add_argument("--name", required=True)
    x.add_argument("--seed", type=int)
    x.add_argument("--out-dir", type=Path)
    return top


# defaults applied after the config merge; None means "must be provided"
_DEFAULTS = {
    "generate": {"n": None, "noise_sd": 0.0, "seed": 0, "reach": 0.5,
                 "center_dist": 2.0, "m": 10, "min_gap": None, "t_max": 20.0,
                 "dt": 0.01, "sigma": 10.0, "rho": 28.0, "beta": 8.0 / 3.0,
                 "x0": "1,1,1"},
    "distmat": {"p": 2.0, "k": None, "prune_k": None, "mu": None, "intrinsic_dim": None},
    "ph": {"max_dim": 1, "r": None},
    "bottleneck": {"degree": 1},
    "mds": {"dim": 2},
    "embed": {"tau": 1, "dim": 3, "stride": 1},
    "changepoints": {"tau": 15, "dim": 3, "stride": 1, "p": 2.0, "step": 50,
                     "degree": 1, "window": 5, "z": 3.0, "recompute_prefixes": False},
    "experiment": {"seed": 0, "out_dir": None},
}


def _merge_config(args):
    """Layer values: explicit flag > config file > built-in default."""
    cfg = {}
    if args.config is not None:
        cfg = json.loads(Path(args.config).read_text())
        if not isinstance(cfg, dict):
            raise UsageError("--config must contain a JSON object")
    merged = dict(_DEFAULTS.get(args.command, {}))
    for key, val in cfg.items():
        merged[key.replace("-", "_")] = val
    for key, val in vars(args).items():
        if key in ("config", "command", "threads"):
            continue
        if val is not None:
            merged[key] = val
    return merged


def _effective(merged):
    out = {}
    for k, v in merged.items():
        if v is None:
            continue
        if isinstance(v, Path):
            v = str(v)
        if isinstance(v, float) and math.isinf(v):
            v = "inf"
        out[k] = v
    return out


def _cmd_generate(ns):
    kind = ns["kind"]
    seed = int(ns["seed"])
    if kind == "lorenz":
        x0 = tuple(float(t) for t in str(ns["x0"]).split(","))
        ts = lorenz_series(t_max=ns["t_max"], dt=ns["dt"], sigma=ns["sigma"],
                           rho=ns["rho"], beta=ns["beta"], x0=x0,
                           noise_sd=ns["noise_sd"], seed=seed)
        io.save_time_series(ns["out"], ts, config=_effective(ns))
        return
    if kind == "outliers":
        if ns.get("cloud") is None:
            raise UsageError("generate --kind outliers requires --cloud")
        if ns.get("min_gap") is None:
            raise UsageError("generate --kind outliers requires --min-gap")
        base = io.load_point_cloud(ns["cloud"])
        cloud = gen_outliers(base, m=int(ns["m"]), min_gap=ns["min_gap"], seed=seed)
    elif ns.get("n") is None:
        raise UsageError(f"generate --kind {kind} requires --n")
    elif kind == "eyeglasses":
        cloud = gen_eyeglasses(int(ns["n"]), ns["noise_sd"], seed,
                               reach=ns["reach"], center_dist=ns["center_dist"])
    elif kind == "trefoil":
        cloud = gen_trefoil(int(ns["n"]), ns["noise_sd"], seed)
    else:
        cloud = gen_uniform_manifold(kind, int(ns["n"]), ns["noise_sd"], seed)
    io.save_point_cloud(ns["out"], cloud, config=_effective(ns))


def _cmd_distmat(ns):
    kind = ns["kind"]
    cloud = io.load_point_cloud(ns["inp"])
    if kind == "euclidean":
        D = euclidean_matrix(cloud)
    elif kind == "fermat":
        D = fermat_matrix(cloud, ns["p"], prune_k=ns.get("prune_k"))
        if ns.get("mu") is not None:
            if ns.get("intrinsic_dim") is None:
                raise UsageError("rescaling requires --intrinsic-dim")
            D = rescale_fermat(D, FermatParams(p=ns["p"], d=int(ns["intrinsic_dim"]),
                                               mu=ns["mu"]))
    elif kind == "knn":
        if ns.get("k") is None:
            raise UsageError("distmat --kind knn requires --k")
        D = knn_matrix(cloud, int(ns["k"]))
    else:
        if ns.get("outliers") is None:
            raise UsageError("distmat --kind quotient requires --outliers")
        Y = io.load_point_cloud(ns["outliers"])
        D = quotient_matrix(cloud, Y, ns["p"])
    io.save_distance_matrix(ns["out"], D, config=_effective(ns))


def _cmd_ph(ns):
    D = io.load_distance_matrix(ns["inp"])
    dgm = persistent_homology(rips_filtration(D, max_dim=int(ns["max_dim"]), r=ns.get("r")))
    io.save_diagram(ns["out"], dgm, config=_effective(ns))


def _cmd_bottleneck(ns):
    d1 = io.load_diagram(ns["dgm1"])
    d2 = io.load_diagram(ns["dgm2"])
    value, matching = bottleneck(d1, d2, int(ns["degree"]))
    if ns.get("witness") is not None:
        io.save_matching(ns["witness"], value, matching, config=_effective(ns))
    print(io.fmt(value))


def _cmd_distortion(ns):
    d1 = io.load_distance_matrix(ns["d1"])
    d2 = io.load_distance_matrix(ns["d2"])
    dist = metric_distortion(d1, d2)
    print(json.dumps({"sup": dist.sup, "gh_upper": dist.gh_upper}))


def _cmd_mds(ns):
    D = io.load_distance_matrix(ns["inp"])
    cloud = mds_project(D, int(ns["dim"]))
    io.save_point_cloud(ns["out"], cloud, config=_effective(ns))


def _cmd_embed(ns):
    ts = io.load_time_series(ns["inp"])
    cloud = delay_embed(ts, DelayParams(tau=int(ns["tau"]), dim=int(ns["dim"]),
                                        stride=int(ns["stride"])))
    io.save_point_cloud(ns["out"], cloud, config=_effective(ns))


def _cmd_changepoints(ns):
    ts = io.load_time_series(ns["inp"])
    params = DelayParams(tau=int(ns["tau"]), dim=int(ns["dim"]), stride=int(ns["stride"]))
    diagrams = evolving_diagrams(ts, params, p=ns["p"], step=int(ns["step"]),
                                 degree=int(ns["degree"]),
                                 recompute=bool(ns["recompute_prefixes"]))
    score = change_point_score(diagrams, ts.dt, degree=int(ns["degree"]),
                               window=int(ns["window"]), stride=params.stride)
    io.save_scores(ns["out"], score, ts.dt, config=_effective(ns))
    peaks = detect_peaks(score, z=ns["z"])
    print(json.dumps({"peaks": [int(score.times[i]) for i in peaks],
                      "peak_times": [float(score.times[i] * ts.dt) for i in peaks]}))


def _cmd_experiment(ns):
    name = ns["name"]
    if name not in EXPERIMENTS:
        raise UsageError(f"unknown experiment {name!r}; choose from {sorted(EXPERIMENTS)}")
    report = run_experiment(name, seed=int(ns["seed"]), out_dir=ns.get("out_dir"))
    print(json.dumps(report, indent=2, default=float))
    return 0 if report["passed"] else 1


_HANDLERS = {
    "generate": _cmd_generate,
    "distmat": _cmd_distmat,
    "ph": _cmd_ph,
    "bottleneck": _cmd_bottleneck,
    "distortion": _cmd_distortion,
    "mds": _cmd_mds,
    "embed": _cmd_embed,
    "changepoints": _cmd_changepoints,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        threads = args.threads
        if threads is None:
            threads = _kernels.threads_from_env(default=0)
        _kernels.set_threads(threads)
        merged = _merge_config(args)
        rc = _HANDLERS[args.command](merged)
        return int(rc or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, OSError, RuntimeError, FloatingPointError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
