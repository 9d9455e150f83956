"""Command-line interface: ``hypercount <subcommand> [flags]``.

Exit codes: 0 success, 1 domain error, 2 usage error, 3 a verification or
cross-check comparison failed.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import DomainError, GuardError

DEFAULT_SEED = 1
EXIT_DOMAIN, EXIT_USAGE, EXIT_FAILED = 1, 2, 3

_DEFAULTS = {
    "count": {"format": "csv"},
    "exact": {"t": None, "m": None},
    "forest": {"seed": DEFAULT_SEED, "samples": 0, "threads": None, "out": "-"},
    "simulate": {"trials": 100, "seed": DEFAULT_SEED, "threads": None, "mark_prob": None, "out": "-"},
    "verify": {"trials": 10000, "seed": DEFAULT_SEED, "threads": None, "mark_prob": None, "out": "-",
               "histogram_csv": None},
    "crosscheck": {"family": "all", "out_dir": "."},
}


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


@contextlib.contextmanager
def _open_out(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        d = os.path.dirname(os.path.abspath(path))
        os.makedirs(d, exist_ok=True)
        with open(path, "w", newline="") as fh:
            yield fh


def _model_flags(p):
    p.add_argument("--r", type=int, help="edge size")
    p.add_argument("--n", type=int, help="number of vertices")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--eps", type=float, help="branching factor minus 1")
    g.add_argument("--lambda", dest="lam", type=float, help="branching factor")
    g.add_argument("--p", type=float, help="edge probability")


def _trial_flags(p):
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help="worker processes (default: $HYPERCOUNT_THREADS or CPU count)")
    p.add_argument("--mark-prob", dest="mark_prob", type=float,
                   help="vertex mark probability for the extended core (default 0.01 eps^2)")


def build_parser() -> argparse.ArgumentParser:
    sup = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="hypercount", description=__doc__.splitlines()[0],
                                     argument_default=sup)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON file of flag values; flags on the command line win")
    sub = parser.add_subparsers(dest="command", required=True)

    def new(name, help_):
        return sub.add_parser(name, help=help_, argument_default=sup)

    p = new("count", "asymptotic log10 C_r(s,t) and log10 P_r(s,t)")
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--t", type=int)
    p.add_argument("--format", choices=("csv", "json"))

    p = new("exact", "exact numbers of connected r-uniform hypergraphs (CSV)")
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int, nargs="+")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--t", type=int, nargs="+", help="nullities")
    g.add_argument("--m", type=int, nargs="+", help="edge counts")
    p.add_argument("--out")

    p = new("forest", "rooted forests: samples, edge-split pmf, reattachment pmf")
    p.add_argument("kind", choices=("sample", "pmf", "reattach"))
    p.add_argument("--r", type=int)
    p.add_argument("--a", type=int, help="roots (sample), or roots per side (pmf)")
    p.add_argument("--k", type=int, help="edges of the sampled forest")
    p.add_argument("--m", type=int, help="edges of the 2a-rooted forest (pmf)")
    p.add_argument("--isolated", type=int, help="|I'| (reattach)")
    p.add_argument("--core-pairs", dest="core_pairs", type=int, help="binom(|C|, 2) (reattach)")
    p.add_argument("--pi", type=float, help="odds p2/(1 - p2) (reattach)")
    p.add_argument("--seed", type=int)
    p.add_argument("--samples", type=int, help="also draw this many edge splits (pmf)")
    p.add_argument("--threads", type=int, help="worker processes for --samples")
    p.add_argument("--out")
    p.add_argument("--figures", help="directory for PNG figures")

    p = new("simulate", "per-trial statistics of H^r(n,p) (CSV)")
    _model_flags(p)
    _trial_flags(p)
    p.add_argument("--out")

    p = new("verify", "compare simulation with the predicted statistics (JSON)")
    _model_flags(p)
    _trial_flags(p)
    p.add_argument("--out")
    p.add_argument("--histogram-csv", dest="histogram_csv")
    p.add_argument("--figures", help="directory for PNG figures")

    p = new("crosscheck", "agreement with earlier formulas (CSV sweeps)")
    p.add_argument("--family", choices=("bck", "bcok", "sw", "kl", "all"))
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--figures", help="directory for PNG figures")
    return parser


def resolve(argv=None) -> dict:
    """Parse flags, merge in the config file, and fill defaults."""
    parser = build_parser()
    ns = vars(parser.parse_args(argv))
    config = {}
    if "config" in ns:
        try:
            with open(ns["config"]) as fh:
                config = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {ns['config']}: {exc}") from None
        if not isinstance(config, dict):
            raise UsageError("config file must hold a JSON object")
        config = {k.replace("-", "_"): v for k, v in config.items()}
        if "lambda" in config:
            config["lam"] = config.pop("lambda")
    cmd = ns["command"]
    model = ("eps", "lam", "p")
    if any(k in ns for k in model):
        config = {k: v for k, v in config.items() if k not in model}
    merged = {**_DEFAULTS.get(cmd, {}), **config, **ns}
    if cmd in ("simulate", "verify"):
        given = [k for k in model if merged.get(k) is not None]
        if len(given) != 1:
            raise UsageError("give exactly one of --eps, --lambda, --p")
        for k in ("r", "n"):
            if merged.get(k) is None:
                raise UsageError(f"--{k} is required")
    return merged


def _need(cfg, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise UsageError(f"--{k.replace('_', '-')} is required")


def _model(cfg):
    from .params import ModelParams

    if cfg.get("eps") is not None:
        return ModelParams.from_eps(cfg["r"], cfg["n"], cfg["eps"])
    if cfg.get("lam") is not None:
        return ModelParams.from_lambda(cfg["r"], cfg["n"], cfg["lam"])
    return ModelParams.from_p(cfg["r"], cfg["n"], cfg["p"])


def cmd_count(cfg) -> int:
    from .asymptotics import log_C, log_P
    from .params import solve_rho

    _need(cfg, "r", "s", "t")
    inst = solve_rho(cfg["r"], cfg["s"], cfg["t"])
    row = {"r": inst.r, "s": inst.s, "t": inst.t, "m": inst.m, "rho": inst.rho,
           "log10_C": log_C(inst).log10, "log10_P": log_P(inst).log10}
    if cfg["format"] == "json":
        sys.stdout.write(json.dumps(row) + "\n")
    else:
        sys.stdout.write(",".join(row) + "\n")
        sys.stdout.write(",".join(_fmt(v) for v in row.values()) + "\n")
    return 0


def cmd_exact(cfg) -> int:
    from .exact import connected_count, nullity_of

    _need(cfg, "r", "s")
    r = cfg["r"]
    if r < 2:
        raise DomainError(f"edge size r must be >= 2, got {r}")
    rows = []
    for s in cfg["s"]:
        if cfg.get("t") is not None:
            pairs = []
            for t in cfg["t"]:
                q, rem = divmod(s + t - 1, r - 1)
                pairs.append((q if not rem else None, t))
        elif cfg.get("m") is not None:
            pairs = [(m, nullity_of(r, s, m)) for m in cfg["m"]]
        else:
            raise UsageError("give --t or --m")
        for m, t in pairs:
            c = 0 if m is None else connected_count(r, s, m)
            rows.append((r, s, "" if m is None else m, t, c, f"{math.log10(c):.17g}" if c else "-inf"))
    with _open_out(cfg.get("out")) as fh:
        fh.write("r,s,m,t,count,log10count\n")
        for row in rows:
            fh.write(",".join(map(str, row)) + "\n")
    return 0


def cmd_forest(cfg) -> int:
    from . import forests

    rng = np.random.default_rng(cfg["seed"])
    kind = cfg["kind"]
    figs = cfg.get("figures")
    if kind == "sample":
        _need(cfg, "r", "a", "k")
        r, a, k = cfg["r"], cfg["a"], cfg["k"]
        f = forests.sample_forest(r, range(a), range(a, a + (r - 1) * k), rng)
        with _open_out(cfg["out"]) as fh:
            forests.write_forest(f, fh)
        return 0
    if kind == "pmf":
        _need(cfg, "r", "m", "a")
        pmf = forests.smoothing_pmf(cfg["r"], cfg["m"], cfg["a"])
        samples = None
        if cfg["samples"]:
            samples = forests.sample_edge_split_seeded(cfg["r"], cfg["m"], cfg["a"], cfg["seed"],
                                                       cfg["samples"], cfg["threads"])
        with _open_out(cfg["out"]) as fh:
            if samples is None:
                pmf.write_csv(fh, "k")
            else:
                freq = np.bincount(samples - pmf.lo, minlength=pmf.probs.size)
                fh.write("k,p,sampled\n")
                for k, pk, c in zip(pmf.support, pmf.probs, freq):
                    fh.write(f"{k},{pk:.17g},{c}\n")
        if figs:
            from .plotting import pmf_figure

            pmf_figure(pmf, os.path.join(figs, f"edge_split_r{cfg['r']}_m{cfg['m']}_a{cfg['a']}.png"), samples)
        return 0
    _need(cfg, "r", "isolated", "core_pairs", "pi")
    pmf = forests.pendant_reattach_pmf(cfg["r"], cfg["isolated"], cfg["core_pairs"], cfg["pi"])
    with _open_out(cfg["out"]) as fh:
        pmf.write_csv(fh, "a")
    if figs:
        from .plotting import pmf_figure

        pmf_figure(pmf, os.path.join(figs, "reattach.png"), xlabel="a")
    return 0


def cmd_simulate(cfg) -> int:
    from .simulate import TrialConfig, default_mark_probability, run_trials, write_records

    mp = _model(cfg)
    mark = cfg["mark_prob"] if cfg["mark_prob"] is not None else default_mark_probability(mp)
    records, _ = run_trials(TrialConfig(mp, cfg["trials"], cfg["seed"], mark), cfg["threads"])
    with _open_out(cfg["out"]) as fh:
        write_records(records, fh)
    return 0


def cmd_verify(cfg) -> int:
    from . import verify

    mp = _model(cfg)
    batch = verify.run_batch(mp, cfg["trials"], cfg["seed"], cfg["threads"], cfg["mark_prob"])
    report = verify.full_report(batch)
    with _open_out(cfg["out"]) as fh:
        fh.write(verify.report_to_json(report))
    hist = report.get("_histogram")
    if hist is not None and cfg.get("histogram_csv"):
        with _open_out(cfg["histogram_csv"]) as fh:
            verify.histogram_csv(hist, fh)
    if cfg.get("figures"):
        from .params import rho_profile
        from .plotting import histogram_figure, moments_figure

        prof = rho_profile(mp.r, mp.lam)
        moments_figure(batch.records, os.path.join(cfg["figures"], "L1_N1_scatter.png"),
                       prof.rho * mp.n, prof.rho_star * mp.n)
        if hist is not None:
            histogram_figure(hist, os.path.join(cfg["figures"], "llt_histogram.png"))
    return 0 if report["all_passed"] else EXIT_FAILED


def crosscheck_sweeps(family: str):
    """(sweep, passed) pairs for one family or all of them."""
    from . import crosscheck as cc

    out = []
    if family in ("bck", "all"):
        s = cc.bck_sweep()
        ok = max(abs(v) for v in s.columns["y_residual"]) < 1e-12
        out.append((s, ok))
    if family in ("bcok", "all"):
        for d in (2, 3, 4):
            for version in ("preprint", "published"):
                s = cc.bcok_limit(d, version)
                out.append((s, abs(s.limit() / s.target - 1) < 0.01))
    if family in ("sw", "all"):
        s = cc.sw_identity()
        out.append((s, max(abs(v) for v in s.columns["diff"]) < 1e-9))
    if family in ("kl", "all"):
        for r in (2, 3, 4):
            s = cc.kl_discrepancy(r)
            out.append((s, cc.kl_stabilization(s) < 3))
    return out


def cmd_crosscheck(cfg) -> int:
    results = crosscheck_sweeps(cfg["family"])
    os.makedirs(cfg["out_dir"], exist_ok=True)
    failed = 0
    for sweep, ok in results:
        with open(os.path.join(cfg["out_dir"], f"{sweep.name}.csv"), "w", newline="") as fh:
            sweep.write_csv(fh)
        sys.stdout.write(f"{'PASS' if ok else 'FAIL'} {sweep.name}\n")
        failed += not ok
        if cfg.get("figures"):
            from .plotting import sweep_figure

            sweep_figure(sweep, os.path.join(cfg["figures"], f"{sweep.name}.png"))
    return EXIT_FAILED if failed else 0


COMMANDS = {
    "count": cmd_count, "exact": cmd_exact, "forest": cmd_forest,
    "simulate": cmd_simulate, "verify": cmd_verify, "crosscheck": cmd_crosscheck,
}


def main(argv=None) -> int:
    try:
        cfg = resolve(argv)
        return COMMANDS[cfg["command"]](cfg)
    except UsageError as exc:
        build_parser().print_usage(sys.stderr)
        sys.stderr.write(f"hypercount: error: {exc}\n")
        return EXIT_USAGE
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except (DomainError, GuardError) as exc:
        sys.stderr.write(f"hypercount: {exc}\n")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
