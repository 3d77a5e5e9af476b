"""Command line front end.

Exit codes: 0 success, 2 configuration error, 3 I/O error, 4 numerical failure.
"""

import argparse
import logging
import sys

from .analysis import ABS_FLOOR, compare, convergence_table, decreases
from .engine import METHODS, run_ensemble
from .errors import ConfigurationError, NmunravelError, OutputError
from .output import emit_csv, raw_columns, write_columns, write_trajectory_dump
from .scenario import load_scenario

log = logging.getLogger("nmunravel")


def _common(p):
    p.add_argument("--scenario", required=True, help="scenario TOML path or bundled name (fig2)")
    p.add_argument("--out", help="output CSV path (defaults to the scenario's output)")
    p.add_argument("--seed", type=int, help="override the scenario seed")
    p.add_argument("--workers", type=int, default=1, help="worker threads; never changes results")
    p.add_argument("--method", choices=METHODS, help="override the scenario method")
    p.add_argument("--quiet", action="store_true", help="suppress the step counter")


def build_parser():
    parser = argparse.ArgumentParser(prog="nmunravel", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one scenario and write the observable CSV")
    _common(p)
    p.add_argument("--raw-out", help="also write raw (non-ratio) ensemble means here")
    p.add_argument("--dump", help="write per-trajectory normalized expectations here")

    p = sub.add_parser("rates", help="export the rate schedule F(t) as CSV")
    _common(p)

    p = sub.add_parser("compare", help="run a stochastic method next to the master equation")
    _common(p)

    p = sub.add_parser("sweep-eps", help="jump method over an epsilon list against diffusion")
    _common(p)
    p.add_argument("--eps", type=float, nargs="+", help="override the scenario epsilon_sweep")
    return parser


def _resolve(args):
    scen = load_scenario(args.scenario)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.method is not None:
        changes["method"] = args.method
    if changes:
        scen.config = scen.config.replace(**changes)
    out = args.out or scen.output
    if out is None:
        raise ConfigurationError("output: no --out given and the scenario has no output key")
    if args.workers < 1:
        raise ConfigurationError("--workers must be at least 1")
    return scen, out


def cmd_run(args):
    scen, out = _resolve(args)
    cfg = scen.config
    if args.dump and not cfg.dump_trajectories:
        cfg = cfg.replace(dump_trajectories=True)
    series = run_ensemble(cfg, workers=args.workers, progress=not args.quiet)
    emit_csv(series, out)
    if args.raw_out:
        write_columns(raw_columns(series), args.raw_out)
    if args.dump:
        if series.trajectories is None:
            raise ConfigurationError("--dump needs a stochastic method")
        write_trajectory_dump(series, args.dump)
    if not series.reliable:
        print("warning: run marked unreliable (far-from-ensemble fraction above 1%)", file=sys.stderr)
    return 0


def cmd_rates(args):
    scen, out = _resolve(args)
    rates = scen.config.rate_schedule()
    rates.write_csv(out)
    windows = rates.negative_windows()
    text = ", ".join(f"({a:.4g}, {b:.4g})" for a, b in windows) or "none"
    print(f"negative decay-rate windows (grid points, units of 1/Gamma): {text}")
    return 0


def cmd_compare(args):
    scen, out = _resolve(args)
    cfg = scen.config
    if cfg.method == "master":
        raise ConfigurationError("method: compare needs a stochastic method")
    series = run_ensemble(cfg, workers=args.workers, progress=not args.quiet)
    ref = run_ensemble(cfg.replace(method="master"))
    cols = {"t": series.times}
    for name in series.names:
        c = compare(series, ref, name)
        cols[name] = series.value(name)
        cols[f"{name}_se"] = series.se(name)
        cols[f"{name}_master"] = ref.value(name)
        cols[f"{name}_deviation"] = c.deviation
        cols[f"{name}_deviation_over_se"] = c.z
        print(f"{cfg.method} {name}: max |deviation| = {c.max_abs:.4g}, "
              f"max |deviation|/SE = {c.max_z:.3f}, "
              f"within max(3 SE, {ABS_FLOOR}) at {100 * c.within().mean():.2f}% of steps")
    write_columns(cols, out)
    return 0


def cmd_sweep(args):
    scen, out = _resolve(args)
    cfg = scen.config
    eps_list = args.eps or scen.epsilon_sweep
    if not cfg.observables:
        raise ConfigurationError("observables: sweep needs at least one observable")
    name = next(iter(cfg.observables))
    diff = run_ensemble(cfg.replace(method="diffusion"), workers=args.workers, progress=not args.quiet)
    jumps = {}
    for eps in eps_list:
        jumps[eps] = run_ensemble(cfg.replace(method="jump", epsilon=eps), workers=args.workers,
                                  progress=not args.quiet)
    rows = convergence_table(jumps, diff, name)
    write_columns({
        "epsilon": [r.epsilon for r in rows],
        f"integrated_abs_deviation_{name}": [r.integrated for r in rows],
        "se": [r.se for r in rows],
    }, out)
    for a, b, drop, margin, ok in decreases(rows):
        print(f"eps {a:g} -> {b:g}: deviation drop {drop:.4g} vs 2 SE {margin:.4g}: "
              f"{'decreasing' if ok else 'not resolved'}")
    return 0


COMMANDS = {"run": cmd_run, "rates": cmd_rates, "compare": cmd_compare, "sweep-eps": cmd_sweep}


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except NmunravelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return OutputError.exit_code
    except FloatingPointError as exc:  # pragma: no cover
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
