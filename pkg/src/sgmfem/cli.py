"""Command line driver for the benchmark studies.

    python -m sgmfem tp1-effectivity --nu 0.4,0.49999 --levels 3,4 --degrees 3 --option I --out t1.csv
    python -m sgmfem tp2-convergence --nu 0.4 --sigma 4 --alpha-bar 0.5 --tol 1e-4 \\
        --max-dofs 100000 --out trace.csv --plot trace.dat

Global flags go before the subcommand.  ``--config FILE`` reads flat
``key=value`` lines using the long flag names (dashes or underscores);
explicit flags override the file.
"""
import argparse
import json
import sys
import time

import numpy as np

from .adaptor import AdaptiveConfig
from .bench import VARIANT_LABEL, run_tp1_effectivity, run_tp2_convergence
from .errors import SGMFEMError
from .estimator import LOCALIZATIONS


def _floats(text):
    return [float(v) for v in text.replace(" ", "").split(",") if v]


def _ints(text):
    return [int(v) for v in text.replace(" ", "").split(",") if v]


def read_config(path):
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{n}: expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


class RunLog:
    """JSON-lines event log (stderr when no path is given)."""

    def __init__(self, path=None):
        self.path = path
        self.t0 = time.time()

    def __call__(self, event):
        event = {"t": round(time.time() - self.t0, 3), **event}
        line = json.dumps(event, default=_jsonable)
        if self.path is None:
            print(line, file=sys.stderr)
        else:
            with open(self.path, "a") as fh:
                fh.write(line + "\n")


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    return str(obj)


def build_parser():
    p = argparse.ArgumentParser(prog="sgmfem", description="Adaptive SG mixed FEM benchmarks for parametric elasticity.")
    p.add_argument("--config", help="key=value file with default flag values")
    p.add_argument("--pressure-space", choices=("pminus1", "q1"), default="pminus1")
    p.add_argument("--minres-tol", type=float, default=1e-10)
    p.add_argument("--seed", type=int, default=0, help="only used by randomized checks")
    p.add_argument("--localization", choices=LOCALIZATIONS, default="global")
    p.add_argument("--log", help="JSON-lines run log (default: stderr)")
    sub = p.add_subparsers(dest="command", required=True)

    t1 = sub.add_parser("tp1-effectivity", help="effectivity table for the smooth test problem")
    t1.add_argument("--nu", type=_floats, default=[0.4, 0.49, 0.499, 0.4999, 0.49999])
    t1.add_argument("--levels", type=_ints, default=[3, 4, 5])
    t1.add_argument("--degrees", type=_ints, default=[3])
    t1.add_argument("--option", choices=("I", "II"), default="I")
    t1.add_argument("--out", default="tp1_effectivity.csv")

    t2 = sub.add_parser("tp2-convergence", help=f"adaptive run on the mixed-boundary problem ({VARIANT_LABEL})")
    t2.add_argument("--nu", type=float, default=0.4)
    t2.add_argument("--sigma", type=float, default=2.0)
    t2.add_argument("--alpha-bar", type=float, default=0.5)
    t2.add_argument("--tol", type=float, default=1e-4)
    t2.add_argument("--max-dofs", type=int, default=100_000)
    t2.add_argument("--tau", type=float, default=2 ** 0.5)
    t2.add_argument("--option", choices=("I", "II"), default="I")
    t2.add_argument("--initial-level", type=int, default=2)
    t2.add_argument("--out", default="tp2_trace.csv")
    t2.add_argument("--plot", default="tp2_plot.dat")
    return p


def parse_args(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        conf = read_config(args.config)
        # re-parse with the file values as defaults so explicit flags win
        parser = build_parser()
        sub = parser._subparsers._group_actions[0].choices[args.command]
        for target in (parser, sub):
            acts = {a.dest: a for a in target._actions}
            for key, value in conf.items():
                if key in acts and key not in ("config", "help"):
                    target.set_defaults(**{key: (acts[key].type or str)(value)})
        unknown = set(conf) - {a.dest for t in (parser, sub) for a in t._actions}
        if unknown:
            parser.error(f"unknown config keys for {args.command}: {sorted(unknown)}")
        args = parser.parse_args(argv)
    return args


def main(argv=None):
    args = parse_args(argv)
    log = RunLog(args.log)
    log({"event": "start", "command": args.command, "args": vars(args)})
    try:
        if args.command == "tp1-effectivity":
            recs = run_tp1_effectivity(args.nu, args.levels, args.degrees, args.option, args.out,
                                       args.pressure_space, args.minres_tol, log, args.localization)
            for r in recs:
                print(f"nu={r.nu:<8g} h=1/{round(1 / r.h):<3d} k={r.k} option {r.option}: "
                      f"eta={r.eta:.4e} E={r.E:.4e} effectivity={r.effectivity:.4f}")
        else:
            cfg = AdaptiveConfig(tol=args.tol, max_dofs=args.max_dofs, tau=args.tau, option=args.option,
                                 initial_level=args.initial_level, pressure=args.pressure_space,
                                 minres_tol=args.minres_tol, localization=args.localization)
            trace = run_tp2_convergence(args.nu, args.sigma, args.alpha_bar, cfg, args.out, args.plot, log=log)
            print(f"tp2 ({VARIANT_LABEL}): {len(trace)} steps")
            for r in trace:
                print(f"  step {r.step:2d} level {r.mesh_level} |Lambda|={r.n_indices:3d} n={r.n_total:7d} "
                      f"eta={r.eta:.4e} -> {r.decision}")
    except SGMFEMError as exc:
        log({"event": "error", "type": type(exc).__name__, "message": str(exc)})
        print(f"error: {exc}", file=sys.stderr)
        return 2
    log({"event": "done"})
    return 0


if __name__ == "__main__":
    sys.exit(main())
