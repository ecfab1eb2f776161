"""Command line front end.

Subcommands: stabilize, fixation-scan, mn-scan, phase-scan, idla,
chain-bound, staged, bounds.  A JSON spec file (--config) supplies
defaults; explicit flags override it.  Exit codes: 0 success, 1 invalid
input, 2 I/O failure.
"""

import argparse
import json
import math
import sys

from . import bounds as bounds_mod
from . import experiments


class CliError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; the contract wants 1
    def error(self, message):
        raise CliError(message)


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {text!r}")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad float list {text!r}")


def _add_common(p):
    p.add_argument("--config", help="JSON experiment spec; flags override it")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output path stem (suffixes appended)")
    p.add_argument("--workers", type=int)
    p.add_argument("--replicas", type=int)
    p.add_argument("--cap", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--lam", "--lambda", dest="lam", type=float)


def build_parser():
    root = Parser(prog="arwlab", description=__doc__)
    subs = root.add_subparsers(dest="command", required=True)

    p = subs.add_parser("stabilize", parents=[], help="one stabilization run")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--topology", choices=["torus", "box"])

    p = subs.add_parser("fixation-scan", help="continuous-time size ladder")
    _add_common(p)
    p.add_argument("--n-list", type=_int_list)
    p.add_argument("--t-max", type=float)

    p = subs.add_parser("mn-scan", help="killed mass on boxes")
    _add_common(p)
    p.add_argument("--n-list", type=_int_list)

    p = subs.add_parser("phase-scan", help="trend labels over a parameter grid")
    _add_common(p)
    p.add_argument("--n-list", type=_int_list)
    p.add_argument("--mu-list", type=_float_list)
    p.add_argument("--lambda-list", type=_float_list)

    p = subs.add_parser("idla", help="jump-only spreading from a shell")
    _add_common(p)
    p.add_argument("--beta", type=float)
    p.add_argument("--radius", type=float)

    p = subs.add_parser("chain-bound", help="reversibility bound vs Monte Carlo")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--m-list", type=_int_list)
    p.add_argument("--instances", type=int)
    p.add_argument("--mc-replicas", type=int)

    p = subs.add_parser("staged", help="staged torus stabilization replicas")
    _add_common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--c", type=float)
    p.add_argument("--a-ratio", type=float)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--beta", type=float)

    p = subs.add_parser("bounds", help="phase condition and stage parameters")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--lam", "--lambda", dest="lam", type=float, required=True)
    p.add_argument("--beta", type=float, default=0.1)

    return root


_KIND_BY_COMMAND = {
    "stabilize": "stabilize",
    "fixation-scan": "fixation",
    "mn-scan": "mn",
    "phase-scan": "phase",
    "idla": "idla",
    "chain-bound": "chain-bound",
    "staged": "staged",
}


def _spec_from_args(args) -> experiments.ExperimentSpec:
    base = {}
    if getattr(args, "config", None):
        with open(args.config) as fh:
            base = json.load(fh)
        if not isinstance(base, dict):
            raise CliError("config file must hold a JSON object")
    base["kind"] = _KIND_BY_COMMAND[args.command]
    renames = {"a_ratio": "a_ratio", "t_max": "t_max"}
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        base[renames.get(key, key)] = value
    try:
        return experiments.ExperimentSpec.from_json(base).validate()
    except (TypeError, ValueError) as exc:
        raise CliError(str(exc))


def _cmd_bounds(args) -> dict:
    kap = bounds_mod.kappa(args.d)
    cond = bounds_mod.active_phase_condition(args.d, args.mu, args.lam)
    c = bounds_mod.admissible_c(args.d, args.mu, args.lam)
    out = {
        "kappa": kap.value if math.isfinite(kap.value) else None,
        "kappa_log": kap.log,
        "log_lhs": cond.log_lhs,
        "log_rhs": cond.log_rhs,
        "log_margin": cond.log_margin,
        "satisfied": cond.satisfied,
        "c": c,
        "a": None,
        "epsilon": None,
    }
    if c is not None:
        params = bounds_mod.stage_params(c, args.d, args.mu, args.lam, beta=args.beta)
        out["a"] = params.a
        out["epsilon"] = params.epsilon
    return out


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "bounds":
            print(json.dumps(_cmd_bounds(args), indent=1))
            return 0
        spec = _spec_from_args(args)
        artifacts = experiments.run(spec)
        print(json.dumps(artifacts.summary, indent=1))
        for path in artifacts.files:
            print(f"wrote {path}", file=sys.stderr)
        return 0
    except (CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
