"""Command-line front end.

Exit codes: 0 success, 1 error, 2 inconclusive certificate, 3 blow-up,
4 envelope violated, 5 order check failed.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import convergence
from .certificates import INCONCLUSIVE, SUP_DWELL, certify
from .config import RunConfig
from .envelope import build_params, check_jump_inequality, eval_envelope
from .errors import IISSError
from .examples import EXAMPLE_NAMES, builtin_config
from .integrator import simulate
from .system import InputSignal, classify_schedule

EXIT_OK, EXIT_ERROR, EXIT_INCONCLUSIVE, EXIT_BLOW_UP, EXIT_VIOLATED, EXIT_ORDER = 0, 1, 2, 3, 4, 5
BUILTIN_PREFIX = "builtin:"


class CliError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False, default=_json_default)


def _json_default(v):
    if hasattr(v, "tolist"):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _finite_or_none(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def load_config(source: str, args) -> RunConfig:
    if source.startswith(BUILTIN_PREFIX):
        data = builtin_config(source[len(BUILTIN_PREFIX):])
    else:
        try:
            with open(source) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CliError(f"{source}: malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")
        except OSError as exc:
            raise CliError(f"cannot read {source}: {exc.strerror}")
    if getattr(args, "seed", None) is not None and data.get("schedule", {}).get("kind") == "random":
        data["schedule"]["seed"] = args.seed
    cfg = RunConfig.from_dict(data)
    cfg = cfg.with_overrides(t0=args.t0, T=args.T, h=args.h, eps=args.eps, xi=args.xi)
    if getattr(args, "zero_input", False):
        cfg = cfg.with_overrides(input=InputSignal.zero(cfg.system.q))
    return cfg


def _simulate(cfg: RunConfig):
    sched = cfg.schedule()
    return sched, simulate(cfg.system, cfg.initial, cfg.input, sched, cfg.t0, cfg.T, cfg.h)


def _dwell_parameter(report, sched, T: float) -> float | None:
    times = sched.up_to(T)
    if not times:
        return None
    if report.verdict == SUP_DWELL:
        return sched.sup_dwell if sched.sup_dwell is not None else classify_schedule(sched).sup_gap
    return sched.inf_dwell if sched.inf_dwell is not None else classify_schedule(sched).inf_gap


def run_certify(cfg: RunConfig, out=None) -> tuple[int, dict]:
    report = certify(cfg.system)
    payload = report.to_dict()
    print(_dump(payload), file=out or sys.stdout)
    return (EXIT_INCONCLUSIVE if report.verdict == INCONCLUSIVE else EXIT_OK), payload


def run_simulate(cfg: RunConfig, out_csv, out=None) -> tuple[int, dict]:
    _, traj = _simulate(cfg)
    traj.to_csv(out_csv)
    summary = traj.summary()
    print(_dump(summary), file=out or sys.stdout)
    return (EXIT_BLOW_UP if traj.blow_up else EXIT_OK), summary


def run_trace(cfg: RunConfig, out_csv, override_lambda: float | None = None, out=None) -> tuple[int, dict]:
    report = certify(cfg.system)
    if report.verdict == INCONCLUSIVE:
        payload = {"error": "certificate inconclusive; no envelope to check", "notes": report.notes}
        print(_dump(payload), file=out or sys.stdout)
        return EXIT_INCONCLUSIVE, payload
    sched, traj = _simulate(cfg)
    delta = _dwell_parameter(report, sched, traj.T)
    if report.verdict == SUP_DWELL and delta is None:
        raise CliError("the unstable regime needs at least one impulse within the horizon")
    if not report.admits(*(classify_schedule(sched)[:2])) and sched.times:
        raise CliError(f"schedule is outside the certified class ({report.verdict}, bound {report.delta_bound})")
    params = build_params(cfg.system, cfg.eps, cfg.xi, delta=delta)
    if override_lambda is not None:
        params = params.with_lambda(override_lambda)
    trace = eval_envelope(traj, params, cfg.input, sched)
    trace.to_csv(out_csv)
    verdict = trace.verdict()
    jumps = check_jump_inequality(traj, params)
    verdict["jump_inequality_holds"] = all(j.holds for j in jumps)
    verdict["blow_up"] = traj.blow_up
    verdict["params_echo"] = {k: _finite_or_none(v) for k, v in verdict["params_echo"].items()}
    print(_dump(verdict), file=out or sys.stdout)
    if traj.blow_up:
        return EXIT_BLOW_UP, verdict
    return (EXIT_VIOLATED if trace.violated else EXIT_OK), verdict


def run_example(name: str, outdir, args, out=None) -> int:
    cfg = load_config(BUILTIN_PREFIX + name, args)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "config.json").write_text(_dump(cfg.to_dict()) + "\n")
    sink = _Discard()
    code_c, report = run_certify(cfg, out=sink)
    (outdir / "report.json").write_text(_dump(report) + "\n")
    code_s, summary = run_simulate(cfg, outdir / "traj.csv", out=sink)
    code_t, verdict = run_trace(cfg, outdir / "envelope.csv", args.override_lambda, out=sink)
    (outdir / "envelope.json").write_text(_dump(verdict) + "\n")
    codes = {"certify": code_c, "simulate": code_s, "trace": code_t}
    result = {"example": name, "outdir": str(outdir), "exit_codes": codes,
              "verdict": report["verdict"], "delta_bound": report["delta_bound"],
              "trajectory": summary, "envelope_violated": verdict.get("violated"),
              "min_margin": verdict.get("min_margin")}
    (outdir / "summary.json").write_text(_dump(result) + "\n")
    print(_dump(result), file=out or sys.stdout)
    return next((c for c in codes.values() if c != EXIT_OK), EXIT_OK)


def run_order_check(coarsest: float | None, out=None) -> int:
    h0 = convergence.DEFAULT_STEPS[0] if coarsest is None else coarsest
    steps = tuple(h0 / 2 ** k for k in range(4))
    convergence.validate_steps(steps)
    free = convergence.exponential_study(steps)
    pure = convergence.pure_delay_study(steps)
    damped = convergence.damped_delay_study(steps)
    free_ok = free.meets(3.5)
    # a method that is exact on the polynomial pure-delay solution shows no order at all
    pure_ok = pure.meets(2.5) or pure.at_roundoff
    damped_ok = damped.meets(2.5)
    payload = {"studies": [free.to_dict(), pure.to_dict(), damped.to_dict()],
               "thresholds": {"delay_free": 3.5, "delayed": 2.5},
               "passed": {"delay_free": free_ok, "pure_delay": pure_ok, "damped_delay": damped_ok}}
    print(_dump(payload), file=out or sys.stdout)
    return EXIT_OK if free_ok and pure_ok and damped_ok else EXIT_ORDER


class _Discard:
    def write(self, _):
        return 0

    def flush(self):
        pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--h", type=float, help="integration step")
    common.add_argument("--t0", type=float, help="initial time")
    common.add_argument("--T", type=float, help="final time")
    common.add_argument("--seed", type=int, help="seed for random schedules")
    common.add_argument("--eps", type=float, help="functional slack")
    common.add_argument("--xi", type=float, help="Young slack")
    common.add_argument("--override-lambda", type=float, dest="override_lambda",
                        help="envelope rate to use instead of the admissible one (negative controls)")
    common.add_argument("--zero-input", action="store_true", dest="zero_input", help="replace the input by w = 0")

    parser = argparse.ArgumentParser(prog="iisscert", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("certify", parents=[common], help="print the dwell-time certificate")
    p.add_argument("config", help=f"JSON config path or {BUILTIN_PREFIX}<name>")
    p = sub.add_parser("simulate", parents=[common], help="write the trajectory CSV")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p = sub.add_parser("trace", parents=[common], help="check the Lyapunov envelope along a run")
    p.add_argument("config")
    p.add_argument("--out", required=True)
    p = sub.add_parser("example", parents=[common], help="run a built-in example end to end")
    p.add_argument("name")
    p.add_argument("--outdir")
    sub.add_parser("order-check", parents=[common], help="integrator convergence study")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "certify":
            return run_certify(load_config(args.config, args))[0]
        if args.command == "simulate":
            return run_simulate(load_config(args.config, args), args.out)[0]
        if args.command == "trace":
            return run_trace(load_config(args.config, args), args.out, args.override_lambda)[0]
        if args.command == "example":
            if args.name not in EXAMPLE_NAMES:
                raise CliError(f"unknown example {args.name!r}; valid names: {', '.join(EXAMPLE_NAMES)}")
            return run_example(args.name, args.outdir or f"{args.name}_out", args)
        return run_order_check(args.h)
    except (CliError, IISSError, KeyError, TypeError, ValueError, OSError) as exc:
        msg = str(exc) if not isinstance(exc, KeyError) else f"missing key {exc}"
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
