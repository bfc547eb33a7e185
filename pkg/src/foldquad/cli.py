"""Command-line entry points: run, compare, sweep, fit, metrics."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .arm import DisplacementTrace, SpringParams, fit_spring_params
from .scenario import ScenarioConfig, compare_modes, run_scenario, sweep_velocities
from .simlog import SimLog, compute_metrics


def _parse_overrides(pairs):
    out = {}
    for pair in pairs or []:
        if "=" not in pair:
            raise SystemExit(f"bad override {pair!r}; expected key=value")
        key, value = pair.split("=", 1)
        out[key.strip()] = json.loads(value) if value.lstrip()[:1] in "[{0123456789-." else value
    return out


def _load_config(args):
    return ScenarioConfig.load(args.config, overrides=_parse_overrides(args.set))


def _out_dir(args):
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_run(args):
    cfg = _load_config(args)
    out = _out_dir(args)
    stem = Path(args.config).stem
    log = run_scenario(cfg)
    log.write_csv(out / f"{stem}_log.csv")
    if log.aborted:
        print(f"run aborted: {log.diagnostic}", file=sys.stderr)
        return 2
    metrics = compute_metrics(log, cfg)
    (out / f"{stem}_metrics.json").write_text(metrics.to_json() + "\n")
    print(metrics.to_json())
    return 0


def cmd_compare(args):
    cfg = _load_config(args)
    out = _out_dir(args)
    stem = Path(args.config).stem
    report = compare_modes(cfg)
    report.foldable_log.write_csv(out / f"{stem}_foldable_log.csv")
    report.rigid_log.write_csv(out / f"{stem}_rigid_log.csv")
    text = json.dumps(report.to_dict(), indent=2)
    (out / f"{stem}_compare.json").write_text(text + "\n")
    print(text)
    if report.foldable_log.aborted or report.rigid_log.aborted:
        return 2
    return 0


def cmd_sweep(args):
    cfg = _load_config(args)
    out = _out_dir(args)
    speeds = [float(s) for s in args.speeds.split(",")]
    rows = sweep_velocities(cfg, speeds)
    text = json.dumps([r.to_dict() for r in rows], indent=2)
    (out / f"{Path(args.config).stem}_sweep.json").write_text(text + "\n")
    print(text)
    return 0


def cmd_fit(args):
    trace = DisplacementTrace.from_csv(args.trace)
    guess = SpringParams(b_s=args.guess_bs, k_s=args.guess_ks)
    result = fit_spring_params(trace, guess)
    print(json.dumps({
        "b_s": result.params.b_s,
        "k_s": result.params.k_s,
        "residual_norm": result.residual_norm,
        "converged": result.converged,
        "v0": result.v0,
    }, indent=2))
    return 0 if result.converged else 3


def cmd_metrics(args):
    log = SimLog.from_csv(args.log)
    cfg = ScenarioConfig.load(args.config) if args.config else None
    print(compute_metrics(log, cfg).to_json())
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="foldquad",
        description="Collision-resilient foldable-quadrotor simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("config", help="scenario config (YAML, flat keys)")
        p.add_argument("--out-dir", default=".", help="output directory")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config key")

    p = sub.add_parser("run", help="run one scenario; write log CSV and metrics JSON")
    add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run foldable vs rigid on the same scenario")
    add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="collision-speed sweep over both modes")
    add_common(p)
    p.add_argument("--speeds", default="1,1.5,2,2.5",
                   help="comma-separated target collision speeds (m/s)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("fit", help="identify spring parameters from a t,l trace CSV")
    p.add_argument("trace")
    p.add_argument("--guess-bs", type=float, default=20.0)
    p.add_argument("--guess-ks", type=float, default=300.0)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("metrics", help="recompute metrics from a log CSV")
    p.add_argument("log")
    p.add_argument("--config", default=None, help="scenario config for wall/mass context")
    p.set_defaults(func=cmd_metrics)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
