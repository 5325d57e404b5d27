"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .optimizer import ConvergenceError, QpParams, solve_sqp
from .postproc import PostprocConfig, decode
from .scenario import (
    MethodKind,
    ScenarioError,
    ScenarioTimeout,
    compare,
    format_table,
    load_script,
    profile_csv,
    run,
    table_csv,
    timeline_csv,
)
from .tensor_io import GroundTruthPerson, TensorFormatError, read_tensor, synthesize_tensor, write_tensor

EXIT_USAGE = 1
EXIT_RUNTIME = 2

_D = RunConfig()

# flag -> RunConfig field, for the run/compare overrides
_OVERRIDES = {
    "tau": "tau",
    "t_buffer": "t_buffer",
    "alpha": "alpha",
    "beta": "beta",
    "d_min": "d_min",
    "d_max": "d_max",
    "d_normal": "d_desired_normal",
    "d_slow": "d_desired_slow",
    "nms": "nms_iou",
    "frame_period": "frame_period",
    "latency_budget": "latency_budget",
    "n_candidates": "n_candidates",
    "max_sim_time": "max_sim_time",
    "output_dir": "output_dir",
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _nms(value: str) -> float | None:
    if value.lower() in ("off", "none", "0"):
        return None
    return float(value)


def _add_overrides(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("configuration overrides (config file < flags)")
    g.argument_default = argparse.SUPPRESS
    p.add_argument("--config", help="JSON config file with RunConfig fields")
    g.add_argument("--tau", type=float, help=f"confidence threshold (default {_D.tau})")
    g.add_argument("--t-buffer", type=float, help=f"seconds without detection before Normal (default {_D.t_buffer})")
    g.add_argument("--alpha", type=float, help=f"weight on distance to the target duration (default {_D.alpha})")
    g.add_argument("--beta", type=float, help=f"weight on change from the previous duration (default {_D.beta})")
    g.add_argument("--d-min", type=float, help=f"shortest allowed leg duration, s (default {_D.d_min})")
    g.add_argument("--d-max", type=float, help=f"longest allowed leg duration, s (default {_D.d_max})")
    g.add_argument("--d-normal", type=float, help=f"Normal-mode target duration, s (default {_D.d_desired_normal})")
    g.add_argument("--d-slow", type=float, help=f"Slow-mode target duration, s (default {_D.d_desired_slow})")
    g.add_argument("--nms", type=_nms, help=f"duplicate-suppression IoU, or 'off' (default {_D.nms_iou})")
    g.add_argument("--frame-period", type=float, help=f"sensor frame period, s (default {_D.frame_period})")
    g.add_argument("--latency-budget", type=float, help="collision grace window, s (default 2 frame periods)")
    g.add_argument("--n-candidates", type=int, help=f"candidate columns per synthesized frame (default {_D.n_candidates})")
    g.add_argument("--max-sim-time", type=float, help=f"simulated-time cap, s (default {_D.max_sim_time})")
    g.add_argument("--output-dir", help="directory for CSV/JSON outputs (default: none written)")
    p.add_argument("--seed", type=int, default=0, help="seed for background candidates (default 0)")
    p.add_argument("--timing", action="store_true",
                   help="measure pipeline latency with the wall clock (output is then not reproducible)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="virtual-fence", description=__doc__.splitlines()[0] if __doc__ else None)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("postproc", help="decode a VFT1 tensor file to JSON-lines detections")
    p.add_argument("tensor", help="VFT1 tensor file")
    p.add_argument("--tau", type=float, default=_D.tau, help=f"confidence threshold (default {_D.tau})")
    p.add_argument("--nms", type=_nms, default=_D.nms_iou, help=f"suppression IoU or 'off' (default {_D.nms_iou})")

    p = sub.add_parser("solve", help="solve one duration QP and print the KKT certificate as JSON")
    p.add_argument("--alpha", type=float, default=_D.alpha, help=f"(default {_D.alpha})")
    p.add_argument("--beta", type=float, default=_D.beta, help=f"(default {_D.beta})")
    p.add_argument("--d-desired", type=float, required=True, help="target duration, s")
    p.add_argument("--d-prev", type=float, required=True, help="previous duration, s")
    p.add_argument("--d-min", type=float, default=_D.d_min, help=f"(default {_D.d_min})")
    p.add_argument("--d-max", type=float, default=_D.d_max, help=f"(default {_D.d_max})")
    p.add_argument("--tol", type=float, default=1e-8, help="(default 1e-8)")
    p.add_argument("--max-iter", type=int, default=50, help="(default 50)")

    p = sub.add_parser("run", help="run one method on a scenario and print its metrics")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--method", choices=[m.value for m in MethodKind], default=MethodKind.ZONE_BASED_SQP.value)
    _add_overrides(p)

    p = sub.add_parser("compare", help="run all three methods and print the comparison table")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    _add_overrides(p)

    p = sub.add_parser("synth", help="write a synthetic VFT1 tensor for given person boxes")
    p.add_argument("output", help="output tensor file")
    p.add_argument("--person", action="append", default=[], metavar="CX,CY,W,H,CONF",
                   help="person box in center format plus confidence; repeatable")
    p.add_argument("--candidates", type=int, default=8400, help="candidate columns (default 8400)")
    p.add_argument("--width", type=int, default=_D.frame_width, help=f"frame width (default {_D.frame_width})")
    p.add_argument("--height", type=int, default=_D.frame_height, help=f"frame height (default {_D.frame_height})")
    p.add_argument("--background-logit", type=float, default=_D.background_logit)
    p.add_argument("--duplicates", type=int, default=0, help="jittered near-copies per person (default 0)")
    p.add_argument("--seed", type=int, default=None, help="random background boxes from this seed")
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    # override flags are absent from the namespace unless given
    changes = {name: getattr(args, flag) for flag, name in _OVERRIDES.items() if hasattr(args, flag)}
    return cfg.override(**changes) if changes else cfg


def _write(out_dir: Path | None, name: str, text: str) -> None:
    if out_dir is None:
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / name).write_text(text)


def _cmd_postproc(args) -> int:
    t = read_tensor(args.tensor)
    for d in decode(t, PostprocConfig(tau=args.tau, nms_iou=args.nms)):
        print(json.dumps(d.to_dict()))
    return 0


def _cmd_solve(args) -> int:
    p = QpParams(args.alpha, args.beta, args.d_desired, args.d_prev, args.d_min, args.d_max)
    print(json.dumps(solve_sqp(p, tol=args.tol, max_iter=args.max_iter).to_dict()))
    return 0


def _cmd_run(args) -> int:
    cfg = _resolve_config(args)
    script = load_script(args.scenario)
    method = MethodKind(args.method)
    report = run(script, method, cfg, args.seed, measure_latency=args.timing)
    summary = json.dumps(report.summary(), indent=2, sort_keys=True) + "\n"
    sys.stdout.write(summary)
    out = Path(cfg.output_dir) if cfg.output_dir else None
    _write(out, f"metrics_{method.value}.json", summary)
    _write(out, f"velocity_{method.value}.csv", profile_csv(report.velocity_profile))
    _write(out, f"timeline_{method.value}.csv", timeline_csv(report.command_timeline))
    return 0


def _cmd_compare(args) -> int:
    cfg = _resolve_config(args)
    script = load_script(args.scenario)
    reports = compare(script, cfg, args.seed, measure_latency=args.timing)
    table = format_table(reports)
    sys.stdout.write(table)
    out = Path(cfg.output_dir) if cfg.output_dir else None
    _write(out, "comparison.txt", table)
    _write(out, "comparison.csv", table_csv(reports))
    metrics = {m.value: r.summary() for m, r in reports.items()}
    _write(out, "metrics.json", json.dumps(metrics, indent=2, sort_keys=True) + "\n")
    for m, r in reports.items():
        _write(out, f"velocity_{m.value}.csv", profile_csv(r.velocity_profile))
    return 0


def _cmd_synth(args) -> int:
    import numpy as np

    persons = []
    for spec in args.person:
        try:
            cx, cy, w, h, c = (float(v) for v in spec.split(","))
        except ValueError:
            raise UsageError(f"--person expects CX,CY,W,H,CONF, got {spec!r}") from None
        persons.append(GroundTruthPerson(cx, cy, w, h, c))
    rng = np.random.default_rng(args.seed) if args.seed is not None else None
    t = synthesize_tensor(persons, args.candidates, args.width, args.height,
                          args.background_logit, duplicates=args.duplicates, rng=rng)
    write_tensor(t, args.output)
    return 0


_COMMANDS = {
    "postproc": _cmd_postproc,
    "solve": _cmd_solve,
    "run": _cmd_run,
    "compare": _cmd_compare,
    "synth": _cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, TensorFormatError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, ScenarioTimeout, ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
