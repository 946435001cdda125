"""Command-line entry point: ``graf <subcommand> [options]``.

Exit status: 0 on success, 1 when a validation step fails, 2 on usage errors.
"""

import argparse
import json
import logging
import sys
from pathlib import Path

from .ambiguity import Waveform, ambiguity
from .complex_core import read_waveform_csv, write_matrix_csv, write_waveform_csv
from .errors import GrafError
from .experiment import SweepConfig, run_sweep
from .losses import LossSpec
from .optimizers import AdamConfig, GAConfig, Objective, optimize_ga, optimize_gradient, random_phases, seeded_rng
from .validation import run_gradcheck, run_selftest

log = logging.getLogger("graf")


def _common():
    p = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    p.add_argument("--seed", type=int, help="random seed (default 0)")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--output-dir", help="directory for outputs (default .)")
    p.add_argument("--n", type=int, help="waveform length (default 256)")
    p.add_argument("--lambda", dest="lam", type=float, help="spectral-variance weight (default 0.5)")
    p.add_argument("--quiet", action="store_true", help="suppress progress output")
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="graf", parents=[common],
                                     description="Differentiable radar ambiguity function toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ambiguity", parents=[common], help="export an ambiguity surface")
    p.add_argument("--input", required=True, help="waveform CSV (re,im)")
    p.add_argument("--output", default="chi.csv")
    p.add_argument("--shifted", action="store_true")
    p.add_argument("--normalize", action="store_true")

    p = sub.add_parser("optimize", parents=[common], help="single Adam run")
    p.add_argument("--input", help="initial waveform CSV (default: random phases)")
    p.add_argument("--iterations", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--mode", choices=("phase_param", "projected_complex"), default="phase_param")

    p = sub.add_parser("ga", parents=[common], help="single genetic-algorithm run")
    p.add_argument("--population", type=int)
    p.add_argument("--generations", type=int)

    p = sub.add_parser("sweep", parents=[common], help="lambda sweep, gradient vs GA")
    p.add_argument("--parallel", action=argparse.BooleanOptionalAction, default=False,
                   help="schedule runs on a process pool; timings become unreliable")

    sub.add_parser("gradcheck", parents=[common], help="finite-difference gradient validation")
    sub.add_parser("selftest", parents=[common], help="oracle and invariant checks")
    return parser


def _opt(args, name, default):
    value = getattr(args, name, None)
    return default if value is None else value


def _objective(args):
    cfg_path = _opt(args, "config", None)
    if cfg_path:
        data = json.loads(Path(cfg_path).read_text())
        if "terms" in data:
            return Objective.from_spec(LossSpec.from_dict(data))
    return Objective.experiment(_opt(args, "lam", 0.5))


def _write_run(record, out, stem):
    out.mkdir(parents=True, exist_ok=True)
    (out / f"{stem}.json").write_text(record.to_json())
    (out / f"{stem}.csv").write_text(record.trace_csv())
    write_waveform_csv(out / f"{stem}_waveform.csv", record.final_waveform.samples)


def _cmd_ambiguity(args):
    s = read_waveform_csv(args.input)
    surf = ambiguity(s, shifted=args.shifted, normalize=args.normalize)
    out = Path(args.output)
    if _opt(args, "output_dir", None) and not out.is_absolute():
        out = Path(args.output_dir) / out
        out.parent.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(out, surf.values, surf.layout)
    _say(args, f"wrote {out} ({surf.n}x{surf.n}, {surf.layout})")
    return 0


def _cmd_optimize(args):
    seed = _opt(args, "seed", 0)
    if _opt(args, "input", None):
        init = Waveform(read_waveform_csv(args.input))
    else:
        init = Waveform.from_phases(random_phases(_opt(args, "n", 256), seeded_rng(seed)))
    cfg = AdamConfig(lr=_opt(args, "lr", 0.01), iterations=_opt(args, "iterations", 2000), seed=seed)
    rec = optimize_gradient(init, _objective(args), cfg, args.mode)
    _write_run(rec, Path(_opt(args, "output_dir", ".")), f"gradient_{seed}")
    _say(args, json.dumps(rec.final_metrics))
    return 0 if rec.status == "ok" else 1


def _cmd_ga(args):
    seed = _opt(args, "seed", 0)
    cfg = GAConfig(population=_opt(args, "population", 50), generations=_opt(args, "generations", 300), seed=seed)
    rec = optimize_ga(_objective(args), cfg, _opt(args, "n", 256))
    _write_run(rec, Path(_opt(args, "output_dir", ".")), f"ga_{seed}")
    _say(args, json.dumps(rec.final_metrics))
    return 0 if rec.status == "ok" else 1


def _cmd_sweep(args):
    cfg_path = _opt(args, "config", None)
    data = json.loads(Path(cfg_path).read_text()) if cfg_path else {}
    if hasattr(args, "n"):
        data["N"] = args.n
    if hasattr(args, "lam"):
        data["lambdas"] = [args.lam]
    if hasattr(args, "seed"):
        data["seeds"] = [args.seed]
    if hasattr(args, "output_dir"):
        data["output_dir"] = args.output_dir
    if args.parallel:
        data["parallel"] = True
    cfg = SweepConfig.from_dict(data)

    def progress(lam, seed, pair):
        g, a = pair
        _say(args, f"lambda={lam} seed={seed}: gradient {g.final_metrics.get('psl_db', float('nan')):.2f} dB "
                   f"in {g.wall_seconds:.1f}s, GA {a.final_metrics.get('psl_db', float('nan')):.2f} dB "
                   f"in {a.wall_seconds:.1f}s")

    report = run_sweep(cfg, progress=progress)
    _say(args, json.dumps(report.summary, indent=1))
    failed = sum(r.status != "ok" for _, r in report.records)
    return 0 if failed == 0 else 1


def _cmd_gradcheck(args):
    report = run_gradcheck(base_seed=_opt(args, "seed", 0))
    print(json.dumps(report, indent=1))
    return 0 if report["passed"] else 1


def _cmd_selftest(args):
    passed, failed, lines = run_selftest(base_seed=_opt(args, "seed", 0))
    for line in lines:
        _say(args, line)
    print(f"{passed} passed, {failed} failed")
    return 0 if failed == 0 else 1


def _say(args, msg):
    if not _opt(args, "quiet", False):
        print(msg)


COMMANDS = {
    "ambiguity": _cmd_ambiguity,
    "optimize": _cmd_optimize,
    "ga": _cmd_ga,
    "sweep": _cmd_sweep,
    "gradcheck": _cmd_gradcheck,
    "selftest": _cmd_selftest,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.WARNING if _opt(args, "quiet", False) else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (GrafError, OSError, ValueError, KeyError) as exc:
        print(f"graf {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
