"""Command-line interface.

Subcommands: ``synthesize`` (emit a gain file), ``run`` (execute a scenario
and write CSV + metrics), ``bench`` (interleaved timing comparison), and
``report`` (pretty-print a metrics.json).  Exit codes: 0 success, 1 config
error, 2 synthesis failure, 3 filter failure in every trial.
"""

import argparse
import json
import os
import subprocess
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Any

from ._backend import BACKEND
from .errors import ConfigError, Eh2MargError, SynthesisFailure
from .harness import ScenarioConfig, run_experiment, run_timing_benchmark
from .linearization import nominal_model
from .synthesis import load_gain_text, save_gain_text, synthesize_gain

__all__ = ["main"]

_AXES = ("roll", "pitch", "yaw")


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that reports usage problems as ConfigError (exit 1)."""

    def error(self, message: str) -> None:  # type: ignore[override]
        raise ConfigError(message)


def _add_scenario_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", type=Path, metavar="PATH", help="JSON scenario config")
    sp.add_argument(
        "--case", choices=["I", "II"], help="built-in scenario (overridden by --config)"
    )
    sp.add_argument("--seed", type=int, metavar="U64", help="override the config seed")
    sp.add_argument(
        "--trials", type=int, metavar="N", help="override the config trial count"
    )


def _build_parser() -> _Parser:
    p = _Parser(prog="eh2marg", description="Extended-H2 vs EKF attitude estimation benchmark")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("synthesize", help="synthesize the estimator gain and save it")
    _add_scenario_flags(sp)
    sp.add_argument("--out", type=Path, metavar="DIR", help="write gain_L0.txt here")
    sp.set_defaults(func=_cmd_synthesize)

    sp = sub.add_parser("run", help="run a scenario and write CSV + metrics.json")
    _add_scenario_flags(sp)
    sp.add_argument(
        "--out", type=Path, metavar="DIR", default=Path("out"), help="output directory"
    )
    sp.add_argument(
        "--gain",
        type=Path,
        metavar="PATH",
        help="use a precomputed gain file instead of synthesizing",
    )
    sp.add_argument(
        "--exclude-initial",
        type=float,
        metavar="S",
        default=5.0,
        help="seconds dropped from the start before computing metrics",
    )
    sp.set_defaults(func=_cmd_run)

    sp = sub.add_parser("bench", help="interleaved per-step timing of both filters")
    sp.add_argument("--steps", type=int, default=10_000, help="timed steps per filter")
    sp.add_argument("--seed", type=int, metavar="U64", default=42)
    sp.add_argument("--out", type=Path, metavar="DIR", help="also write bench.json here")
    sp.add_argument(
        "--compare-backends",
        action="store_true",
        help="re-run in a subprocess with the other array backend and compare",
    )
    sp.set_defaults(func=_cmd_bench)

    sp = sub.add_parser("report", help="print a table from a metrics.json")
    sp.add_argument(
        "--out", type=Path, metavar="DIR", default=Path("out"), help="directory holding metrics.json"
    )
    sp.set_defaults(func=_cmd_report)
    return p


def _load_scenario(args: argparse.Namespace, *, required: bool = True) -> ScenarioConfig | None:
    if args.config is not None:
        try:
            with open(args.config, "r") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {args.config}: {exc}") from exc
        cfg = ScenarioConfig.from_dict(doc)
    elif args.case == "I":
        cfg = ScenarioConfig.case_i()
    elif args.case == "II":
        cfg = ScenarioConfig.case_ii()
    elif required:
        raise ConfigError("provide --config or --case")
    else:
        return None
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.trials is not None:
        cfg = replace(cfg, num_trials=args.trials)
    return cfg


def _cmd_synthesize(args: argparse.Namespace) -> int:
    cfg = _load_scenario(args, required=False)
    if cfg is None:
        model = nominal_model()
    else:
        model = nominal_model(cfg.noise, cfg.world)
    cert = synthesize_gain(model)
    print(f"achieved H2 norm : {cert.h2_norm:.12g}")
    print(f"certified gamma  : {cert.gamma:.12g}")
    print(f"max Re(eig(A+LC)): {cert.max_closedloop_real_eig:.12g}")
    print(f"LMI feasible     : {cert.lmi_feasible}")
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        path = args.out / "gain_L0.txt"
        save_gain_text(cert.L, path)
        print(f"gain written to  : {path}")
    else:
        print("L0 =")
        for row in cert.L:
            print("  " + " ".join("%.17g" % v for v in row))
    return 0


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_scenario(args)
    if args.exclude_initial < 0.0:
        raise ConfigError(f"--exclude-initial must be >= 0, got {args.exclude_initial}")
    gain = None
    if args.gain is not None:
        try:
            gain = load_gain_text(args.gain)
        except OSError as exc:
            raise ConfigError(f"cannot read gain {args.gain}: {exc}") from exc
        except ValueError as exc:
            raise ConfigError(f"invalid gain file {args.gain}: {exc}") from exc
    result = run_experiment(
        cfg, gain=gain, out_dir=args.out, exclude_initial=args.exclude_initial
    )
    for rec in result["trials"]:
        if rec["ok"]:
            rms1 = rec["eh2"]["rms_deg"]
            rms2 = rec["ekf"]["rms_deg"]
            print(
                f"trial {rec['trial']:3d}: eh2 rms [{rms1[0]:.4f} {rms1[1]:.4f} {rms1[2]:.4f}] deg, "
                f"ekf rms [{rms2[0]:.4f} {rms2[1]:.4f} {rms2[2]:.4f}] deg"
            )
        else:
            print(f"trial {rec['trial']:3d}: FAILED ({rec['error']})")
    agg = result["aggregate"]
    if agg["num_ok"] == 0:
        print("all trials failed", file=sys.stderr)
        return 3
    print(f"ok {agg['num_ok']}/{cfg.num_trials}, eh2 yaw wins {agg['yaw_wins_eh2']}/{agg['num_ok']}")
    print(f"outputs in {args.out}")
    return 0


def _print_bench(res: dict[str, Any]) -> None:
    print(f"backend {res['backend']}: {res['steps']} interleaved steps")
    for name in ("eh2", "ekf"):
        s = res[name]
        print(f"  {name}: {s['mean_ms']:.6f} ms/step (std {s['std_ms']:.6f})")
    print(f"  ratio eh2/ekf: {res['ratio_eh2_over_ekf']:.4f}")


def _cmd_bench(args: argparse.Namespace) -> int:
    if args.steps < 200:
        raise ConfigError(f"--steps must be >= 200, got {args.steps}")
    res = run_timing_benchmark(steps=args.steps, seed=args.seed)
    _print_bench(res)
    if args.compare_backends:
        flipped = "0" if BACKEND == "numba" else "1"
        env = dict(os.environ, EH2MARG_NUMBA=flipped)
        with tempfile.TemporaryDirectory() as tmp:
            cmd = [
                sys.executable,
                "-m",
                "eh2marg",
                "bench",
                "--steps",
                str(args.steps),
                "--seed",
                str(args.seed),
                "--out",
                tmp,
            ]
            proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
            if proc.returncode != 0:
                raise Eh2MargError(
                    f"backend comparison subprocess failed:\n{proc.stderr.strip()}"
                )
            with open(Path(tmp) / "bench.json", "r") as fh:
                other = json.load(fh)
        _print_bench(other)
        for name in ("eh2", "ekf"):
            cur, oth = res[name]["mean_ms"], other[name]["mean_ms"]
            if oth > 0.0:
                print(
                    f"  {name}: {res['backend']} is {oth / cur:.2f}x faster than {other['backend']}"
                )
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        with open(args.out / "bench.json", "w") as fh:
            json.dump(res, fh, indent=2, sort_keys=True)
            fh.write("\n")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    path = args.out / "metrics.json"
    try:
        with open(path, "r") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    cfg = doc.get("config", {})
    agg = doc.get("aggregate", {})
    n_trials = len(doc.get("trials", []))
    print(
        f"scenario case {cfg.get('case_id', '?')}  seed {cfg.get('seed', '?')}  "
        f"trials {n_trials} (ok {agg.get('num_ok', 0)}, failed {agg.get('num_failed', 0)})  "
        f"backend {doc.get('backend', '?')}"
    )
    if agg.get("num_ok", 0) == 0:
        print("no successful trials to report")
        return 0
    print(f"{'axis':<7}{'eh2 rms [deg]':>16}{'ekf rms [deg]':>16}")
    for i, axis in enumerate(_AXES):
        print(f"{axis:<7}{agg['eh2']['rms_deg'][i]:>16.6f}{agg['ekf']['rms_deg'][i]:>16.6f}")
    print(f"eh2 yaw wins: {agg['yaw_wins_eh2']}/{agg['num_ok']}")
    timing = agg.get("timing")
    if timing is not None:
        print(
            f"timing: eh2 {timing['eh2_mean_ms']:.6f} ms/step, "
            f"ekf {timing['ekf_mean_ms']:.6f} ms/step, "
            f"ratio {timing['ratio_eh2_over_ekf']:.4f}"
        )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return int(args.func(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SynthesisFailure as exc:
        print(f"synthesis failure: {exc}", file=sys.stderr)
        return 2
    except Eh2MargError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
