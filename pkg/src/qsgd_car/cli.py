"""Command-line entry point.

Exit codes: 0 success, 1 usage or validation error, 2 runtime failure.
``compare`` additionally exits 3 when the uniform report has the lower mean.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import persist
from .energy import Theta
from .env import State
from .experiment import (PARTITIONED, UNIFORM, ExperimentConfig, derived_seed, evaluate_partitioned,
                         evaluate_uniform, generalization_test, generate_ics, histogram_experiment,
                         holdout_ics, train_partitioned, train_uniform, training_ics)
from .kernels import BACKEND
from .qsgd import QsgdError

logger = logging.getLogger("qsgd_car")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME, EXIT_UNIFORM_WINS = 0, 1, 2, 3
COMPARE_THRESHOLD = 46.0


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _ic_arg(text: str) -> State:
    try:
        z, v = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'z,v', got {text!r}") from None
    if not (math.isfinite(z) and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"non-finite initial condition {text!r}")
    return State(z, v)


def _nonneg_int(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {n}")
    return n


def _pos_int(text: str) -> int:
    n = _nonneg_int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="qsgd-car", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, seed=True):
        sp.add_argument("--config", type=Path, help="JSON experiment config")
        if seed:
            sp.add_argument("--seed", type=_nonneg_int,
                            help="master seed (default: config, then $QSA_SEED, then 0)")

    g = sub.add_parser("gen-ics", help="sample initial conditions to CSV")
    common(g)
    g.add_argument("--count", type=_pos_int, required=True)
    g.add_argument("--role", choices=["train", "test"], default="train")
    g.add_argument("--region", type=int, choices=[1, 2, 3, 4])
    g.add_argument("--out", type=Path, required=True)

    t = sub.add_parser("train", help="train a uniform or partitioned policy")
    common(t)
    t.add_argument("--mode", choices=[UNIFORM, PARTITIONED])
    t.add_argument("--restart", type=_nonneg_int, default=0, help="index into the theta0 pool")
    t.add_argument("--out", type=Path, required=True, help="output directory")

    h = sub.add_parser("histogram", help="final-cost distribution over many restarts")
    common(h)
    h.add_argument("--mode", choices=[UNIFORM, PARTITIONED])
    h.add_argument("--restarts", type=_pos_int, help="theta0 pool size M (split 4 ways if partitioned)")
    h.add_argument("--jobs", type=_pos_int, default=1)
    h.add_argument("--out", type=Path, required=True, help="output directory")

    r = sub.add_parser("rollout", help="simulate a policy and dump trajectories")
    common(r, seed=False)
    src = r.add_mutually_exclusive_group(required=True)
    src.add_argument("--theta-file", type=Path)
    src.add_argument("--random-theta", type=_nonneg_int, metavar="SEED")
    ic = r.add_mutually_exclusive_group(required=True)
    ic.add_argument("--ic", type=_ic_arg, action="append", metavar="Z,V")
    ic.add_argument("--ic-file", type=Path)
    r.add_argument("--record", action="store_true", help="write one trajectory CSV per episode")
    r.add_argument("--out", type=Path, required=True, help="output directory")

    c = sub.add_parser("compare", help="compare uniform and partitioned histogram reports")
    c.add_argument("--uniform-report", type=Path, required=True)
    c.add_argument("--partitioned-report", type=Path, required=True)
    c.add_argument("--out", type=Path, required=True)
    return p


def load_config(args) -> ExperimentConfig:
    data = {}
    if getattr(args, "config", None) is not None:
        try:
            data = json.loads(Path(args.config).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read config {args.config}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise UsageError("config must be a JSON object")
    if getattr(args, "seed", None) is not None:
        data["master_seed"] = args.seed
    elif "master_seed" not in data and os.environ.get("QSA_SEED"):
        try:
            data["master_seed"] = int(os.environ["QSA_SEED"])
        except ValueError:
            raise UsageError(f"QSA_SEED must be an integer, got {os.environ['QSA_SEED']!r}") from None
    if getattr(args, "mode", None) is not None:
        data["mode"] = args.mode
    if getattr(args, "restarts", None) is not None:
        data["n_restarts"] = args.restarts
    try:
        return ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"invalid config: {exc}") from None


def _print_resolved(cfg: ExperimentConfig, **extra) -> None:
    block = {"config": cfg.to_dict(), **extra}
    print("resolved config:")
    print(persist.dumps(block), end="")


def cmd_gen_ics(args) -> int:
    cfg = load_config(args)
    seed = derived_seed(cfg.master_seed, 0 if args.role == "train" else 1,
                        0 if args.region is None else args.region)
    ics = generate_ics(seed, args.count, args.role, args.region, cfg.env, cfg.partition)
    _print_resolved(cfg, count=args.count, role=args.role, region=args.region)
    persist.save_ics(args.out, ics)
    print(f"wrote {len(ics)} initial conditions to {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_config(args)
    _print_resolved(cfg, restart=args.restart, backend=BACKEND)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    ics = training_ics(cfg)
    persist.save_ics(out / "train_ics.csv", ics)
    summary = {"mode": cfg.mode, "restart": args.restart, "config": cfg.to_dict()}
    if cfg.mode == UNIFORM:
        theta, trace = train_uniform(cfg, args.restart, ics)
        persist.save_trace(out / "trace.csv", trace)
        summary["theta"] = list(theta)
        summary["gamma"] = evaluate_uniform(cfg, theta, ics)
        print(f"theta = {list(theta)}  gamma = {summary['gamma']:.4f}")
    else:
        theta, traces = train_partitioned(cfg, args.restart, ics)
        for r, tr in enumerate(traces, start=1):
            persist.save_trace(out / f"trace_region{r}.csv", tr)
        per, avg = evaluate_partitioned(cfg, theta, ics)
        summary["theta"] = theta.as_rows()
        summary["gamma_regions"] = per
        summary["gamma_bar"] = avg
        print(f"per-region gamma = {per}  gamma_bar = {avg:.4f}")
    persist.save_theta(out / "theta.csv", theta)
    test = holdout_ics(cfg)
    results, ok = generalization_test(theta, test, cfg.cost, cfg.env, cfg.partition, cfg.tie,
                                      record=False)
    summary["test_all_converged"] = ok
    summary["test_steps"] = [r.steps for r in results]
    persist.write_json(out / "summary.json", summary)
    return EXIT_OK


def cmd_histogram(args) -> int:
    cfg = load_config(args)
    _print_resolved(cfg, backend=BACKEND)
    args.out.mkdir(parents=True, exist_ok=True)
    report = histogram_experiment(cfg, jobs=args.jobs)
    persist.save_report(args.out / "report.json", report)
    persist.save_bins(args.out / "bins.csv", report)
    s = report.summary
    print(f"{s['n']} values, mean {s['mean']}, modes {s['modes'][:3]}, failures {report.failures}")
    return EXIT_OK


def cmd_rollout(args) -> int:
    cfg = load_config(args)
    if args.theta_file is not None:
        try:
            theta = persist.load_theta(args.theta_file)
        except OSError as exc:
            raise UsageError(f"cannot read {args.theta_file}: {exc.strerror}") from None
    else:
        theta = Theta(*np.random.default_rng(args.random_theta).uniform(-1.0, 1.0, 2).tolist())
    if args.ic_file is not None:
        try:
            states = persist.load_ics(args.ic_file, "test", cfg.env, cfg.partition).as_states()
        except OSError as exc:
            raise UsageError(f"cannot read {args.ic_file}: {exc.strerror}") from None
    else:
        states = args.ic
        for s in states:
            if not cfg.env.contains(*s):
                raise UsageError(f"initial condition {tuple(s)} is outside the state box")
    theta_out = theta.as_rows() if hasattr(theta, "as_rows") else list(theta)
    _print_resolved(cfg, theta=theta_out)
    args.out.mkdir(parents=True, exist_ok=True)
    results, ok = generalization_test(theta, states, cfg.cost, cfg.env, cfg.partition, cfg.tie,
                                      record=args.record)
    rows = []
    for i, (s, res) in enumerate(zip(states, results)):
        print(f"episode {i}: x0=({s[0]!r}, {s[1]!r}) steps={res.steps} reached_goal={res.reached_goal}")
        if args.record:
            persist.save_episode(args.out / f"episode_{i:03d}.csv", res)
        rows.append({"z0": s[0], "v0": s[1], "steps": res.steps, "reached_goal": res.reached_goal})
    persist.write_json(args.out / "rollouts.json",
                       {"theta": theta_out, "all_converged": ok, "episodes": rows})
    return EXIT_OK


def _stats(report) -> dict:
    vals = report.raw_values
    mean = math.fsum(vals) / len(vals) if vals else None
    below = sum(v < COMPARE_THRESHOLD for v in vals) / len(vals) if vals else None
    return {"mode": report.mode, "n": len(vals), "mean": mean, "modes": report.summary.get("modes", []),
            "mass_below_threshold": below}


def cmd_compare(args) -> int:
    try:
        uni = persist.load_report(args.uniform_report)
        par = persist.load_report(args.partitioned_report)
    except OSError as exc:
        raise UsageError(f"cannot read report: {exc}") from None
    except persist.SchemaError as exc:
        raise UsageError(str(exc)) from None
    u, p = _stats(uni), _stats(par)
    if u["mean"] is None or p["mean"] is None:
        raise UsageError("both reports need at least one raw value")
    diff = {"mean": p["mean"] - u["mean"],
            "mass_below_threshold": p["mass_below_threshold"] - u["mass_below_threshold"]}
    if p["mean"] < u["mean"]:
        verdict = "partitioned"
    elif p["mean"] > u["mean"]:
        verdict = "uniform"
    else:
        verdict = "tie"
    doc = {"threshold": COMPARE_THRESHOLD, "uniform": u, "partitioned": p, "diff": diff,
           "verdict": verdict}
    persist.write_json(args.out, doc)
    print(persist.dumps(doc), end="")
    return EXIT_OK if p["mean"] <= u["mean"] else EXIT_UNIFORM_WINS


COMMANDS = {"gen-ics": cmd_gen_ics, "train": cmd_train, "histogram": cmd_histogram,
            "rollout": cmd_rollout, "compare": cmd_compare}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, persist.SchemaError) as exc:
        print(f"qsgd-car {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (QsgdError, OSError, RuntimeError) as exc:
        print(f"qsgd-car {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
