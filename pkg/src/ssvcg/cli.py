"""Command-line front end: ``python -m ssvcg <command>`` or ``ssvcg <command>``.

Commands: optimize, evaluate, sweep, check, equilibrium.
Exit codes: 0 ok, 1 property/experiment failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import checks
from .equilibrium import load_valuations, nash_bids, verify_best_response, verify_equilibrium_vp
from .mechanism import RebateCoefficients, WorstCase, payments, worst_case_ratio
from .rebate_design import SamplingConfig, XVariables, assemble_samples, optimize_rebates
from .sampling import (
    calafiore_campi_count,
    estimate_violation,
    random_ordered_samples,
    theory_constants,
    write_samples_csv,
)
from .surrogate import SurrogateSpec

log = logging.getLogger("ssvcg")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
EVAL_SEED_OFFSET = 1_000_003
CSV_HEADER = ["n", "alpha", "t_ssvcg", "t_numerical", "t_simulated", "t_scaled"]
EVAL_CHUNK = 20_000


class UsageError(Exception):
    """Bad flags, config or input files."""


# ---------------------------------------------------------------- helpers


def _threads() -> int:
    raw = os.environ.get("SSVCG_THREADS")
    if raw is None:
        return max(1, min(8, os.cpu_count() or 1))
    try:
        k = int(raw)
    except ValueError:
        raise UsageError(f"SSVCG_THREADS must be an integer, got {raw!r}") from None
    if k < 1:
        raise UsageError("SSVCG_THREADS must be at least 1")
    return k


def _fmt(x: float) -> str:
    return "%.9g" % x


def _emit(text: str, out: str | None) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


def _read_json(path: str):
    try:
        return json.loads(Path(path).read_text())
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{path} is not valid JSON: {e}") from None


def _parse_range(text) -> list[int]:
    if isinstance(text, (list, tuple)) and len(text) == 2:
        a, b = text
    else:
        try:
            a, b = str(text).split(":")
        except ValueError:
            raise UsageError(f"--n-range expects A:B, got {text!r}") from None
    try:
        a, b = int(a), int(b)
    except ValueError:
        raise UsageError(f"--n-range bounds must be integers, got {text!r}") from None
    if a < 2 or b < a:
        raise UsageError("--n-range needs 2 <= A <= B")
    return list(range(a, b + 1))


def _apply_config(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    """Values from ``--config`` override the command-line flags."""
    if not getattr(args, "config", None):
        return
    cfg = _read_json(args.config)
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    if "surrogate" in cfg:
        cfg = dict(cfg)
        cfg["alpha"] = SurrogateSpec.from_config(cfg.pop("surrogate")).alpha
    for key, value in cfg.items():
        dest = key.replace("-", "_")
        if dest in ("command", "func", "config") or not hasattr(args, dest):
            raise UsageError(f"unknown config key {key!r} for this command")
        if dest == "alpha" and not isinstance(value, list):
            value = [value]
        setattr(args, dest, value)


def _alphas(args) -> list[float]:
    if not args.alpha:
        raise UsageError("--alpha is required")
    out = []
    for a in args.alpha:
        a = float(a)
        if not 0.0 < a < 1.0:
            raise UsageError(f"alpha must lie in (0, 1), got {a}")
        out.append(a)
    return out


def _single_alpha(args) -> float:
    alphas = _alphas(args)
    if len(alphas) != 1:
        raise UsageError("this command takes exactly one --alpha")
    return alphas[0]


def _positive(name: str, value) -> int | None:
    if value is None:
        return None
    value = int(value)
    if value < 1:
        raise UsageError(f"{name} must be at least 1")
    return value


def _require_n(args) -> int:
    if args.n is None:
        raise UsageError("--n is required")
    n = int(args.n)
    if n < 2:
        raise UsageError("--n must be at least 2")
    return n


def _eval_seed(seed: int, eval_seed) -> int:
    if eval_seed is None:
        return seed + EVAL_SEED_OFFSET
    if int(eval_seed) == seed:
        raise UsageError("evaluation seed must differ from the training seed")
    return int(eval_seed)


def chunked_worst_case(spec: SurrogateSpec, c: RebateCoefficients, samples: np.ndarray, threads: int) -> WorstCase:
    """``worst_case_ratio`` over chunks evaluated in parallel; first maximiser wins ties."""
    chunks = [samples[k : k + EVAL_CHUNK] for k in range(0, samples.shape[0], EVAL_CHUNK)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(lambda s: worst_case_ratio(spec, c, s), chunks))
    best = parts[0]
    for p in parts[1:]:
        if p.value > best.value:
            best = p
    return WorstCase(value=best.value, argmax=best.argmax, skipped=sum(p.skipped for p in parts))


def _load_design(path: str) -> dict:
    d = _read_json(path)
    try:
        n = int(d["n"])
        alpha = float(d["alpha"])
        c = RebateCoefficients(np.asarray(d["c"], dtype=float), n)
    except KeyError as e:
        raise UsageError(f"{path}: missing field {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise UsageError(f"{path}: invalid rebate coefficients: {e}") from None
    if not 0.0 < alpha < 1.0:
        raise UsageError(f"{path}: alpha must lie in (0, 1)")
    return {**d, "n": n, "alpha": alpha, "coefficients": c}


# ---------------------------------------------------------------- commands


def _design(n: int, alpha: float, seed: int, train, cover):
    spec = SurrogateSpec.power_law(alpha)
    cfg = SamplingConfig(train_samples=train, seed=seed, cover_epsilon=cover)
    return spec, optimize_rebates(spec, n, cfg)


def cmd_optimize(args) -> int:
    n = _require_n(args)
    alpha = _single_alpha(args)
    train = _positive("--train-samples", args.train_samples)
    spec, design = _design(n, alpha, args.seed, train, args.with_cover)
    consts = theory_constants(spec, n)
    constants = {
        "K1": consts.K1,
        "K2": consts.K2,
        "K3_inv": consts.K3_inv,
        "B2": consts.B2,
        "Bn": consts.Bn,
        "gamma": consts.gamma,
        "u_at_one": consts.u_at_one,
    }
    if args.with_cover is not None:
        constants["cover_gap_bound"] = consts.bound_for(args.with_cover)
    if args.epsilon is not None or args.delta is not None:
        if args.epsilon is None or args.delta is None:
            raise UsageError("--epsilon and --delta must be given together")
        constants["sample_count"] = calafiore_campi_count(args.epsilon, args.delta, n - 1)
    result = {
        "n": n,
        "alpha": alpha,
        "seed": args.seed,
        "train_samples": 5000 * n if train is None else train,
        "with_cover": args.with_cover,
        "c": design.c.c.tolist(),
        "x": design.x.tolist(),
        "t_numerical": design.t,
        "constants": constants,
        "lp_stats": design.lp_stats,
    }
    if args.samples_out:
        base = Path(args.samples_out)
        write_samples_csv(base.with_name(base.stem + "_w.csv"), design.w_samples)
        if design.f_samples.size and n >= 3:
            write_samples_csv(base.with_name(base.stem + "_f.csv"), design.f_samples)
    _emit(_dump_json(result), args.out)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    if not args.c_file:
        raise UsageError("--c-file is required")
    d = _load_design(args.c_file)
    n, alpha, c = d["n"], d["alpha"], d["coefficients"]
    spec = SurrogateSpec.power_law(alpha)
    seed = int(d.get("seed", 0) if args.seed is None else args.seed)
    eval_seed = _eval_seed(seed, args.eval_seed)
    count = _positive("--eval-samples", args.eval_samples) or 50_000 * n
    samples = random_ordered_samples(n, count, eval_seed)
    if args.include_train:
        cfg = SamplingConfig(train_samples=d.get("train_samples"), seed=seed, cover_epsilon=d.get("with_cover"))
        _, w = assemble_samples(n, cfg)
        samples = np.vstack([samples, w])
    wc = chunked_worst_case(spec, c, samples, _threads())
    result = {
        "n": n,
        "alpha": alpha,
        "eval_seed": eval_seed,
        "eval_samples": int(samples.shape[0]),
        "t_simulated": wc.value,
        "argmax_profile": wc.argmax.tolist(),
    }
    if "t_numerical" in d:
        t = float(d["t_numerical"])
        result["t_numerical"] = t
        result["violation_fraction"] = estimate_violation(XVariables(c.partial_sums(), t), spec, samples)
    else:
        result["violation_fraction"] = estimate_violation(XVariables(c.partial_sums(), wc.value), spec, samples)
    _emit(_dump_json(result), args.out)
    return EXIT_OK


def sweep_row(n: int, alpha: float, seed: int, eval_seed: int, train, evals, cover) -> dict:
    spec, design = _design(n, alpha, seed, train, cover)
    t_ssvcg = worst_case_ratio(spec, RebateCoefficients.zeros(n), design.w_samples).value
    samples = random_ordered_samples(n, evals or 50_000 * n, eval_seed)
    t_sim = worst_case_ratio(spec, design.c, samples).value
    return {
        "n": n,
        "alpha": alpha,
        "t_ssvcg": t_ssvcg,
        "t_numerical": design.t,
        "t_simulated": t_sim,
        "t_scaled": design.t / (1.0 - alpha),
    }


def cmd_sweep(args) -> int:
    if args.n_range is None:
        if args.n is None:
            raise UsageError("--n-range or --n is required")
        ns = [_require_n(args)]
    else:
        ns = _parse_range(args.n_range)
    alphas = _alphas(args)
    train = _positive("--train-samples", args.train_samples)
    evals = _positive("--eval-samples", args.eval_samples)
    eval_seed = _eval_seed(args.seed, args.eval_seed)
    jobs = [(n, a) for a in alphas for n in ns]
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(lambda j: sweep_row(j[0], j[1], args.seed, eval_seed, train, evals, args.with_cover), jobs))
    if args.format == "json":
        text = _dump_json(rows)
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow([r["n"]] + [_fmt(r[k]) for k in CSV_HEADER[1:]])
        text = buf.getvalue()
    _emit(text, args.out)
    return EXIT_OK


def cmd_check(args) -> int:
    results = checks.run_all(seed=args.seed, fault=args.inject_fault)
    failed = [r for r in results if not r.passed]
    lines = []
    for r in results:
        if args.verbose or not r.passed:
            lines.append(f"{'PASS' if r.passed else 'FAIL'} {r.name}: {r.violations} violations in {r.trials} trials")
    lines.append(f"{len(results) - len(failed)}/{len(results)} properties passed")
    _emit("\n".join(lines), args.out)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_equilibrium(args) -> int:
    if not args.valuations:
        raise UsageError("--valuations is required")
    raw = _read_json(args.valuations)
    if isinstance(raw, dict):
        raw = raw.get("valuations", [])
    try:
        vals = load_valuations(raw)
    except (KeyError, TypeError, ValueError) as e:
        raise UsageError(f"{args.valuations}: {e}") from None
    if len(vals) < 2:
        raise UsageError("need at least two valuations")
    if args.c_file:
        d = _load_design(args.c_file)
        if d["n"] != len(vals):
            raise UsageError("c-file agent count does not match the valuations")
        c = d["coefficients"]
        alpha = d["alpha"] if not args.alpha else _single_alpha(args)
    else:
        c = RebateCoefficients.zeros(len(vals))
        alpha = _single_alpha(args)
    spec = SurrogateSpec.power_law(alpha)
    theta = nash_bids(vals, spec)
    outcome = payments(spec, theta, c)
    vp = verify_equilibrium_vp(vals, spec, c, theta)
    br = [verify_best_response(vals, spec, theta, i, c=c) for i in range(len(vals))]
    result = {
        "alpha": alpha,
        "theta_ne": theta.tolist(),
        "outcome": outcome.to_dict(),
        "vp_report": [
            {"agent": r.agent, "utility": r.utility, "q": r.q, "rebate": r.rebate, "vp_ok": r.vp_ok} for r in vp
        ],
        "br_report": [
            {"agent": i, "is_br": r.is_br, "best_gain": r.best_gain, "best_bid": r.best_bid} for i, r in enumerate(br)
        ],
    }
    _emit(_dump_json(result), args.out)
    ok = all(r.vp_ok for r in vp) and all(r.is_br for r in br)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="JSON file whose keys override the flags")
    common.add_argument("--out", metavar="PATH", help="write the result here instead of stdout")
    common.add_argument("--verbose", "-v", action="store_true")

    def seed_flag(p, default=0):
        p.add_argument("--seed", type=int, default=default, help=f"training-sample seed (default {default})")

    def alpha_flag(p):
        p.add_argument("--alpha", type=float, action="append", help="surrogate exponent in (0, 1)")

    parser = argparse.ArgumentParser(prog="ssvcg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("optimize", parents=[common], help="solve the sampled rebate-design program")
    p.add_argument("--n", type=int)
    alpha_flag(p)
    p.add_argument("--train-samples", type=int, help="random samples (default 5000 n)")
    p.add_argument("--with-cover", type=float, metavar="EPS", help="add an EPS-cover of both faces")
    p.add_argument("--epsilon", type=float, help="violation level for the sample-count bound")
    p.add_argument("--delta", type=float, help="confidence level for the sample-count bound")
    p.add_argument("--samples-out", metavar="PATH", help="export training samples as CSV")
    seed_flag(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("evaluate", parents=[common], help="worst-case ratio of saved coefficients on fresh samples")
    p.add_argument("--c-file", metavar="FILE", help="JSON with n, alpha, c (e.g. optimize output)")
    p.add_argument("--eval-samples", type=int, help="fresh samples (default 50000 n)")
    p.add_argument("--eval-seed", type=int, help="defaults to a seed disjoint from the training seed")
    p.add_argument("--include-train", action="store_true", help="also evaluate on the training samples")
    seed_flag(p, None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", parents=[common], help="table over n and alpha")
    p.add_argument("--n", type=int)
    p.add_argument("--n-range", metavar="A:B", help="inclusive agent-count range")
    alpha_flag(p)
    p.add_argument("--train-samples", type=int)
    p.add_argument("--eval-samples", type=int)
    p.add_argument("--eval-seed", type=int)
    p.add_argument("--with-cover", type=float, metavar="EPS")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    seed_flag(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", parents=[common], help="randomised property audit")
    p.add_argument("--inject-fault", choices=("alpha_n",), help=argparse.SUPPRESS)
    seed_flag(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("equilibrium", parents=[common], help="Nash bids, outcome, VP and best-response checks")
    p.add_argument("--valuations", metavar="FILE", help='JSON list of {"kind": "power", "w": .., "beta": ..}')
    alpha_flag(p)
    p.add_argument("--c-file", metavar="FILE")
    seed_flag(p)
    p.set_defaults(func=cmd_equilibrium)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        _apply_config(args, parser)
        return args.func(args)
    except UsageError as e:
        print(f"ssvcg {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        print(f"ssvcg {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # module failure during the experiment itself
        print(f"ssvcg {args.command}: failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
