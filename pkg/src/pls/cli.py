"""Command-line surface: instance generation, uniformity, evaluation, experiments.

Exit codes: 0 on success, 1 on runtime or I/O failure, 2 on usage errors.
Every stochastic subcommand requires an explicit --seed and is fully
deterministic given its flag set; ``PLS_THREADS`` only changes wall-clock
time, never output.
"""

from __future__ import annotations

import argparse
import math
import os
import sys

import numpy as np

from . import adversary, evaluate, forecaster, instance, randgen
from .streams import ArrayStream, StreamError

EVAL_HEADER = "instance,algo,adversary,mode,trials,seed,mean,std_error"
AVGCASE_HEADER = "n,p_spec,k,trials,seed,metric,measured,bound,satisfied"


class UsageError(Exception):
    """Flag-level misuse detected after parsing."""


def _write_rows(path: str | None, header: str, rows: list[str]) -> None:
    if path is None:
        print(header)
        for row in rows:
            print(row)
        return
    fresh = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", encoding="utf-8") as fh:
        if fresh:
            fh.write(header + "\n")
        for row in rows:
            fh.write(row + "\n")


def _load_instance(path: str) -> instance.BlockRepresentation:
    return instance.load_instance(path)


def _read_sequence(path: str) -> np.ndarray:
    with open(path, "r", encoding="utf-8") as fh:
        values = [float(line) for line in fh if line.strip()]
    return np.asarray(values)


def _build_forecaster(b, algo: str):
    if algo == "uniform":
        return forecaster.make_uniform_forecaster(b)
    if algo == "general":
        return forecaster.make_general_forecaster(b)
    if algo == "separation":
        return forecaster.make_separation_forecaster(b)
    raise UsageError(f"unknown algorithm {algo!r}")


def _build_model(b, adv: str):
    if adv == "bernoulli":
        return adversary.bernoulli_block_model(b.m)
    if adv == "tree":
        return adversary.tree_model_moments(adversary.build_tree(b))
    raise UsageError(f"unknown adversary {adv!r}")


def _build_sampler(b, adv: str):
    if adv == "bernoulli":
        lazy = adversary.BernoulliBlockSampler(b)
        return lazy.stream
    if adv == "tree":
        tree = adversary.build_tree(b)

        def sample(rng):
            return adversary.render_sequence(b, adversary.sample_tree_values(tree, rng))

        return sample
    raise UsageError(f"unknown adversary {adv!r}")


# --- subcommand handlers ----------------------------------------------------


def _probability_source(args, rng) -> randgen.ProbabilitySequence:
    """Exactly one of --p-file / --const-p / --kmono describes p*."""
    sources = [args.p_file is not None, args.const_p is not None, args.kmono is not None]
    if sum(sources) != 1:
        raise UsageError("need exactly one of --p-file / --const-p / --kmono")
    if args.p_file is not None:
        return randgen.load_probability_sequence(args.p_file)
    if args.n is None:
        raise UsageError("--const-p / --kmono require --n")
    if args.const_p is not None:
        return randgen.ProbabilitySequence((args.const_p,) * args.n)
    return randgen.random_kmonotone(args.n, args.kmono, rng)


def cmd_instance_gen(args) -> int:
    fam = args.family
    if fam == "random":
        if args.seed is None:
            raise UsageError("--family random requires --seed")
        rng = np.random.default_rng(args.seed)
        p = _probability_source(args, rng)
        ts = randgen.sample_stopping_set(p, rng)
        if ts is None:
            print("empty draw: sampled stopping set was empty", file=sys.stderr)
            return 1
        payload = instance.instance_to_json(ts)
    else:
        params = {}
        if fam in ("ones", "geometric"):
            if args.m is None:
                raise UsageError(f"--family {fam} requires --m")
            params["m"] = args.m
        if fam in ("cantor", "separation"):
            if args.k is None:
                raise UsageError(f"--family {fam} requires --k")
            params["k"] = args.k
        if fam == "separation":
            if args.h is None:
                raise UsageError("--family separation requires --h")
            params["h"] = args.h
        payload = instance.instance_to_json(instance.family(fam, **params))
    if args.output is None:
        print(payload)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    return 0


def cmd_uniformity(args) -> int:
    b = _load_instance(args.instance)
    uni = instance.approximate_uniformity(b)
    value = uni.value
    print(f"{value.numerator}/{value.denominator} {round(float(value), 4)} ({uni.i},{uni.j})")
    return 0


def cmd_forecast(args) -> int:
    b = _load_instance(args.instance)
    values = _read_sequence(args.sequence)
    if values.size != b.n:
        raise ValueError(f"sequence has {values.size} values but the instance needs {b.n}")
    stream = ArrayStream(values)
    run = _build_forecaster(b, args.algo)
    pred = run(stream, np.random.default_rng(args.seed))
    mu = stream.target_mean(pred.t, pred.w)
    print(forecaster.format_prediction(pred, mu))
    return 0


def _eval_row(instance_id, algo, adv, mode, trials, seed, estimate) -> str:
    seed_text = "" if seed is None else str(seed)
    return (
        f"{instance_id},{algo},{adv},{mode},{trials},{seed_text},"
        f"{float(estimate.mean)!r},{estimate.std_error!r}"
    )


def cmd_eval_exact(args) -> int:
    b = _load_instance(args.instance)
    if args.algo != "uniform":
        raise UsageError(
            "exact evaluation covers the outcome-distribution forecaster only "
            "(--algo uniform); use 'eval mc' for the others"
        )
    dist = forecaster.uniform_forecast_distribution(b)
    model = _build_model(b, args.adversary)
    estimate = evaluate.exact_expected_error(b, dist, model)
    row = _eval_row(args.instance, args.algo, args.adversary, "exact", 0, None, estimate)
    _write_rows(args.out, EVAL_HEADER, [row])
    return 0


def cmd_eval_mc(args) -> int:
    b = _load_instance(args.instance)
    run = _build_forecaster(b, args.algo)
    sampler = _build_sampler(b, args.adversary)
    estimate = evaluate.monte_carlo_error(run, sampler, args.trials, args.seed)
    row = _eval_row(
        args.instance, args.algo, args.adversary, "mc", args.trials, args.seed, estimate
    )
    _write_rows(args.out, EVAL_HEADER, [row])
    return 0


def cmd_experiment_avgcase(args) -> int:
    p = _probability_source(args, np.random.default_rng(args.seed))
    if args.p_file is not None:
        p_spec = f"file:{os.path.basename(args.p_file)}"
    elif args.const_p is not None:
        p_spec = f"const:{args.const_p}"
    else:
        p_spec = f"kmono:{args.kmono}"
    report = evaluate.average_case_experiment(p, args.trials, args.seed)

    def row(metric, measured, bound="", satisfied=""):
        return (
            f"{p.n},{p_spec},{p.k},{args.trials},{args.seed},"
            f"{metric},{measured},{bound},{satisfied}"
        )

    rows = [row("empty_draws", report.empty_draws)]
    if report.const_p is not None:
        sigma = math.sqrt(
            max(report.required_frequency * (1 - report.required_frequency), 0.0)
            / args.trials
        )
        needed = report.required_frequency - 4 * sigma
        size_freq = sum(
            1 for s in report.sizes if s <= report.size_threshold
        ) / args.trials
        mpr_freq = sum(
            1 for v in report.mprimes if v >= report.mprime_threshold
        ) / args.trials
        rows.append(row("size_within_frequency", size_freq))
        rows.append(row("mprime_above_frequency", mpr_freq))
        rows.append(
            row(
                "joint_frequency",
                report.joint_frequency,
                repr(needed),
                report.joint_frequency >= needed,
            )
        )
    if report.size_ratios:
        rows.append(row("mean_size_ratio", np.mean(report.size_ratios)))
        rows.append(row("max_size_ratio", np.max(report.size_ratios)))
    if report.tightness_ratios:
        rows.append(row("mean_tightness_ratio", np.mean(report.tightness_ratios)))
        rows.append(row("min_tightness_ratio", np.min(report.tightness_ratios)))
    _write_rows(args.out, AVGCASE_HEADER, rows)
    return 0


def cmd_experiment_curve(args) -> int:
    m_values = [int(tok) for tok in args.m_list.split(",") if tok.strip()]
    if not m_values:
        raise UsageError("--m-list must contain at least one block count")
    if not args.exact and (args.trials is None or args.seed is None):
        raise UsageError("curve needs either --exact or both --trials and --seed")
    rows = []
    for m in m_values:
        b = instance.family(args.family, m=m)
        label = f"{args.family}({m})"
        if args.exact:
            dist = forecaster.uniform_forecast_distribution(b)
            model = _build_model(b, args.adversary)
            estimate = evaluate.exact_expected_error(b, dist, model)
            rows.append(_eval_row(label, args.algo, args.adversary, "exact", 0, None, estimate))
        else:
            run = _build_forecaster(b, args.algo)
            sampler = _build_sampler(b, args.adversary)
            estimate = evaluate.monte_carlo_error(run, sampler, args.trials, args.seed)
            rows.append(
                _eval_row(label, args.algo, args.adversary, "mc", args.trials, args.seed, estimate)
            )
    _write_rows(args.out, EVAL_HEADER, rows)
    return 0


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pls",
        description="Prediction with limited selectivity: instances, forecasts, bounds.",
    )
    top = parser.add_subparsers(dest="command", required=True)

    p_instance = top.add_parser("instance", help="instance file utilities")
    inst_sub = p_instance.add_subparsers(dest="subcommand", required=True)
    p_gen = inst_sub.add_parser("gen", help="generate an instance JSON file")
    p_gen.add_argument("--family", required=True,
                       choices=["ones", "geometric", "cantor", "separation", "random"])
    p_gen.add_argument("--m", type=int)
    p_gen.add_argument("--k", type=int)
    p_gen.add_argument("--h", type=int)
    p_gen.add_argument("--n", type=int)
    p_gen.add_argument("--const-p", type=float, dest="const_p")
    p_gen.add_argument("--kmono", type=int)
    p_gen.add_argument("--p-file", dest="p_file",
                       help='JSON {"p": [reals]} inclusion probabilities')
    p_gen.add_argument("--seed", type=int)
    p_gen.add_argument("-o", "--output")
    p_gen.set_defaults(func=cmd_instance_gen)

    p_uni = top.add_parser("uniformity", help="print m' and its witness interval")
    p_uni.add_argument("--instance", required=True)
    p_uni.set_defaults(func=cmd_uniformity)

    p_fc = top.add_parser("forecast", help="run one forecast on a sequence file")
    p_fc.add_argument("--instance", required=True)
    p_fc.add_argument("--sequence", required=True,
                      help="newline-separated decimals in [0, 1]")
    p_fc.add_argument("--algo", required=True,
                      choices=["uniform", "general", "separation"])
    p_fc.add_argument("--seed", type=int, required=True)
    p_fc.set_defaults(func=cmd_forecast)

    p_eval = top.add_parser("eval", help="expected squared error evaluation")
    eval_sub = p_eval.add_subparsers(dest="subcommand", required=True)
    p_exact = eval_sub.add_parser("exact", help="closed-form moment evaluation")
    p_exact.add_argument("--instance", required=True)
    p_exact.add_argument("--algo", default="uniform",
                         choices=["uniform", "general", "separation"])
    p_exact.add_argument("--adversary", required=True, choices=["bernoulli", "tree"])
    p_exact.add_argument("--out")
    p_exact.set_defaults(func=cmd_eval_exact)
    p_mc = eval_sub.add_parser("mc", help="Monte Carlo evaluation")
    p_mc.add_argument("--instance", required=True)
    p_mc.add_argument("--algo", required=True,
                      choices=["uniform", "general", "separation"])
    p_mc.add_argument("--adversary", required=True, choices=["bernoulli", "tree"])
    p_mc.add_argument("--trials", type=int, required=True)
    p_mc.add_argument("--seed", type=int, required=True)
    p_mc.add_argument("--out")
    p_mc.set_defaults(func=cmd_eval_mc)

    p_exp = top.add_parser("experiment", help="batch experiments")
    exp_sub = p_exp.add_subparsers(dest="subcommand", required=True)
    p_avg = exp_sub.add_parser("avgcase", help="random stopping set statistics")
    p_avg.add_argument("--n", type=int)
    p_avg.add_argument("--const-p", type=float, dest="const_p")
    p_avg.add_argument("--kmono", type=int)
    p_avg.add_argument("--p-file", dest="p_file",
                       help='JSON {"p": [reals]} inclusion probabilities')
    p_avg.add_argument("--trials", type=int, required=True)
    p_avg.add_argument("--seed", type=int, required=True)
    p_avg.add_argument("--out")
    p_avg.set_defaults(func=cmd_experiment_avgcase)
    p_curve = exp_sub.add_parser("curve", help="error versus block count")
    p_curve.add_argument("--family", default="ones", choices=["ones", "geometric"])
    p_curve.add_argument("--m-list", required=True, dest="m_list")
    p_curve.add_argument("--algo", default="uniform", choices=["uniform"])
    p_curve.add_argument("--adversary", required=True, choices=["bernoulli", "tree"])
    p_curve.add_argument("--exact", action="store_true")
    p_curve.add_argument("--trials", type=int)
    p_curve.add_argument("--seed", type=int)
    p_curve.add_argument("--out")
    p_curve.set_defaults(func=cmd_experiment_curve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, StreamError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
