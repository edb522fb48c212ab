"""Command-line front end: ``jcrp sample | pmf | enumerate | verify``.

Exit codes: 0 success, 1 a binding verification check failed, 2 invalid
input, 3 enumeration budget exceeded.
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from .combinatorics import (
    GroupIndexing,
    parse_integer_partition,
    parse_partition,
    parse_permutation,
)
from .distributions import (
    ProbValue,
    balanced_integer_pmf,
    balanced_partition_limit_pmf,
    balanced_partition_pmf,
    canonical_text,
    even_integer_pmf,
    even_partition_limit_pmf,
    even_partition_pmf,
    even_permutation_pmf,
    ewens_integer_pmf,
    ewens_partition_pmf,
    ewens_permutation_pmf,
    two_param_partition_pmf,
)
from .errors import JcrpError, ParameterError, ResourceError
from .oracle import (
    EnumerationBudget,
    enumerate_balanced,
    enumerate_even,
    enumerate_integer_partitions,
    enumerate_partitions,
    enumerate_permutations,
)
from .params import ModelParams

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

_RATIONAL = re.compile(r"^[+-]?\d+(/\d+)?$")


def rational(text: str) -> Fraction:
    if not _RATIONAL.match(text.strip()):
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer or p/q rational")
    try:
        return Fraction(text.strip())
    except ZeroDivisionError:
        raise argparse.ArgumentTypeError(f"{text!r} has a zero denominator") from None


def positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"{text!r} must be at least 1")
    return v


def seed_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be in [0, 2^64)")
    return v


@dataclass
class RunConfig:
    command: str
    n: int
    j: int
    params: ModelParams | None
    seed: int
    samples: int
    format: str
    budget: EnumerationBudget


def params_from_args(args) -> ModelParams | None:
    """Pick the regime from whichever parameter flags were given."""
    given = {k for k in ("alpha", "theta", "kappa", "m", "lam") if getattr(args, k, None) is not None}
    if not given:
        return None
    if given <= {"alpha", "theta"}:
        if given != {"alpha", "theta"}:
            raise ParameterError("--alpha and --theta must be given together")
        return ModelParams.two_param(args.alpha, args.theta)
    if given == {"kappa", "m"}:
        if args.m.denominator != 1:
            raise ParameterError("--m must be an integer")
        return ModelParams.negative_kappa(args.kappa, int(args.m))
    if given == {"lam"}:
        return ModelParams.ewens(args.lam)
    raise ParameterError("give exactly one of: --alpha/--theta, --kappa/--m, --lam")


def config_from_args(args) -> RunConfig:
    budget = EnumerationBudget(args.max_objects, args.max_ground_set)
    return RunConfig(args.command, getattr(args, "n", 1), getattr(args, "j", 1), params_from_args(args),
                     getattr(args, "seed", 0), getattr(args, "samples", 1), args.format, budget)


def _need(params: ModelParams | None, what: str) -> ModelParams:
    if params is None:
        raise ParameterError(f"{what} needs model parameters")
    return params


def _lam(params: ModelParams | None) -> Fraction:
    """The single Ewens parameter: ``--lam``, or theta when alpha is 0."""
    p = _need(params, "this model")
    if p.alpha != 0:
        raise ParameterError("this model takes one parameter; use --lam")
    return p.theta


# -- pmf models -------------------------------------------------------------------------------------------------

@dataclass(frozen=True)
class PmfModel:
    parse: Callable[[str], object]
    pmf: Callable[[object, RunConfig], ProbValue]
    support: Callable[[RunConfig], list]


def _g(cfg: RunConfig) -> GroupIndexing:
    return GroupIndexing(cfg.n, cfg.j)


PMF_MODELS: dict[str, PmfModel] = {
    "crp": PmfModel(parse_partition,
                    lambda B, c: two_param_partition_pmf(B, _need(c.params, "crp")),
                    lambda c: enumerate_partitions(c.n, c.budget)),
    "ewens": PmfModel(parse_partition,
                      lambda B, c: ewens_partition_pmf(B, _lam(c.params)),
                      lambda c: enumerate_partitions(c.n, c.budget)),
    "ewens-integer": PmfModel(parse_integer_partition,
                              lambda m, c: ewens_integer_pmf(m, _lam(c.params)),
                              lambda c: enumerate_integer_partitions(c.n)),
    "ewens-permutation": PmfModel(parse_permutation,
                                  lambda s, c: ewens_permutation_pmf(s, _lam(c.params)),
                                  lambda c: enumerate_permutations(c.n, c.budget)),
    "balanced": PmfModel(parse_partition,
                         lambda B, c: balanced_partition_pmf(B, _g(c), _need(c.params, "balanced")),
                         lambda c: enumerate_balanced(c.n, c.j, c.budget)),
    "even": PmfModel(parse_partition,
                     lambda B, c: even_partition_pmf(B, _g(c), _need(c.params, "even")),
                     lambda c: enumerate_even(c.n, c.j, c.budget)),
    "balanced-limit": PmfModel(parse_partition,
                               lambda B, c: balanced_partition_limit_pmf(B, _g(c), _lam(c.params)),
                               lambda c: enumerate_balanced(c.n, c.j, c.budget)),
    "even-limit": PmfModel(parse_partition,
                           lambda B, c: even_partition_limit_pmf(B, _g(c), _lam(c.params)),
                           lambda c: enumerate_even(c.n, c.j, c.budget)),
    "balanced-integer": PmfModel(parse_integer_partition,
                                 lambda m, c: balanced_integer_pmf(m, c.j, _need(c.params, "balanced-integer")),
                                 lambda c: enumerate_integer_partitions(c.n, c.j)),
    "even-integer": PmfModel(parse_integer_partition,
                             lambda m, c: even_integer_pmf(m, c.j, _need(c.params, "even-integer")),
                             lambda c: enumerate_integer_partitions(c.n, c.j)),
    "even-permutation": PmfModel(parse_permutation,
                                 lambda s, c: even_permutation_pmf(s, _g(c), _need(c.params, "even-permutation")),
                                 lambda c: [s for s in enumerate_permutations(c.n * c.j, c.budget)
                                            if all(len(cy) % c.j == 0 for cy in s.cycles())]),
}


def _ground_size(model: str, cfg: RunConfig) -> int:
    if model in ("crp", "ewens", "ewens-integer", "ewens-permutation"):
        return cfg.n
    return cfg.n * cfg.j


def _check_size(obj, model: str, cfg: RunConfig):
    size = getattr(obj, "n")
    want = _ground_size(model, cfg)
    if size != want:
        raise ParameterError(f"object has size {size}, expected {want} for model {model!r}")


def _prob_record(obj, value: ProbValue) -> dict:
    rec = {"object": canonical_text(obj)}
    if value.exact is not None:
        rec["prob"] = f"{value.exact.numerator}/{value.exact.denominator}"
    rec["log_prob"] = repr(value.log_value)
    return rec


def _emit_records(records: list[dict], fmt: str, out, keys: tuple[str, ...]):
    for rec in records:
        if fmt == "structured":
            out.write(json.dumps(rec, sort_keys=True) + "\n")
        else:
            out.write("\t".join(str(rec[k]) for k in keys if k in rec) + "\n")


# -- commands ------------------------------------------------------------------------------------------------------

def cmd_pmf(args, cfg: RunConfig, out) -> int:
    model = PMF_MODELS[args.model]
    obj = model.parse(args.object)
    _check_size(obj, args.model, cfg)
    value = model.pmf(obj, cfg)
    _emit_records([_prob_record(obj, value)], cfg.format, out, ("object", "prob", "log_prob"))
    return EXIT_OK


def cmd_enumerate(args, cfg: RunConfig, out) -> int:
    model = PMF_MODELS[args.model]
    support = model.support(cfg)
    if args.with_pmf:
        records = [_prob_record(x, model.pmf(x, cfg)) for x in support]
    else:
        records = [{"object": canonical_text(x)} for x in support]
    _emit_records(records, cfg.format, out, ("object", "prob", "log_prob"))
    return EXIT_OK


def cmd_sample(args, cfg: RunConfig, out) -> int:
    from .samplers import (RngHandle, balanced_crp_sample, even_crp_sample, sample_labels,
                           to_partition)

    params = _need(cfg.params, "sample")
    rng = RngHandle(cfg.seed, args.stream)
    if args.trace_out:
        if args.model not in ("balanced", "even"):
            raise ParameterError("--trace-out is only available for the balanced and even models")
        # one draw per stream so each trace replays on its own
        step = balanced_crp_sample if args.model == "balanced" else even_crp_sample
        draws, traces = [], []
        for k in range(cfg.samples):
            B, trace = step(cfg.n, cfg.j, params, rng.spawn(k))
            draws.append(B)
            traces.append(trace)
        with open(args.trace_out, "w") as fh:
            for k, trace in enumerate(traces):
                fh.write(json.dumps({"draw": k, "rule": trace.rule, "n": trace.n, "j": trace.j,
                                     "steps": trace.to_records()}, sort_keys=True) + "\n")
    else:
        j = 1 if args.model == "crp" else cfg.j
        labels = sample_labels(args.model, cfg.n, j, params, rng, cfg.samples)
        draws = [to_partition(row) for row in labels]
    _emit_records([{"partition": B.to_text()} for B in draws], cfg.format, out, ("partition",))
    return EXIT_OK


def cmd_verify(args, cfg: RunConfig, out) -> int:
    from .verify import run_suite

    report = run_suite(args.suite, workers=args.workers, budget=cfg.budget,
                       draws=args.draws, seed=cfg.seed)
    text = report.to_jsonl() if cfg.format == "structured" else report.to_text()
    out.write(text + "\n")
    if args.suite == "claims-audit":
        return EXIT_OK
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


# -- parser ----------------------------------------------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, with_params: bool = True):
    p.add_argument("--n", type=positive_int, default=1, help="number of groups (or ground-set size for crp)")
    p.add_argument("--j", type=positive_int, default=1, help="group size")
    if with_params:
        for name in ("alpha", "theta", "kappa", "m", "lam"):
            p.add_argument(f"--{name}", type=rational, default=None)
    p.add_argument("--format", choices=("text", "structured"), default="text")
    p.add_argument("--out", default=None, help="write output here instead of stdout")
    p.add_argument("--max-objects", type=positive_int, default=10**6)
    p.add_argument("--max-ground-set", type=positive_int, default=10)


def build_parser() -> argparse.ArgumentParser:
    from .samplers import MODELS

    parser = argparse.ArgumentParser(prog="jcrp", description="Restaurant-process partitions: "
                                     "sampling, exact probabilities and verification.")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sample", help="draw random partitions")
    s.add_argument("--model", choices=MODELS, required=True)
    _common(s)
    s.add_argument("--seed", type=seed_int, default=0)
    s.add_argument("--stream", type=int, default=0)
    s.add_argument("--samples", type=positive_int, default=1)
    s.add_argument("--trace-out", default=None, help="write seating traces as JSON lines")

    p = sub.add_parser("pmf", help="exact probability of one object")
    p.add_argument("--model", choices=sorted(PMF_MODELS), required=True)
    p.add_argument("object", help='e.g. "1 2|3 4", "2^2" or "2 1 3"')
    _common(p)

    e = sub.add_parser("enumerate", help="list the support of a model")
    e.add_argument("--model", choices=sorted(PMF_MODELS), required=True)
    e.add_argument("--with-pmf", action="store_true")
    _common(e)

    v = sub.add_parser("verify", help="run a verification suite")
    from .verify import SUITES
    v.add_argument("--suite", choices=SUITES + ("all",), default="all")
    v.add_argument("--workers", type=positive_int, default=1)
    v.add_argument("--seed", type=seed_int, default=20240101)
    v.add_argument("--draws", type=positive_int, default=10**6, help="draws per sampler check")
    _common(v, with_params=False)
    return parser


@contextmanager
def _output(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w") as fh:
            yield fh


COMMANDS = {"sample": cmd_sample, "pmf": cmd_pmf, "enumerate": cmd_enumerate, "verify": cmd_verify}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = config_from_args(args)
        with _output(args.out) as out:
            return COMMANDS[args.command](args, cfg, out)
    except ResourceError as exc:
        print(f"jcrp: budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (JcrpError, ValueError) as exc:
        print(f"jcrp: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"jcrp: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
