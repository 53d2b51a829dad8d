"""Command-line interface: learn, bench, quotient, sample, compare, generate.

All tables are tab-separated with a #-prefixed header line. Every command is
deterministic given its inputs and --seed. Domain errors exit with status 2
and a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import bench, fileio
from .automata import compose, materialize_compose, quotient
from .errors import ParseFailureError, PdfaError
from .learner import LearnerConfig, LearnerMode, learn
from .lmbridge import load_symbol_map, remote_token_model, symbol_model
from .pipeline import compare_distributions, guided_sample
from .randgen import GenSpec, random_pdfa
from .simplex import Alphabet, TopP, TopR
from .teacher import PacParams, pac_teacher


def parse_strategy(spec: str):
    if spec in ("none", ""):
        return None
    kind, _, arg = spec.partition(":")
    try:
        if kind == "topk":
            return TopR(int(arg))
        if kind == "topp":
            return TopP(float(arg))
    except ValueError:
        pass
    raise ParseFailureError(f"bad strategy {spec!r} (want none|topk:R|topp:P)")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x]


def _float_list(text: str) -> list[float]:
    return [float(x) for x in text.split(",") if x]


def _write_or_print(text: str, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_model(args):
    """Language model from --target (file) or --endpoint (+ --symbol-map)."""
    if args.target:
        pdfa = fileio.load_pdfa(args.target)
        return pdfa.language_model(), pdfa
    smap = load_symbol_map(args.symbol_map)
    alphabet = Alphabet(tuple(name for name, _, _ in smap.entries))
    tm = remote_token_model(args.endpoint, bos=args.bos, eos=args.eos)
    return symbol_model(tm, smap, alphabet), None


def cmd_learn(args):
    import time

    partitioner = bench.parse_partitioner(args.equiv)
    strategy = parse_strategy(args.strategy)
    if args.target:
        pdfa = fileio.load_pdfa(args.target)
        if args.guide:
            pdfa = materialize_compose(pdfa, fileio.load_guide(args.guide), strategy)
        teacher, mode = bench.teacher_for_mode(pdfa, partitioner, args.mode)
        t0 = time.perf_counter()
        learned = learn(teacher, partitioner, LearnerConfig(mode=mode, seed=args.seed))
        wall_ms = (time.perf_counter() - t0) * 1000
        from .equivcheck import hk_equiv

        record = bench.BenchRecord(
            n=pdfa.n_states,
            m=pdfa.alphabet.size,
            theta=float("nan"),
            kappa=partitioner.name,
            mode=args.mode,
            seed=args.seed,
            mq_count=teacher.mq_count,
            eq_count=teacher.eq_count,
            ce_count=max(teacher.eq_count - 1, 0),
            learned_states=learned.n_states,
            wall_ms=wall_ms,
            verified=hk_equiv(learned, quotient(pdfa, partitioner), partitioner) is None,
        )
    else:
        model, _ = _load_model(args)
        if args.guide:
            model = compose(model, fileio.load_guide(args.guide), strategy)
        params = PacParams(epsilon=args.epsilon, delta=args.delta, max_len=args.max_len)
        teacher = pac_teacher(model, partitioner, params, seed=args.seed)
        t0 = time.perf_counter()
        learned = learn(
            teacher, partitioner, LearnerConfig(mode=LearnerMode.OMIT_ZERO, seed=args.seed)
        )
        record = bench.BenchRecord(
            n=learned.n_states,
            m=learned.alphabet.size,
            theta=float("nan"),
            kappa=partitioner.name,
            mode=args.mode,
            seed=args.seed,
            mq_count=teacher.mq_count,
            eq_count=teacher.eq_count,
            ce_count=max(teacher.eq_count - 1, 0),
            learned_states=learned.n_states,
            wall_ms=(time.perf_counter() - t0) * 1000,
            verified=False,
        )
    if args.out:
        fileio.save_pdfa(learned, args.out)
    sys.stdout.write(bench.BenchRecord.HEADER + "\n" + record.to_row() + "\n")
    return 0


def cmd_bench(args):
    partitioner = bench.parse_partitioner(args.equiv)
    records = bench.sweep(
        ns=_int_list(args.n),
        thetas=_float_list(args.theta),
        m=args.m,
        partitioner=partitioner,
        seeds=range(args.seed, args.seed + args.seeds),
    )
    table = bench.format_records(records)
    if len(_int_list(args.n)) > 1:
        table += bench.format_medians(records, key=lambda r: r.n, key_name="n")
    else:
        table += bench.format_medians(records, key=lambda r: r.theta, key_name="theta")
    _write_or_print(table, args.out)
    return 0


def cmd_quotient(args):
    partitioner = bench.parse_partitioner(args.equiv)
    pdfa = fileio.load_pdfa(args.target)
    reduced = quotient(pdfa, partitioner)
    if args.out:
        fileio.save_pdfa(reduced, args.out)
    else:
        sys.stdout.write(fileio.format_pdfa(reduced))
    return 0


def _sampling_model(args):
    pdfa = fileio.load_pdfa(args.target)
    strategy = parse_strategy(args.strategy)
    if args.guide:
        guide = fileio.load_guide(args.guide)
        return materialize_compose(pdfa, guide, strategy)
    return pdfa


def cmd_sample(args):
    model = _sampling_model(args)
    samples = guided_sample(model.language_model(), args.n, args.max_len, args.seed)
    lines = ["#string\ttruncated"]
    for s in samples:
        lines.append(f"{model.alphabet.format(s.symbols)}\t{int(s.truncated)}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def cmd_compare(args):
    model = _sampling_model(args)
    samples = guided_sample(model.language_model(), args.n, args.max_len, args.seed)
    report = compare_distributions(
        samples, model.alphabet, model=model, bins=args.bins, max_len=args.max_len
    )
    _write_or_print(report.to_table() + "\n", args.out)
    return 0


def cmd_generate(args):
    spec = GenSpec(n=args.n_states, m=args.m, theta=args.theta_value, seed=args.seed)
    pdfa = random_pdfa(spec)
    if args.out:
        fileio.save_pdfa(pdfa, args.out)
    else:
        sys.stdout.write(fileio.format_pdfa(pdfa))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdfalearn")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None)
        p.add_argument("--equiv", default="exact", help="exact|quant:K|topk:R")

    p = sub.add_parser("learn", help="learn a PDFA from a target file or a served model")
    common(p)
    p.add_argument("--target", default=None)
    p.add_argument("--endpoint", default=None)
    p.add_argument("--symbol-map", default=None)
    p.add_argument("--guide", default=None)
    p.add_argument("--strategy", default="none")
    p.add_argument("--mode", default="omit-zero", choices=bench.MODES)
    p.add_argument("--epsilon", type=float, default=0.05)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--max-len", type=int, default=50)
    p.add_argument("--bos", type=int, default=0)
    p.add_argument("--eos", type=int, default=1)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("bench", help="run the three-mode benchmark sweep")
    common(p)
    p.add_argument("--n", default="50", help="comma-separated nominal sizes")
    p.add_argument("--theta", default="0.9", help="comma-separated zero densities")
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--seeds", type=int, default=10, help="number of instances per point")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("quotient", help="minimize a PDFA modulo an equivalence")
    common(p)
    p.add_argument("--target", required=True)
    p.set_defaults(func=cmd_quotient)

    for name, func in (("sample", cmd_sample), ("compare", cmd_compare)):
        p = sub.add_parser(name)
        common(p)
        p.add_argument("--target", required=True)
        p.add_argument("--guide", default=None)
        p.add_argument("--strategy", default="none")
        p.add_argument("-n", type=int, default=1000)
        p.add_argument("--max-len", type=int, default=50)
        p.add_argument("--bins", type=int, default=10)
        p.set_defaults(func=func)

    p = sub.add_parser("generate", help="emit a random benchmark instance")
    common(p)
    p.add_argument("--n", dest="n_states", type=int, default=50)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--theta", dest="theta_value", type=float, default=0.9)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("PDFA_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = build_parser().parse_args(argv)
    if args.command == "learn" and not args.target and not args.endpoint:
        print(json.dumps({"error": "UsageError", "detail": "need --target or --endpoint"}), file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except PdfaError as exc:
        print(json.dumps({"error": type(exc).__name__, "detail": str(exc)}), file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
