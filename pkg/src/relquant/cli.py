"""Command-line front end: gen, run, bench, adversary."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .compactor import CapacityExhausted
from .params import ConfigError, eps_exponent, format_key, loglog_delta, parse_key, parse_keys
from .report import (SPACE_C, dumps_json, rows_to_csv, space_formula, write_bench)
from .sketch import RelativeSketch

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY, EXIT_IO = 0, 2, 3, 4


def parse_grid(text: str):
    """Returns ("keys", [keys]) | ("ranks", [ranks]) | ("log", count)."""
    kind, _, body = text.partition(":")
    try:
        if kind == "keys":
            return kind, [parse_key(t) for t in body.split(",") if t.strip()]
        if kind == "ranks":
            ranks = [int(t) for t in body.split(",") if t.strip()]
            if any(r < 0 for r in ranks):
                raise ConfigError("ranks must be non-negative")
            return kind, ranks
        if kind == "log":
            count = int(body)
            if count < 1:
                raise ConfigError("log grid needs at least one point")
            return kind, count
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"cannot parse grid {text!r}")
    raise ConfigError(f"grid must start with keys:, ranks: or log:, got {text!r}")


def log_ranks(n: int, count: int) -> list:
    """Up to ``count`` distinct ranks spaced geometrically over 1..n-1 (plus rank 0)."""
    if n <= 0:
        return []
    top = n - 1
    if top == 0 or count == 1:
        return [top]
    ranks = {0, top}
    for j in range(count):
        ranks.add(min(top, round(top ** (j / (count - 1)))))
    return sorted(ranks)


def grid_ranks(grid, n: int) -> list:
    kind, body = grid
    if kind == "ranks":
        return [r for r in body if r < n]
    if kind == "log":
        return log_ranks(n, body)
    raise ConfigError("a key grid cannot be turned into ranks")


def _write(text: str, out: Optional[str]) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _read_stream(path: Optional[str]) -> list:
    if path in (None, "-"):
        return parse_keys(sys.stdin)
    with open(path) as fh:
        return parse_keys(fh)


def _check_mode(args) -> None:
    eps_exponent(args.eps)
    if args.mode == "highprob":
        if args.delta is None:
            raise ConfigError("--mode highprob needs --delta")
        loglog_delta(args.delta)


def _generated(args) -> list:
    from .eval.streams import gen_stream
    params = {}
    if args.gen == "tree_instance":
        if args.batch is not None:
            params["batch"] = args.batch
        if args.pauses is not None:
            params["pauses"] = args.pauses
    return gen_stream(args.gen, args.n, args.seed, **params)


# -- subcommands ----------------------------------------------------------------

def cmd_gen(args) -> int:
    if args.n is None:
        raise ConfigError("gen needs --n")
    keys = _generated(args)
    _write("".join(format_key(x) + "\n" for x in keys), args.out)
    return EXIT_OK


def cmd_run(args) -> int:
    _check_mode(args)
    if args.gen:
        if args.n is None:
            raise ConfigError("--gen needs --n")
        stream = _generated(args)
    else:
        stream = _read_stream(args.input)
    if args.resume:
        sk = RelativeSketch.loads(Path(args.resume).read_text())
    else:
        sk = RelativeSketch(args.eps, args.seed, args.mode, args.delta, trace=bool(args.trace))
    sk.extend(stream)
    from .eval.oracle import RankOracle
    oracle = RankOracle(stream)
    grid = parse_grid(args.grid)
    if grid[0] == "keys":
        keys = grid[1]
    else:
        keys = [oracle.key_at_rank(r) for r in grid_ranks(grid, len(oracle))]
    rows = [(format_key(x), sk.query(x), oracle.exact_rank(x)) for x in keys]
    if args.format == "csv":
        text = rows_to_csv(("key", "estimate", "true_rank"), rows)
    else:
        text = dumps_json({
            "config": {"eps": sk.eps, "mode": sk.mode, "delta": sk.delta, "seed": sk.seed,
                       "grid": args.grid},
            "n": len(stream),
            "stored": sk.stored_count(),
            "peak_stored": sk.peak_stored,
            "queries": [{"key": k, "estimate": e, "true_rank": t} for k, e, t in rows],
        })
    _write(text, args.out)
    if args.trace:
        from .allocator import TraceRow
        trace = [(r.step, r.level, r.s_hat, r.phi_level, r.phi_child, repr(r.accumulator))
                 for r in sk.trace_rows()]
        Path(args.trace).write_text(rows_to_csv(TraceRow.FIELDS, trace))
    if args.snapshot:
        Path(args.snapshot).write_text(sk.dumps())
    return EXIT_OK


def cmd_bench(args) -> int:
    from .eval import SketchFactory, gen_stream, measure_error
    if args.n is None:
        raise ConfigError("bench needs --n")
    if args.mode == "highprob" and args.delta is None:
        raise ConfigError("--mode highprob needs --delta")
    gens = [g for g in args.gen.split(",") if g]
    epss = [e for e in args.eps.split(",") if e]
    for e in epss:
        eps_exponent(e)
    grid = parse_grid(args.grid)
    seeds = list(range(args.seed, args.seed + args.seeds))
    results = []
    for gen in gens:
        stream = gen_stream(gen, args.n, args.seed)
        ranks = grid_ranks(grid, len(stream))
        for eps in epss:
            m = eps_exponent(eps)
            report = measure_error(SketchFactory(f"1/{1 << m}", args.mode, args.delta), stream,
                                   ranks, seeds, eps=1 / (1 << m))
            results.append({"gen": gen, "eps": f"1/{1 << m}", "n": args.n,
                            "mode": args.mode, "seeds": len(seeds),
                            "bound": space_formula(m, args.n, SPACE_C),
                            "report": report.to_json()})
    out = Path(args.out or "bench_out")
    for path in write_bench(out, results, args.format, plots=not args.no_plots):
        print(path)
    return EXIT_OK


def cmd_adversary(args) -> int:
    from .eval.adversary import KeepSmallest, build_adversary_stream
    kind, _, value = args.algo.partition(":")
    if kind == "smallest":
        s = int(value) if value else max(1, args.depth // 4)
        factory = lambda seed: KeepSmallest(s, seed)  # noqa: E731
    elif kind == "sketch":
        eps = value or args.eps
        eps_exponent(eps)
        factory = lambda seed: RelativeSketch(eps, seed)  # noqa: E731
    else:
        raise ConfigError(f"unknown algorithm {args.algo!r}; use smallest:S or sketch:EPS")
    transcript = build_adversary_stream(args.depth, factory, args.trials, args.seed)
    _write(dumps_json(transcript.to_json()), args.out)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="relquant", description="Relative-error rank sketch tools")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, gen_default=None):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--gen", default=gen_default)
        sp.add_argument("--n", type=int)
        sp.add_argument("--batch", type=int, help="tree_instance batch size")
        sp.add_argument("--pauses", type=int, help="tree_instance pause count")
        sp.add_argument("--out")

    def accuracy(sp, eps_default="1/64"):
        sp.add_argument("--eps", default=eps_default)
        sp.add_argument("--mode", choices=("const", "highprob"), default="const")
        sp.add_argument("--delta", type=float)

    g = sub.add_parser("gen", help="write a synthetic stream, one key per line")
    common(g, "uniform")
    g.set_defaults(func=cmd_gen)

    r = sub.add_parser("run", help="ingest a stream and answer a query grid")
    common(r)
    accuracy(r)
    r.add_argument("--in", dest="input", help="key file (default: standard input)")
    r.add_argument("--grid", default="log:16")
    r.add_argument("--trace", help="write the allocator trace CSV here")
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.add_argument("--snapshot", help="write a resumable sketch snapshot here")
    r.add_argument("--resume", help="continue from a snapshot instead of a fresh sketch")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="error and space over a (generator, eps) matrix")
    common(b, "uniform")
    accuracy(b, "1/16,1/32")
    b.add_argument("--seeds", type=int, default=30)
    b.add_argument("--grid", default="log:16")
    b.add_argument("--format", choices=("json", "csv"), default="csv")
    b.add_argument("--no-plots", action="store_true")
    b.set_defaults(func=cmd_bench)

    a = sub.add_parser("adversary", help="build the adaptive stream against an algorithm")
    a.add_argument("--depth", type=int, default=8)
    a.add_argument("--algo", default="smallest")
    a.add_argument("--eps", default="1/4")
    a.add_argument("--trials", type=int, default=200)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out")
    a.set_defaults(func=cmd_adversary)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"relquant: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CapacityExhausted as exc:
        print(f"relquant: capacity exhausted: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"relquant: {exc}", file=sys.stderr)
        return EXIT_IO
