"""Command-line interface.

Every path and parameter can come from an INI file given with ``--config``
(``[paths]``, ``[params]`` and ``[flags]`` sections); flags on the command
line win.  Results go to stdout, diagnostics to stderr.  Exit codes: 0 on
success, 2 for usage, configuration or missing-file problems, 3 for data and
domain errors.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Sequence

from . import __version__
from .community import format_partition
from .concepts import TripleStore
from .enrichment import CbrConfig, KnowledgeBase, LearningBase, RuleBase, enrich_query
from .errors import ContextRecError
from .evaluation import (
    BenchConfig,
    bench_compare,
    compare_predictors,
    growth_stats,
    load_diary,
    load_judgments,
    precision_report,
    to_jsonl,
    to_tsv,
)
from .itemsets import class_rules, dump_rule_base, generate_igb, load_context, mine_closed, number_rules
from .recommend import (
    Level,
    apply_recommendations,
    discover_communities,
    format_communities,
    format_recommendation,
    recommend_friends,
)
from .situation import CivilTime, Gazetteer, GeoPoint, build_situation
from .social import load_social

log = logging.getLogger("contextrec")

EXIT_USAGE = 2
EXIT_DATA = 3

DATA = resources.files("contextrec") / "data"

# config key -> argparse destination
CONFIG_KEYS = {
    "paths.context": "context",
    "paths.gazetteer": "gazetteer",
    "paths.store": "store",
    "paths.rules": "rules",
    "paths.learning_base": "learning_base",
    "paths.graph": "graph",
    "paths.diary": "diary",
    "params.minsup": "minsup",
    "params.minconf": "minconf",
    "params.t": "t",
    "params.depth": "depth",
    "params.k": "k",
    "params.seed": "seed",
    "params.repetitions": "repetitions",
    "params.sizes": "sizes",
    "flags.lenient": "lenient",
}


class UsageError(Exception):
    pass


def _unit_fraction(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 < value <= 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1], got {text}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _sizes(text: str) -> list[int]:
    try:
        sizes = [int(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"sizes must be comma-separated integers: {text!r}") from None
    if not sizes or min(sizes) < 2:
        raise argparse.ArgumentTypeError("every size must be >= 2")
    return sizes


def _bool(text: str | bool) -> bool:
    if isinstance(text, bool):
        return text
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def _existing(path: str | Path, what: str) -> Path:
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"{what} file not found: {path}")
    return path


def _point_and_time(args) -> tuple[GeoPoint, CivilTime]:
    try:
        return GeoPoint(args.lat, args.lon), CivilTime.parse(args.time)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


# -- commands -------------------------------------------------------------------------


def cmd_mine(args) -> int:
    ctx = load_context(_existing(args.context, "context"))
    patterns = mine_closed(ctx, args.minsup)
    generic = generate_igb(ctx, patterns, args.minconf)
    rules = number_rules(class_rules(generic, ctx))
    text = dump_rule_base(rules)
    summary = (
        f"transactions={len(ctx)}\tminsup={args.minsup}\tminconf={args.minconf}\t"
        f"closed={len(patterns)}\tgeneric_rules={len(generic)}\tclass_rules={len(rules)}\n"
    )
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        sys.stdout.write(summary)
    else:
        sys.stdout.write(text)
        sys.stderr.write(summary)
    return 0


def cmd_situate(args) -> int:
    gz = Gazetteer.load(_existing(args.gazetteer, "gazetteer"))
    point, when = _point_and_time(args)
    s = build_situation(gz, point, when)
    print(f"{s.location_type}\t{s.season}\t{s.day_part}")
    return 0


def cmd_enrich(args) -> int:
    gz = Gazetteer.load(_existing(args.gazetteer, "gazetteer"))
    rb = RuleBase.load(_existing(args.rules, "rule base"))
    store = TripleStore.from_text(_existing(args.store, "triple store").read_text(encoding="utf-8"))
    lb = LearningBase.load(args.learning_base) if args.learning_base else LearningBase()
    point, when = _point_and_time(args)
    s = build_situation(gz, point, when)
    print(f"situation: {s}", file=sys.stderr)
    result = enrich_query(args.query, s, rb, store, lb, depth=args.depth)
    if isinstance(result.provenance, KnowledgeBase):
        kb = result.provenance
        names = ", ".join(c.value for c in kb.candidates)
        print(f"knowledge base: {kb.query_concept.value} at {kb.location_concept.value} -> {names}", file=sys.stderr)
        if args.learning_base:
            added = lb.append_to(args.learning_base)
            print(f"learning base: appended {added} entry to {args.learning_base}", file=sys.stderr)
    else:
        print(f"rule {result.provenance.rule_id} selected at overlap {result.provenance.overlap}", file=sys.stderr)
    print(result.enriched_query)
    return 0


def cmd_communities(args) -> int:
    sg = load_social(_existing(args.graph, "social graph"), strict=not args.lenient)
    found = discover_communities(sg, args.t)
    sys.stdout.write(format_communities(found))
    return 0


def cmd_recommend(args) -> int:
    sg = load_social(_existing(args.graph, "social graph"), strict=not args.lenient)
    rec = recommend_friends(sg, discover_communities(sg, args.t), args.target)
    sys.stdout.write(format_recommendation(rec))
    print(f"{len(rec.candidates)} candidate(s) for {args.target}", file=sys.stderr)
    return 0


def _render(rows, fmt: str) -> str:
    return to_jsonl(rows) if fmt == "jsonl" else to_tsv(rows)


def cmd_evaluate(args) -> int:
    if args.report == "precision":
        systems = {}
        for spec in args.judgments or [f"ours={DATA / 'judgments_ours.tsv'}", f"google={DATA / 'judgments_google.tsv'}"]:
            name, sep, path = spec.partition("=")
            if not sep or not name:
                raise UsageError(f"judgments must look like NAME=PATH, got {spec!r}")
            systems[name] = load_judgments(_existing(path, "judgments"))
        rows, means = precision_report(systems, args.k)
        sys.stdout.write(_render(rows, args.format))
        for name, mean in means.items():
            print(f"mean precision@{args.k} {name}: {float(mean):.4f} ({mean})", file=sys.stderr)
    elif args.report == "predictors":
        records = load_diary(_existing(args.diary, "diary"))
        gz = Gazetteer.load(_existing(args.gazetteer, "gazetteer"))
        rb = RuleBase.load(_existing(args.rules, "rule base"))
        rows, accuracy = compare_predictors(records, rb, gz, CbrConfig(threshold=args.beta))
        sys.stdout.write(_render(rows, args.format))
        for name, value in accuracy.items():
            print(f"accuracy {name}: {float(value):.4f} ({value})", file=sys.stderr)
    else:
        sg = load_social(_existing(args.graph, "social graph"), strict=not args.lenient)
        found = discover_communities(sg, args.t)
        grown = sg
        for person in sg.sorted_persons():
            rec = recommend_friends(grown, found, person)
            grown = apply_recommendations(grown, rec, rec.persons)
        groups = {
            f"{c.location_label}/{c.interest_label or '-'}": c.members for c in found if c.level is Level.INTEREST
        }
        sys.stdout.write(_render(growth_stats(sg, grown, groups), args.format))
    return 0


def cmd_bench(args) -> int:
    cfg = BenchConfig(seed=args.seed, t=args.t)
    rows = bench_compare(args.sizes, cfg, repetitions=args.repetitions, warmup=args.warmup)
    sys.stdout.write(_render(rows, args.format))
    return 0


def cmd_partition(args) -> int:
    from .community import detect_communities, load_edge_list

    g = load_edge_list(_existing(args.edges, "edge list"))
    sys.stdout.write(format_partition(detect_communities(g, args.t, args.method)))
    return 0


# -- parser -------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="contextrec", description="Situation-aware query enrichment and friend recommendation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="INI file with [paths], [params] and [flags] sections")
    parser.add_argument("-v", "--verbose", action="store_true", help="log diagnostics to stderr")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def where(p, *names):
        for name in names:
            default = {
                "context": DATA / "context.tsv",
                "gazetteer": DATA / "gazetteer.tsv",
                "store": DATA / "concepts.nt",
                "rules": DATA / "rules_example.tsv",
                "graph": DATA / "network16.tsv",
                "diary": DATA / "diary.tsv",
            }[name]
            p.add_argument(f"--{name}", default=str(default), help=f"{name} file (default: packaged fixture)")

    def point(p):
        p.add_argument("--lat", type=float, required=True)
        p.add_argument("--lon", type=float, required=True)
        p.add_argument("--time", required=True, help="ISO local time, e.g. 2012-03-18T18:05")

    def graph_opts(p):
        where(p, "graph")
        p.add_argument("--t", type=_positive_int, default=4, help="random-walk length (default 4)")
        p.add_argument("--lenient", type=_bool, nargs="?", const=True, default=False,
                       help="keep the smallest of several locations instead of failing")

    def fmt(p):
        p.add_argument("--format", choices=("tsv", "jsonl"), default="tsv")

    p = sub.add_parser("mine", help="mine class rules from a formal context")
    where(p, "context")
    p.add_argument("--minsup", type=_unit_fraction, default=Fraction(1, 5))
    p.add_argument("--minconf", type=_unit_fraction, default=Fraction(1))
    p.add_argument("-o", "--output", help="write the rule base here (summary then goes to stdout)")
    p.set_defaults(func=cmd_mine)

    p = sub.add_parser("situate", help="map a GPS point and time to a situation")
    where(p, "gazetteer")
    point(p)
    p.set_defaults(func=cmd_situate)

    p = sub.add_parser("enrich", help="enrich a query with the predicted interest")
    p.add_argument("query")
    point(p)
    where(p, "gazetteer", "rules", "store")
    p.add_argument("--learning-base", dest="learning_base", help="TSV to extend when the knowledge base is used")
    p.add_argument("--depth", type=_positive_int, default=2, help="link hops explored in the knowledge base")
    p.set_defaults(func=cmd_enrich)

    p = sub.add_parser("communities", help="print location then interest communities")
    graph_opts(p)
    p.set_defaults(func=cmd_communities)

    p = sub.add_parser("recommend", help="recommend friends for one person")
    p.add_argument("target")
    graph_opts(p)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate", help="precision, predictor comparison or community growth report")
    p.add_argument("--report", choices=("precision", "predictors", "growth"), default="precision")
    p.add_argument("--judgments", action="append", metavar="NAME=PATH",
                   help="judgment file per system (default: packaged fixtures)")
    p.add_argument("--k", type=_positive_int, default=10)
    p.add_argument("--beta", type=float, default=2.0, help="CBR similarity threshold")
    where(p, "diary", "gazetteer", "rules")
    graph_opts(p)
    fmt(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("bench", help="time Walktrap against Girvan-Newman")
    p.add_argument("--sizes", type=_sizes, default=[100, 125, 150, 175, 200, 225])
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--repetitions", type=_positive_int, default=5)
    p.add_argument("--warmup", type=int, default=1)
    p.add_argument("--t", type=_positive_int, default=4)
    fmt(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("partition", help="partition an edge-list graph")
    p.add_argument("edges")
    p.add_argument("--method", choices=("walktrap", "gn"), default="walktrap")
    p.add_argument("--t", type=_positive_int, default=4)
    p.set_defaults(func=cmd_partition)
    return parser


def read_config(path: str | Path) -> dict[str, str]:
    """Flatten an INI file to ``{destination: raw value}``."""
    path = Path(path)
    if not path.is_file():
        raise UsageError(f"config file not found: {path}")
    cp = configparser.ConfigParser()
    try:
        cp.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise UsageError(f"bad config file {path}: {exc}") from None
    values = {}
    for section in cp.sections():
        for key, value in cp.items(section):
            flat = f"{section}.{key}"
            if flat not in CONFIG_KEYS:
                raise UsageError(f"unknown config key {flat} in {path}")
            values[CONFIG_KEYS[flat]] = value
    return values


def _apply_config(parser: argparse.ArgumentParser, values: dict[str, str]) -> None:
    subparsers = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for p in subparsers.choices.values():
        known = {a.dest for a in p._actions}
        p.set_defaults(**{k: v for k, v in values.items() if k in known})


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            _apply_config(parser, read_config(known.config))
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:
            return int(exc.code or 0)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ContextRecError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
