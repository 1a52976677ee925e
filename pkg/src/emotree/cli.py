"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

from . import difftree, metrics, preprocess
from .boost import NonFiniteLoss
from .corpus import CorpusError, load_corpus, write_corpus
from .lexicon import LexiconScorer
from .pipeline import ABLATIONS, PipelineConfig, StageError, run
from .synth import DEFAULT_HEIGHTS, SynthConfig, synth

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
logger = logging.getLogger("emotree")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_pipeline_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="plain-text key = value file; flags given here override it")
    for f in dataclasses.fields(PipelineConfig):
        flag = "--" + f.name.replace("_", "-")
        t = str(f.type)
        if t == "bool":
            p.add_argument(flag, dest=f.name, action=argparse.BooleanOptionalAction, default=None)
        elif f.name == "ablations":
            p.add_argument(flag, dest=f.name, default=None,
                           help=f"comma-separated subset of {','.join(ABLATIONS)}")
        else:
            p.add_argument(flag, dest=f.name, default=None, metavar=f.name.upper())


def _pipeline_config(args) -> PipelineConfig:
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(PipelineConfig)
                 if getattr(args, f.name, None) is not None}
    overrides = {k: (str(v) if isinstance(v, bool) else v) for k, v in overrides.items()}
    try:
        if args.config:
            return PipelineConfig.from_file(args.config, overrides)
        return PipelineConfig.from_mapping(overrides)
    except (ValueError, TypeError) as exc:
        raise UsageError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="emotree", description="Tree-based sentiment diffusion for retweet cascades.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="validate a dataset and print a summary")
    for name in ("messages", "profiles", "famous", "edges", "wiki"):
        p.add_argument(f"--{name}", required=name == "messages")
    p.add_argument("--out", help="write the canonicalized dataset to this directory")

    p = sub.add_parser("synth", help="generate a synthetic corpus with known ground truth")
    p.add_argument("--out", required=True)
    p.add_argument("--n-trees", type=int, default=SynthConfig.n_trees)
    p.add_argument("--sarcasm-rate", type=float, default=SynthConfig.sarcasm_rate)
    p.add_argument("--branch-prob", type=float, default=SynthConfig.branch_prob)
    p.add_argument("--branch-mean", type=float, default=SynthConfig.branch_mean)
    p.add_argument("--homophily", type=float, default=SynthConfig.homophily)
    p.add_argument("--heights", help="height:weight pairs, e.g. 4:0.5,5:0.5")
    p.add_argument("--seed", type=int, default=SynthConfig.seed)

    p = sub.add_parser("run", help="run the full pipeline and print the report")
    _add_pipeline_flags(p)
    p.add_argument("--out", help="directory for report.json, report.txt and metrics.csv")
    p.add_argument("--dump-dir", help="directory for every intermediate artifact")

    p = sub.add_parser("baseline", help="TF-IDF baselines on the same split")
    _add_pipeline_flags(p)
    p.add_argument("--kind", choices=("nb", "mlp", "svm", "all"), default="all")
    p.add_argument("--augmented", action="store_true", help="add the SVM + social channel rows and the full model")
    p.add_argument("--out")

    p = sub.add_parser("dump-tree", help="print cascades with base and propagated labels as JSON")
    p.add_argument("--messages", required=True)
    p.add_argument("--root", help="only the cascade with this root id")
    p.add_argument("--lexicon")
    p.add_argument("--threshold", type=float)
    p.add_argument("--depth-cap", type=int, default=difftree.DEFAULT_DEPTH_CAP)
    p.add_argument("--pattern-height", type=int, default=difftree.DEFAULT_PATTERN_HEIGHT)
    p.add_argument("--out", help="write JSON here instead of stdout")

    p = sub.add_parser("report-merge", help="combine report.json files into one table")
    p.add_argument("reports", nargs="+")
    p.add_argument("--baseline")
    p.add_argument("--out")
    return parser


def _parse_heights(text):
    if not text:
        return dict(DEFAULT_HEIGHTS)
    try:
        pairs = (item.split(":") for item in text.split(","))
        return {int(h): float(w) for h, w in pairs}
    except ValueError as exc:
        raise UsageError(f"bad --heights value {text!r}") from exc


def _emit(report: metrics.Report, out) -> None:
    sys.stdout.write(report.to_text())
    if out:
        report.write(out)


def cmd_ingest(args) -> int:
    corpus = load_corpus(args.messages, args.profiles, args.famous, args.edges, args.wiki)
    forest = difftree.build_forest(corpus.messages)
    labelled = sum(m.gold_label is not None for m in corpus.messages)
    print(f"messages: {len(corpus.messages)} ({labelled} labelled)")
    print(f"cascades: {len(forest)}; height histogram: {difftree.height_histogram(forest)}")
    print(f"dangling parents: {len(corpus.dangling)}")
    print(f"profiles: {len(corpus.profiles)}; famous members: {len(corpus.famous)}; wiki pages: {len(corpus.wiki)}")
    if args.out:
        write_corpus(args.out, corpus)
    return EXIT_OK


def cmd_synth(args) -> int:
    cfg = SynthConfig(n_trees=args.n_trees, sarcasm_rate=args.sarcasm_rate, branch_prob=args.branch_prob,
                      branch_mean=args.branch_mean, homophily=args.homophily, heights=_parse_heights(args.heights),
                      seed=args.seed)
    for kind, path in synth(cfg, args.out).items():
        print(f"{kind}: {path}")
    return EXIT_OK


def cmd_run(args) -> int:
    _emit(run(_pipeline_config(args), dump_dir=args.dump_dir), args.out)
    return EXIT_OK


def cmd_baseline(args) -> int:
    from .baselines import KINDS, baseline
    kinds = KINDS if args.kind == "all" else (args.kind,)
    _emit(baseline(_pipeline_config(args), kinds, augmented=args.augmented), args.out)
    return EXIT_OK


def cmd_dump_tree(args) -> int:
    corpus = load_corpus(args.messages)
    cfg = preprocess.default_config()
    scorer = LexiconScorer(args.lexicon, **({"threshold": args.threshold} if args.threshold is not None else {})).fit()
    tokens = [preprocess.normalize(m.text, cfg, m.id).tokens for m in corpus.messages]
    base = {k: v.label for k, v in scorer.base_labels(corpus.messages, tokens).items()}
    forest = difftree.build_forest(corpus.messages, args.depth_cap)
    if args.root:
        forest = [t for t in forest if t.root == args.root]
        if not forest:
            raise UsageError(f"no cascade rooted at {args.root!r}")
    result = difftree.propagate_forest(forest, base, args.pattern_height)
    text = difftree.dump_forest_json(forest, base, result)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text + "\n")
    return EXIT_OK


def cmd_report_merge(args) -> int:
    reports = [metrics.Report.from_dict(json.loads(Path(p).read_text(encoding="utf-8"))) for p in args.reports]
    _emit(metrics.merge_reports(reports, args.baseline), args.out)
    return EXIT_OK


COMMANDS = {"ingest": cmd_ingest, "synth": cmd_synth, "run": cmd_run, "baseline": cmd_baseline,
            "dump-tree": cmd_dump_tree, "report-merge": cmd_report_merge}

_NUMERIC = (FloatingPointError, ArithmeticError, NonFiniteLoss)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"emotree: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except StageError as exc:
        print(f"emotree: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if isinstance(exc.error, _NUMERIC) else EXIT_DATA
    except _NUMERIC as exc:
        print(f"emotree: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (CorpusError, OSError, ValueError, KeyError) as exc:
        print(f"emotree: data error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
