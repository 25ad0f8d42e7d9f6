"""Command-line interface.

Every option can also come from an INI file passed with ``--config``; keys
live in a ``[qgrank]`` section and use the option's long name with dashes or
underscores. Flags given on the command line win over the file.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from qgrank import textio
from qgrank.encoder import EncoderConfig, PairEncoder
from qgrank.errors import DataError, NoParseError, NumericalError
from qgrank.executor import answer_f1, to_sparql_text
from qgrank.generation import GeneratorConfig, generate_from_links
from qgrank.graphs import deserialize, load_graphs
from qgrank.kb import dump_kb, load_kb
from qgrank.linking import link_focus_nodes, load_lexicon, tokenize
from qgrank.pipeline import (
    VARIANTS,
    PipelineConfig,
    ablation_grid,
    ablation_table,
    build_pools,
    fit,
    load_dataset,
    report_from_pools,
)
from qgrank.ranking import STRATEGIES, TrainConfig, build_vocabulary

log = logging.getLogger("qgrank")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
CONFIG_SECTION = "qgrank"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- argument definitions -------------------------------------------------------------------

def _add_kb(p, lexicon=True):
    p.add_argument("--kb", help="knowledge base TSV file")
    if lexicon:
        p.add_argument("--lexicon", help="mention<TAB>entity<TAB>prior file")


def _add_generator(p):
    p.add_argument("--max-candidates", type=int, default=2000)
    p.add_argument("--max-main-paths", type=int, default=500)
    p.add_argument("--allow-non-cvt", action="store_true", help="allow two-hop paths through any entity")
    p.add_argument("--workers", type=int, default=1, help="threads for candidate generation")


def _add_training(p):
    p.add_argument("--strategy", choices=STRATEGIES, default="listwise")
    p.add_argument("--negatives", type=int, default=10, help="negatives per positive (m)")
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--seed", type=int, help="random seed (required)")
    p.add_argument("--lr", type=float, default=5e-5)
    p.add_argument("--batch-size", type=int, default=8)
    p.add_argument("--margin", type=float, default=0.5)
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--depth", type=int, default=2)
    p.add_argument("--max-len", type=int, default=128)
    p.add_argument("--dropout", type=float, default=0.1)
    p.add_argument("--subsample-points", action="store_true")


def _add_variant(p):
    p.add_argument("--variant", choices=sorted(VARIANTS), default=None,
                   help="linearization ablation (default: all, or the checkpoint's own)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qgrank", description="Query-graph ranking for KB question answering.")
    parser.add_argument("--config", help="INI file with a [qgrank] section")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest-kb", help="validate a KB file and print statistics")
    _add_kb(p, lexicon=False)
    p.add_argument("--out", help="write the normalized KB here")

    p = sub.add_parser("link", help="print focus-node links for questions")
    _add_kb(p)
    p.add_argument("--question")
    p.add_argument("--dataset")

    p = sub.add_parser("generate", help="print candidate query graphs")
    _add_kb(p)
    p.add_argument("--question")
    p.add_argument("--dataset")
    p.add_argument("--out")
    _add_generator(p)

    p = sub.add_parser("train", help="train a ranker")
    _add_kb(p)
    p.add_argument("--dataset")
    p.add_argument("--out", help="checkpoint path")
    p.add_argument("--metrics", help="per-epoch metrics TSV")
    _add_training(p)
    _add_variant(p)
    _add_generator(p)

    p = sub.add_parser("predict", help="answer questions with a trained ranker")
    _add_kb(p)
    p.add_argument("--dataset")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--checkpoint")
    g.add_argument("--untrained", action="store_true", help="randomly initialized model (smoke runs)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", default="test", help="train, validation, test or all")
    p.add_argument("--out", help="answers dump: id<TAB>answer;answer")
    p.add_argument("--report", help="JSON report path")
    _add_variant(p)
    _add_generator(p)

    p = sub.add_parser("eval", help="score an answers dump against a dataset")
    p.add_argument("--dataset")
    p.add_argument("--predictions")
    p.add_argument("--split", default="test")

    p = sub.add_parser("ablate", help="strategy x negatives x linearization grid")
    _add_kb(p)
    p.add_argument("--dataset")
    p.add_argument("--strategies", default=",".join(STRATEGIES))
    p.add_argument("--negatives-grid", default="10", help="comma-separated m values")
    p.add_argument("--variants", default="all")
    p.add_argument("--out", help="TSV output path")
    _add_training(p)
    _add_generator(p)

    p = sub.add_parser("export-sparql", help="render canonical graph lines as SPARQL-style text")
    p.add_argument("--graph", help="one canonical graph line")
    p.add_argument("--graphs", help="file of canonical graph lines")
    return parser


# --- config file ----------------------------------------------------------------------------

def _read_config(path) -> dict:
    cp = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise DataError(f"cannot read config: {exc}", path=path) from exc
    except configparser.Error as exc:
        raise DataError(f"malformed config: {exc}", path=path) from exc
    if not cp.has_section(CONFIG_SECTION):
        raise DataError(f"config has no [{CONFIG_SECTION}] section", path=path)
    return {k.replace("-", "_"): v for k, v in cp.items(CONFIG_SECTION)}


def _subparser(parser, command):
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[command]
    raise KeyError(command)


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args
    values = _read_config(args.config)
    sub = _subparser(parser, args.command)
    known = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, raw in values.items():
        if key not in known:
            raise UsageError(f"unknown config key {key!r} for {args.command}")
        action = known[key]
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            if raw.lower() not in _TRUE | _FALSE:
                raise UsageError(f"config key {key!r} must be a boolean")
            defaults[key] = raw.lower() in _TRUE
        else:
            if action.choices is not None and raw not in action.choices:
                raise UsageError(f"config key {key!r} must be one of {sorted(action.choices)}")
            defaults[key] = raw  # argparse converts string defaults with the option's type
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError(f"missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")


# --- helpers --------------------------------------------------------------------------------

def _generator_config(args) -> GeneratorConfig:
    return GeneratorConfig(max_main_paths=args.max_main_paths, max_candidates=args.max_candidates,
                           allow_non_cvt=args.allow_non_cvt)


def _train_config(args) -> TrainConfig:
    enc = EncoderConfig(dim=args.dim, depth=args.depth, max_len=args.max_len, dropout=args.dropout, seed=args.seed)
    cfg = TrainConfig(strategy=args.strategy, num_negatives=args.negatives, margin=args.margin, epochs=args.epochs,
                      seed=args.seed, learning_rate=args.lr, batch_size=args.batch_size,
                      subsample_points=args.subsample_points, encoder=enc)
    try:
        cfg.validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return cfg


def _questions(args):
    from qgrank.pipeline import QAExample

    if args.question:
        return [QAExample("q0", args.question, frozenset(), "test")]
    _need(args, "dataset")
    return load_dataset(args.dataset)


def _write(path, text):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _meta_path(ckpt) -> Path:
    return Path(str(ckpt) + ".json")


# --- commands -------------------------------------------------------------------------------

def cmd_ingest_kb(args):
    _need(args, "kb")
    kb = load_kb(args.kb)
    stats = {
        "triples": len(kb),
        "entities": len(kb.entities()),
        "predicates": len(kb.predicates()),
        "cvt": len(kb.cvt_marks),
        "types": len(kb.type_vocab),
    }
    print(json.dumps(stats, sort_keys=True))
    if args.out:
        dump_kb(kb, args.out)


def cmd_link(args):
    _need(args, "kb", "lexicon")
    kb, lex = load_kb(args.kb), load_lexicon(args.lexicon)
    for ex in _questions(args):
        tokens = tokenize(ex.question)
        focus = link_focus_nodes(tokens, kb, lex)
        links = [
            {"kind": l.kind.value, "mention": l.mention(tokens), "span": list(l.span),
             "target": l.target if isinstance(l.target, str) else vars(l.target), "score": l.score}
            for l in focus.all()
        ]
        print(json.dumps({"id": ex.id, "links": links}, sort_keys=True))


def cmd_generate(args):
    _need(args, "kb", "lexicon")
    kb, lex = load_kb(args.kb), load_lexicon(args.lexicon)
    config = _generator_config(args)
    out = []
    for ex in _questions(args):
        focus = link_focus_nodes(tokenize(ex.question), kb, lex, config.linker)
        graphs = generate_from_links(focus, kb, config)
        if args.question:
            out += [g.to_line() + "\n" for g in graphs]
        else:
            out.append(json.dumps({"id": ex.id, "graphs": [g.to_line() for g in graphs]}) + "\n")
    _write(args.out, "".join(out))


def _pipeline_config(args, variant="all") -> PipelineConfig:
    return PipelineConfig(generator=_generator_config(args), linearizer=VARIANTS[variant],
                          workers=max(1, args.workers))


def cmd_train(args):
    _need(args, "kb", "lexicon", "dataset", "seed", "out")
    variant = args.variant or "all"
    config = replace(_pipeline_config(args, variant), train=_train_config(args))
    kb, lex = load_kb(args.kb), load_lexicon(args.lexicon)
    dataset = load_dataset(args.dataset)
    pools = build_pools([ex for ex in dataset if ex.split in ("train", "validation")], kb, lex, config)
    try:
        result = fit(pools, kb, config)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    result.params.save(args.out)
    meta = {"variant": variant, "best_epoch": result.best_epoch, "config": config.echo()}
    _meta_path(args.out).write_text(json.dumps(meta, sort_keys=True, indent=1) + "\n", encoding="utf-8")
    if args.metrics:
        Path(args.metrics).write_text("epoch\tstrategy\ttrain_loss\tval_f1\n" + result.metrics_log(), encoding="utf-8")
    sys.stdout.write(result.metrics_log())


def cmd_predict(args):
    _need(args, "kb", "lexicon", "dataset")
    if not args.checkpoint and not args.untrained:
        raise UsageError("predict needs --checkpoint or --untrained")
    variant = args.variant
    if args.checkpoint and variant is None and _meta_path(args.checkpoint).exists():
        variant = json.loads(_meta_path(args.checkpoint).read_text(encoding="utf-8")).get("variant")
    config = _pipeline_config(args, variant or "all")
    kb, lex = load_kb(args.kb), load_lexicon(args.lexicon)
    dataset = load_dataset(args.dataset)
    if args.split != "all":
        dataset = [ex for ex in dataset if ex.split == args.split]
    pools = build_pools(dataset, kb, lex, config)
    if args.checkpoint:
        params = PairEncoder.load(args.checkpoint)
    else:
        from qgrank.kb import NameResolver

        names = NameResolver(kb)
        vocab = build_vocabulary([p.candidates(config.linearizer, names) for p in pools])
        params = PairEncoder(vocab, EncoderConfig(seed=args.seed))
    report = report_from_pools(pools, kb, params, config)
    _write(args.out, report.answers_dump())
    if args.report:
        Path(args.report).write_text(report.to_json(), encoding="utf-8")
    print(json.dumps({"questions": len(report.rows), "average_f1": report.average_f1,
                      "generation_ceiling": report.generation_ceiling}, sort_keys=True), file=sys.stderr)


def parse_predictions(path) -> dict[str, list[str]]:
    out = {}
    try:
        lines = textio.lines(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DataError(f"cannot read predictions: {exc}", path=path) from exc
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise DataError("expected id<TAB>answers", lineno, path)
        out[parts[0]] = [a for a in parts[1].split(";") if a]
    return out


def cmd_eval(args):
    _need(args, "dataset", "predictions")
    dataset = load_dataset(args.dataset)
    if args.split != "all":
        dataset = [ex for ex in dataset if ex.split == args.split]
    preds = parse_predictions(args.predictions)
    f1s = {ex.id: answer_f1(preds.get(ex.id, []), ex.gold_answers) for ex in dataset}
    avg = sum(f1s.values()) / len(f1s) if f1s else 0.0
    print(json.dumps({"questions": len(f1s), "average_f1": avg, "missing": sorted(set(f1s) - set(preds))},
                     sort_keys=True))


def _csv(text, cast=str):
    return [cast(x.strip()) for x in str(text).split(",") if x.strip()]


def cmd_ablate(args):
    _need(args, "kb", "lexicon", "dataset", "seed")
    from qgrank.pipeline import run_ablation

    strategies = _csv(args.strategies)
    variants = _csv(args.variants)
    try:
        negatives = _csv(args.negatives_grid, int)
    except ValueError:
        raise UsageError("--negatives-grid must be comma-separated integers") from None
    bad = [s for s in strategies if s not in STRATEGIES] + [v for v in variants if v not in VARIANTS]
    if bad or not negatives or min(negatives) < 1:
        raise UsageError(f"bad ablation grid: {bad or negatives}")
    base = replace(_pipeline_config(args), train=_train_config(args))
    kb, lex = load_kb(args.kb), load_lexicon(args.lexicon)
    dataset = load_dataset(args.dataset)
    try:
        rows = run_ablation(dataset, kb, lex, ablation_grid(strategies, negatives, variants), base)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    _write(args.out, ablation_table(rows))


def cmd_export_sparql(args):
    if args.graph:
        try:
            graphs = [deserialize(args.graph)]
        except ValueError as exc:
            raise DataError(str(exc)) from None
    elif args.graphs:
        try:
            graphs = load_graphs(Path(args.graphs).read_text(encoding="utf-8"), args.graphs)
        except OSError as exc:
            raise DataError(f"cannot read graphs: {exc}", path=args.graphs) from exc
    else:
        raise UsageError("export-sparql needs --graph or --graphs")
    sys.stdout.write("\n".join(to_sparql_text(g) for g in graphs))


COMMANDS = {
    "ingest-kb": cmd_ingest_kb,
    "link": cmd_link,
    "generate": cmd_generate,
    "train": cmd_train,
    "predict": cmd_predict,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "export-sparql": cmd_export_sparql,
}


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, NoParseError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
