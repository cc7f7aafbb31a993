import argparse
import json
import logging
import os
from typing import Dict, List, Optional

from nestex.core.checkpoint import load_checkpoint, save_checkpoint
from nestex.core.corpus import LabelVocab, check_jsonl, parse_jsonl, read_jsonl, write_jsonl
from nestex.core.extractors import NestedEventModel, predict_corpus
from nestex.core.metrics import evaluate, render_report, report_to_json
from nestex.core.synth import (
    GenConfig,
    SchemaSpec,
    generate,
    load_schema,
    nesting_stats,
    schema_sidecar,
    write_schema,
)
from nestex.core.trainer import check_gradients, train
from nestex.nn.encoder import TokenVocab
from nestex.tools.registry import Command, CommandContext, CommandResult, build_command_registry
from nestex.utils.config import RunConfig, load_config
from nestex.utils.errors import EXIT_INVALID, EXIT_NUMERIC, UsageError

logger = logging.getLogger(__name__)


# ========== Shared plumbing ==========
def _overrides(pairs: Optional[List[str]]) -> Dict[str, str]:
    out: Dict[str, str] = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise UsageError(f"--set expects KEY=VALUE, got {pair!r}")
        key, value = pair.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _config(args: argparse.Namespace, context: CommandContext) -> RunConfig:
    path = context.resolve(args.config) if args.config else None
    return load_config(path, _overrides(args.set))


def _vocab(schema: Optional[str], corpus_path: str, context: CommandContext) -> LabelVocab:
    """Explicit schema, else the sidecar written by `synth`, else labels seen in the corpus."""
    if schema:
        return load_schema(context.resolve(schema))
    sidecar = schema_sidecar(corpus_path)
    if os.path.exists(sidecar):
        return load_schema(sidecar)
    logger.warning("no schema for %s; inferring labels from the corpus", corpus_path)
    return LabelVocab.infer(read_jsonl(corpus_path))


def _config_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value configuration file")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")


# ========== Commands ==========
def _args_train(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--train", required=True, help="training corpus (JSONL)")
    parser.add_argument("--dev", help="development corpus for model selection")
    parser.add_argument("--schema", help="label vocabulary (JSON)")
    parser.add_argument("--out", required=True, help="checkpoint path")
    parser.add_argument("--log", help="per-epoch log (default: <out>.log)")
    _config_arguments(parser)


def _cmd_train(args: argparse.Namespace, context: CommandContext) -> CommandResult:
    config = _config(args, context)
    train_path = context.resolve(args.train)
    vocab = _vocab(args.schema, train_path, context)
    sentences = parse_jsonl(train_path, vocab)
    dev = parse_jsonl(context.resolve(args.dev), vocab) if args.dev else None
    result = train(sentences, vocab, config, dev=dev)

    out = context.resolve(args.out)
    save_checkpoint(result.model, out)
    log_path = context.resolve(args.log) if args.log else out + ".log"
    with open(log_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(result.state.log_text())
    return CommandResult(ok=True, output=f"Checkpoint written to {out}\n{result.state.get_context_string()}")


def _args_predict(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--model", required=True, help="checkpoint from `train`")
    parser.add_argument("--input", required=True, help="corpus to annotate; only ids and tokens are read")
    parser.add_argument("--out", required=True, help="predictions (JSONL)")
    parser.add_argument("--workers", type=int, help="decoding threads")


def _cmd_predict(args: argparse.Namespace, context: CommandContext) -> CommandResult:
    model = load_checkpoint(context.resolve(args.model))
    workers = args.workers or load_config(None).workers
    if workers < 1:
        raise UsageError("--workers must be >= 1")
    sentences = read_jsonl(context.resolve(args.input))
    predictions = predict_corpus(model, sentences, workers)
    out = context.resolve(args.out)
    write_jsonl(predictions, out)
    return CommandResult(ok=True, output=f"Wrote {len(predictions)} predictions to {out}")


def _args_eval(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--gold", required=True)
    parser.add_argument("--pred", required=True)
    parser.add_argument("--by-type", action="store_true", help="add per-event-type TC rows")
    parser.add_argument("--nested-only", action="store_true", help="score only sentences whose gold has a nested event")
    parser.add_argument("--json", action="store_true", help="machine-readable output")


def _cmd_eval(args: argparse.Namespace, context: CommandContext) -> CommandResult:
    gold = read_jsonl(context.resolve(args.gold))
    pred = read_jsonl(context.resolve(args.pred))
    report = evaluate(gold, pred, by_type=args.by_type, nested_only=args.nested_only)
    return CommandResult(ok=True, output=report_to_json(report) if args.json else render_report(report))


def _args_synth(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", required=True, help="corpus path (JSONL); the schema sidecar goes next to it")
    parser.add_argument("--n", type=int, default=100, help="number of sentences")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--nested-fraction", type=float, default=0.25)
    parser.add_argument("--max-depth", type=int, default=2, help="event levels in nested sentences")
    parser.add_argument("--id-prefix", default="syn")


def _cmd_synth(args: argparse.Namespace, context: CommandContext) -> CommandResult:
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    try:
        gen = GenConfig(sentences=args.n, nested_fraction=args.nested_fraction, max_depth=args.max_depth,
                        seed=args.seed, id_prefix=args.id_prefix)
    except ValueError as e:
        raise UsageError(str(e)) from None
    sentences = generate(gen)
    out = context.resolve(args.out)
    write_jsonl(sentences, out)
    write_schema(schema_sidecar(out), SchemaSpec().vocab())
    return CommandResult(ok=True, output=json.dumps(nesting_stats(sentences), indent=2, sort_keys=True))


def _args_gradcheck(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--n", type=int, default=3, help="synthetic sentences in the check batch")
    parser.add_argument("--seed", type=int, default=0)
    _config_arguments(parser)


def _cmd_gradcheck(args: argparse.Namespace, context: CommandContext) -> CommandResult:
    config = _config(args, context)
    sentences = generate(GenConfig(sentences=max(1, args.n), nested_fraction=1.0, distractor_fraction=0.0,
                                   seed=args.seed))
    vocab = SchemaSpec().vocab()
    model = NestedEventModel(vocab, TokenVocab.build(sentences, config.hash_buckets), config)
    reports = check_gradients(model, sentences, samples=config.gradcheck_samples, seed=args.seed)
    lines = [f"{head:<6} {report.summary()}" for head, report in reports.items()]
    for report in reports.values():
        lines.extend("  " + failure for failure in report.failures[:5])
    ok = all(r.ok for r in reports.values())
    return CommandResult(ok=ok, output="\n".join(lines), code=0 if ok else EXIT_NUMERIC)


def _args_validate(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("corpus", help="corpus to check (JSONL)")
    parser.add_argument("--schema", help="label vocabulary (JSON)")


def _cmd_validate(args: argparse.Namespace, context: CommandContext) -> CommandResult:
    path = context.resolve(args.corpus)
    problems = check_jsonl(path, _vocab(args.schema, path, context))
    if problems:
        return CommandResult(ok=False, output="\n".join(problems), code=EXIT_INVALID)
    return CommandResult(ok=True, output=f"{path}: ok")


# ========== Registry ==========
commands_dict = {
    "train": Command("train", "Train a model on a corpus and write a checkpoint", _cmd_train, _args_train),
    "predict": Command("predict", "Annotate a corpus with a trained checkpoint", _cmd_predict, _args_predict),
    "eval": Command("eval", "Score predictions against gold (TI TC AI AC PEI PEC)", _cmd_eval, _args_eval),
    "synth": Command("synth", "Generate a synthetic nested-event corpus", _cmd_synth, _args_synth),
    "gradcheck": Command("gradcheck", "Finite-difference check of every head's gradients",
                         _cmd_gradcheck, _args_gradcheck),
    "validate": Command("validate", "Check a corpus against the label vocabulary", _cmd_validate, _args_validate),
}

command_registry = build_command_registry(commands_dict)
