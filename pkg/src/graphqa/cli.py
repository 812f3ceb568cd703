"""Command line interface: ingest, train, eval, answer, gradcheck, serve.

Environment variables GRAPHQA_PORT and GRAPHQA_STORE override the default
port and store directory for `serve`; explicit flags win over both.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .checkpoint import load_checkpoint, save_checkpoint
from .evaluation import load_benchmark, evaluate, format_report
from .evidence import SOURCE_TAGS, cap_bm25, load_store, retrieve, save_store_dir
from .gnn import GnnConfig
from .graph import GraphInstance, build_graph, load_instances
from .pipeline import (DEFAULT_EXPLANATIONS, RETRIEVAL_CAP, PipelineRuntime,
                       parse_schedule, run_turn)
from .sr import BaselineSrGenerator, Conversation, Turn, hallucination_filter
from .training import OptimizerConfig, gradient_check, train

PORT_ENV = "GRAPHQA_PORT"
STORE_ENV = "GRAPHQA_STORE"
DEFAULT_PORT = 8080


def _store_arg(parser, required=True):
    parser.add_argument("--store", required=required,
                        help="store directory written by `ingest`"
                             + ("" if required else f" (or ${STORE_ENV})"))


def _model_args(parser):
    parser.add_argument("--pruning-model", required=True,
                        help="checkpoint for the pruning stage")
    parser.add_argument("--answering-model", required=True,
                        help="checkpoint for the answering stage")


def _runtime(args) -> PipelineRuntime:
    store = load_store(args.store)
    pruning, _ = load_checkpoint(args.pruning_model)
    answering, _ = load_checkpoint(args.answering_model)
    return PipelineRuntime(store, pruning, answering,
                           schedule=parse_schedule(args.schedule),
                           explanation_size=args.explanations)


def _benchmark_instances(benchmark, store, retrieval_cap=RETRIEVAL_CAP):
    """Graph instances from a benchmark with gold history.

    Uses the benchmark SR when present, the baseline generator otherwise.
    """
    generator = BaselineSrGenerator()
    instances = []
    for conv in benchmark:
        conversation = Conversation(conv_id=conv.conv_id)
        for index, turn in enumerate(conv.turns, start=1):
            gold_id, gold_label = (turn.gold_answers[0]
                                   if turn.gold_answers else (None, ""))
            if not turn.existential:
                sr = turn.sr
                if sr is None:
                    candidates = generator.generate(conversation, turn.question, 5)
                    sr = hallucination_filter(candidates, conversation,
                                              turn.question).sr
                evidences = cap_bm25(retrieve(sr, store),
                                     sr.text_without_delimiters(), retrieval_cap)
                instances.append(GraphInstance(
                    f"{conv.conv_id}-t{index}", build_graph(evidences),
                    tuple(gold_id for gold_id, _ in turn.gold_answers), sr))
            conversation = conversation.with_turn(
                Turn(turn.question, gold_label or "Yes", gold_id))
    return instances


def _cmd_ingest(args) -> int:
    store = save_store_dir(args.facts, args.text, args.tables, args.infoboxes,
                           args.out)
    print(f"ingested {len(store)} evidences, {len(store.entities)} entities "
          f"-> {args.out}")
    return 0


def _cmd_train(args) -> int:
    if args.graphs:
        instances = load_instances(args.graphs)
    else:
        if not (args.store and args.benchmark):
            print("train: need --graphs or both --store and --benchmark",
                  file=sys.stderr)
            return 2
        instances = _benchmark_instances(load_benchmark(args.benchmark),
                                         load_store(args.store))
    dev = load_instances(args.dev) if args.dev else None
    config = GnnConfig(dimension=args.dim, layers=args.layers,
                       w_entity=args.w_entity, w_evidence=args.w_evidence,
                       seed=args.seed)
    optimizer = OptimizerConfig(learning_rate=args.lr, epochs=args.epochs,
                                batch_size=args.batch_size,
                                stop_at_train_metric=args.stop_at_metric)
    result = train(instances, config, optimizer, dev_instances=dev,
                   mode=args.mode)
    save_checkpoint(result.params, path=args.out)
    last = result.history[-1] if result.history else None
    print(f"trained {args.mode} model on {len(instances)} instances "
          f"({len(result.history)} epochs) -> {args.out}")
    if last is not None:
        print(f"final mean loss {last.mean_loss:.6f}"
              + (f", dev metric {last.dev_metric:.4f}"
                 if last.dev_metric is not None else ""))
    if result.skipped:
        print(f"skipped: {dict(result.skipped)}")
    return 0


def _cmd_eval(args) -> int:
    runtime = _runtime(args)
    benchmark = load_benchmark(args.benchmark)
    sources = tuple(args.sources.split(",")) if args.sources else None
    if sources:
        unknown = set(sources) - set(SOURCE_TAGS)
        if unknown:
            print(f"eval: unknown sources {sorted(unknown)}", file=sys.stderr)
            return 2
    report = evaluate(benchmark, runtime, history_mode=args.history,
                      source_filter=sources)
    print(format_report(report))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(report.to_dict(), handle, indent=2, sort_keys=True)
        print(f"wrote {args.out}")
    return 0


def _cmd_answer(args) -> int:
    from .service import turn_view

    runtime = _runtime(args)
    conversation = Conversation(conv_id="cli")
    if args.history:
        with open(args.history, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                conversation = conversation.with_turn(Turn(
                    record["question"], record.get("answer", ""),
                    record.get("answer_id")))
    result = run_turn(conversation, args.question, runtime.store,
                      runtime.pruning_model, runtime.answering_model,
                      runtime.schedule, runtime.explanation_size)
    print(json.dumps(turn_view(result, conversation.next_turn_index), indent=2))
    return 0


def _cmd_gradcheck(args) -> int:
    from .synthetic import random_graph_instance
    from .training import build_vocabulary
    from .gnn import GnnParameters

    instance = random_graph_instance(args.seed, args.evidences)
    config = GnnConfig(dimension=args.dim, layers=args.layers, seed=args.seed)
    params = GnnParameters.initialize(config, build_vocabulary([instance]))
    error = gradient_check(params, instance, config)
    print(f"max relative gradient error: {error:.3e} "
          f"(tolerance {args.tolerance:.1e})")
    if error > args.tolerance:
        print("gradcheck FAILED", file=sys.stderr)
        return 1
    print("gradcheck passed")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn
    from .service import create_app

    if not args.store:
        print(f"serve: need --store or ${STORE_ENV}", file=sys.stderr)
        return 2
    runtime = _runtime(args)
    versions = {"pruning": os.path.basename(args.pruning_model),
                "answering": os.path.basename(args.answering_model)}
    app = create_app(runtime, versions, session_log=args.session_log)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphqa",
        description="conversational question answering over a local "
                    "heterogeneous knowledge snapshot")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a snapshot into a store directory")
    p.add_argument("facts")
    p.add_argument("text")
    p.add_argument("tables")
    p.add_argument("infoboxes")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("train", help="train a pruning or answering model")
    p.add_argument("--mode", choices=("pruning", "answering"), required=True)
    p.add_argument("--graphs", help="graph instances JSONL (alternative to "
                                    "--store/--benchmark)")
    _store_arg(p, required=False)
    p.add_argument("--benchmark")
    p.add_argument("--dev", help="dev graph instances JSONL")
    p.add_argument("--out", required=True)
    p.add_argument("--w-entity", type=float, default=0.5)
    p.add_argument("--w-evidence", type=float, default=0.5)
    p.add_argument("--dim", type=int, default=32)
    p.add_argument("--layers", type=int, default=3)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=1e-5)
    p.add_argument("--batch-size", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--stop-at-metric", type=float, default=None,
                   help="stop once the training-set metric reaches this value")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="run a benchmark and print metrics")
    p.add_argument("--benchmark", required=True)
    _store_arg(p)
    _model_args(p)
    p.add_argument("--history", choices=("gold", "predicted"), default="gold")
    p.add_argument("--sources", help="comma-separated source tags to keep")
    p.add_argument("--schedule", default="100,20")
    p.add_argument("--explanations", type=int, default=DEFAULT_EXPLANATIONS)
    p.add_argument("--out", help="write the report as JSON")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("answer", help="answer one question")
    p.add_argument("--question", required=True)
    _store_arg(p)
    _model_args(p)
    p.add_argument("--history", help="JSONL of prior {question, answer} turns")
    p.add_argument("--schedule", default="100,20")
    p.add_argument("--explanations", type=int, default=DEFAULT_EXPLANATIONS)
    p.set_defaults(func=_cmd_answer)

    p = sub.add_parser("gradcheck",
                       help="compare analytic gradients with central differences")
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--evidences", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.set_defaults(func=_cmd_gradcheck)

    p = sub.add_parser("serve", help="run the HTTP question answering service")
    p.add_argument("--port", type=int,
                   default=int(os.environ.get(PORT_ENV, DEFAULT_PORT)))
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--store", default=os.environ.get(STORE_ENV))
    _model_args(p)
    p.add_argument("--schedule", default="100,20")
    p.add_argument("--explanations", type=int, default=DEFAULT_EXPLANATIONS)
    p.add_argument("--session-log", help="append answered turns to this file")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"graphqa {args.command}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
