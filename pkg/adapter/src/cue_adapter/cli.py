"""cue-adapter command line: generate | judge | similarity | train-corrector | smoke."""

from __future__ import annotations

import argparse
import json
import sys

from .adapter import (
    AdapterConfig,
    DataError,
    MissingInputError,
    generate,
    judge_llm,
    load_record_rows,
    load_samples,
    load_targets,
    similarity_sidecar,
    train_encoder_corrector,
    write_generate_outputs,
    write_jsonl_sharded,
    write_meta,
)


def _config(args: argparse.Namespace) -> AdapterConfig:
    values = {
        "target_model": getattr(args, "model", None),
        "b": getattr(args, "b", None),
        "temperature": getattr(args, "temperature", None),
        "max_tokens": getattr(args, "max_tokens", None),
        "judge_model": getattr(args, "judge_model", None),
        "seed": getattr(args, "seed", None),
        "epochs": getattr(args, "epochs", None),
        "learning_rate": getattr(args, "lr", None),
        "batch_size": getattr(args, "batch", None),
        "n_buckets": getattr(args, "buckets", None),
        "hash_seed": getattr(args, "hash_seed", None),
        "shard_size": getattr(args, "shard_size", None),
    }
    try:
        return AdapterConfig(**{k: v for k, v in values.items() if v is not None})
    except ValueError as exc:
        raise DataError(str(exc)) from exc


def cmd_generate(args: argparse.Namespace) -> int:
    config = _config(args)
    samples = load_samples(args.samples)
    records, failures = generate(samples, config)
    write_generate_outputs(args.out, records, failures, config)
    print("wrote %d records (%d failures) to %s" % (len(records), len(failures), args.out))
    return 0


def cmd_judge(args: argparse.Namespace) -> int:
    config = _config(args)
    samples = load_samples(args.samples)
    records = load_record_rows(args.generations)
    merged = judge_llm(samples, records, config)
    write_jsonl_sharded(args.out, merged, config.shard_size)
    write_meta(args.out, {"model": config.judge_model, "prompts": {"judge": config.judge_prompt}})
    print("judged %d records to %s" % (len(merged), args.out))
    return 0


def cmd_similarity(args: argparse.Namespace) -> int:
    config = _config(args)
    records = load_record_rows(args.generations)
    rows = similarity_sidecar(records, config)
    write_jsonl_sharded(args.out, rows, config.shard_size)
    write_meta(args.out, {"model": config.similarity_model})
    print("wrote similarities for %d records to %s" % (len(rows), args.out))
    return 0


def cmd_train_corrector(args: argparse.Namespace) -> int:
    config = _config(args)
    samples = load_samples(args.samples)
    targets = load_targets(args.judgments)
    records = load_record_rows(args.generations)
    model, merged = train_encoder_corrector(samples, targets, records, config)
    write_jsonl_sharded(args.out, merged, config.shard_size)
    write_meta(
        args.out,
        {
            "encoder": config.encoder,
            "seed": config.seed,
            "hyperparameters": {
                "epochs": config.epochs,
                "learning_rate": config.learning_rate,
                "batch_size": config.batch_size,
                "n_buckets": config.n_buckets,
                "hash_seed": config.hash_seed,
            },
        },
    )
    if args.model_out:
        with open(args.model_out, "w", encoding="utf-8") as handle:
            json.dump(model, handle, indent=2, sort_keys=True)
            handle.write("\n")
    print("merged corrector probabilities for %d records to %s" % (len(merged), args.out))
    return 0


def cmd_smoke(args: argparse.Namespace) -> int:
    """Generate, judge, and build similarities in one pass into --out-dir."""
    import os

    config = _config(args)
    samples = load_samples(args.samples)
    os.makedirs(args.out_dir, exist_ok=True)
    generations_path = os.path.join(args.out_dir, "generations.jsonl")
    similarities_path = os.path.join(args.out_dir, "similarities.jsonl")
    records, failures = generate(samples, config)
    merged = judge_llm(samples, records, config)
    write_generate_outputs(generations_path, merged, failures, config)
    write_meta(
        generations_path + ".judge",
        {"model": config.judge_model, "prompts": {"judge": config.judge_prompt}},
    )
    rows = similarity_sidecar(merged, config)
    write_jsonl_sharded(similarities_path, rows, config.shard_size)
    write_meta(similarities_path, {"model": config.similarity_model})
    print("smoke outputs in %s (%d records)" % (args.out_dir, len(merged)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cue-adapter",
        description="Produce generations, judge verdicts, similarity sidecars, "
        "and corrector probabilities for the cue pipeline.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample generations with token logprobs")
    p.add_argument("--samples", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model", help="target model identifier")
    p.add_argument("--b", type=int, help="generations per question")
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-tokens", type=int, dest="max_tokens")
    p.add_argument("--seed", type=int)
    p.add_argument("--shard-size", type=int, dest="shard_size")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("judge", help="merge strict True/False judge verdicts")
    p.add_argument("--samples", required=True)
    p.add_argument("--generations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--judge-model", dest="judge_model")
    p.add_argument("--shard-size", type=int, dest="shard_size")
    p.set_defaults(func=cmd_judge)

    p = sub.add_parser("similarity", help="write the similarity sidecar")
    p.add_argument("--generations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--shard-size", type=int, dest="shard_size")
    p.set_defaults(func=cmd_similarity)

    p = sub.add_parser("train-corrector", help="train the encoder classifier and merge probabilities")
    p.add_argument("--samples", required=True)
    p.add_argument("--judgments", required=True)
    p.add_argument("--generations", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--model-out", dest="model_out")
    p.add_argument("--seed", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--buckets", type=int)
    p.add_argument("--hash-seed", type=int, dest="hash_seed")
    p.add_argument("--shard-size", type=int, dest="shard_size")
    p.set_defaults(func=cmd_train_corrector)

    p = sub.add_parser("smoke", help="generate + judge + similarity into a directory")
    p.add_argument("--samples", required=True)
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--model")
    p.add_argument("--b", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--max-tokens", type=int, dest="max_tokens")
    p.add_argument("--seed", type=int)
    p.add_argument("--judge-model", dest="judge_model")
    p.add_argument("--shard-size", type=int, dest="shard_size")
    p.set_defaults(func=cmd_smoke)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except MissingInputError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 3
    except DataError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
