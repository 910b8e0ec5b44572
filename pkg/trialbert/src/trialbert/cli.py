"""Command-line entry points: serve, finetune, pretrain, make-tiny."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .configs import FinetuneConfig, PretrainConfig, load_config
from .errors import TrialBertError


def _config_from_args(args, cls, required: dict) -> object:
    if args.config:
        return load_config(args.config, cls)
    overrides = {
        field.name: getattr(args, field.name)
        for field in dataclasses.fields(cls)
        if getattr(args, field.name, None) is not None
    }
    return cls(**{**required, **overrides})


def cmd_serve(args) -> int:
    from .server import serve

    serve(args.model_dir, tcp_port=args.tcp, max_seq_len=args.max_seq_len)
    return 0


def cmd_finetune(args) -> int:
    from .finetune import finetune

    config = _config_from_args(args, FinetuneConfig,
                               {"base_model": args.base_model})
    out = finetune(args.train_file, config, args.out)
    log = json.loads((Path(out) / "training_log.json").read_text())
    losses = ", ".join(f"{l:.4f}" for l in log["epoch_losses"])
    print(f"saved {out} (epoch losses: {losses})", file=sys.stderr)
    return 0


def cmd_pretrain(args) -> int:
    from .pretrain import pretrain_mlm

    config = _config_from_args(
        args, PretrainConfig,
        {"corpus_path": args.corpus_path, "base_model": args.base_model},
    )
    out = pretrain_mlm(config, args.out)
    print(f"saved {out}", file=sys.stderr)
    return 0


def cmd_make_tiny(args) -> int:
    from .tiny import make_tiny_base

    texts = [l for l in Path(args.corpus_path).read_text().splitlines() if l.strip()]
    out = make_tiny_base(texts, args.out, seed=args.seed or 0)
    print(f"saved {out}", file=sys.stderr)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trialbert",
        description="Transformer scoring server and training for criteria classification",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("serve", help="run the scoring protocol server")
    sp.add_argument("--model-dir", required=True)
    sp.add_argument("--tcp", type=int, help="TCP port (default: stdio)")
    sp.add_argument("--max-seq-len", type=int, default=512)
    sp.set_defaults(func=cmd_serve)

    sp = sub.add_parser("finetune", help="fine-tune a binary classifier")
    sp.add_argument("--train-file", required=True)
    sp.add_argument("--base-model", help="encoder name or directory")
    sp.add_argument("--config", help="FinetuneConfig JSON file")
    sp.add_argument("--out", required=True)
    for flag, kind in [("--max-seq-len", int), ("--epochs", int),
                       ("--learning-rate", float), ("--batch-size", int),
                       ("--seed", int)]:
        sp.add_argument(flag, type=kind)
    sp.set_defaults(func=cmd_finetune)

    sp = sub.add_parser("pretrain", help="masked-LM continued pre-training")
    sp.add_argument("--corpus-path", help="text file, one section per line")
    sp.add_argument("--base-model")
    sp.add_argument("--config", help="PretrainConfig JSON file")
    sp.add_argument("--out", required=True)
    for flag, kind in [("--batch-size", int), ("--max-seq-len", int),
                       ("--learning-rate", float), ("--steps", int),
                       ("--mask-probability", float), ("--seed", int)]:
        sp.add_argument(flag, type=kind)
    sp.set_defaults(func=cmd_pretrain)

    sp = sub.add_parser("make-tiny", help="build a tiny random test encoder")
    sp.add_argument("--corpus-path", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--seed", type=int)
    sp.set_defaults(func=cmd_make_tiny)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (TrialBertError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
