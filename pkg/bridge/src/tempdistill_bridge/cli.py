"""Command-line entry points for embedding export and fine-tuning."""
from __future__ import annotations

import argparse
import logging
import sys

from . import BridgeError, __version__
from .export import BridgeConfig, export_embeddings


def _config_from(args) -> BridgeConfig:
    return BridgeConfig(
        model=args.model,
        max_length=args.max_length,
        encode_masked=not args.raw,
        mask_literal=args.mask_literal,
        device=args.device,
        learning_rate=args.lr,
        warmup_proportion=args.warmup,
        batch_size=args.batch_size,
        epochs=args.epochs,
        seed=args.seed,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tempdistill-bridge",
        description="Produce embedding files from a pretrained encoder, or fine-tune it.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    def common(p):
        p.add_argument("--model", required=True, help="encoder name or local path")
        p.add_argument("--max-length", type=int, default=128)
        group = p.add_mutually_exclusive_group()
        group.add_argument("--masked", dest="raw", action="store_false",
                           help="encode masked_tokens (default)")
        group.add_argument("--raw", dest="raw", action="store_true",
                           help="encode raw tokens")
        p.set_defaults(raw=False)
        p.add_argument("--mask-literal", default="[mask]")
        p.add_argument("--device", default="cpu")
        p.add_argument("--lr", type=float, default=2e-5)
        p.add_argument("--warmup", type=float, default=0.1)
        p.add_argument("--batch-size", type=int, default=16)
        p.add_argument("--epochs", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("export", help="write an embedding file for an example file")
    common(p)
    p.add_argument("--examples", required=True)
    p.add_argument("--out", required=True, help="output embedding file")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("finetune", help="train encoder + head end to end")
    common(p)
    p.add_argument("--train", required=True)
    p.add_argument("--dev", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_finetune)
    return parser


def cmd_export(args) -> int:
    cfg = _config_from(args)
    written, skipped = export_embeddings(args.examples, cfg, args.out)
    print(f"wrote {written} embedding pairs -> {args.out}"
          + (f" ({len(skipped)} skipped)" if skipped else ""))
    return 0


def cmd_finetune(args) -> int:
    from .finetune import finetune
    cfg = _config_from(args)
    metrics = finetune(args.train, args.dev, cfg, args.out)
    print(f"seed {metrics['seed']}: dev accuracy {metrics['dev_accuracy']:.3f}, "
          f"predictions -> {metrics['predictions']}")
    return 0


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BridgeError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
