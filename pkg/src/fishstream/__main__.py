#!/usr/bin/env python3
"""
fishstream - streaming earthquake early warning
Main entry point for the fishstream package
"""

import argparse
import sys
from pathlib import Path

from .__version__ import __version__
from .commands import CommandRunner
from .core.config import Config
from .core.events import EventBus
from .core.exceptions import CheckpointError, FishStreamError, WaveformFormatError
from .core.logger import Logger
from .streaming import MIN_BENCH_STEPS

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PARSE = 2
EXIT_CHECKPOINT = 3
EXIT_INTERRUPTED = 130


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fishstream", description="Streaming earthquake early warning")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", type=Path, help="YAML configuration file (default ~/.fishstream/config.yaml)")
    parser.add_argument("--seed", type=int, help="override app.seed and train.seed")
    parser.add_argument("--ckpt", type=Path, help="FSHM checkpoint to read (or write, for train)")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="write a synthetic FSH1 dataset")
    gen.add_argument("out", type=Path)
    gen.add_argument("--n", type=int, dest="n_records")
    gen.add_argument("--val-fraction", type=float)

    train = sub.add_parser("train", help="train on a dataset directory and write --ckpt")
    train.add_argument("data", type=Path)
    train.add_argument("--metrics", type=Path, help="per-epoch CSV metrics log")
    train.add_argument("--epochs", type=int)

    rep = sub.add_parser("replay", help="replay one FSH1 file sample by sample")
    rep.add_argument("file", type=Path)
    rep.add_argument("--out", type=Path, help="write step outputs here instead of stdout")

    sub.add_parser("stream", help="read 'z n e' lines from stdin, write JSONL step outputs")

    bench = sub.add_parser("bench", help="per-step latency benchmark")
    bench.add_argument("--steps", type=int, default=MIN_BENCH_STEPS)

    ev = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    ev.add_argument("data", type=Path)
    ev.add_argument("--split", default="val", choices=("train", "val"))
    ev.add_argument("--mode", default="parallel", choices=("parallel", "online"))
    ev.add_argument("--out", type=Path, help="also write the JSON report here")
    ev.add_argument("--curves", type=Path, help="CSV of the P/S-aligned error curves")
    return parser


def run(args: argparse.Namespace) -> int:
    config = Config(args.config)
    if args.seed is not None:
        config.set("app.seed", args.seed)
        config.set("train.seed", args.seed)
    logger = Logger(config)
    event_bus = EventBus(logger)
    runner = CommandRunner(config, event_bus, logger, ckpt=args.ckpt)
    logger.debug(f"main: command {args.command}")

    if args.command == "gen-data":
        return runner.gen_data(args.out, args.n_records, args.val_fraction)
    if args.command == "train":
        return runner.train(args.data, args.metrics, args.epochs)
    if args.command == "replay":
        return runner.replay(args.file, args.out)
    if args.command == "stream":
        return runner.stream()
    if args.command == "bench":
        return runner.bench(args.steps)
    return runner.eval(args.data, args.split, args.mode, args.out, args.curves)


def main(argv: list[str] | None = None) -> int:
    """Main entry point"""
    args = build_parser().parse_args(argv)
    try:
        return run(args)
    except KeyboardInterrupt:
        print("\nInterrupted", file=sys.stderr)
        return EXIT_INTERRUPTED
    except WaveformFormatError as e:
        print(f"fishstream: {e}", file=sys.stderr)
        return EXIT_PARSE
    except CheckpointError as e:
        print(f"fishstream: {e}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except FishStreamError as e:
        print(f"fishstream: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
