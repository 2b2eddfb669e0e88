"""The ``embed`` command.

Mirrors the main toolkit's exit-code contract: 0 success, 1 usage error,
2 data error. Log level comes from CSD_LOG.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from typing import Sequence

from csd_embedder.embed import EmbedError, EmbedJob, embed_corpus, verify_embeddings
from csd_embedder.encoders import DEFAULT_MODEL, EncoderError

logger = logging.getLogger(__name__)

USAGE_EXIT = 1
DATA_EXIT = 2

_LOG_LEVELS = {
    "error": logging.ERROR,
    "warn": logging.WARNING,
    "info": logging.INFO,
    "debug": logging.DEBUG,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # noqa: D102 - argparse hook
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: error: {message}\n")


def build_parser() -> _Parser:
    parser = _Parser(prog="embed", description="encode a corpus into an embedding file")
    parser.add_argument("--corpus", required=True, help="canonical JSON Lines corpus")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help=f"model identifier or hash:<dim> (default: {DEFAULT_MODEL})")
    parser.add_argument("--batch", type=int, default=32, help="batch size")
    parser.add_argument("--out", required=True, help="output embedding file")
    parser.add_argument("--device", default="cpu", help="device hint for transformer models")
    parser.add_argument("--report", help="write the embed + verify report as JSON here")
    parser.add_argument("--no-verify", action="store_true",
                        help="skip the post-write verification pass")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    level = _LOG_LEVELS.get(os.environ.get("CSD_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        job = EmbedJob(args.corpus, args.out, args.model, args.batch, args.device)
        report = embed_corpus(job)
        payload: dict = {"embed": report.to_dict()}
        logger.info(
            "wrote %d rows (dim %d) with %s", report.rows_written, report.dim, report.model
        )
        if not args.no_verify:
            verification = verify_embeddings(args.out, args.corpus)
            payload["verify"] = verification.to_dict()
            if verification.missing_ids:
                logger.warning("%d corpus records lack vectors", len(verification.missing_ids))
            if not verification.ok:
                print("embed: error: verification failed", file=sys.stderr)
                return DATA_EXIT
        if args.report:
            with open(args.report, "w", encoding="utf-8") as out:
                json.dump(payload, out, indent=2, sort_keys=True)
                out.write("\n")
        return 0
    except (EmbedError, EncoderError, FileNotFoundError) as exc:
        print(f"embed: error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
