"""kgwalk-embed: compute embeddings into a KGWV vector file."""

from __future__ import annotations

import argparse
import json
import sys

from .encoders import DEFAULT_MODEL, MODES
from .jobs import FIELDS, EmbedJob, embed_file


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kgwalk-embed", description=__doc__)
    parser.add_argument("--input", required=True,
                        help="text export (id\\ttext) or dataset JSON lines")
    parser.add_argument("--out", required=True, help="output vector file")
    parser.add_argument("--field", default="sentence", choices=FIELDS,
                        help="which text to embed")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help="encoder id, or hash[:dim] for the deterministic "
                             "fallback")
    parser.add_argument("--mode", choices=MODES, default=None,
                        help="query/passage prefixing; defaults per field")
    parser.add_argument("--batch-size", type=int, default=64)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = EmbedJob(
        input_path=args.input,
        output_path=args.out,
        field=args.field,
        model=args.model,
        mode=args.mode,
        batch_size=args.batch_size,
    )
    try:
        meta = embed_file(job)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(meta, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
