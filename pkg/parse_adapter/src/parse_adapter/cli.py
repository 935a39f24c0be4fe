"""parse-adapter command line: TSV pairs in, aligned CoNLL-U out."""

from __future__ import annotations

import argparse
import logging
import sys

from .adapter import ParseJob, parse_tsv


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="parse-adapter",
        description="Parse a gold<TAB>sent1<TAB>sent2 file into a CoNLL-U "
        "sidecar with two sentences per pair, in pair order.",
    )
    parser.add_argument("--in", dest="input_path", required=True, help="input TSV")
    parser.add_argument("--out", dest="output_path", required=True, help="output CoNLL-U")
    parser.add_argument("--model", default="en_core_web_sm", help="spaCy model id")
    parser.add_argument("--lowercase", action="store_true", help="lowercase before parsing")
    parser.add_argument("-v", "--verbose", action="store_true")
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
    )
    job = ParseJob(
        input_path=args.input_path,
        output_path=args.output_path,
        model=args.model,
        lowercase=args.lowercase,
    )
    try:
        count = parse_tsv(job)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {count} sentences to {job.output_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
