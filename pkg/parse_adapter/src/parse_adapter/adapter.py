"""Turn sentence-pair TSV files into aligned CoNLL-U sidecar files.

The input format is ``gold<TAB>sentence1<TAB>sentence2`` per line; the
output contains exactly two parsed sentences per kept pair, in pair order,
so downstream consumers can index trees as 2i and 2i+1.  Lines the
downstream TSV reader would reject (wrong field count, non-numeric gold,
empty sentence) are skipped here too, keeping the two files aligned.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable

log = logging.getLogger("parse_adapter")

# a parser maps raw sentence text to (form, zero_based_head) pairs,
# head -1 marking the root
ParseFn = Callable[[str], list[tuple[str, int]]]


@dataclass(frozen=True)
class ParseJob:
    input_path: str
    output_path: str
    model: str = "en_core_web_sm"
    lowercase: bool = False


def load_spacy_parser(model: str) -> ParseFn:
    """Build a ParseFn from a spaCy pipeline.

    Raises RuntimeError when the library or model is unavailable.  A text
    that spaCy splits into several sentence fragments keeps the first
    fragment's root; later roots are re-attached to it, so every output
    sentence has exactly one root.
    """
    try:
        import spacy
    except ImportError as exc:
        raise RuntimeError(
            "spaCy is not installed; install parse-adapter[spacy]"
        ) from exc
    try:
        nlp = spacy.load(model, exclude=["ner", "lemmatizer", "textcat"])
    except OSError as exc:
        raise RuntimeError(f"cannot load spaCy model {model!r}: {exc}") from exc

    def parse(text: str) -> list[tuple[str, int]]:
        doc = nlp(text)
        tokens = [t for t in doc]
        if not tokens:
            raise ValueError("no tokens")
        out = []
        first_root = None
        for tok in tokens:
            if tok.head is tok:  # spaCy roots point at themselves
                if first_root is None:
                    first_root = tok.i
                    out.append((tok.text, -1))
                else:
                    out.append((tok.text, first_root))
            else:
                out.append((tok.text, tok.head.i))
        return out

    return parse


def flat_parse(text: str) -> list[tuple[str, int]]:
    """Whitespace tokens, every head the first token: the fallback tree."""
    forms = text.split()
    if not forms:
        raise ValueError("empty sentence")
    return [(f, -1 if i == 0 else 0) for i, f in enumerate(forms)]


def read_pair_sentences(path: str) -> list[tuple[str, str]]:
    """Sentence pairs from a TSV file, skipping exactly the lines the
    downstream reader skips."""
    pairs = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                log.warning("skipping malformed line: %r", line[:60])
                continue
            try:
                gold = float(cols[0])
            except ValueError:
                log.warning("skipping line with bad gold score: %r", line[:60])
                continue
            if not math.isfinite(gold) or not cols[1].split() or not cols[2].split():
                log.warning("skipping degenerate line: %r", line[:60])
                continue
            pairs.append((cols[1], cols[2]))
    return pairs


def sentence_to_conllu(parsed: list[tuple[str, int]]) -> str:
    """One sentence block: ID, FORM and HEAD populated, other columns
    underscored, trailing blank line."""
    lines = []
    for i, (form, head) in enumerate(parsed, start=1):
        head_1 = 0 if head < 0 else head + 1
        lines.append(f"{i}\t{form}\t_\t_\t_\t_\t{head_1}\t_\t_\t_")
    return "\n".join(lines) + "\n\n"


def parse_sentence(text: str, parser: ParseFn, lowercase: bool) -> list[tuple[str, int]]:
    if lowercase:
        text = text.lower()
    try:
        parsed = parser(text)
        if not parsed:
            raise ValueError("parser returned no tokens")
        roots = [i for i, (_, h) in enumerate(parsed) if h < 0]
        if len(roots) != 1:
            raise ValueError(f"{len(roots)} roots")
        return parsed
    except Exception as exc:  # noqa: BLE001 - any parser failure falls back
        log.warning("falling back to a flat tree for %r: %s", text[:60], exc)
        return flat_parse(text)


def parse_tsv(job: ParseJob, parser: ParseFn | None = None) -> int:
    """Write the sidecar file; returns the number of sentences emitted.

    ``parser`` overrides the spaCy pipeline named by ``job.model`` (used
    by tests and alternate backends).
    """
    if parser is None:
        parser = load_spacy_parser(job.model)
    pairs = read_pair_sentences(job.input_path)
    count = 0
    with open(job.output_path, "w", encoding="utf-8") as out:
        for s1, s2 in pairs:
            for text in (s1, s2):
                out.write(sentence_to_conllu(parse_sentence(text, parser, job.lowercase)))
                count += 1
    log.info("wrote %d sentences for %d pairs", count, len(pairs))
    return count
