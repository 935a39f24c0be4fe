"""Sentence-pair TSV to aligned CoNLL-U conversion."""

from .adapter import (
    ParseJob,
    flat_parse,
    load_spacy_parser,
    parse_tsv,
    read_pair_sentences,
    sentence_to_conllu,
)

__version__ = "0.1.0"
