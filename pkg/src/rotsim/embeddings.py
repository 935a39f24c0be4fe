"""Word-vector and unigram-frequency stores.

Loads pretrained vectors from text ``.vec`` files (optional ``N d`` header)
and word counts from ``token count`` files.  Stores are immutable after
loading and safe to share across workers.
"""

from __future__ import annotations

import numpy as np


class EmbeddingStore:
    """Token -> dense vector table with fixed dimensionality.

    Vectors are kept as float64 rows of one matrix regardless of the file
    precision; lookups return views into that matrix.
    """

    def __init__(self, tokens: list[str], matrix: np.ndarray, skipped: int = 0):
        if matrix.ndim != 2:
            raise ValueError("embedding matrix must be 2-D")
        if len(tokens) != matrix.shape[0]:
            raise ValueError("token list and matrix row count disagree")
        self._index = {tok: i for i, tok in enumerate(tokens)}
        if len(self._index) != len(tokens):
            raise ValueError("duplicate tokens in embedding store")
        self._matrix = np.ascontiguousarray(matrix, dtype=np.float64)
        self._matrix.setflags(write=False)
        self.skipped = skipped

    @property
    def dim(self) -> int:
        return int(self._matrix.shape[1])

    @property
    def count(self) -> int:
        return int(self._matrix.shape[0])

    @property
    def matrix(self) -> np.ndarray:
        """Read-only (count, dim) matrix, row order = insertion order."""
        return self._matrix

    def tokens(self) -> list[str]:
        return list(self._index)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def get(self, token: str) -> np.ndarray | None:
        """Exact-match vector lookup; None when absent."""
        i = self._index.get(token)
        return None if i is None else self._matrix[i]

    def with_matrix(self, matrix: np.ndarray) -> "EmbeddingStore":
        """Same vocabulary, replaced vectors (used by vector converters)."""
        return EmbeddingStore(list(self._index), matrix, skipped=self.skipped)


class FrequencyTable:
    """Unigram counts with derived probabilities; unseen tokens have p = 0."""

    def __init__(self, counts: dict[str, int], skipped: int = 0):
        if not counts:
            raise ValueError("empty frequency table")
        self._counts = dict(counts)
        self.total = sum(self._counts.values())
        if self.total <= 0:
            raise ValueError("frequency table has zero total count")
        self.skipped = skipped

    @property
    def vocab_size(self) -> int:
        return len(self._counts)

    def count(self, token: str) -> int:
        return self._counts.get(token, 0)

    def probability(self, token: str) -> float:
        return self._counts.get(token, 0) / self.total

    def probabilities(self) -> dict[str, float]:
        return {tok: c / self.total for tok, c in self._counts.items()}


def _parse_header(line: str) -> tuple[int, int] | None:
    parts = line.split()
    if len(parts) != 2:
        return None
    try:
        n, d = int(parts[0]), int(parts[1])
    except ValueError:
        return None
    if n <= 0 or d <= 0:
        return None
    return n, d


def load_vectors(
    path: str,
    expected_dim: int | None = None,
    restrict: set[str] | None = None,
) -> EmbeddingStore:
    """Load a text ``.vec`` file: ``token c1 ... cd`` lines, optional header.

    The dimension comes from the header when present, else from the first
    data line.  Lines whose component count mismatches are skipped and
    counted; duplicate tokens keep their first occurrence.  ``restrict``
    keeps only the listed tokens (an out-of-interest line is neither kept
    nor counted as skipped); useful when no whole-vocabulary transform is
    needed and the file is large.

    Raises ValueError on an unreadable/empty file or when ``expected_dim``
    is given and disagrees.
    """
    tokens: list[str] = []
    rows: list[np.ndarray] = []
    seen: set[str] = set()
    skipped = 0
    dim: int | None = None

    with open(path, encoding="utf-8", errors="replace") as fh:
        first = fh.readline()
        header = _parse_header(first) if first else None
        lines = fh if header is not None else _chain_first(first, fh)
        if header is not None:
            dim = header[1]
        for line in lines:
            parts = line.split()
            if len(parts) < 2:
                if line.strip():
                    skipped += 1
                continue
            tok = parts[0]
            if dim is None:
                dim = len(parts) - 1
            if restrict is not None and tok not in restrict:
                continue
            if len(parts) - 1 != dim:
                skipped += 1
                continue
            if tok in seen:
                skipped += 1
                continue
            try:
                vec = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                skipped += 1
                continue
            seen.add(tok)
            tokens.append(tok)
            rows.append(vec)

    if not rows:
        raise ValueError(f"no valid vector lines in {path}")
    if expected_dim is not None and dim != expected_dim:
        raise ValueError(f"expected dim {expected_dim}, file has {dim}")
    return EmbeddingStore(tokens, np.vstack(rows), skipped=skipped)


def _chain_first(first: str, fh):
    if first:
        yield first
    yield from fh


def load_frequencies(path: str) -> FrequencyTable:
    """Load ``token count`` lines; duplicate tokens sum their counts.

    Malformed lines are skipped and counted; an empty result is an error.
    """
    counts: dict[str, int] = {}
    skipped = 0
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            parts = line.split()
            if len(parts) != 2:
                if line.strip():
                    skipped += 1
                continue
            tok, raw = parts
            try:
                c = int(raw)
            except ValueError:
                skipped += 1
                continue
            if c < 0:
                skipped += 1
                continue
            counts[tok] = counts.get(tok, 0) + c
    return FrequencyTable(counts, skipped=skipped)


def lookup(store: EmbeddingStore, token: str) -> np.ndarray | None:
    """Vector for ``token``: exact match first, then lowercased fallback."""
    vec = store.get(token)
    if vec is None:
        vec = store.get(token.lower())
    return vec
