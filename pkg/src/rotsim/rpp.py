"""Recursive phrase partitions and additive phrase composition.

A partition stack refines a sentence from the whole-sentence span down
toward single tokens, either by dependency-tree structure or by midpoint
splitting.  Every level is an ordered, disjoint, exact cover of the token
range, and each span nests inside exactly one span of the previous level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .preprocess import WeightedSequence

Span = tuple[int, int]


class ConlluError(ValueError):
    """Malformed CoNLL-U input, carrying the offending line number."""

    def __init__(self, message: str, line_no: int):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class DependencyTree:
    """Surface-ordered tokens with a head index per token (-1 for the root)."""

    tokens: tuple[str, ...]
    heads: tuple[int, ...]

    def __post_init__(self):
        n = len(self.tokens)
        if n == 0:
            raise ValueError("empty dependency tree")
        if len(self.heads) != n:
            raise ValueError("token/head length mismatch")
        roots = [i for i, h in enumerate(self.heads) if h == -1]
        if len(roots) != 1:
            raise ValueError(f"tree must have exactly one root, found {len(roots)}")
        for i, h in enumerate(self.heads):
            if h != -1 and not 0 <= h < n:
                raise ValueError(f"head index {h} of token {i} out of range")
        # cycle check: every head chain must reach the root
        for i in range(n):
            seen = set()
            j = i
            while j != -1:
                if j in seen:
                    raise ValueError(f"head cycle through token {i}")
                seen.add(j)
                j = self.heads[j]

    def __len__(self) -> int:
        return len(self.tokens)

    def depths(self) -> list[int]:
        """Distance of each token from the root."""
        out = []
        for i in range(len(self)):
            d = 0
            j = self.heads[i]
            while j != -1:
                d += 1
                j = self.heads[j]
            out.append(d)
        return out


def parse_conllu(lines, start_line: int = 1) -> list[DependencyTree]:
    """Parse CoNLL-U text into dependency trees.

    Only the ID, FORM and HEAD columns are used.  Multi-word-token ranges
    and empty nodes are skipped; a blank line ends a sentence.  Structural
    problems raise ConlluError with the source line number.
    """
    trees: list[DependencyTree] = []
    tokens: list[str] = []
    heads: list[int] = []
    sent_first_line = start_line

    def flush(line_no: int):
        nonlocal tokens, heads
        if not tokens:
            return
        try:
            trees.append(DependencyTree(tuple(tokens), tuple(heads)))
        except ValueError as exc:
            raise ConlluError(str(exc), sent_first_line) from exc
        tokens, heads = [], []

    line_no = start_line - 1
    for line_no, line in enumerate(lines, start=start_line):
        line = line.rstrip("\n")
        if not line.strip():
            flush(line_no)
            sent_first_line = line_no + 1
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 7:
            cols = line.split()
        if len(cols) < 7:
            raise ConlluError("expected at least 7 columns", line_no)
        tid = cols[0]
        if "-" in tid or "." in tid:
            continue
        try:
            idx = int(tid)
        except ValueError:
            raise ConlluError(f"bad token id {tid!r}", line_no) from None
        if not tokens:
            sent_first_line = line_no
        if idx != len(tokens) + 1:
            raise ConlluError(f"token id {idx} out of order", line_no)
        try:
            head = int(cols[6])
        except ValueError:
            raise ConlluError(f"bad head {cols[6]!r}", line_no) from None
        tokens.append(cols[1])
        heads.append(head - 1)
    flush(line_no + 1)
    return trees


def read_conllu(path: str) -> list[DependencyTree]:
    with open(path, encoding="utf-8") as fh:
        return parse_conllu(fh)


@dataclass(frozen=True)
class RecursivePhrasePartition:
    """Nested partitions levels[0..L]; levels[0] is the whole sentence."""

    n: int
    levels: tuple[tuple[Span, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.levels) - 1

    def branching_factor(self) -> int:
        """Largest number of child spans any span produces in one step."""
        best = 1
        for lo, hi in zip(self.levels, self.levels[1:]):
            for b, e in lo:
                children = sum(1 for cb, ce in hi if b <= cb and ce <= e)
                best = max(best, children)
        return best


def _contiguous_runs(indices: list[int]) -> list[Span]:
    runs: list[Span] = []
    for i in sorted(indices):
        if runs and runs[-1][1] == i:
            runs[-1] = (runs[-1][0], i + 1)
        else:
            runs.append((i, i + 1))
    return runs


def _refine_dependency_span(tree: DependencyTree, depths: list[int], span: Span) -> list[Span]:
    """One refinement step of a span under its governing subtree.

    The governing token h is the shallowest token of the span (leftmost on
    ties).  Other tokens group by the child subtree of h they belong to;
    tokens whose head chain leaves the span without meeting h join h in the
    filler group.  Each group contributes its maximal contiguous runs, so
    non-projective subtrees split rather than reorder.
    """
    b, e = span
    if e - b == 1:
        return [span]
    h = min(range(b, e), key=lambda i: (depths[i], i))
    groups: dict[int, list[int]] = {}
    filler = [h]
    for t in range(b, e):
        if t == h:
            continue
        j = t
        child = None
        while j != -1 and b <= j < e:
            if tree.heads[j] == h:
                child = j
                break
            j = tree.heads[j]
        if child is None:
            filler.append(t)
        else:
            groups.setdefault(child, []).append(t)
    spans: list[Span] = []
    for child, members in groups.items():
        spans.extend(_contiguous_runs(members))
    spans.extend(_contiguous_runs(filler))
    return sorted(spans)


def _refine_binary_span(span: Span) -> list[Span]:
    b, e = span
    m = e - b
    if m < 2:
        return [span]
    cut = b + (m + 1) // 2
    return [(b, cut), (cut, e)]


def _build_levels(n: int, max_depth: int, refine) -> RecursivePhrasePartition:
    levels = [((0, n),)]
    for _ in range(max_depth):
        nxt: list[Span] = []
        for span in levels[-1]:
            nxt.extend(refine(span))
        levels.append(tuple(nxt))
    return RecursivePhrasePartition(n=n, levels=tuple(levels))


def rpp_from_dependency_tree(tree: DependencyTree, max_depth: int) -> RecursivePhrasePartition:
    """Partition stack driven by the dependency structure.

    Each level refines every multi-token span by the rule of
    ``_refine_dependency_span``; once the token-level partition is reached,
    deeper levels repeat it.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    depths = tree.depths()
    return _build_levels(
        len(tree), max_depth, lambda s: _refine_dependency_span(tree, depths, s)
    )


def rpp_binary(n: int, max_depth: int) -> RecursivePhrasePartition:
    """Partition stack by midpoint splits: a span of length m >= 2 splits at
    b + ceil(m/2); singletons persist."""
    if n < 1:
        raise ValueError("sentence must have at least one token")
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    return _build_levels(n, max_depth, _refine_binary_span)


def validate_rpp(rpp: RecursivePhrasePartition) -> str | None:
    """Check the partition-stack properties; None when valid, else the
    first violation as text."""
    if not rpp.levels:
        return "no levels"
    if rpp.levels[0] != ((0, rpp.n),):
        return f"level 0 is {rpp.levels[0]}, expected the whole sentence"
    for l, spans in enumerate(rpp.levels):
        pos = 0
        for b, e in spans:
            if b >= e:
                return f"level {l}: empty span ({b},{e})"
            if b != pos:
                return f"level {l}: gap or overlap at index {pos}"
            pos = e
        if pos != rpp.n:
            return f"level {l}: covers [0,{pos}) instead of [0,{rpp.n})"
    for l in range(1, len(rpp.levels)):
        parents = rpp.levels[l - 1]
        for b, e in rpp.levels[l]:
            if not any(pb <= b and e <= pe for pb, pe in parents):
                return f"level {l}: span ({b},{e}) not nested in level {l - 1}"
    return None


@dataclass(frozen=True)
class PhraseSequence:
    """One partition level with composed weights and vectors.

    w~_q is the sum of member weights; v~_q is the weight-averaged member
    vector, so that sum_q w~_q v~_q recovers the sentence embedding.
    """

    spans: tuple[Span, ...]
    weights: np.ndarray
    vectors: np.ndarray

    def __len__(self) -> int:
        return len(self.spans)


def compose_phrases(ws: WeightedSequence | PhraseSequence, spans) -> PhraseSequence:
    """Compose phrase weights/vectors additively over ``spans``.

    ``spans`` must partition [0, len(ws)).  A phrase of total weight zero
    keeps weight 0 and a zero vector (it carries no transport mass).
    """
    spans = tuple(tuple(s) for s in spans)
    pos = 0
    for b, e in spans:
        if b != pos or e <= b:
            raise ValueError("spans do not partition the sequence")
        pos = e
    if pos != len(ws):
        raise ValueError("spans do not cover the sequence")

    k = len(spans)
    dim = ws.vectors.shape[1]
    weights = np.empty(k)
    vectors = np.zeros((k, dim))
    for q, (b, e) in enumerate(spans):
        w = ws.weights[b:e]
        total = float(w.sum())
        weights[q] = total
        if total > 0:
            vectors[q] = (w @ ws.vectors[b:e]) / total
    return PhraseSequence(spans=spans, weights=weights, vectors=vectors)
