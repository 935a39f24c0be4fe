"""Sentence similarities built from alignments of word or phrase vectors.

Every score here is an instance of one pattern: an expectation of pairwise
cosines under an alignment matrix, optionally multiplied by a correction
coefficient that accounts for how semantically spread-out each sentence is
internally.  The alignment ranges from the fixed product of marginals
(additive composition), through entropy-regularized transport (rotator's
distance), to transport pulled toward a coarse-to-fine prior built level
by level down a recursive phrase partition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .preprocess import WeightedSequence
from .rpp import RecursivePhrasePartition, compose_phrases
from .transport import (
    AlignmentMatrix,
    DegenerateSentenceError,
    TransportProblem,
    cosine_cost,
    cosine_matrix,
    product_prior,
    solve_reduced,
    wrd_marginals,
)

PRIOR_FLOOR = 1e-12

AGGREGATION_MODES = ("mean", "max", "min", "last")


@dataclass(frozen=True)
class SimilarityConfig:
    """One value that fully determines a scoring run."""

    alpha: float = 1.0
    depth: int = 4
    eps_schedule: tuple[float, ...] = (10.0, 10.0, 10.0, 10.0)
    wrd_reg: float = 0.1
    aggregation: str = "mean"
    tree_mode: str = "dependency"
    correction_scope: str = "level"  # "level" or "word"
    solver_tol: float = 1e-11
    solver_max_iter: int = 10000

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.depth < 0:
            raise ValueError("depth must be nonnegative")
        if self.depth >= 1 and len(self.eps_schedule) < self.depth:
            raise ValueError("eps schedule shorter than depth")
        if any(e <= 0 for e in self.eps_schedule):
            raise ValueError("eps values must be positive")
        if self.tree_mode not in ("dependency", "binary"):
            raise ValueError(f"unknown tree mode {self.tree_mode!r}")
        if self.correction_scope not in ("level", "word"):
            raise ValueError(f"unknown correction scope {self.correction_scope!r}")
        parse_aggregation(self.aggregation)

    @classmethod
    def make(cls, alpha=1.0, depth=4, eps=10.0, **kw) -> "SimilarityConfig":
        """Uniform eps schedule of the requested depth."""
        schedule = tuple([float(eps)] * max(depth, 1))
        return cls(alpha=alpha, depth=depth, eps_schedule=schedule, **kw)


def parse_aggregation(mode: str) -> tuple[str, int | None]:
    """Split an aggregation name into (kind, level); accepts mean/max/min/
    last and level<k> (e.g. "level0", "level4")."""
    if mode in AGGREGATION_MODES:
        return mode, None
    if mode.startswith("level"):
        try:
            return "level", int(mode[len("level") :])
        except ValueError:
            pass
    raise ValueError(f"unknown aggregation mode {mode!r}")


@dataclass(frozen=True)
class LevelScores:
    """Per-level scores 0..d with solver diagnostics per refined level."""

    scores: tuple[float, ...]
    residuals: tuple[float, ...]
    iterations: tuple[int, ...]

    @property
    def depth(self) -> int:
        return len(self.scores) - 1


def _embedding(seq) -> np.ndarray:
    return seq.weights @ seq.vectors


def ac_similarity(ws1, ws2) -> float:
    """Cosine of the weighted-sum sentence embeddings."""
    x1, x2 = _embedding(ws1), _embedding(ws2)
    n1, n2 = np.linalg.norm(x1), np.linalg.norm(x2)
    if n1 == 0 or n2 == 0:
        raise DegenerateSentenceError("zero sentence embedding")
    return float(np.dot(x1, x2) / (n1 * n2))


def diversity_coefficient(seq) -> float:
    """K = (sum_i w_i ||v_i||)^2 / ||sum_i w_i v_i||^2, always >= 1;
    equality iff all vectors share one direction."""
    x = _embedding(seq)
    denom = float(np.dot(x, x))
    if denom == 0:
        raise DegenerateSentenceError("zero sentence embedding")
    num = float(np.sum(seq.weights * np.linalg.norm(seq.vectors, axis=1))) ** 2
    return num / denom


def correction_coefficient(ws1, ws2, alpha: float) -> float:
    """Interpolated correction alpha * sqrt(K1 K2) + (1 - alpha)."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    if alpha == 0.0:
        return 1.0
    c = math.sqrt(diversity_coefficient(ws1) * diversity_coefficient(ws2))
    return alpha * c + 1.0 - alpha


def ec_similarity(gamma, seq1, seq2, alpha: float) -> float:
    """Correction times the expectation of pairwise cosines under
    ``gamma``.  Values above 1 are possible whenever alpha > 0."""
    plan = gamma.gamma if isinstance(gamma, AlignmentMatrix) else np.asarray(gamma)
    if plan.shape != (len(seq1), len(seq2)):
        raise ValueError("alignment shape does not match the sequences")
    expectation = float(np.sum(plan * cosine_matrix(seq1.vectors, seq2.vectors)))
    return correction_coefficient(seq1, seq2, alpha) * expectation


def wrd_similarity(
    ws1,
    ws2,
    reg: float = 0.1,
    max_iter: int = 10000,
    tol: float = 1e-11,
) -> float:
    """Expected cosine under entropy-regularized transport with
    weight-times-norm marginals and cosine cost."""
    mu, nu = wrd_marginals(ws1), wrd_marginals(ws2)
    prob = TransportProblem(cosine_cost(ws1, ws2), mu, nu)
    result = solve_reduced(prob, reg=reg, max_iter=max_iter, tol=tol)
    return float(np.sum(result.gamma * cosine_matrix(ws1.vectors, ws2.vectors)))


def interp_similarity(
    ws1,
    ws2,
    alpha: float = 1.0,
    eps: float = 10.0,
    max_iter: int = 10000,
    tol: float = 1e-11,
) -> float:
    """Correction times expected cosine under transport pulled toward the
    product-of-marginals alignment; sweeps between the rotator's distance
    (alpha=0, eps->0) and the embedding cosine (alpha=1, eps->inf)."""
    mu, nu = wrd_marginals(ws1), wrd_marginals(ws2)
    prob = TransportProblem(cosine_cost(ws1, ws2), mu, nu)
    result = solve_reduced(prob, prior=product_prior(mu, nu), eps=eps, max_iter=max_iter, tol=tol)
    return ec_similarity(result.gamma, ws1, ws2, alpha)


def _children_of(parent_spans, child_spans) -> list[list[int]]:
    """Indices of child spans inside each parent span (containment)."""
    groups = [[] for _ in parent_spans]
    for c, (cb, ce) in enumerate(child_spans):
        hit = None
        for p, (pb, pe) in enumerate(parent_spans):
            if pb <= cb and ce <= pe:
                hit = p
                break
        if hit is None:
            raise ValueError(f"child span ({cb},{ce}) is not nested in any parent span")
        groups[hit].append(c)
    return groups


def coarse_to_fine_prior(
    gamma_prev,
    parent_spans_1,
    child_spans_1,
    mu_next: np.ndarray,
    parent_spans_2,
    child_spans_2,
    nu_next: np.ndarray,
) -> np.ndarray:
    """Redistribute a parent-level alignment to child phrases.

    Each parent cell's mass spreads over its child block proportionally to
    the products of child marginals, so block sums reproduce the parent
    alignment exactly.  Entries are floored at 1e-12 (renormalizing only
    when the floor actually raised something), keeping the prior strictly
    positive.
    """
    plan = gamma_prev.gamma if isinstance(gamma_prev, AlignmentMatrix) else np.asarray(gamma_prev)
    groups1 = _children_of(parent_spans_1, child_spans_1)
    groups2 = _children_of(parent_spans_2, child_spans_2)
    prior = np.zeros((len(child_spans_1), len(child_spans_2)))
    for i, kids1 in enumerate(groups1):
        m1 = mu_next[kids1]
        t1 = m1.sum()
        frac1 = m1 / t1 if t1 > 0 else np.zeros_like(m1)
        for j, kids2 in enumerate(groups2):
            m2 = nu_next[kids2]
            t2 = m2.sum()
            frac2 = m2 / t2 if t2 > 0 else np.zeros_like(m2)
            prior[np.ix_(kids1, kids2)] = plan[i, j] * np.outer(frac1, frac2)
    floored = np.maximum(prior, PRIOR_FLOOR)
    if floored.sum() != prior.sum():
        floored = floored / floored.sum()
    return floored


def _level_spans(rpp: RecursivePhrasePartition, k: int):
    """Level k spans, repeating the deepest level once exhausted."""
    return rpp.levels[min(k, rpp.depth)]


def rots(
    ws1: WeightedSequence,
    ws2: WeightedSequence,
    rpp1: RecursivePhrasePartition,
    rpp2: RecursivePhrasePartition,
    cfg: SimilarityConfig,
) -> LevelScores:
    """Level-by-level similarity down the two partition stacks.

    Level 0 scores the whole-sentence phrases under the trivial 1x1
    alignment; each deeper level solves prior-pulled transport between
    that level's phrases, with the prior spread from the previous level's
    plan.  The correction coefficient comes from the current level's
    phrases (default) or from the word level when configured so.
    """
    word_correction = (
        correction_coefficient(ws1, ws2, cfg.alpha)
        if cfg.correction_scope == "word"
        else None
    )

    def corrected(plan, ps1, ps2):
        if word_correction is None:
            return ec_similarity(plan, ps1, ps2, cfg.alpha)
        expectation = float(np.sum(plan * cosine_matrix(ps1.vectors, ps2.vectors)))
        return word_correction * expectation

    spans1 = _level_spans(rpp1, 0)
    spans2 = _level_spans(rpp2, 0)
    ps1 = compose_phrases(ws1, spans1)
    ps2 = compose_phrases(ws2, spans2)
    gamma = np.ones((1, 1))
    scores = [corrected(gamma, ps1, ps2)]
    residuals: list[float] = []
    iterations: list[int] = []

    for k in range(1, cfg.depth + 1):
        next1 = _level_spans(rpp1, k)
        next2 = _level_spans(rpp2, k)
        ps1_next = compose_phrases(ws1, next1)
        ps2_next = compose_phrases(ws2, next2)
        mu = wrd_marginals(ps1_next)
        nu = wrd_marginals(ps2_next)
        prior = coarse_to_fine_prior(gamma, spans1, next1, mu, spans2, next2, nu)
        prob = TransportProblem(cosine_cost(ps1_next, ps2_next), mu, nu)
        result = solve_reduced(
            prob,
            prior=prior,
            eps=cfg.eps_schedule[k - 1],
            max_iter=cfg.solver_max_iter,
            tol=cfg.solver_tol,
        )
        gamma = result.gamma
        scores.append(corrected(gamma, ps1_next, ps2_next))
        residuals.append(result.residual)
        iterations.append(result.iterations)
        spans1, spans2, ps1, ps2 = next1, next2, ps1_next, ps2_next

    return LevelScores(tuple(scores), tuple(residuals), tuple(iterations))


def prd(
    ws1,
    ws2,
    rpp1: RecursivePhrasePartition,
    rpp2: RecursivePhrasePartition,
    level: int,
    reg: float = 0.1,
    max_iter: int = 10000,
    tol: float = 1e-11,
) -> float:
    """Plain rotator's distance over the phrases of one partition level
    (no prior, no correction); the token level reduces to the word-level
    rotator's distance."""
    ps1 = compose_phrases(ws1, _level_spans(rpp1, level))
    ps2 = compose_phrases(ws2, _level_spans(rpp2, level))
    return wrd_similarity(ps1, ps2, reg=reg, max_iter=max_iter, tol=tol)


def aggregate(scores: LevelScores, mode: str) -> float:
    """Reduce per-level scores: mean/max/min over levels 1..d, the last
    level, or one fixed level."""
    kind, k = parse_aggregation(mode)
    if kind == "level":
        if k > scores.depth:
            raise ValueError(f"level {k} beyond depth {scores.depth}")
        return scores.scores[k]
    if kind == "last":
        return scores.scores[-1]
    refined = scores.scores[1:]
    if not refined:
        raise ValueError("no refined levels to aggregate over")
    if kind == "mean":
        return float(np.mean(refined))
    if kind == "max":
        return float(np.max(refined))
    return float(np.min(refined))


def rots_similarity(ws1, ws2, rpp1, rpp2, cfg: SimilarityConfig) -> float:
    """Aggregate of the per-level scores under the configured mode."""
    return aggregate(rots(ws1, ws2, rpp1, rpp2, cfg), cfg.aggregation)
