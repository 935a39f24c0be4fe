"""Benchmark evaluation: dataset IO, correlation metrics, BCa bootstrap
confidence intervals, and the pair-scoring driver."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, rankdata

from .preprocess import SentencePreprocessor
from .rpp import DependencyTree, rpp_binary, rpp_from_dependency_tree
from .similarity import (
    SimilarityConfig,
    ac_similarity,
    aggregate,
    interp_similarity,
    prd,
    rots,
    wrd_similarity,
)
from .transport import DegenerateSentenceError

METHODS = ("ac", "wrd", "interp", "prd", "rots")


@dataclass
class ScoredPair:
    tokens1: tuple[str, ...]
    tokens2: tuple[str, ...]
    gold: float
    line_no: int
    tree1: DependencyTree | None = None
    tree2: DependencyTree | None = None


@dataclass
class ScoredPairSet:
    """Sentence pairs with gold scores for one dataset or subtask."""

    label: str
    pairs: list[ScoredPair]
    skipped_lines: int = 0

    def __post_init__(self):
        if not self.pairs:
            raise ValueError(f"dataset {self.label!r} has no valid pairs")

    def __len__(self) -> int:
        return len(self.pairs)

    def vocabulary(self) -> set[str]:
        vocab: set[str] = set()
        for p in self.pairs:
            vocab.update(p.tokens1)
            vocab.update(p.tokens2)
        return vocab


def load_pairs(path: str, fmt: str = "tsv", label: str | None = None) -> ScoredPairSet:
    """Read ``gold<TAB>sent1<TAB>sent2`` lines; whitespace tokenization.

    Malformed lines (wrong field count, non-numeric gold, empty sentence)
    are skipped and counted; a file with no valid pairs is an error.
    """
    if fmt != "tsv":
        raise ValueError(f"unsupported dataset format {fmt!r}")
    pairs: list[ScoredPair] = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                skipped += 1
                continue
            try:
                gold = float(cols[0])
            except ValueError:
                skipped += 1
                continue
            if not math.isfinite(gold):
                skipped += 1
                continue
            t1 = tuple(cols[1].split())
            t2 = tuple(cols[2].split())
            if not t1 or not t2:
                skipped += 1
                continue
            pairs.append(ScoredPair(t1, t2, gold, line_no))
    name = label if label is not None else path
    return ScoredPairSet(label=name, pairs=pairs, skipped_lines=skipped)


def attach_trees(pairset: ScoredPairSet, trees: list[DependencyTree]) -> ScoredPairSet:
    """Attach a sidecar tree list (pair i uses trees 2i and 2i+1); tree
    tokens become the authoritative tokenization."""
    if len(trees) != 2 * len(pairset.pairs):
        raise ValueError(
            f"{len(trees)} trees for {len(pairset.pairs)} pairs "
            f"(expected {2 * len(pairset.pairs)})"
        )
    out = []
    for i, pair in enumerate(pairset.pairs):
        t1, t2 = trees[2 * i], trees[2 * i + 1]
        out.append(
            ScoredPair(t1.tokens, t2.tokens, pair.gold, pair.line_no, t1, t2)
        )
    return ScoredPairSet(pairset.label, out, pairset.skipped_lines)


def pearson(x, y) -> float:
    """Product-moment correlation; zero variance is an error."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("pearson needs two equal-length lists of size >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.sum(dx * dx)))
    sy = float(np.sqrt(np.sum(dy * dy)))
    if sx == 0 or sy == 0:
        raise ValueError("zero variance input")
    return float(np.dot(dx, dy) / (sx * sy))


def spearman(x, y) -> float:
    """Pearson correlation of average ranks (ties share their mean rank)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return pearson(rankdata(x, method="average"), rankdata(y, method="average"))


def bca_interval(
    values,
    statistic,
    b: int = 1000,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Bias-corrected and accelerated bootstrap interval.

    ``values`` is an indexable sample (rows resampled with replacement,
    indices drawn from ``numpy.random.default_rng(seed)`` as one
    ``integers(0, n, size=(b, n))`` block); ``statistic`` maps a sample to
    a float.  Resamples where the statistic is undefined are dropped (a
    warning fires past 10%).  z0 uses the fraction of bootstrap values
    below the point estimate, clamped away from {0, 1} by half a count;
    the acceleration comes from jackknife skewness; endpoints are linear-
    interpolated quantiles at the adjusted levels.
    """
    if b < 100:
        raise ValueError("need at least 100 bootstrap resamples")
    values = np.asarray(values)
    n = values.shape[0]
    if n < 10:
        raise ValueError("need at least 10 observations")
    theta_hat = float(statistic(values))

    rng = np.random.default_rng(seed)
    idx = rng.integers(0, n, size=(b, n))
    boot = []
    dropped = 0
    for row in idx:
        try:
            boot.append(float(statistic(values[row])))
        except ValueError:
            dropped += 1
    if dropped > 0.1 * b:
        warnings.warn(f"dropped {dropped}/{b} degenerate resamples", stacklevel=2)
    boot = np.asarray(boot)
    if boot.size == 0 or np.ptp(boot) == 0:
        return theta_hat, theta_hat

    prop = np.clip(np.mean(boot < theta_hat), 0.5 / boot.size, 1 - 0.5 / boot.size)
    z0 = float(norm.ppf(prop))

    jack = []
    mask = np.ones(n, dtype=bool)
    for i in range(n):
        mask[i] = False
        try:
            jack.append(float(statistic(values[mask])))
        except ValueError:
            pass
        mask[i] = True
    jack = np.asarray(jack)
    if jack.size >= 2:
        dev = jack.mean() - jack
        denom = float(np.sum(dev * dev)) ** 1.5
        accel = float(np.sum(dev**3)) / (6.0 * denom) if denom > 0 else 0.0
    else:
        accel = 0.0

    def adjusted(q: float) -> float:
        z = z0 + norm.ppf(q)
        return float(norm.cdf(z0 + z / (1.0 - accel * z)))

    lo_q = adjusted((1.0 - level) / 2.0)
    hi_q = adjusted((1.0 + level) / 2.0)
    lo, hi = np.quantile(boot, [lo_q, hi_q], method="linear")
    return float(lo), float(hi)


@dataclass
class SubtaskResult:
    label: str
    pearson_x100: float
    spearman_x100: float
    pair_count: int
    excluded: int
    pearson_ci_x100: tuple[float, float] | None = None
    spearman_ci_x100: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        d = {
            "label": self.label,
            "pearson_x100": self.pearson_x100,
            "spearman_x100": self.spearman_x100,
            "pairs": self.pair_count,
            "excluded": self.excluded,
        }
        if self.pearson_ci_x100 is not None:
            d["pearson_ci_x100"] = list(self.pearson_ci_x100)
        if self.spearman_ci_x100 is not None:
            d["spearman_ci_x100"] = list(self.spearman_ci_x100)
        return d


@dataclass
class EvalReport:
    """Per-subtask correlations (x100) with the unweighted mean."""

    method: str
    subtasks: list[SubtaskResult]
    level_means: list[float] = field(default_factory=list)

    @property
    def mean_pearson_x100(self) -> float:
        return float(np.mean([s.pearson_x100 for s in self.subtasks]))

    @property
    def mean_spearman_x100(self) -> float:
        return float(np.mean([s.spearman_x100 for s in self.subtasks]))

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "subtasks": [s.to_dict() for s in self.subtasks],
            "mean_pearson_x100": self.mean_pearson_x100,
            "mean_spearman_x100": self.mean_spearman_x100,
            **({"level_means": self.level_means} if self.level_means else {}),
        }


def _pair_rpps(pair: ScoredPair, cfg: SimilarityConfig):
    depth = max(cfg.depth, 1)
    if cfg.tree_mode == "dependency":
        if pair.tree1 is None or pair.tree2 is None:
            raise ValueError("dependency tree mode needs sidecar trees")
        return (
            rpp_from_dependency_tree(pair.tree1, depth),
            rpp_from_dependency_tree(pair.tree2, depth),
        )
    return rpp_binary(len(pair.tokens1), depth), rpp_binary(len(pair.tokens2), depth)


def score_pair(
    pair: ScoredPair,
    method: str,
    pipeline: SentencePreprocessor,
    cfg: SimilarityConfig,
    collect_levels: bool = False,
):
    """Score one pair; None marks an excluded (degenerate) pair.

    With ``collect_levels`` the per-level scores accompany the value.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    try:
        ws1 = pipeline(pair.tokens1)
        ws2 = pipeline(pair.tokens2)
        if method == "ac":
            return ac_similarity(ws1, ws2)
        if method == "wrd":
            return wrd_similarity(
                ws1, ws2, reg=cfg.wrd_reg, max_iter=cfg.solver_max_iter, tol=cfg.solver_tol
            )
        if method == "interp":
            return interp_similarity(
                ws1,
                ws2,
                alpha=cfg.alpha,
                eps=cfg.eps_schedule[0],
                max_iter=cfg.solver_max_iter,
                tol=cfg.solver_tol,
            )
        rpp1, rpp2 = _pair_rpps(pair, cfg)
        if method == "prd":
            return prd(
                ws1,
                ws2,
                rpp1,
                rpp2,
                level=cfg.depth,
                reg=cfg.wrd_reg,
                max_iter=cfg.solver_max_iter,
                tol=cfg.solver_tol,
            )
        levels = rots(ws1, ws2, rpp1, rpp2, cfg)
        value = aggregate(levels, cfg.aggregation)
        return (value, levels.scores) if collect_levels else value
    except DegenerateSentenceError:
        return None


def _score_worker(args):
    pair, method, pipeline, cfg, collect = args
    return score_pair(pair, method, pipeline, cfg, collect)


def score_pairs(
    pairset: ScoredPairSet,
    method: str,
    pipeline: SentencePreprocessor,
    cfg: SimilarityConfig,
    jobs: int = 1,
    collect_levels: bool = False,
) -> list:
    """Scores in pair order; excluded pairs are None."""
    if jobs <= 1:
        return [
            score_pair(p, method, pipeline, cfg, collect_levels) for p in pairset.pairs
        ]
    tasks = [(p, method, pipeline, cfg, collect_levels) for p in pairset.pairs]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_score_worker, tasks, chunksize=32))


def run_benchmark(
    datasets: ScoredPairSet | list[ScoredPairSet],
    method: str,
    pipeline: SentencePreprocessor,
    cfg: SimilarityConfig,
    ci_resamples: int | None = None,
    ci_seed: int = 0,
    jobs: int = 1,
) -> EvalReport:
    """Score every subtask and correlate with gold; degenerate pairs are
    excluded from the correlation and counted.  Multi-subtask inputs
    report the unweighted mean.  ``ci_resamples`` switches on BCa 95%
    intervals for both correlations."""
    if isinstance(datasets, ScoredPairSet):
        datasets = [datasets]
    collect = method == "rots"
    results = []
    level_sums: np.ndarray | None = None
    level_count = 0
    for ds in datasets:
        raw = score_pairs(ds, method, pipeline, cfg, jobs=jobs, collect_levels=collect)
        preds, golds = [], []
        excluded = 0
        for pair, value in zip(ds.pairs, raw):
            if value is None:
                excluded += 1
                continue
            if collect:
                value, levels = value
                arr = np.asarray(levels)
                if level_sums is None:
                    level_sums = np.zeros_like(arr)
                level_sums += arr
                level_count += 1
            preds.append(value)
            golds.append(pair.gold)
        if not preds:
            raise ValueError(f"all pairs of {ds.label!r} were excluded")
        r = pearson(preds, golds)
        rho = spearman(preds, golds)
        res = SubtaskResult(
            label=ds.label,
            pearson_x100=100.0 * r,
            spearman_x100=100.0 * rho,
            pair_count=len(preds),
            excluded=excluded,
        )
        if ci_resamples:
            sample = np.column_stack([preds, golds])
            res.pearson_ci_x100 = tuple(
                100.0 * v
                for v in bca_interval(
                    sample, lambda s: pearson(s[:, 0], s[:, 1]), ci_resamples, seed=ci_seed
                )
            )
            res.spearman_ci_x100 = tuple(
                100.0 * v
                for v in bca_interval(
                    sample, lambda s: spearman(s[:, 0], s[:, 1]), ci_resamples, seed=ci_seed
                )
            )
        results.append(res)
    level_means = (
        list(level_sums / level_count) if level_sums is not None and level_count else []
    )
    return EvalReport(method=method, subtasks=results, level_means=level_means)
