"""Command-line surface: per-pair scoring, benchmark evaluation with
reports and figures, and tree validation.

Exit codes: 0 ok, 1 data error, 2 usage error.
"""

from __future__ import annotations

import json
import math
import os

import click

from . import __version__
from .embeddings import load_frequencies, load_vectors
from .evalbench import (
    METHODS,
    attach_trees,
    load_pairs,
    run_benchmark,
    score_pairs,
)
from .preprocess import PipelineSetup, build_pipeline
from .rpp import ConlluError, read_conllu, rpp_from_dependency_tree, validate_rpp
from .similarity import SimilarityConfig


class DataError(click.ClickException):
    exit_code = 1


def _fail(exc: Exception) -> DataError:
    return DataError(str(exc))


def _load_score_pairs(path: str):
    """Pairs for scoring: ``sent1<TAB>sent2`` lines, or the gold-scored
    three-column format (the gold field is ignored here)."""
    from .evalbench import ScoredPair, ScoredPairSet

    pairs = []
    skipped = 0
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            cols = line.split("\t")
            if len(cols) == 2:
                s1, s2 = cols
            elif len(cols) == 3:
                # same skip rules as the gold loader, so sidecar trees
                # stay aligned
                try:
                    gold = float(cols[0])
                except ValueError:
                    skipped += 1
                    continue
                if not math.isfinite(gold):
                    skipped += 1
                    continue
                s1, s2 = cols[1], cols[2]
            else:
                skipped += 1
                continue
            t1, t2 = tuple(s1.split()), tuple(s2.split())
            if not t1 or not t2:
                skipped += 1
                continue
            pairs.append(ScoredPair(t1, t2, 0.0, line_no))
    if not pairs:
        raise ValueError(f"no valid pairs in {path}")
    return ScoredPairSet(label=path, pairs=pairs, skipped_lines=skipped)


def _make_config(alpha, depth, eps, agg, tree_mode, reg) -> SimilarityConfig:
    try:
        return SimilarityConfig.make(
            alpha=alpha,
            depth=depth,
            eps=eps,
            aggregation=agg,
            tree_mode=tree_mode,
            wrd_reg=reg,
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))


def _load_dataset(paths, trees_path, binary, scoring_only=False, fmt="tsv"):
    datasets = []
    for path in paths:
        try:
            if scoring_only:
                datasets.append(_load_score_pairs(path))
            else:
                datasets.append(
                    load_pairs(
                        path, fmt=fmt, label=os.path.splitext(os.path.basename(path))[0]
                    )
                )
        except (OSError, ValueError) as exc:
            raise _fail(exc)
    if trees_path:
        if len(datasets) != 1:
            raise click.UsageError("--trees works with exactly one input file")
        try:
            trees = read_conllu(trees_path)
            datasets[0] = attach_trees(datasets[0], trees)
        except (OSError, ValueError) as exc:
            raise _fail(exc)
    elif not binary:
        raise click.UsageError("provide --trees <conllu> or --binary")
    return datasets


def _build_pipeline(vectors, freq, setup_code, datasets):
    try:
        setup = PipelineSetup.parse(setup_code)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    restrict = None
    if "A" not in setup and "C" not in setup:
        restrict = set()
        for ds in datasets:
            for tok in ds.vocabulary():
                restrict.add(tok)
                restrict.add(tok.lower())
    try:
        store = load_vectors(vectors, restrict=restrict)
        table = load_frequencies(freq) if freq else None
        corpus = None
        if "R" in setup or "P" in setup:
            corpus = [
                list(toks)
                for ds in datasets
                for p in ds.pairs
                for toks in (p.tokens1, p.tokens2)
            ]
        return build_pipeline(setup, store, freq=table, corpus_sentences=corpus)
    except (OSError, ValueError) as exc:
        raise _fail(exc)


def _common_options(fn):
    fn = click.option("--vectors", required=True, type=click.Path(), help="word vector .vec file")(fn)
    fn = click.option("--freq", type=click.Path(), default=None, help="token frequency file")(fn)
    fn = click.option("--setup", default="", help="converter setup code, e.g. SWC, SUP, WR")(fn)
    fn = click.option("--method", type=click.Choice(METHODS), default="rots")(fn)
    fn = click.option("--alpha", type=float, default=1.0, help="correction strength in [0,1]")(fn)
    fn = click.option("--depth", type=int, default=4, help="partition depth")(fn)
    fn = click.option("--eps", type=float, default=10.0, help="prior strength per level")(fn)
    fn = click.option("--reg", type=float, default=0.1, help="entropic regularization for wrd/prd")(fn)
    fn = click.option("--agg", default="mean", help="mean|max|min|last|level<k>")(fn)
    fn = click.option("--trees", "trees_path", type=click.Path(), default=None, help="sidecar CoNLL-U file")(fn)
    fn = click.option("--binary", is_flag=True, help="midpoint-split partitions instead of trees")(fn)
    fn = click.option("--jobs", type=int, default=1, help="parallel scoring workers")(fn)
    return fn


@click.group()
@click.version_option(version=__version__)
def main():
    """Sentence similarity via alignments of word and phrase vectors."""


@main.command()
@_common_options
@click.argument("pairs_file", type=click.Path())
def score(vectors, freq, setup, method, alpha, depth, eps, reg, agg, trees_path, binary, jobs, pairs_file):
    """Score sentence pairs; one `index<TAB>score` line per pair (NA for
    pairs excluded as degenerate)."""
    cfg = _make_config(alpha, depth, eps, agg, "binary" if binary else "dependency", reg)
    datasets = _load_dataset([pairs_file], trees_path, binary, scoring_only=True)
    pipeline = _build_pipeline(vectors, freq, setup, datasets)
    values = score_pairs(datasets[0], method, pipeline, cfg, jobs=jobs)
    for i, value in enumerate(values):
        if value is None:
            click.echo(f"{i}\tNA")
        else:
            click.echo(f"{i}\t{value:.10f}")


@main.command(name="eval")
@_common_options
@click.option("--gold-format", type=click.Choice(["tsv"]), default="tsv", show_default=True)
@click.option("--bca", type=int, default=None, help="BCa bootstrap resample count")
@click.option("--seed", type=int, default=0, help="bootstrap seed")
@click.option("--out-dir", type=click.Path(), default=None, help="write report.json, scores.tsv and figures here")
@click.argument("pairs_files", type=click.Path(), nargs=-1, required=True)
def evaluate(vectors, freq, setup, method, alpha, depth, eps, reg, agg, trees_path, binary, jobs, gold_format, bca, seed, out_dir, pairs_files):
    """Correlate predictions with gold scores; each input file is one
    subtask and the unweighted mean is reported."""
    cfg = _make_config(alpha, depth, eps, agg, "binary" if binary else "dependency", reg)
    datasets = _load_dataset(list(pairs_files), trees_path, binary, fmt=gold_format)
    pipeline = _build_pipeline(vectors, freq, setup, datasets)
    try:
        report = run_benchmark(
            datasets, method, pipeline, cfg, ci_resamples=bca, ci_seed=seed, jobs=jobs
        )
    except ValueError as exc:
        raise _fail(exc)

    for sub in report.subtasks:
        line = (
            f"{sub.label}\tr={sub.pearson_x100:.2f}\trho={sub.spearman_x100:.2f}"
            f"\tpairs={sub.pair_count}\texcluded={sub.excluded}"
        )
        if sub.pearson_ci_x100:
            lo, hi = sub.pearson_ci_x100
            line += f"\tr_ci=[{lo:.2f}, {hi:.2f}]"
        click.echo(line)
    click.echo(
        f"MEAN\tr={report.mean_pearson_x100:.2f}\trho={report.mean_spearman_x100:.2f}"
    )

    if out_dir:
        _write_outputs(out_dir, report, datasets, method, pipeline, cfg, jobs, vectors, freq, setup, trees_path, seed)


def _write_outputs(out_dir, report, datasets, method, pipeline, cfg, jobs, vectors, freq, setup, trees_path, seed):
    from .figures import render_level_profile, render_scatter, render_subtask_bars

    os.makedirs(out_dir, exist_ok=True)
    manifest = {
        "version": __version__,
        "vectors": os.path.abspath(vectors),
        "freq": os.path.abspath(freq) if freq else None,
        "trees": os.path.abspath(trees_path) if trees_path else None,
        "setup": pipeline.setup.code,
        "method": method,
        "seed": seed,
        "config": {
            "alpha": cfg.alpha,
            "depth": cfg.depth,
            "eps_schedule": list(cfg.eps_schedule),
            "wrd_reg": cfg.wrd_reg,
            "aggregation": cfg.aggregation,
            "tree_mode": cfg.tree_mode,
        },
    }
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump({"manifest": manifest, **report.to_dict()}, fh, indent=2)

    all_preds, all_golds = [], []
    with open(os.path.join(out_dir, "scores.tsv"), "w", encoding="utf-8") as fh:
        fh.write("subtask\tindex\tgold\tscore\n")
        for ds in datasets:
            values = score_pairs(ds, method, pipeline, cfg, jobs=jobs)
            for i, (pair, value) in enumerate(zip(ds.pairs, values)):
                text = "NA" if value is None else f"{value:.10f}"
                fh.write(f"{ds.label}\t{i}\t{pair.gold}\t{text}\n")
                if value is not None:
                    all_preds.append(value)
                    all_golds.append(pair.gold)

    render_scatter(
        all_preds, all_golds, f"{method} predictions", os.path.join(out_dir, "scatter.png")
    )
    render_subtask_bars(report, os.path.join(out_dir, "subtasks.png"))
    if report.level_means:
        render_level_profile(report.level_means, os.path.join(out_dir, "levels.png"))


@main.command(name="validate-trees")
@click.option("--trees", "trees_path", type=click.Path(), required=True)
@click.option("--depth", type=int, default=4)
def validate_trees(trees_path, depth):
    """Check that every sentence yields a valid partition stack; exit 0
    only when all pass."""
    try:
        trees = read_conllu(trees_path)
    except ConlluError as exc:
        raise _fail(exc)
    except (OSError, ValueError) as exc:
        raise _fail(exc)
    if not trees:
        raise _fail(ValueError(f"no sentences in {trees_path}"))
    failures = 0
    for i, tree in enumerate(trees):
        problem = validate_rpp(rpp_from_dependency_tree(tree, depth))
        if problem is not None:
            failures += 1
            click.echo(f"sentence {i}: {problem}")
    if failures:
        raise _fail(ValueError(f"{failures} of {len(trees)} sentences failed"))
    click.echo(f"{len(trees)} sentences ok")


if __name__ == "__main__":
    main()
