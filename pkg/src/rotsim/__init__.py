"""Unsupervised sentence textual similarity from word vectors, via
additive composition, regularized optimal transport, and recursive
phrase-partition alignment."""

__version__ = "0.1.0"

from .embeddings import EmbeddingStore, FrequencyTable, load_frequencies, load_vectors, lookup
from .evalbench import (
    EvalReport,
    ScoredPair,
    ScoredPairSet,
    attach_trees,
    bca_interval,
    load_pairs,
    pearson,
    run_benchmark,
    spearman,
)
from .preprocess import (
    PipelineSetup,
    SentencePreprocessor,
    WeightedSequence,
    WeightScheme,
    all_but_the_top,
    build_pipeline,
    conceptor_negation,
    fit_corpus_components,
    remove_components,
    sif_weight,
    unit_scale,
    usif_weight,
)
from .rpp import (
    DependencyTree,
    PhraseSequence,
    RecursivePhrasePartition,
    compose_phrases,
    read_conllu,
    rpp_binary,
    rpp_from_dependency_tree,
    validate_rpp,
)
from .similarity import (
    LevelScores,
    SimilarityConfig,
    ac_similarity,
    aggregate,
    coarse_to_fine_prior,
    correction_coefficient,
    ec_similarity,
    interp_similarity,
    prd,
    rots,
    rots_similarity,
    wrd_similarity,
)
from .transport import (
    AlignmentMatrix,
    DegenerateSentenceError,
    TransportProblem,
    cosine_cost,
    exact_ot_oracle,
    sinkhorn_entropy,
    sinkhorn_prior,
    solve_reduced,
    wrd_marginals,
)
