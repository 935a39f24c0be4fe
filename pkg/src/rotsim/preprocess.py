"""Vector converters and preprocessing pipelines.

Converters act at four scopes: per-token weights (W = SIF, U = uSIF-style),
whole-vocabulary vector transforms (A = top-component removal after
centering, C = conceptor negation), per-sentence scaling (S), and
corpus-level component removal fitted on sentence embeddings (R = top-1,
P = weighted top-p).  A setup code such as ``"SWC"`` names a combination;
letter order is irrelevant, application order is fixed:
vocabulary -> weights -> sentence -> corpus.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .embeddings import EmbeddingStore, FrequencyTable, lookup

SETUP_ALPHABET = "WUACSRP"
_RANK_EPS = 1e-12


@dataclass(frozen=True)
class WeightedSequence:
    """Per-sentence parallel arrays: tokens, weights w_i, vectors v_i."""

    tokens: tuple[str, ...]
    weights: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        if len(self.tokens) != self.weights.shape[0]:
            raise ValueError("token/weight length mismatch")
        if self.vectors.shape[0] != self.weights.shape[0]:
            raise ValueError("token/vector length mismatch")

    def __len__(self) -> int:
        return len(self.tokens)


def sif_weight(freq: FrequencyTable, a: float, token: str) -> float:
    """SIF weight a / (a + p(token)); p = 0 gives the maximum weight 1."""
    if a <= 0:
        raise ValueError("SIF parameter a must be positive")
    return a / (a + freq.probability(token))


def usif_parameter(freq: FrequencyTable, n: float) -> float:
    """Constant ``a`` of the uSIF weight, from vocabulary size and average
    sentence length ``n``.

    threshold = 1 - (1 - 1/V)^n, alpha = fraction of words above threshold,
    Z = V/2, a = (1 - alpha) / (alpha * Z).  When no word lies above the
    threshold, alpha is floored at 1/V so that ``a`` stays finite.
    """
    if n <= 0:
        raise ValueError("average sentence length must be positive")
    v = freq.vocab_size
    if v < 2:
        raise ValueError("frequency table too small for uSIF weights")
    threshold = 1.0 - (1.0 - 1.0 / v) ** n
    above = sum(1 for p in freq.probabilities().values() if p > threshold)
    alpha = max(above, 1) / v
    z = 0.5 * v
    return (1.0 - alpha) / (alpha * z)


def usif_weight(freq: FrequencyTable, n: float, token: str) -> float:
    """uSIF weight a / (a/2 + p(token)), monotone decreasing in p."""
    a = usif_parameter(freq, n)
    return a / (0.5 * a + freq.probability(token))


@dataclass(frozen=True)
class WeightScheme:
    """Resolved per-token weight function over one frequency table.

    ``kind`` is "uniform", "sif", or "usif".  Frequency lookups mirror the
    vector lookup policy: exact token first, then lowercased.
    """

    kind: str
    freq: FrequencyTable | None = None
    sif_a: float = 1e-3
    usif_a: float = 0.0

    @classmethod
    def uniform(cls) -> "WeightScheme":
        return cls(kind="uniform")

    @classmethod
    def sif(cls, freq: FrequencyTable, a: float = 1e-3) -> "WeightScheme":
        if a <= 0:
            raise ValueError("SIF parameter a must be positive")
        return cls(kind="sif", freq=freq, sif_a=a)

    @classmethod
    def usif(cls, freq: FrequencyTable, n: float = 11.0) -> "WeightScheme":
        return cls(kind="usif", freq=freq, usif_a=usif_parameter(freq, n))

    def _probability(self, token: str) -> float:
        p = self.freq.probability(token)
        if p == 0.0:
            p = self.freq.probability(token.lower())
        return p

    def weight(self, token: str) -> float:
        if self.kind == "uniform":
            return 1.0
        p = self._probability(token)
        if self.kind == "sif":
            return self.sif_a / (self.sif_a + p)
        return self.usif_a / (0.5 * self.usif_a + p)


def all_but_the_top(store: EmbeddingStore, d: int) -> EmbeddingStore:
    """Remove the vocabulary mean and the projections onto the top-``d``
    principal components of the centered vocabulary matrix.

    A vocabulary of rank below ``d`` uses the available components and
    warns.  ``d = 0`` is plain mean-centering.
    """
    if d < 0:
        raise ValueError("component count must be nonnegative")
    if store.count <= d:
        raise ValueError("need more vectors than removed components")
    mean = store.matrix.mean(axis=0)
    centered = store.matrix - mean
    comps, _ = _principal_directions(centered, d)
    if comps.shape[0] < d:
        warnings.warn(
            f"vocabulary rank {comps.shape[0]} below requested {d} components",
            stacklevel=2,
        )
    out = centered - (centered @ comps.T) @ comps
    return store.with_matrix(out)


def conceptor_negation(store: EmbeddingStore, alpha_c: float = 2.0) -> EmbeddingStore:
    """Apply (I - Cm) with Cm = R (R + alpha_c^-2 I)^-1, R the uncentered
    second moment of the vocabulary.  (I - Cm) is SPD with spectrum in (0, 1].
    """
    if alpha_c <= 0:
        raise ValueError("conceptor aperture must be positive")
    m = store.matrix
    r = (m.T @ m) / m.shape[0]
    lam, q = np.linalg.eigh(r)
    lam = np.clip(lam, 0.0, None)
    a2 = alpha_c ** -2.0
    negation = (q * (a2 / (lam + a2))) @ q.T
    return store.with_matrix(m @ negation)


def unit_scale(ws: WeightedSequence) -> WeightedSequence:
    """L2-normalize each nonzero word vector; zero vectors pass through."""
    norms = np.linalg.norm(ws.vectors, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    return replace(ws, vectors=ws.vectors / safe[:, None])


def standardize_dims(ws: WeightedSequence) -> WeightedSequence:
    """Alternate sentence scaling: standardize each dimension over the
    sentence (zero mean, unit variance where nonconstant)."""
    if len(ws) < 2:
        return ws
    mean = ws.vectors.mean(axis=0)
    std = ws.vectors.std(axis=0)
    safe = np.where(std > 0, std, 1.0)
    return replace(ws, vectors=(ws.vectors - mean) / safe)


@dataclass(frozen=True)
class CorpusStats:
    """Fitted corpus directions: unit-norm orthogonal components with their
    singular values; mode "R" removes the top component, "P" subtracts the
    singular-value-weighted projections."""

    mode: str
    components: np.ndarray
    singular_values: np.ndarray
    mean: np.ndarray


def _principal_directions(matrix: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k right singular directions of ``matrix`` with singular values,
    via the d x d gram spectrum; rank-deficient directions are dropped."""
    gram = matrix.T @ matrix
    lam, q = np.linalg.eigh(gram)
    order = np.argsort(lam)[::-1]
    lam = np.clip(lam[order], 0.0, None)
    q = q[:, order]
    sing = np.sqrt(lam)
    cutoff = sing[0] * _RANK_EPS if sing.size else 0.0
    rank = int(np.sum(sing > cutoff))
    k_eff = min(k, rank)
    return q[:, :k_eff].T.copy(), sing[:k_eff].copy()


def fit_corpus_components(
    sentence_embeddings: np.ndarray | list[np.ndarray],
    mode: str,
    p: int = 5,
) -> CorpusStats:
    """Fit removal directions on a stack of sentence embeddings.

    Mode "R" keeps the top singular vector; mode "P" keeps min(p, rank)
    vectors with their singular values.  An all-zero embedding matrix is
    an error.
    """
    if mode not in ("R", "P"):
        raise ValueError(f"unknown removal mode {mode!r}")
    emb = np.asarray(sentence_embeddings, dtype=np.float64)
    if emb.ndim != 2:
        raise ValueError("sentence embeddings must form a 2-D matrix")
    want = 1 if mode == "R" else p
    if emb.shape[0] < max(2, want + 1):
        raise ValueError("not enough sentence embeddings to fit components")
    if not np.any(emb):
        raise ValueError("all-zero sentence embedding matrix")
    comps, sing = _principal_directions(emb, want)
    return CorpusStats(
        mode=mode,
        components=comps,
        singular_values=sing,
        mean=emb.mean(axis=0),
    )


def remove_components(v: np.ndarray, stats: CorpusStats) -> np.ndarray:
    """Subtract fitted corpus directions from one vector.

    R: v - <v,u1> u1.  P: v - sum_i (s_i / sum_j s_j) <v,u_i> u_i, a
    weighted subtraction, not a full orthogonalization.
    """
    comps = stats.components
    if comps.shape[0] == 0:
        return v
    proj = comps @ v
    if stats.mode == "R":
        return v - proj[0] * comps[0]
    w = stats.singular_values / stats.singular_values.sum()
    return v - (w * proj) @ comps


@dataclass(frozen=True)
class PipelineSetup:
    """Parsed setup code plus converter parameters."""

    letters: frozenset[str]
    sif_a: float = 1e-3
    usif_n: float = 11.0
    abtt_d: int = 3
    conceptor_alpha: float = 2.0
    piecewise_p: int = 5
    scale_mode: str = "norm"  # "norm" or "standardize"

    @classmethod
    def parse(cls, code: str, **params) -> "PipelineSetup":
        letters = set()
        for ch in code.strip().upper():
            if ch not in SETUP_ALPHABET:
                raise ValueError(f"unknown converter letter {ch!r} in {code!r}")
            letters.add(ch)
        if "W" in letters and "U" in letters:
            raise ValueError("setups cannot combine W and U weights")
        return cls(letters=frozenset(letters), **params)

    @property
    def code(self) -> str:
        """Canonical code, letters in application order."""
        return "".join(ch for ch in "ACWUSRP" if ch in self.letters)

    def __contains__(self, letter: str) -> bool:
        return letter in self.letters


class SentencePreprocessor:
    """Pure callable: token list -> WeightedSequence.

    Tokens missing from the vocabulary keep their scheme weight and carry a
    zero vector, so token indices stay aligned with any sidecar tree.
    """

    def __init__(
        self,
        store: EmbeddingStore,
        scheme: WeightScheme,
        scale: str | None,
        removals: list[CorpusStats],
        setup: PipelineSetup,
    ):
        self.store = store
        self.scheme = scheme
        self.scale = scale
        self.removals = removals
        self.setup = setup

    @property
    def dim(self) -> int:
        return self.store.dim

    def __call__(self, tokens: list[str] | tuple[str, ...]) -> WeightedSequence:
        if not tokens:
            raise ValueError("cannot preprocess an empty sentence")
        ws = self._assemble(tokens)
        for stats in self.removals:
            vectors = np.stack([remove_components(v, stats) for v in ws.vectors])
            ws = replace(ws, vectors=vectors)
        return ws

    def _assemble(self, tokens) -> WeightedSequence:
        n = len(tokens)
        vectors = np.zeros((n, self.store.dim))
        weights = np.empty(n)
        for i, tok in enumerate(tokens):
            vec = lookup(self.store, tok)
            if vec is not None:
                vectors[i] = vec
            weights[i] = self.scheme.weight(tok)
        ws = WeightedSequence(tuple(tokens), weights, vectors)
        if self.scale == "norm":
            ws = unit_scale(ws)
        elif self.scale == "standardize":
            ws = standardize_dims(ws)
        return ws


def build_pipeline(
    setup: PipelineSetup | str,
    store: EmbeddingStore,
    freq: FrequencyTable | None = None,
    corpus_sentences: list[list[str]] | None = None,
) -> SentencePreprocessor:
    """Assemble the converter pipeline for one setup.

    Corpus-level stats (R, P) are fitted on the weighted embeddings of
    ``corpus_sentences`` after all earlier converters; with both letters
    present, P is refitted after R has been applied.  R or P without a
    corpus is an error, as is W or U without a frequency table.
    """
    if isinstance(setup, str):
        setup = PipelineSetup.parse(setup)

    if "A" in setup:
        store = all_but_the_top(store, setup.abtt_d)
    if "C" in setup:
        store = conceptor_negation(store, setup.conceptor_alpha)

    if "W" in setup or "U" in setup:
        if freq is None:
            raise ValueError("setup requests word weights but no frequency table given")
        scheme = (
            WeightScheme.sif(freq, setup.sif_a)
            if "W" in setup
            else WeightScheme.usif(freq, setup.usif_n)
        )
    else:
        scheme = WeightScheme.uniform()

    scale = setup.scale_mode if "S" in setup else None
    pre = SentencePreprocessor(store, scheme, scale, [], setup)

    removal_modes = [m for m in ("R", "P") if m in setup]
    if removal_modes and corpus_sentences is None:
        raise ValueError("setup requests corpus removal but no corpus given")
    for mode in removal_modes:
        embeddings = np.stack(
            [_sentence_embedding(pre, toks) for toks in corpus_sentences]
        )
        stats = fit_corpus_components(
            embeddings, mode, p=1 if mode == "R" else setup.piecewise_p
        )
        pre = SentencePreprocessor(
            pre.store, pre.scheme, pre.scale, pre.removals + [stats], setup
        )
    return pre


def _sentence_embedding(pre: SentencePreprocessor, tokens) -> np.ndarray:
    ws = pre(tokens)
    return ws.weights @ ws.vectors
