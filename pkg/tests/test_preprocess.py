import numpy as np
import pytest

from rotsim.embeddings import EmbeddingStore, FrequencyTable
from rotsim.preprocess import (
    PipelineSetup,
    WeightedSequence,
    WeightScheme,
    all_but_the_top,
    build_pipeline,
    conceptor_negation,
    fit_corpus_components,
    remove_components,
    sif_weight,
    standardize_dims,
    unit_scale,
    usif_weight,
)


def table(counts):
    return FrequencyTable(counts)


def reference_usif_weights(counts, n):
    """Line-by-line transcription of the published uSIF weight recipe,
    with the same documented guard (alpha floored at one word) that the
    library uses; kept independent of the library code path."""
    total = sum(counts.values())
    word2prob = {w: c / total for w, c in counts.items()}
    vocab_size = float(len(word2prob))
    threshold = 1 - (1 - 1 / vocab_size) ** n
    alpha = len([w for w in word2prob if word2prob[w] > threshold]) / vocab_size
    alpha = max(alpha, 1 / vocab_size)
    z = 0.5 * vocab_size
    a = (1 - alpha) / (alpha * z)
    return {w: a / (0.5 * a + word2prob[w]) for w in word2prob}


class TestSifWeight:
    def test_zero_probability_gives_one(self):
        assert sif_weight(table({"x": 1}), 1e-3, "unseen") == 1.0

    def test_equal_a_and_p(self):
        # p = 1e-3 requires count ratio 1:999
        t = table({"w": 1, "rest": 999})
        assert sif_weight(t, 1e-3, "w") == pytest.approx(0.5, abs=1e-15)

    def test_direct_formula(self):
        # a=1e-3, p=9e-3 -> 0.1
        t = table({"w": 9, "rest": 991})
        assert sif_weight(t, 1e-3, "w") == pytest.approx(0.1, abs=1e-15)

    def test_bad_a(self):
        with pytest.raises(ValueError):
            sif_weight(table({"x": 1}), 0.0, "x")


class TestUsifWeight:
    def test_toy_table_matches_reference(self):
        counts = {"a": 9, "b": 1}
        expected = reference_usif_weights(counts, 11)
        t = table(counts)
        for tok, want in expected.items():
            assert usif_weight(t, 11, tok) == pytest.approx(want, rel=1e-12)

    def test_larger_table_matches_reference(self):
        counts = {f"w{i}": i + 1 for i in range(50)}
        counts["the"] = 100000
        expected = reference_usif_weights(counts, 11)
        t = table(counts)
        for tok, want in expected.items():
            assert usif_weight(t, 11, tok) == pytest.approx(want, rel=1e-12)

    def test_unseen_gets_maximum(self):
        t = table({"a": 9, "b": 1})
        w_oov = usif_weight(t, 11, "zzz")
        assert w_oov >= usif_weight(t, 11, "a")
        assert w_oov >= usif_weight(t, 11, "b")

    def test_monotone_in_probability(self):
        t = table({"rare": 1, "mid": 10, "common": 100})
        w = [usif_weight(t, 11, tok) for tok in ("rare", "mid", "common")]
        assert w[0] > w[1] > w[2] > 0

    def test_tiny_vocab_rejected(self):
        with pytest.raises(ValueError):
            usif_weight(table({"only": 5}), 11, "only")


class TestWeightScheme:
    def test_uniform(self):
        assert WeightScheme.uniform().weight("anything") == 1.0

    def test_positive_and_monotone(self):
        t = table({"a": 1, "b": 10, "c": 100})
        for scheme in (WeightScheme.sif(t), WeightScheme.usif(t)):
            wa, wb, wc = (scheme.weight(x) for x in "abc")
            assert wa >= wb >= wc > 0

    def test_lowercase_frequency_fallback(self):
        t = table({"cat": 50, "dog": 50})
        scheme = WeightScheme.sif(t)
        assert scheme.weight("Cat") == scheme.weight("cat")


def jacobi_eigh(a, sweeps=100):
    """Cyclic Jacobi rotations on a symmetric matrix: independent oracle
    for eigenvectors used by the component-removal checks."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-15:
                    continue
                off += a[p, q] ** 2
                theta = 0.5 * np.arctan2(2 * a[p, q], a[q, q] - a[p, p])
                c, s = np.cos(theta), np.sin(theta)
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
        if off < 1e-30:
            break
    lam = np.diag(a)
    order = np.argsort(lam)[::-1]
    return lam[order], v[:, order]


class TestAllButTheTop:
    def test_constant_vectors_vanish(self):
        store = EmbeddingStore(["a", "b", "c"], np.tile([1.0, 2.0, 3.0], (3, 1)))
        with pytest.warns(UserWarning):
            out = all_but_the_top(store, 1)
        np.testing.assert_allclose(out.matrix, 0.0, atol=1e-12)

    def test_outputs_orthogonal_to_top_component(self):
        mat = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]])
        # oracle: eigendecomposition of the 2x2 covariance by Jacobi
        centered = mat - mat.mean(axis=0)
        lam, vecs = jacobi_eigh(centered.T @ centered)
        top = vecs[:, 0]
        store = EmbeddingStore(list("abcd"), mat)
        out = all_but_the_top(store, 1)
        assert np.max(np.abs(out.matrix @ top)) < 1e-6

    def test_d_zero_is_centering(self):
        rng = np.random.default_rng(0)
        mat = rng.normal(size=(6, 3))
        store = EmbeddingStore([f"t{i}" for i in range(6)], mat)
        out = all_but_the_top(store, 0)
        np.testing.assert_allclose(out.matrix, mat - mat.mean(axis=0), atol=1e-12)

    def test_random_orthogonality(self):
        rng = np.random.default_rng(1)
        mat = rng.normal(size=(20, 5))
        store = EmbeddingStore([f"t{i}" for i in range(20)], mat)
        out = all_but_the_top(store, 3)
        centered = mat - mat.mean(axis=0)
        lam, vecs = jacobi_eigh(centered.T @ centered)
        for k in range(3):
            assert np.max(np.abs(out.matrix @ vecs[:, k])) < 1e-6


class TestConceptorNegation:
    def test_zero_vectors_unchanged(self):
        store = EmbeddingStore(["a", "b"], np.zeros((2, 3)))
        out = conceptor_negation(store, 2.0)
        np.testing.assert_allclose(out.matrix, 0.0, atol=1e-15)

    def test_scalar_case(self):
        # 1-D vectors {1,-1}: R = 1, Cm = 1/(1+1/4) = 0.8, output 0.2 v
        store = EmbeddingStore(["a", "b"], np.array([[1.0], [-1.0]]))
        out = conceptor_negation(store, 2.0)
        np.testing.assert_allclose(out.matrix, np.array([[0.2], [-0.2]]), atol=1e-12)

    def test_negation_spectrum_in_unit_interval(self):
        rng = np.random.default_rng(2)
        mat = rng.normal(size=(30, 4))
        store = EmbeddingStore([f"t{i}" for i in range(30)], mat)
        r = mat.T @ mat / 30
        lam = np.linalg.eigvalsh(r)
        neg_eigs = 0.25 / (lam + 0.25)
        assert np.all(neg_eigs > 0) and np.all(neg_eigs <= 1.0)
        # output equals mat @ (I - Cm) built directly
        cm = r @ np.linalg.inv(r + 0.25 * np.eye(4))
        expected = mat @ (np.eye(4) - cm)
        out = conceptor_negation(store, 2.0)
        np.testing.assert_allclose(out.matrix, expected, atol=1e-10)


class TestUnitScale:
    def test_three_four_five(self):
        ws = WeightedSequence(("a",), np.array([1.0]), np.array([[3.0, 4.0]]))
        out = unit_scale(ws)
        np.testing.assert_allclose(out.vectors, [[0.6, 0.8]], atol=1e-15)

    def test_zero_passthrough(self):
        ws = WeightedSequence(("a",), np.array([1.0]), np.array([[0.0, 0.0]]))
        out = unit_scale(ws)
        np.testing.assert_array_equal(out.vectors, [[0.0, 0.0]])

    def test_idempotent(self, rng):
        vectors = rng.normal(size=(5, 3))
        ws = WeightedSequence(tuple("abcde"), np.ones(5), vectors)
        once = unit_scale(ws)
        twice = unit_scale(once)
        np.testing.assert_allclose(once.vectors, twice.vectors, atol=1e-12)
        norms = np.linalg.norm(once.vectors, axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-12)

    def test_weights_untouched(self, rng):
        ws = WeightedSequence(("a", "b"), np.array([0.3, 0.7]), rng.normal(size=(2, 3)))
        np.testing.assert_array_equal(unit_scale(ws).weights, ws.weights)


class TestStandardizeDims:
    def test_zero_mean_unit_std(self, rng):
        ws = WeightedSequence(tuple("abcd"), np.ones(4), rng.normal(size=(4, 3)))
        out = standardize_dims(ws)
        np.testing.assert_allclose(out.vectors.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(out.vectors.std(axis=0), 1.0, atol=1e-12)

    def test_single_token_passthrough(self):
        ws = WeightedSequence(("a",), np.ones(1), np.array([[1.0, 2.0]]))
        np.testing.assert_array_equal(standardize_dims(ws).vectors, ws.vectors)


class TestCorpusComponents:
    def test_rank_one_direction(self):
        emb = np.outer([1.0, 2.0, 3.0, 4.0, 5.0, 6.0], [1.0, 0.0, 0.0])
        stats = fit_corpus_components(emb, "R")
        assert abs(abs(stats.components[0][0]) - 1.0) < 1e-10

    def test_cardinality(self):
        rng = np.random.default_rng(3)
        emb = rng.normal(size=(10, 4))
        assert fit_corpus_components(emb, "R").components.shape[0] == 1
        assert fit_corpus_components(emb, "P", p=5).components.shape[0] == min(5, 4)

    def test_matches_jacobi_oracle(self):
        rng = np.random.default_rng(4)
        emb = rng.normal(size=(10, 4))
        stats = fit_corpus_components(emb, "P", p=3)
        lam, vecs = jacobi_eigh(emb.T @ emb)
        for k in range(3):
            dot = abs(np.dot(stats.components[k], vecs[:, k]))
            assert dot == pytest.approx(1.0, abs=1e-8)
            assert stats.singular_values[k] == pytest.approx(np.sqrt(lam[k]), rel=1e-8)

    def test_all_zero_is_error(self):
        with pytest.raises(ValueError):
            fit_corpus_components(np.zeros((6, 3)), "R")

    def test_components_orthonormal(self):
        rng = np.random.default_rng(5)
        emb = rng.normal(size=(12, 5))
        stats = fit_corpus_components(emb, "P", p=4)
        gram = stats.components @ stats.components.T
        np.testing.assert_allclose(gram, np.eye(4), atol=1e-8)


class TestRemoveComponents:
    def test_parallel_vector_vanishes(self):
        rng = np.random.default_rng(6)
        emb = rng.normal(size=(8, 3))
        stats = fit_corpus_components(emb, "R")
        v = 2.5 * stats.components[0]
        np.testing.assert_allclose(remove_components(v, stats), 0.0, atol=1e-10)

    def test_orthogonal_vector_unchanged(self):
        emb = np.outer(np.arange(1.0, 7.0), [1.0, 0.0, 0.0])
        stats = fit_corpus_components(emb, "R")
        v = np.array([0.0, 1.0, 2.0])
        np.testing.assert_allclose(remove_components(v, stats), v, atol=1e-10)

    def test_weighted_subtraction(self):
        # two components with singular values (3, 1); v = u1 + u2
        from rotsim.preprocess import CorpusStats

        stats = CorpusStats(
            mode="P",
            components=np.array([[1.0, 0.0], [0.0, 1.0]]),
            singular_values=np.array([3.0, 1.0]),
            mean=np.zeros(2),
        )
        v = np.array([1.0, 1.0])
        np.testing.assert_allclose(
            remove_components(v, stats), [1 - 0.75, 1 - 0.25], atol=1e-12
        )

    def test_r_output_orthogonal(self):
        rng = np.random.default_rng(7)
        emb = rng.normal(size=(9, 4))
        stats = fit_corpus_components(emb, "R")
        v = rng.normal(size=4)
        out = remove_components(v, stats)
        assert abs(np.dot(out, stats.components[0])) < 1e-8


class TestPipelineSetup:
    def test_order_normalized(self):
        assert PipelineSetup.parse("SWC").letters == PipelineSetup.parse("CSW").letters

    def test_case_insensitive(self):
        assert PipelineSetup.parse("surca").letters == PipelineSetup.parse("SURCA").letters

    def test_w_and_u_conflict(self):
        with pytest.raises(ValueError):
            PipelineSetup.parse("WU")

    def test_unknown_letter(self):
        with pytest.raises(ValueError):
            PipelineSetup.parse("SX")

    def test_canonical_code(self):
        assert PipelineSetup.parse("swc").code == "CWS"


class TestBuildPipeline:
    def setup_method(self):
        rng = np.random.default_rng(8)
        toks = [f"w{i}" for i in range(12)]
        self.store = EmbeddingStore(toks, rng.normal(size=(12, 4)))
        self.freq = table({t: i + 1 for i, t in enumerate(toks)})
        self.corpus = [["w0", "w1", "w2"], ["w3", "w4"], ["w5", "w6", "w7"],
                       ["w8", "w9"], ["w10", "w11", "w0"], ["w1", "w5", "w9"],
                       ["w2", "w4", "w6"]]

    def test_identity_setup(self):
        pre = build_pipeline("", self.store)
        ws = pre(["w0", "w3"])
        np.testing.assert_array_equal(ws.weights, [1.0, 1.0])
        np.testing.assert_array_equal(ws.vectors[0], self.store.get("w0"))

    def test_w_setup_single_token(self):
        pre = build_pipeline("W", self.store, freq=self.freq)
        ws = pre(["w0"])
        assert ws.weights[0] == pytest.approx(sif_weight(self.freq, 1e-3, "w0"))
        np.testing.assert_array_equal(ws.vectors[0], self.store.get("w0"))

    def test_equivalent_codes_match(self):
        a = build_pipeline("SWC", self.store, freq=self.freq)
        b = build_pipeline("CSW", self.store, freq=self.freq)
        w1, w2 = a(["w1", "w2"]), b(["w1", "w2"])
        np.testing.assert_array_equal(w1.vectors, w2.vectors)
        np.testing.assert_array_equal(w1.weights, w2.weights)

    def test_deterministic(self):
        a = build_pipeline("SUP", self.store, freq=self.freq, corpus_sentences=self.corpus)
        b = build_pipeline("SUP", self.store, freq=self.freq, corpus_sentences=self.corpus)
        w1, w2 = a(["w0", "w5"]), b(["w0", "w5"])
        np.testing.assert_array_equal(w1.vectors, w2.vectors)
        np.testing.assert_array_equal(w1.weights, w2.weights)

    def test_corpus_required_for_removal(self):
        with pytest.raises(ValueError):
            build_pipeline("R", self.store)

    def test_freq_required_for_weights(self):
        with pytest.raises(ValueError):
            build_pipeline("W", self.store)

    def test_oov_token_gets_zero_vector(self):
        pre = build_pipeline("W", self.store, freq=self.freq)
        ws = pre(["w0", "zzz"])
        np.testing.assert_array_equal(ws.vectors[1], np.zeros(4))
        assert ws.weights[1] == 1.0  # p=0 -> max SIF weight

    def test_s_normalizes_vectors(self):
        pre = build_pipeline("S", self.store)
        ws = pre(["w0", "w1", "w2"])
        np.testing.assert_allclose(np.linalg.norm(ws.vectors, axis=1), 1.0, atol=1e-12)

    def test_empty_sentence_rejected(self):
        pre = build_pipeline("", self.store)
        with pytest.raises(ValueError):
            pre([])

    def test_combined_removal_runs(self):
        pre = build_pipeline("SWRC", self.store, freq=self.freq, corpus_sentences=self.corpus)
        assert len(pre.removals) == 1  # R only
        pre2 = build_pipeline("SWRP", self.store, freq=self.freq, corpus_sentences=self.corpus)
        assert len(pre2.removals) == 2  # R then P
