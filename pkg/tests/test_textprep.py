import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uxfeedback import textprep as tp
from uxfeedback.errors import DimensionMismatchError, EmptyTokenError, VectorParseError

SMALL = tp.EmbeddingModel(dim=16, bucket_count=5000, seed=7)


class TestPreprocess:
    def test_documented_pipeline(self):
        config = tp.PreprocessConfig(stopwords=frozenset({"the"}))
        assert tp.preprocess("The app crashes!", config) == ["app", "crash"]

    def test_empty_input(self):
        assert tp.preprocess("") == []

    def test_url_stripping(self):
        config = tp.PreprocessConfig(stopwords=frozenset())
        assert tp.preprocess("see https://x.y/z now", config) == ["see", "now"]

    def test_line_breaks_and_tabs(self):
        config = tp.PreprocessConfig(stopwords=frozenset(), lemmatize=False)
        assert tp.preprocess("slow\tload\r\ntimes", config) == ["slow", "load", "times"]

    def test_stopwords_removed(self):
        tokens = tp.preprocess("it is not working for me")
        assert "it" not in tokens and "is" not in tokens and "for" not in tokens

    def test_determinism(self):
        text = "The UI freezes when saving https://example.com/a files."
        assert tp.preprocess(text) == tp.preprocess(text)

    @pytest.mark.parametrize(
        "word,lemma",
        [
            ("crashes", "crash"), ("bugs", "bug"), ("copies", "copy"),
            ("classes", "class"), ("running", "run"), ("loading", "load"),
            ("saving", "save"), ("crashed", "crash"), ("stopped", "stop"),
            ("used", "use"), ("using", "use"), ("sees", "see"),
            ("speed", "speed"), ("class", "class"), ("ring", "ring"),
        ],
    )
    def test_lemma_rules(self, word, lemma):
        assert tp._lemmatize(word) == lemma


class TestEmbedWord:
    def test_same_word_identical(self):
        a = tp.embed_word("latency", SMALL)
        b = tp.embed_word("latency", SMALL)
        assert np.array_equal(a, b)

    def test_unit_norm(self):
        for word in ["app", "latency", "x", "internationalization"]:
            assert np.linalg.norm(tp.embed_word(word, SMALL)) == pytest.approx(1.0, abs=1e-9)

    def test_empty_token(self):
        with pytest.raises(EmptyTokenError):
            tp.embed_word("", SMALL)

    def test_oov_falls_back_to_subword(self):
        rng = np.random.default_rng(0)
        external = tp.EmbeddingModel(
            dim=16, mode=tp.EmbeddingMode.EXTERNAL_VECTORS, bucket_count=5000, seed=7,
            vectors={"known": rng.standard_normal(16)},
        )
        hashed = tp.EmbeddingModel(dim=16, bucket_count=5000, seed=7)
        assert np.array_equal(tp.embed_word("unseen", external), tp.embed_word("unseen", hashed))
        known = tp.embed_word("known", external)
        assert np.linalg.norm(known) == pytest.approx(1.0, abs=1e-9)
        assert not np.array_equal(known, tp.embed_word("known", hashed))

    def test_distinct_seeds_distinct_vectors(self):
        other = tp.EmbeddingModel(dim=16, bucket_count=5000, seed=8)
        assert not np.array_equal(tp.embed_word("app", SMALL), tp.embed_word("app", other))


class TestEmbedComment:
    def test_single_token_equals_word_vector(self):
        got = tp.embed_comment("latency", SMALL)
        assert got.token_count == 1
        assert np.array_equal(got.values, tp.embed_word("latency", SMALL))

    def test_repeated_token_unchanged(self):
        config = tp.PreprocessConfig(stopwords=frozenset())
        one = tp.embed_comment("good", SMALL, config)
        two = tp.embed_comment("good good", SMALL, config)
        assert np.allclose(one.values, two.values)
        assert two.token_count == 2

    def test_all_stopwords_gives_zero_vector(self):
        got = tp.embed_comment("it is the and", SMALL)
        assert got.token_count == 0
        assert np.array_equal(got.values, np.zeros(16))

    def test_norm_bound(self):
        for text in ["fast reliable tool", "crash crash crash", "a", ""]:
            got = tp.embed_comment(text, SMALL)
            assert np.linalg.norm(got.values) <= 1.0 + 1e-9

    @settings(max_examples=25, deadline=None)
    @given(st.permutations(["crash", "slow", "menu", "crash", "login", "report"]))
    def test_token_order_does_not_matter(self, shuffled):
        config = tp.PreprocessConfig(stopwords=frozenset(), lemmatize=False)
        base = tp.embed_comment("crash slow menu crash login report", SMALL, config)
        other = tp.embed_comment(" ".join(shuffled), SMALL, config)
        assert np.array_equal(base.values, other.values)


class TestVectorFiles:
    def test_header_and_rows(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("2 3\nalpha 1.0 0.0 0.0\nbeta 0.0 2.0 0.0\n")
        model = tp.load_vectors(path, dim=3)
        assert set(model.vectors) == {"alpha", "beta"}
        assert model.vectors["beta"][1] == 2.0

    def test_row_dimension_mismatch(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("alpha 1.0 0.0\n")
        with pytest.raises(DimensionMismatchError) as err:
            tp.load_vectors(path, dim=3)
        assert err.value.line == 1

    def test_header_dimension_mismatch(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("5 4\nalpha 1 2 3 4\n")
        with pytest.raises(DimensionMismatchError):
            tp.load_vectors(path, dim=3)

    def test_parse_error_line(self, tmp_path):
        path = tmp_path / "vec.txt"
        path.write_text("alpha 1.0 0.0 0.0\nbeta 0.0 oops 0.0\n")
        with pytest.raises(VectorParseError) as err:
            tp.load_vectors(path, dim=3)
        assert err.value.line == 2

    def test_round_trip_identical(self, tmp_path):
        rng = np.random.default_rng(3)
        original = {"apple": rng.standard_normal(4), "pear": rng.standard_normal(4)}
        path = tmp_path / "vec.txt"
        tp.write_vectors(original, path)
        loaded = tp.load_vectors(path, dim=4)
        for word, vec in original.items():
            assert np.array_equal(loaded.vectors[word], vec)

    def test_fingerprint_tracks_configuration(self):
        a = tp.EmbeddingModel(dim=16, bucket_count=5000, seed=7)
        b = tp.EmbeddingModel(dim=16, bucket_count=5000, seed=8)
        c = tp.EmbeddingModel(dim=16, bucket_count=5000, seed=7)
        assert a.fingerprint() != b.fingerprint()
        assert a.fingerprint() == c.fingerprint()
