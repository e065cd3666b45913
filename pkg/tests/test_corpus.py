"""Tokenization, sizing thresholds, embeddings, and corpus file round-trips."""

import numpy as np
import pytest

from fakereal.corpus import (
    DATASET_PRESETS,
    FAKENEWSNET_PUBLISHER_COUNT,
    PADDING_TOKEN,
    CorpusError,
    EmbeddingTable,
    Label,
    NewsArticle,
    Thresholds,
    TokenizedArticle,
    build_tensor,
    compute_thresholds,
    embed_word,
    load_corpus,
    load_embeddings,
    split_article,
    write_corpus,
    write_embeddings,
)


def art(body, headline="Breaking News", label=Label.REAL, art_id="a1", pubs=None):
    return NewsArticle(id=art_id, headline=headline, body=body, label=label,
                       publisher_ids=pubs or [])


class TestSplitArticle:
    def test_lowercases_and_splits_sentences(self):
        tok = split_article(art("The cat sat. The DOG ran!"))
        assert tok.headline_tokens == ["breaking", "news"]
        assert tok.body_sentences == [["the", "cat", "sat"], ["the", "dog", "ran"]]

    def test_breaks_on_question_and_bang_runs(self):
        tok = split_article(art("Really?! Yes... maybe. ok"))
        assert tok.body_sentences == [["really"], ["yes"], ["maybe"], ["ok"]]

    def test_drops_punctuation_only_chunks(self):
        tok = split_article(art("First. ... -- ,, Second."))
        assert tok.body_sentences == [["first"], ["second"]]

    def test_keeps_digits_and_inner_apostrophes(self):
        tok = split_article(art("It's 42 dollars, isn't it?"))
        assert tok.body_sentences == [["it's", "42", "dollars", "isn't", "it"]]

    def test_empty_body_and_headline(self):
        tok = split_article(art("", headline=""))
        assert tok.headline_tokens == []
        assert tok.body_sentences == []

    def test_no_cropping_here(self):
        body = " ".join(f"w{i}" for i in range(100)) + "."
        tok = split_article(art(body))
        assert len(tok.body_sentences[0]) == 100


class TestComputeThresholds:
    def test_ceil_of_mean_plus_population_std(self):
        # sentence counts 3,5,4,8,5: mean 5, population std sqrt(2.8),
        # so t_d = ceil(6.6733...) = 7
        toks = [TokenizedArticle([], [["w"]] * n) for n in (3, 5, 4, 8, 5)]
        th = compute_thresholds(toks)
        assert th.t_d == 7
        assert th.t_s == 46

    def test_zero_variance(self):
        toks = [TokenizedArticle([], [["w"]] * 4) for _ in range(3)]
        assert compute_thresholds(toks).t_d == 4

    def test_floor_of_one(self):
        toks = [TokenizedArticle([], []) for _ in range(2)]
        assert compute_thresholds(toks).t_d == 1

    def test_order_invariant(self):
        a = [TokenizedArticle([], [["w"]] * n) for n in (1, 9, 2, 7, 7, 3)]
        b = list(reversed(a))
        assert compute_thresholds(a) == compute_thresholds(b)

    def test_empty_corpus(self):
        with pytest.raises(ValueError, match="empty corpus"):
            compute_thresholds([])

    def test_custom_t_s(self):
        toks = [TokenizedArticle([], [["w"]])]
        assert compute_thresholds(toks, t_s_fixed=10).t_s == 10

    def test_thresholds_must_be_positive(self):
        with pytest.raises(ValueError, match="thresholds must be >= 1"):
            Thresholds(t_s=0, t_d=5)


class TestEmbeddingTable:
    def test_known_word_returned_verbatim(self):
        vec = np.array([1.0, -2.0, 0.5])
        table = EmbeddingTable(3, vectors={"cat": vec})
        assert np.array_equal(embed_word(table, "cat"), vec)

    def test_padding_token_is_zero(self):
        table = EmbeddingTable(4)
        assert np.array_equal(embed_word(table, PADDING_TOKEN), np.zeros(4))

    def test_oov_is_stable_within_and_across_tables(self):
        a = EmbeddingTable(8, oov_seed=3)
        b = EmbeddingTable(8, oov_seed=3)
        first = embed_word(a, "zyxxy")
        assert np.array_equal(first, embed_word(a, "zyxxy"))
        assert np.array_equal(first, embed_word(b, "zyxxy"))

    def test_oov_depends_on_seed_and_word(self):
        table = EmbeddingTable(8, oov_seed=0)
        other_seed = EmbeddingTable(8, oov_seed=1)
        assert not np.array_equal(embed_word(table, "aard"), embed_word(other_seed, "aard"))
        assert not np.array_equal(embed_word(table, "aard"), embed_word(table, "vark"))

    def test_oov_within_range(self):
        table = EmbeddingTable(16, oov_range=(-0.01, 0.01))
        for word in ("one", "two", "three"):
            vec = embed_word(table, word)
            assert np.all(vec >= -0.01) and np.all(vec <= 0.01)

    def test_wrong_dimension_rejected(self):
        table = EmbeddingTable(3)
        with pytest.raises(ValueError, match="expected"):
            table.add("cat", [1.0, 2.0])

    def test_dimension_must_be_positive(self):
        with pytest.raises(ValueError, match=">= 1"):
            EmbeddingTable(0)


class TestBuildTensor:
    def table(self):
        return EmbeddingTable(2, vectors={
            "a": np.array([1.0, 0.0]),
            "b": np.array([0.0, 1.0]),
            "c": np.array([1.0, 1.0]),
        })

    def test_shape_and_layout(self):
        tok = TokenizedArticle(["a"], [["b", "c"], ["c"]])
        t = build_tensor(tok, Thresholds(t_s=3, t_d=2), self.table())
        assert t.data.shape == (3, 3, 2)
        assert np.array_equal(t.data[0, 0], [1.0, 0.0])   # headline row first
        assert np.array_equal(t.data[1, 0], [0.0, 1.0])
        assert np.array_equal(t.data[1, 1], [1.0, 1.0])
        assert np.array_equal(t.data[2, 0], [1.0, 1.0])

    def test_pads_missing_slots_with_zeros(self):
        tok = TokenizedArticle(["a"], [["b"]])
        t = build_tensor(tok, Thresholds(t_s=3, t_d=3), self.table())
        assert np.all(t.data[1, 1:] == 0.0)
        assert np.all(t.data[2:] == 0.0)

    def test_crops_long_sentences_and_bodies(self):
        tok = TokenizedArticle(["a", "b", "c"], [["a"], ["b"], ["c"]])
        t = build_tensor(tok, Thresholds(t_s=2, t_d=2), self.table())
        assert t.data.shape == (3, 2, 2)
        # third headline word and third sentence fall off
        assert np.array_equal(t.data[0, 1], [0.0, 1.0])
        assert np.array_equal(t.data[2, 0], [0.0, 1.0])

    def test_empty_article_is_all_zero(self):
        tok = TokenizedArticle([], [])
        t = build_tensor(tok, Thresholds(t_s=4, t_d=3), self.table())
        assert np.all(t.data == 0.0)


class TestCorpusFiles:
    def articles(self):
        return [
            art("One. Two.", art_id="r1", label=Label.REAL, pubs=["u1", "u2"]),
            art("Hoax!", art_id="f1", label=Label.FAKE, pubs=["u3"]),
        ]

    def test_round_trip(self, tmp_path):
        path = tmp_path / "corpus.jsonl"
        write_corpus(self.articles(), path)
        back = load_corpus(path)
        assert back == self.articles()

    def test_invalid_json_names_file_and_line(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "headline": "h", "body": "b", "label": "real"}\n'
                        'not json\n')
        with pytest.raises(CorpusError, match=r"bad.jsonl: line 2: invalid JSON"):
            load_corpus(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "headline": "h", "label": "real"}\n')
        with pytest.raises(CorpusError, match=r"line 1: missing field"):
            load_corpus(path)

    def test_bad_label_names_record(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a9", "headline": "h", "body": "b", "label": "maybe"}\n')
        with pytest.raises(CorpusError, match=r"record 'a9' \(line 1\)"):
            load_corpus(path)

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "dup.jsonl"
        row = '{"id": "a", "headline": "h", "body": "b", "label": "real"}\n'
        path.write_text(row + row)
        with pytest.raises(CorpusError, match="duplicate id"):
            load_corpus(path)

    def test_publishers_must_be_list(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "headline": "h", "body": "b", "label": "real", '
                        '"publishers": "u1"}\n')
        with pytest.raises(CorpusError, match="publishers must be a list"):
            load_corpus(path)

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "gap.jsonl"
        path.write_text('\n{"id": "a", "headline": "h", "body": "b", "label": "fake"}\n\n')
        arts = load_corpus(path)
        assert len(arts) == 1 and arts[0].label is Label.FAKE


class TestEmbeddingFiles:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "emb.txt"
        write_embeddings({"cat": np.array([0.25, -1.5]), "dog": np.array([3.0, 0.125])}, path)
        table = load_embeddings(path)
        assert table.dimension == 2
        assert np.array_equal(table.lookup("cat"), [0.25, -1.5])
        assert np.array_equal(table.lookup("dog"), [3.0, 0.125])

    def test_dimension_inferred_from_first_row(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("a 1.0 2.0 3.0\n")
        assert load_embeddings(path).dimension == 3

    def test_ragged_rows_rejected(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("a 1.0 2.0\nb 1.0\n")
        with pytest.raises(CorpusError, match="line 2: expected 2 components, got 1"):
            load_embeddings(path)

    def test_non_numeric_component(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("a 1.0 oops\n")
        with pytest.raises(CorpusError, match="non-numeric vector component"):
            load_embeddings(path)

    def test_word_only_row(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("lonely\n")
        with pytest.raises(CorpusError, match="no vector components"):
            load_embeddings(path)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("")
        with pytest.raises(CorpusError, match="empty embeddings file"):
            load_embeddings(path)


def test_dataset_presets_pin_published_sizes():
    p = DATASET_PRESETS["politifact"]
    assert (p["t_s"], p["t_d"]) == (46, 280)
    assert (p["train_real"], p["train_fake"]) == (192, 188)
    assert (p["test_real"], p["test_fake"]) == (49, 47)
    g = DATASET_PRESETS["gossipcop"]
    assert (g["t_s"], g["t_d"]) == (46, 85)
    assert (g["train_real"], g["train_fake"]) == (9342, 3162)
    assert (g["test_real"], g["test_fake"]) == (2336, 790)
    assert FAKENEWSNET_PUBLISHER_COUNT == 512370
