"""Cleaning, normalization, stop words, and lemma substitution."""

import pytest
from numpy.random import Generator, PCG64

from eraclass import textprep as tp
from eraclass.errors import ConfigError, DataError

# The worked preprocessing example: a verse pair shown before and after
# each stage.  The lemma row applies the dictionary to the normalized
# tokens (the stop-word and lemma stages are independent ablations).
SAMPLE_ORIGINAL = "تلوذُ به الأكابرُ في صغارٍ وترجو فيه مَقبولَ السؤالِ"
SAMPLE_NORMALIZED = "تلوذ به الأكابر في صغار وترجو فيه مقبول السؤال"
SAMPLE_NO_STOPWORDS = "تلوذ الأكابر صغار وترجو مقبول السؤال"
SAMPLE_LEMMATIZED = "تلوذ ب أكبر في صغير رجا في مقبول سؤال"
SAMPLE_LEMMA_TABLE = {
    "به": "ب",
    "الأكابر": "أكبر",
    "صغار": "صغير",
    "وترجو": "رجا",
    "فيه": "في",
    "السؤال": "سؤال",
}


class TestClean:
    def test_tags_symbols_digits(self):
        assert tp.clean("abc <b>x</b> | # 123") == "abc x"

    def test_empty(self):
        assert tp.clean("") == ""

    def test_pipe_and_hash_removed(self):
        out = tp.clean("قال | الشاعر # قصيدة")
        assert "|" not in out and "#" not in out
        assert out == "قال الشاعر قصيدة"

    def test_arabic_indic_digits_removed(self):
        assert tp.clean("سنة ١٢٣ هجري") == "سنة هجري"

    def test_idempotent(self):
        rng = Generator(PCG64(5))
        pool = list("ابتثج abc<>|#.!؟،123٥ ًـ")
        for _ in range(200):
            s = "".join(rng.choice(pool, size=rng.integers(0, 40)))
            once = tp.clean(s)
            assert tp.clean(once) == once
            assert len(once) <= len(s)

    def test_preserves_diacritics_for_normalize(self):
        # combining marks are not punctuation; clean leaves them alone
        assert tp.clean("بِسم") == "بِسم"


class TestNormalize:
    def test_kashida(self):
        assert tp.normalize("الرســـــول") == "الرسول"

    def test_sample_row(self):
        assert tp.normalize(SAMPLE_ORIGINAL) == SAMPLE_NORMALIZED

    def test_latin_untouched(self):
        assert tp.normalize("abc") == "abc"

    def test_superscript_alef_removed(self):
        assert tp.normalize("الرحمٰن") == "الرحمن"

    def test_idempotent_and_monotone(self):
        rng = Generator(PCG64(6))
        pool = list("ابتثجًُِٰـ xyz")
        for _ in range(200):
            s = "".join(rng.choice(pool, size=rng.integers(0, 40)))
            once = tp.normalize(s)
            assert tp.normalize(once) == once
            assert len(once) <= len(s)


class TestStopwords:
    def test_sample_row(self):
        stops = tp.load_stopwords()
        out = tp.remove_stopwords(SAMPLE_NORMALIZED.split(), stops)
        assert " ".join(out) == SAMPLE_NO_STOPWORDS

    def test_listed_pair_removed(self):
        out = tp.remove_stopwords(["تلوذ", "فيه", "الأكابر", "في"], {"فيه", "في"})
        assert out == ["تلوذ", "الأكابر"]

    def test_empty(self):
        assert tp.remove_stopwords([], {"في"}) == []

    def test_all_stopwords(self):
        assert tp.remove_stopwords(["في", "فيه"], {"في", "فيه"}) == []

    def test_bundled_list_has_function_words(self):
        stops = tp.load_stopwords()
        assert {"في", "فيه", "به"} <= stops

    def test_custom_file(self, tmp_path):
        p = tmp_path / "stops.txt"
        p.write_text("foo\nbar\n", encoding="utf-8")
        assert tp.load_stopwords(p) == {"foo", "bar"}
        with pytest.raises(DataError):
            tp.load_stopwords(tmp_path / "missing.txt")


class TestLemmatize:
    def test_single_word(self):
        assert tp.lemmatize(["السؤال"], {"السؤال": "سؤال"}) == ["سؤال"]

    def test_passthrough(self):
        assert tp.lemmatize(["مقبول"], {"السؤال": "سؤال"}) == ["مقبول"]

    def test_sample_row(self):
        out = tp.lemmatize(SAMPLE_NORMALIZED.split(), SAMPLE_LEMMA_TABLE)
        assert " ".join(out) == SAMPLE_LEMMATIZED

    def test_length_preserved(self):
        tokens = SAMPLE_NORMALIZED.split()
        assert len(tp.lemmatize(tokens, SAMPLE_LEMMA_TABLE)) == len(tokens)

    def test_lemma_file(self, tmp_path):
        p = tmp_path / "lemmas.tsv"
        p.write_text("السؤال\tسؤال\nفيه\tفي\n", encoding="utf-8")
        assert tp.load_lemma_table(p) == {"السؤال": "سؤال", "فيه": "في"}
        bad = tmp_path / "bad.tsv"
        bad.write_text("one-column-only\n", encoding="utf-8")
        with pytest.raises(DataError):
            tp.load_lemma_table(bad)


class TestPipeline:
    def test_default_equals_split_of_normalized_clean(self):
        rng = Generator(PCG64(7))
        pool = list("ابتثجًـ <b>|# 12 xy ")
        for _ in range(100):
            s = "".join(rng.choice(pool, size=rng.integers(0, 60)))
            assert tp.prepare_text(s) == tp.normalize(tp.clean(s)).split()

    def test_lemmas_require_table(self):
        with pytest.raises(ConfigError):
            tp.PrepConfig(apply_lemmas=True)

    def test_full_chain_with_options(self):
        config = tp.PrepConfig(
            remove_stopwords=True,
            apply_lemmas=True,
            lemma_table=SAMPLE_LEMMA_TABLE,
            stopword_list=tp.load_stopwords(),
        )
        out = tp.prepare_text(SAMPLE_ORIGINAL, config)
        # stop words drop first, then lemmas apply to the survivors
        assert out == ["تلوذ", "أكبر", "صغير", "رجا", "مقبول", "سؤال"]
