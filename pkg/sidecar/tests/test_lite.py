import random

import pytest

from sidecar.audio import decode_wav, encode_wav, from_b64, to_b64
from sidecar.lite import CORPUS, LitePpl, LiteSts, LiteTts

import numpy as np


class TestAudioCodec:
    def test_round_trip(self):
        rng = np.random.default_rng(3)
        sig = 0.5 * rng.normal(size=4000)
        back, rate = decode_wav(encode_wav(sig, 16000))
        assert rate == 16000
        assert len(back) == 4000
        assert np.max(np.abs(back - np.clip(sig, -1, 1))) < 1e-3

    def test_clipping(self):
        back, _ = decode_wav(encode_wav(np.array([2.0, -2.0]), 8000))
        assert back[0] == pytest.approx(1.0, abs=1e-4)
        assert back[1] == pytest.approx(-1.0, abs=1e-4)

    def test_b64_round_trip(self):
        blob = b"\x00\x01RIFFdata"
        assert from_b64(to_b64(blob)) == blob


class TestLiteTts:
    def test_deterministic(self):
        tts = LiteTts()
        assert tts.synthesize("green tea") == tts.synthesize("green tea")

    def test_duration_grows_with_text(self):
        tts = LiteTts()
        short, rate = tts.synthesize("hello")
        longer, _ = tts.synthesize("hello there my old friend from the coast")
        assert len(decode_wav(longer)[0]) > len(decode_wav(short)[0])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            LiteTts().synthesize("   ")

    def test_no_letters_rejected(self):
        with pytest.raises(ValueError):
            LiteTts().synthesize("12345")

    def test_output_is_sane_audio(self):
        wav, rate = LiteTts().synthesize("a quiet word")
        samples, got_rate = decode_wav(wav)
        assert got_rate == rate
        assert len(samples) / rate > 0.1
        assert float(np.max(np.abs(samples))) <= 1.0


class TestLiteSts:
    def test_identity(self):
        sts = LiteSts()
        assert sts.score("the red bird", "the red bird") == 1.0

    def test_case_and_spacing_fold(self):
        sts = LiteSts()
        assert sts.score("The  Red Bird", "the red bird") == 1.0

    def test_unrelated_low(self):
        sts = LiteSts()
        assert sts.score("the red bird", "quantum flux hums") < 0.2

    def test_symmetric(self):
        sts = LiteSts()
        a, b = "the cat sat on the mat", "a cat sat near the mat"
        assert sts.score(a, b) == pytest.approx(sts.score(b, a))

    def test_range(self):
        sts = LiteSts()
        v = sts.score("warm bread and jam", "fresh bread with jam")
        assert 0.0 < v < 1.0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            LiteSts().score("", "x")
        with pytest.raises(ValueError):
            LiteSts().score("x", " ")


class TestLitePpl:
    def test_positive_and_deterministic(self):
        ppl = LitePpl()
        a = ppl.score("the cat sat on the mat")
        assert a > 0
        assert ppl.score("the cat sat on the mat") == a

    def test_word_order_matters(self):
        ppl = LitePpl()
        natural = "the old man read his paper by the fire"
        scrambled = "paper the by fire old his the read man"
        assert ppl.score(natural) < ppl.score(scrambled)

    def test_unknown_words_still_score(self):
        ppl = LitePpl()
        assert ppl.score("zyzzyva quokka axolotl") > 0

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            LitePpl().score("...")

    def test_corpus_is_lowercase_plain_text(self):
        for sentence in CORPUS:
            assert sentence == sentence.lower()
            assert sentence.strip() == sentence

    def test_shuffles_of_corpus_style_sentences(self):
        ppl = LitePpl()
        rng = random.Random(99)
        wins = 0
        sentences = [
            "the lamp in the window burned all night",
            "she walked to the market in the morning",
            "a small bird sang in the old tree",
            "the train left the station before the storm",
        ]
        for s in sentences:
            words = s.split()
            shuffled = words[:]
            while shuffled == words:
                rng.shuffle(shuffled)
            if ppl.score(s) < ppl.score(" ".join(shuffled)):
                wins += 1
        assert wins == len(sentences)
