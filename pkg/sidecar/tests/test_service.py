import random
from concurrent.futures import ThreadPoolExecutor

import jsonschema
import pytest
from fastapi.testclient import TestClient

from sidecar.app import create_app
from sidecar.audio import decode_wav, from_b64
from sidecar.schemas import REPLY_SCHEMAS

FIXTURE_SENTENCES = [
    "the quick brown fox jumps over the lazy dog today",
    "a small green bird sang well in the old tree",
    "children walked slowly to the school near the river bank",
    "the old man read his paper by the warm fire",
    "heavy rain fell on the tin roof all night long",
]


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


def test_s1_sidecar_contract_tts_sts_ppl_with_schema_validation(client):
    # synthesis: decodable WAV, positive duration
    r = client.post("/tts", json={"text": "hello"})
    assert r.status_code == 200
    jsonschema.validate(r.json(), REPLY_SCHEMAS["tts"])
    samples, rate = decode_wav(from_b64(r.json()["audio_wav_b64"]))
    assert rate == r.json()["sample_rate_hz"]
    assert len(samples) / rate > 0.1

    rng = random.Random(13)
    for sentence in FIXTURE_SENTENCES:
        # similarity: self-score at the top of the range
        r = client.post("/sts", json={"candidate": sentence,
                                      "reference": sentence})
        assert r.status_code == 200
        jsonschema.validate(r.json(), REPLY_SCHEMAS["sts"])
        assert r.json()["f1"] >= 0.99

        # perplexity: natural beats its word-shuffled permutation
        words = sentence.split()
        shuffled = words[:]
        while shuffled == words:
            rng.shuffle(shuffled)
        natural = client.post("/ppl", json={"text": sentence})
        scrambled = client.post("/ppl", json={"text": " ".join(shuffled)})
        assert natural.status_code == 200 and scrambled.status_code == 200
        jsonschema.validate(natural.json(), REPLY_SCHEMAS["ppl"])
        jsonschema.validate(scrambled.json(), REPLY_SCHEMAS["ppl"])
        assert natural.json()["ppl"] < scrambled.json()["ppl"]


class TestTtsEndpoint:
    def test_empty_text_400(self, client):
        assert client.post("/tts", json={"text": ""}).status_code == 400

    def test_missing_field_400(self, client):
        assert client.post("/tts", json={}).status_code == 400

    def test_non_string_400(self, client):
        assert client.post("/tts", json={"text": 7}).status_code == 400

    def test_malformed_body_400(self, client):
        r = client.post("/tts", content=b"not json",
                        headers={"content-type": "application/json"})
        assert r.status_code == 400

    def test_longer_text_longer_audio(self, client):
        short = client.post("/tts", json={"text": "hello"}).json()
        longer = client.post(
            "/tts",
            json={"text": "a much longer sentence should last longer"},
        ).json()
        n_short = len(decode_wav(from_b64(short["audio_wav_b64"]))[0])
        n_long = len(decode_wav(from_b64(longer["audio_wav_b64"]))[0])
        assert n_long > n_short

    def test_deterministic(self, client):
        a = client.post("/tts", json={"text": "green tea"}).json()
        b = client.post("/tts", json={"text": "green tea"}).json()
        assert a == b


class TestStsEndpoint:
    def test_missing_field_400(self, client):
        assert client.post("/sts", json={"candidate": "x"}).status_code == 400

    def test_empty_reference_400(self, client):
        r = client.post("/sts", json={"candidate": "x", "reference": " "})
        assert r.status_code == 400

    def test_unrelated_below_self_similarity(self, client):
        def f1(a, b):
            return client.post("/sts", json={"candidate": a,
                                             "reference": b}).json()["f1"]
        a = "the quick brown fox jumps over the lazy dog"
        b = "quantum flux capacitors hum beneath the city"
        assert f1(a, b) < f1(a, a)
        assert f1(a, b) < f1(b, b)

    def test_range(self, client):
        r = client.post("/sts", json={"candidate": "warm fresh bread",
                                      "reference": "fresh warm bread"})
        assert 0.0 <= r.json()["f1"] <= 1.0


class TestPplEndpoint:
    def test_empty_400(self, client):
        assert client.post("/ppl", json={"text": " "}).status_code == 400

    def test_same_text_same_ppl(self, client):
        a = client.post("/ppl", json={"text": "the cat sat on the mat"}).json()
        b = client.post("/ppl", json={"text": "the cat sat on the mat"}).json()
        assert a == b

    def test_positive(self, client):
        r = client.post("/ppl", json={"text": "unknown zyzzyva tokens"})
        assert r.json()["ppl"] > 0


class TestHealthz:
    def test_reports_models(self, client):
        r = client.get("/healthz")
        assert r.status_code == 200
        jsonschema.validate(r.json(), REPLY_SCHEMAS["healthz"])
        assert r.json()["backend"] == "lite"
        assert r.json()["models"]["tts"] == "builtin-formant"


def test_concurrent_requests_all_succeed(client):
    def hit(i):
        return client.post("/sts", json={
            "candidate": FIXTURE_SENTENCES[i % len(FIXTURE_SENTENCES)],
            "reference": FIXTURE_SENTENCES[0],
        }).status_code

    with ThreadPoolExecutor(max_workers=8) as pool:
        codes = list(pool.map(hit, range(24)))
    assert codes == [200] * 24


@pytest.fixture(scope="module")
def neural_client():
    try:
        from sidecar.neural import NeuralBackend
        backend = NeuralBackend(cpu=True)
    except Exception as exc:
        pytest.skip(f"neural weights unavailable: {type(exc).__name__}")
    return TestClient(create_app(backend))


class TestNeuralBackend:
    def test_self_similarity(self, neural_client):
        r = neural_client.post("/sts", json={
            "candidate": FIXTURE_SENTENCES[0],
            "reference": FIXTURE_SENTENCES[0]})
        assert r.status_code == 200
        assert r.json()["f1"] >= 0.99

    def test_natural_beats_shuffled(self, neural_client):
        s = FIXTURE_SENTENCES[1]
        shuffled = " ".join(reversed(s.split()))
        a = neural_client.post("/ppl", json={"text": s}).json()["ppl"]
        b = neural_client.post("/ppl", json={"text": shuffled}).json()["ppl"]
        assert a < b
