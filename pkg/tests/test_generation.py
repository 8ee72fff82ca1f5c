import base64
import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import numpy as np
import pytest

from sipp.audio import AudioSignal, encode_wav
from sipp.errors import DataError, ParseShortfallError, ServiceError
from sipp.generation import (
    GenerationConfig,
    HttpLlmClient,
    HttpPplClient,
    HttpStsClient,
    HttpTtsClient,
    CachingTtsClient,
    MockLlmClient,
    MockPplClient,
    MockStsClient,
    MockTtsClient,
    ScorerEndpoints,
    TEMPLATES,
    parse_candidates,
    render_prompt,
)
from sipp.text_metrics import ph_len


class TestTemplates:
    def test_zsl_low(self):
        got = render_prompt(TEMPLATES["zsl_low"], "hello there")
        assert got == ("Generate an intelligible paraphrase for the following "
                       "input sentence: hello there")

    def test_zsl_med_mentions_length(self):
        got = render_prompt(TEMPLATES["zsl_med"], "hello there")
        assert "10-12 words" in got and "spoken-styled" in got
        assert got.endswith("hello there")

    def test_zsl_high_mentions_noise(self):
        got = render_prompt(TEMPLATES["zsl_high"], "hello there")
        assert got.startswith("For a noisy listening environment with babble noise "
                              "at SNR -5")

    def test_pas_n(self):
        got = render_prompt(TEMPLATES["pas_n"], "hello there", n=6)
        assert got.startswith("Generate 6 simple, intelligible, and spoken-styled "
                              "paraphrases with 10-12 words")
        assert "{n}" not in got

    def test_icl_has_samples_and_tail(self):
        got = render_prompt(TEMPLATES["icl"], "hello there")
        assert got.count("=>") == 5
        assert "Similarly, generate an intelligible paraphrase" in got

    def test_input_appears_exactly_once(self):
        marker = "xylophone quartz marker"
        for template in TEMPLATES.values():
            got = render_prompt(template, marker, n=4)
            assert got.count(marker) == 1, template.id

    def test_deterministic(self):
        a = render_prompt(TEMPLATES["pas_n"], "same input", n=3)
        b = render_prompt(TEMPLATES["pas_n"], "same input", n=3)
        assert a == b

    def test_empty_input_rejected(self):
        with pytest.raises(DataError):
            render_prompt(TEMPLATES["zsl_low"], "")


class TestParseCandidates:
    def test_numbered(self):
        assert parse_candidates("1. foo\n2. bar", 2) == ["foo", "bar"]

    def test_quoted(self):
        assert parse_candidates('"baz"', 1) == ["baz"]

    def test_bullets_and_parens(self):
        assert parse_candidates("- one\n* two\n3) three", 3) == ["one", "two", "three"]

    def test_blank_lines_dropped(self):
        assert parse_candidates("\n\nfoo\n\nbar\n", 2) == ["foo", "bar"]

    def test_excess_truncated(self):
        assert parse_candidates("1. a\n2. b\n3. c", 2) == ["a", "b"]

    def test_shortfall_raises(self):
        with pytest.raises(ParseShortfallError):
            parse_candidates("only one line", 3)

    def test_round_trip_with_render(self):
        lines = ["the sky is blue", "water runs downhill", "dogs bark at night"]
        text = "\n".join(f"{i}. {s}" for i, s in enumerate(lines, 1))
        assert parse_candidates(text, len(lines)) == lines


class TestMockLlm:
    def test_canned_reply(self):
        client = MockLlmClient(canned={"p": "canned"})
        assert client.generate("p", GenerationConfig()) == "canned"

    def test_echo_produces_n_lines(self):
        client = MockLlmClient()
        prompt = render_prompt(TEMPLATES["pas_n"], "the cat sat", n=4)
        reply = client.generate(prompt, GenerationConfig(n_candidates=4))
        assert parse_candidates(reply, 4) == ["the cat sat"] * 4

    def test_reply_fn(self):
        client = MockLlmClient(reply_fn=lambda p, c: "fn reply")
        assert client.generate("anything", GenerationConfig()) == "fn reply"


class TestMockTts:
    def test_deterministic(self):
        client = MockTtsClient()
        a = client.synthesize("the cat sat")
        b = client.synthesize("the cat sat")
        np.testing.assert_array_equal(a.samples, b.samples)

    def test_duration_tracks_phonemes(self):
        client = MockTtsClient()
        short = client.synthesize("cat")
        long = client.synthesize("cat cat cat cat")
        assert len(long) > len(short)
        expect = round(0.06 * ph_len("cat") * client.rate_hz)
        assert len(short) == expect

    def test_distinct_texts_distinct_audio(self):
        client = MockTtsClient()
        a = client.synthesize("the cat sat")
        b = client.synthesize("the dog ran")
        assert a.samples.shape != b.samples.shape or not np.array_equal(a.samples, b.samples)

    def test_empty_rejected(self):
        with pytest.raises(DataError):
            MockTtsClient().synthesize("")


class TestCachingTts:
    def test_hit_equals_miss(self, tmp_path):
        client = CachingTtsClient(MockTtsClient(), tmp_path, endpoint_tag="mock")
        first = client.synthesize("green bird")
        second = client.synthesize("green bird")
        np.testing.assert_array_equal(first.samples, second.samples)

    def test_cache_file_created(self, tmp_path):
        client = CachingTtsClient(MockTtsClient(), tmp_path, endpoint_tag="mock")
        client.synthesize("the cat sat")
        assert client.cache_path("the cat sat").exists()
        assert not list(tmp_path.glob("*.tmp*"))

    def test_key_depends_on_voice(self, tmp_path):
        a = CachingTtsClient(MockTtsClient(), tmp_path, "mock", voice="v1")
        b = CachingTtsClient(MockTtsClient(), tmp_path, "mock", voice="v2")
        assert a.cache_path("x") != b.cache_path("x")


class TestMockSts:
    def test_self_similarity(self):
        assert MockStsClient().score("the cat sat", "the cat sat") >= 0.99

    def test_disjoint_zero(self):
        assert MockStsClient().score("red fish", "blue bird") == 0.0

    def test_partial_overlap(self):
        got = MockStsClient().score("i like dogs", "i like cats")
        assert 0.0 < got < 1.0


class TestMockPpl:
    def test_deterministic_positive(self):
        client = MockPplClient()
        assert client.score("the cat sat") == client.score("the cat sat") > 0


class _Handler(BaseHTTPRequestHandler):
    """Scriptable endpoint: each path has a queue of responses."""

    script = {}

    def do_POST(self):
        n = int(self.headers.get("Content-Length", 0))
        self.rfile.read(n)
        queue = self.script.get(self.path, [])
        status, body = queue.pop(0) if queue else (404, {})
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(json.dumps(body).encode())

    def log_message(self, *args):
        pass


@pytest.fixture()
def http_server():
    _Handler.script = {}
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_port}", _Handler.script
    server.shutdown()


def _chat_reply(text):
    return {"choices": [{"message": {"content": text}}]}


class TestHttpClients:
    def test_llm_happy_path(self, http_server, monkeypatch):
        url, script = http_server
        monkeypatch.setenv("SIPP_API_KEY", "k")
        script["/chat"] = [(200, _chat_reply("1. hi"))]
        client = HttpLlmClient(ScorerEndpoints(llm_url=f"{url}/chat"), retry_delay_s=0.0)
        assert client.generate("p", GenerationConfig()) == "1. hi"

    def test_llm_retries_transient_then_succeeds(self, http_server, monkeypatch):
        url, script = http_server
        monkeypatch.setenv("SIPP_API_KEY", "k")
        script["/chat"] = [(503, {}), (200, _chat_reply("ok"))]
        client = HttpLlmClient(ScorerEndpoints(llm_url=f"{url}/chat"), retry_delay_s=0.0)
        assert client.generate("p", GenerationConfig(max_retries=2)) == "ok"

    def test_llm_zero_retries_fails(self, http_server, monkeypatch):
        url, script = http_server
        monkeypatch.setenv("SIPP_API_KEY", "k")
        script["/chat"] = [(503, {}), (200, _chat_reply("ok"))]
        client = HttpLlmClient(ScorerEndpoints(llm_url=f"{url}/chat"), retry_delay_s=0.0)
        with pytest.raises(ServiceError):
            client.generate("p", GenerationConfig(max_retries=0))

    def test_llm_auth_failure(self, http_server, monkeypatch):
        url, script = http_server
        monkeypatch.setenv("SIPP_API_KEY", "bad")
        script["/chat"] = [(401, {})]
        client = HttpLlmClient(ScorerEndpoints(llm_url=f"{url}/chat"), retry_delay_s=0.0)
        with pytest.raises(ServiceError):
            client.generate("p", GenerationConfig())

    def test_llm_missing_key(self, http_server, monkeypatch):
        url, _ = http_server
        monkeypatch.delenv("SIPP_API_KEY", raising=False)
        client = HttpLlmClient(ScorerEndpoints(llm_url=f"{url}/chat"), retry_delay_s=0.0)
        with pytest.raises(DataError):
            client.generate("p", GenerationConfig())

    def test_llm_empty_completion(self, http_server, monkeypatch):
        url, script = http_server
        monkeypatch.setenv("SIPP_API_KEY", "k")
        script["/chat"] = [(200, _chat_reply("  "))]
        client = HttpLlmClient(ScorerEndpoints(llm_url=f"{url}/chat"), retry_delay_s=0.0)
        with pytest.raises(ServiceError):
            client.generate("p", GenerationConfig())

    def test_tts_round_trip(self, http_server):
        url, script = http_server
        sig = AudioSignal(np.sin(np.arange(2205) / 10.0) * 0.4, 22050)
        wav_b64 = base64.b64encode(encode_wav(sig)).decode()
        script["/tts"] = [(200, {"audio_wav_b64": wav_b64, "sample_rate_hz": 22050})]
        client = HttpTtsClient(ScorerEndpoints(tts_url=f"{url}/tts"), retry_delay_s=0.0)
        got = client.synthesize("hello")
        assert got.sample_rate_hz == 22050
        assert len(got) == 2205

    def test_tts_rate_mismatch_rejected(self, http_server):
        url, script = http_server
        sig = AudioSignal([0.1] * 100, 22050)
        wav_b64 = base64.b64encode(encode_wav(sig)).decode()
        script["/tts"] = [(200, {"audio_wav_b64": wav_b64, "sample_rate_hz": 16000})]
        client = HttpTtsClient(ScorerEndpoints(tts_url=f"{url}/tts"), retry_delay_s=0.0)
        with pytest.raises(ServiceError):
            client.synthesize("hello")

    def test_sts_range_validated(self, http_server):
        url, script = http_server
        script["/sts"] = [(200, {"f1": 1.7})]
        client = HttpStsClient(ScorerEndpoints(sts_url=f"{url}/sts"), retry_delay_s=0.0)
        with pytest.raises(ServiceError):
            client.score("a", "b")

    def test_ppl_sign_validated(self, http_server):
        url, script = http_server
        script["/ppl"] = [(200, {"ppl": -3.0})]
        client = HttpPplClient(ScorerEndpoints(ppl_url=f"{url}/ppl"), retry_delay_s=0.0)
        with pytest.raises(ServiceError):
            client.score("a")

    def test_ppl_accepts_plausible_value(self, http_server):
        url, script = http_server
        script["/ppl"] = [(200, {"ppl": 236.65})]
        client = HttpPplClient(ScorerEndpoints(ppl_url=f"{url}/ppl"), retry_delay_s=0.0)
        assert client.score("a") == pytest.approx(236.65)

    def test_unreachable_endpoint(self):
        client = HttpPplClient(
            ScorerEndpoints(ppl_url="http://127.0.0.1:9/ppl"), retry_delay_s=0.0,
            max_retries=1,
        )
        with pytest.raises(ServiceError):
            client.score("a")


class TestEndpointValidation:
    def test_malformed_url_rejected(self):
        with pytest.raises(DataError):
            ScorerEndpoints(llm_url="not a url")

    def test_missing_endpoint_rejected_by_client(self):
        with pytest.raises(DataError):
            HttpLlmClient(ScorerEndpoints())

    def test_empty_urls_allowed_in_config(self):
        ScorerEndpoints()  # mock mode needs no URLs
