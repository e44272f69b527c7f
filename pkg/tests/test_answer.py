import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest
from hypothesis import given, settings, strategies as st

from selmem.answer import (
    API_KEY_ENV,
    EXTERNAL,
    EmptyContextError,
    EndpointConfig,
    EndpointError,
    MalformedResponseError,
    answer_external,
    answer_extractive,
    content_words,
    parse_citations,
    parse_response,
    split_sentences,
    stopwords,
)
from selmem.packing import PackedContext


def ctx(*bodies):
    return PackedContext(blocks=[(f"m{i + 1}", f"[MEM_ID: m{i + 1}]", b) for i, b in enumerate(bodies)])


def test_single_sentence_context():
    ans = answer_extractive(ctx("Only this sentence."), "anything at all?")
    assert ans.text == "Only this sentence."
    assert ans.cited_mem_ids == ["m1"]


def test_picks_overlapping_sentence():
    body = "The weather was mild. The study used the SQuAD dataset. Lunch was served at noon."
    ans = answer_extractive(ctx("Unrelated prose here.", body), "What dataset was used?")
    assert ans.text == "The study used the SQuAD dataset."
    assert ans.cited_mem_ids == ["m2"]


def test_tie_goes_to_earlier_block():
    ans = answer_extractive(ctx("Paris is the capital.", "Paris is the capital."), "What is the capital?")
    assert ans.cited_mem_ids == ["m1"]


def test_tie_goes_to_earlier_sentence():
    ans = answer_extractive(ctx("Red apples grow. Red apples grow fast."), "red apples")
    assert ans.text == "Red apples grow."


def test_empty_context_rejected():
    with pytest.raises(EmptyContextError):
        answer_extractive(PackedContext(), "q")


def test_stopword_list_size():
    sw = stopwords()
    assert 40 <= len(sw) <= 80
    assert {"the", "what", "is"} <= sw
    assert content_words("What dataset was used?") == ["dataset", "used"]


def test_sentence_split():
    assert split_sentences("One. Two? Three! Four") == ["One.", "Two?", "Three!", "Four"]


@settings(max_examples=80)
@given(st.lists(st.text(alphabet="abc XYZ.?!", min_size=1, max_size=60), min_size=1, max_size=4), st.text(max_size=30))
def test_answer_is_substring_of_cited_block(bodies, question):
    c = ctx(*bodies)
    try:
        ans = answer_extractive(c, question)
    except EmptyContextError:
        assert all(not b.strip() for b in bodies)
        return
    (cited,) = ans.cited_mem_ids
    body = dict((m, b) for m, _, b in c.blocks)[cited]
    assert ans.text in body
    assert answer_extractive(c, question) == ans


def test_citation_parsing():
    assert parse_citations("Paris [CITE: m2]") == ["m2"]
    assert parse_citations("a [CITE: m1] b [CITE:m3] c [CITE: m1]") == ["m1", "m3"]
    assert parse_citations("no tags") == []


def test_parse_response_errors():
    assert parse_response(b'{"choices": [{"message": {"content": "hi"}}]}') == "hi"
    for bad in (b"not json", b"{}", b'{"choices": []}', b'{"choices": [{"message": {"content": 3}}]}'):
        with pytest.raises(MalformedResponseError):
            parse_response(bad)


# -- external endpoint against a local server ------------------------------


class _Handler(BaseHTTPRequestHandler):
    reply = b""
    seen = []

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        type(self).seen.append((self.path, dict(self.headers), json.loads(self.rfile.read(length))))
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(type(self).reply)

    def log_message(self, *args):
        pass


@pytest.fixture
def server():
    handler = type("H", (_Handler,), {"reply": b"", "seen": []})
    httpd = HTTPServer(("127.0.0.1", 0), handler)
    t = threading.Thread(target=httpd.serve_forever, daemon=True)
    t.start()
    yield handler, f"http://127.0.0.1:{httpd.server_port}/v1"
    httpd.shutdown()
    httpd.server_close()


def test_external_success(server, monkeypatch):
    handler, url = server
    handler.reply = json.dumps({"choices": [{"message": {"content": "Paris [CITE: m2]"}}]}).encode()
    monkeypatch.setenv(API_KEY_ENV, "secret")
    ans = answer_external(ctx("France's capital is Paris."), "Capital?", EndpointConfig(url, model="tiny"))
    assert ans.text == "Paris [CITE: m2]"
    assert ans.cited_mem_ids == ["m2"] and ans.source == EXTERNAL
    path, headers, body = handler.seen[0]
    assert path == "/v1/chat/completions"
    assert headers["Authorization"] == "Bearer secret"
    assert body["model"] == "tiny" and body["temperature"] == 0
    assert [m["role"] for m in body["messages"]] == ["system", "user"]
    assert "Capital?" in body["messages"][1]["content"]


def test_external_malformed(server):
    handler, url = server
    handler.reply = b'{"result": "oops"}'
    with pytest.raises(MalformedResponseError):
        answer_external(ctx("x."), "q", EndpointConfig(url))


def test_external_unreachable_after_retries():
    import socket

    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    cfg = EndpointConfig(f"http://127.0.0.1:{port}", timeout=0.5, retries=2, backoff=0.0)
    with pytest.raises(EndpointError, match="3 attempts"):
        answer_external(ctx("x."), "q", cfg)
