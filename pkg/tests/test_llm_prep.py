import json
import threading

import httpx
import pytest

from subject_indexer.corpus import Corpus, DocumentRecord, mix_synthetic
from subject_indexer.exceptions import EmptyResponse, EndpointError, LlmError, NumberingMismatch
from subject_indexer.llm_prep import (
    TRANSLATE_RECORD,
    TRANSLATE_TERMS,
    ChatCompletionsEndpoint,
    LlmEndpointConfig,
    MockEndpoint,
    PromptTemplate,
    TemplateError,
    choose_extra_subject,
    parse_numbered_list,
    split_title_abstract,
    synthesize_parts,
    synthesize_record,
    translate_corpus,
    translate_record,
    translate_terms,
    translate_vocabulary,
)
from subject_indexer.vocabulary import Subject, SubjectVocabulary


class Scripted:
    """Endpoint returning canned responses, recording prompts."""

    max_in_flight = 1

    def __init__(self, *responses):
        self.responses = list(responses)
        self.calls = []

    def complete(self, system, user):
        self.calls.append((system, user))
        return self.responses.pop(0)


def test_identity_translation_changes_only_id_and_language():
    rec = DocumentRecord("d1", "de", "Titel", "Zusammenfassung des Textes", frozenset({"gnd:1"}))
    out = translate_record(rec, "en", MockEndpoint())
    assert (out.id, out.language) == ("d1-en", "en")
    assert (out.title, out.abstract, out.subjects) == (rec.title, rec.abstract, rec.subjects)


def test_split_title_abstract():
    assert split_title_abstract("Titel\n\nZusammenfassung...") == ("Titel", "Zusammenfassung...")
    assert split_title_abstract("Only a title\n") == ("Only a title", "")
    assert split_title_abstract("T\n  \nA\n\nB") == ("T", "A\n\nB")


def test_empty_response():
    rec = DocumentRecord("d9", "en", "T")
    with pytest.raises(EmptyResponse) as err:
        translate_record(rec, "de", Scripted("  \n"))
    assert "d9" in str(err.value)


def test_term_translation_example():
    mock = MockEndpoint({"Familie": "Family", "Schlagwort": "Subject heading"})
    assert translate_terms(["Familie", "Schlagwort"], mock) == ["Family", "Subject heading"]


def test_numbering_mismatch():
    with pytest.raises(NumberingMismatch):
        translate_terms(["a", "b"], Scripted("1. X\n3. Y"))
    with pytest.raises(NumberingMismatch):
        parse_numbered_list("1. X", 2, "batch")


def test_batching_250_terms():
    mock = MockEndpoint(max_in_flight=3)
    terms = [f"Begriff {i}" for i in range(250)]
    out = translate_terms(terms, mock, batch_size=100)
    assert len(mock.calls) == 3
    assert out == terms  # unknown terms come back unchanged, in order
    listings = [user.rsplit("to English:\n\n", 1)[1] for _, user in mock.calls]
    assert sorted(len(x.splitlines()) for x in listings) == [50, 100, 100]


def test_translate_vocabulary_leaves_alternates():
    vocab = SubjectVocabulary(
        [Subject("gnd:1", {"de": "Familie"}, {"de": ["Sippe"]}), Subject("gnd:2", {"de": "Schlagwort"})]
    )
    out = translate_vocabulary(vocab, MockEndpoint({"Familie": "Family", "Schlagwort": "Subject heading"}))
    assert out["gnd:1"].pref_label == {"de": "Familie", "en": "Family"}
    assert out["gnd:1"].alt_labels == {"de": ("Sippe",)}
    assert out.lookup("subject heading", "en") == {"gnd:2"}


VOCAB = SubjectVocabulary([Subject(f"gnd:{i}", {"de": f"Wort{i}", "en": f"word{i}"}) for i in range(1, 3)])


def test_forced_extra_subject():
    rec = DocumentRecord("r1", "en", "Title", "Text", frozenset({"gnd:1"}))
    out = synthesize_record(rec, VOCAB, MockEndpoint())
    assert out.subjects == {"gnd:1", "gnd:2"}
    assert out.id == "r1-syn1" and out.language == "en"


def test_extra_subject_is_seeded():
    vocab = SubjectVocabulary([Subject(f"gnd:{i}", {"en": f"w{i}"}) for i in range(50)])
    rec = DocumentRecord("r1", "en", "T", "", frozenset({"gnd:0"}))
    picks = {choose_extra_subject(rec, vocab, seed=4, part=1) for _ in range(5)}
    assert len(picks) == 1 and "gnd:0" not in picks
    by_part = {choose_extra_subject(rec, vocab, seed=4, part=p) for p in range(1, 20)}
    assert len(by_part) > 1


def test_synthesis_needs_gold_and_candidates():
    with pytest.raises(LlmError):
        synthesize_record(DocumentRecord("r", "en", "T"), VOCAB, MockEndpoint())
    full = DocumentRecord("r", "en", "T", "", frozenset({"gnd:1", "gnd:2"}))
    with pytest.raises(LlmError):
        synthesize_record(full, VOCAB, MockEndpoint())


def test_three_parts_over_100_records():
    vocab = SubjectVocabulary([Subject(f"gnd:{i}", {"en": f"w{i}"}) for i in range(20)])
    corpus = Corpus(DocumentRecord(f"r{i}", "en", f"T{i}", "", frozenset({f"gnd:{i % 20}"})) for i in range(100))
    mock = MockEndpoint(max_in_flight=8)
    parts = synthesize_parts(corpus, vocab, mock, parts=3, seed=1)
    assert sum(len(p) for p in parts) == 300
    assert len(mix_synthetic(corpus, parts)) == 400
    # concurrency does not change the result or its order
    serial = synthesize_parts(corpus, vocab, MockEndpoint(max_in_flight=1), parts=3, seed=1)
    assert [p.records for p in parts] == [p.records for p in serial]


def test_translate_corpus_keeps_order_under_concurrency():
    corpus = Corpus(DocumentRecord(f"r{i}", "de", f"T{i}") for i in range(40))
    out = translate_corpus(corpus, "en", MockEndpoint(max_in_flight=8))
    assert out.ids() == [f"r{i}-en" for i in range(40)]


def test_templates():
    assert TRANSLATE_RECORD.placeholders == {"LANGUAGE", "TITLE", "DESCRIPTION"}
    assert TRANSLATE_TERMS.placeholders == {"LIST_OF_TERMS"}
    with pytest.raises(TemplateError):
        TRANSLATE_RECORD.render(LANGUAGE="English")
    # placeholder-like text inside a value is not expanded again
    _, user = PromptTemplate("s", "<A> <B>").render(A="<B>", B="b")
    assert user == "<B> b"


def test_templates_load_from_directory(tmp_path):
    (tmp_path / "x.system.txt").write_text("sys\n", encoding="utf-8")
    (tmp_path / "x.user.txt").write_text("hello <NAME>", encoding="utf-8")
    t = PromptTemplate.load("x", tmp_path)
    assert t.render(NAME="you") == ("sys", "hello you")


def chat_reply(content):
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": content}}]})


def test_wire_format(monkeypatch):
    monkeypatch.setenv("TEST_LLM_KEY", "secret")
    seen = []

    def handler(request):
        seen.append(request)
        return chat_reply("Title\n\nAbstract")

    config = LlmEndpointConfig("http://llm.local/v1", "some-model", api_key_env="TEST_LLM_KEY")
    endpoint = ChatCompletionsEndpoint(config, transport=httpx.MockTransport(handler))
    rec = translate_record(DocumentRecord("d", "de", "Titel", "Text"), "en", endpoint)
    assert (rec.title, rec.abstract) == ("Title", "Abstract")

    request = seen[0]
    assert str(request.url) == "http://llm.local/v1/chat/completions"
    assert request.headers["Authorization"] == "Bearer secret"
    body = json.loads(request.content)
    assert body["model"] == "some-model" and body["temperature"] == 0
    assert [m["role"] for m in body["messages"]] == ["system", "user"]
    assert body["messages"][0]["content"] == TRANSLATE_RECORD.system


def test_retries_with_backoff():
    statuses = [503, 429]
    sleeps = []

    def handler(request):
        if statuses:
            return httpx.Response(statuses.pop(0))
        return chat_reply("ok")

    config = LlmEndpointConfig("http://llm.local/v1", "m", retries=3, backoff=0.5)
    endpoint = ChatCompletionsEndpoint(config, transport=httpx.MockTransport(handler), sleep=sleeps.append)
    assert endpoint.complete("s", "u") == "ok"
    assert sleeps == [0.5, 1.0]


def test_gives_up_and_does_not_retry_client_errors():
    calls = []

    def failing(request):
        calls.append(1)
        raise httpx.ConnectError("refused")

    config = LlmEndpointConfig("http://llm.local/v1", "m", retries=2, backoff=0)
    endpoint = ChatCompletionsEndpoint(config, transport=httpx.MockTransport(failing), sleep=lambda s: None)
    with pytest.raises(EndpointError):
        endpoint.complete("s", "u")
    assert len(calls) == 3

    calls.clear()

    def bad_request(request):
        calls.append(1)
        return httpx.Response(400, text="bad")

    endpoint = ChatCompletionsEndpoint(config, transport=httpx.MockTransport(bad_request), sleep=lambda s: None)
    with pytest.raises(EndpointError):
        endpoint.complete("s", "u")
    assert len(calls) == 1


def test_in_flight_limit_is_respected():
    lock = threading.Lock()
    state = {"now": 0, "peak": 0}
    release = threading.Event()

    class Slow:
        max_in_flight = 3

        def complete(self, system, user):
            with lock:
                state["now"] += 1
                state["peak"] = max(state["peak"], state["now"])
            release.wait(0.02)
            with lock:
                state["now"] -= 1
            return user.rsplit(":\n\n", 1)[-1]

    corpus = Corpus(DocumentRecord(f"r{i}", "en", f"T{i}") for i in range(20))
    translate_corpus(corpus, "de", Slow())
    assert 1 <= state["peak"] <= 3
