import json
import threading

import httpx
import pytest

from argrecon.errors import EmptyList, ProviderError, ReplayMiss, TransportFailure, UnparseableResponse
from argrecon.graph import Polarity
from argrecon.llm import (
    ChatRequest,
    ChatResponse,
    FunctionBackend,
    HttpBackend,
    RecordingBackend,
    ReplayBackend,
    Transcript,
    parse_enumerated_components,
    parse_groups,
    parse_id_list,
    parse_labeled_ids,
    parse_polarity,
)


def req(user="u", **kw):
    return ChatRequest("sys", user, "m", **kw)


# -- requests ----------------------------------------------------------------

def test_digest_covers_answer_relevant_fields():
    base = req()
    assert base.digest() == req().digest()
    assert base.digest() != req("other").digest()
    assert base.digest() != req(seed=1).digest()
    assert base.digest() != req(temperature=0.5).digest()
    # the output budget does not change what the model says
    assert base.digest() == req(max_output_tokens=10).digest()
    # 0 and 0.0 are the same temperature
    assert req(temperature=0).digest() == req(temperature=0.0).digest()


def test_request_validation():
    with pytest.raises(ValueError):
        ChatRequest("", "u", "m")
    with pytest.raises(ValueError):
        req(temperature=-1)
    with pytest.raises(ValueError):
        req(max_output_tokens=0)
    with pytest.raises(ValueError):
        ChatResponse("x", (-1, 2))


# -- replay / record ---------------------------------------------------------

def test_single_entry_replay():
    t = Transcript()
    t.append(req("q1"), ChatResponse("a1"))
    backend = ReplayBackend(t)
    assert backend.complete(req("q1")).text == "a1"


def test_replay_miss():
    t = Transcript()
    t.append(req("q1"), ChatResponse("a1"))
    with pytest.raises(ReplayMiss):
        ReplayBackend(t).complete(req("q2"))


def test_repeated_requests_replay_in_order_then_exhaust():
    t = Transcript()
    t.append(req("q"), ChatResponse("first"))
    t.append(req("q"), ChatResponse("second"))
    backend = ReplayBackend(t)
    assert [backend.complete(req("q")).text for _ in range(2)] == ["first", "second"]
    with pytest.raises(ReplayMiss, match="exhausted"):
        backend.complete(req("q"))


def test_recording_round_trip(tmp_path):
    recorder = RecordingBackend(FunctionBackend(lambda r: "0"))
    first = recorder.complete(req("q")).text
    path = tmp_path / "t.jsonl"
    recorder.transcript.save(path)
    again = ReplayBackend.from_file(path).complete(req("q")).text
    assert first == again == "0"


def test_transcript_file_layout(tmp_path):
    t = Transcript(meta={"model_name": "m"})
    t.append(req("q"), ChatResponse("a", (3, 1)))
    path = tmp_path / "t.jsonl"
    t.save(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[0]) == {"meta": {"model_name": "m"}}
    entry = json.loads(lines[1])
    assert entry["digest"] == req("q").digest()
    loaded = Transcript.load(path)
    assert loaded.entries[0].response == ChatResponse("a", (3, 1))
    assert loaded.meta == {"model_name": "m"}


def test_recording_is_thread_safe():
    recorder = RecordingBackend(FunctionBackend(lambda r: r.user_prompt.upper()))
    threads = [threading.Thread(target=lambda i=i: [recorder.complete(req(f"q{i}-{k}"))
                                                     for k in range(50)]) for i in range(8)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    assert len(recorder.transcript.entries) == 400
    replay = ReplayBackend(recorder.transcript)
    assert replay.complete(req("q3-7")).text == "Q3-7"


# -- HTTP --------------------------------------------------------------------

def ok_body(text="hello"):
    return {"choices": [{"message": {"content": text}}],
            "usage": {"prompt_tokens": 5, "completion_tokens": 2}}


def http_backend(handler, sleeps):
    client = httpx.Client(transport=httpx.MockTransport(handler))
    return HttpBackend("https://example.invalid/v1/chat", "secret", client=client,
                       sleep=sleeps.append)


def test_http_success_and_payload():
    seen = []

    def handler(request):
        seen.append(request)
        return httpx.Response(200, json=ok_body())

    sleeps = []
    resp = http_backend(handler, sleeps).complete(req("question", seed=7))
    assert resp == ChatResponse("hello", (5, 2))
    body = json.loads(seen[0].content)
    assert body["messages"][1] == {"role": "user", "content": "question"}
    assert body["seed"] == 7 and body["model"] == "m"
    assert seen[0].headers["authorization"] == "Bearer secret"
    assert sleeps == []


def test_http_retries_with_exponential_backoff():
    statuses = iter([503, 429, 200])

    def handler(request):
        code = next(statuses)
        return httpx.Response(code, json=ok_body() if code == 200 else {"error": "busy"})

    sleeps = []
    assert http_backend(handler, sleeps).complete(req()).text == "hello"
    assert sleeps == [1.0, 2.0]


def test_http_transport_failure_after_three_attempts():
    calls = []

    def handler(request):
        calls.append(1)
        raise httpx.ConnectError("refused", request=request)

    sleeps = []
    with pytest.raises(TransportFailure):
        http_backend(handler, sleeps).complete(req())
    assert len(calls) == 3 and sleeps == [1.0, 2.0]


def test_http_client_error_is_not_retried_and_keeps_body():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(400, text="bad model")

    with pytest.raises(ProviderError) as info:
        http_backend(handler, []).complete(req())
    assert info.value.status_code == 400 and info.value.body == "bad model"
    assert len(calls) == 1


def test_http_persistent_5xx_surfaces_provider_error():
    with pytest.raises(ProviderError) as info:
        http_backend(lambda r: httpx.Response(500, text="boom"), []).complete(req())
    assert info.value.status_code == 500


def test_http_needs_credential():
    with pytest.raises(ValueError):
        HttpBackend("https://example.invalid", "")


# -- parsers -----------------------------------------------------------------

def test_enumerated_list():
    assert parse_enumerated_components("1. A\n2. B") == ["A", "B"]


def test_enumerated_list_mixed_markers_and_gaps():
    assert parse_enumerated_components("intro text\n1) A\n\n3: C") == ["A", "C"]


def test_enumerated_list_empty():
    with pytest.raises(EmptyList):
        parse_enumerated_components("no numbers here")


def test_id_list_zero_means_none():
    assert parse_id_list("0", {1, 2, 3}) == []


def test_id_list_from_prose():
    assert parse_id_list("Components 2 and 3 support it", {1, 2, 3}) == [2, 3]


def test_id_list_garbage():
    with pytest.raises(UnparseableResponse):
        parse_id_list("banana", {1, 2})


def test_id_list_primed_labels_and_decimals():
    assert parse_id_list("6' and 2", ["2", "6'"]) == ["6'", "2"]
    with pytest.raises(UnparseableResponse):
        parse_id_list("3.5", {3, 5})


def test_labeled_ids():
    out = parse_labeled_ids("2: support\n4: attack\n5: partial attack\n9: support", ["2", "4", "5"])
    assert out == [("2", Polarity.SUPPORT), ("4", Polarity.ATTACK), ("5", Polarity.PARTIAL_ATTACK)]
    assert parse_labeled_ids("0", ["1"]) == []
    with pytest.raises(UnparseableResponse):
        parse_labeled_ids("none of them", ["1"])


def test_polarity_words():
    assert parse_polarity("it attacks") is Polarity.ATTACK
    assert parse_polarity("Partially attack") is Polarity.PARTIAL_ATTACK
    assert parse_polarity("whatever") is Polarity.SUPPORT


def test_groups():
    assert parse_groups("2, 3\n4 and 5") == [["2", "3"], ["4", "5"]]
    assert parse_groups("0") == []
    with pytest.raises(UnparseableResponse):
        parse_groups("nothing to merge")
