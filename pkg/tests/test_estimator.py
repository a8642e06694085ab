import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from argrecon.corpus import load_textbook_corpus
from argrecon.estimator import ArgumentGraphReconstructor
from argrecon.llm import ReplayBackend
from argrecon.pipeline import PipelineConfig
from argrecon.validation import check_same_length, check_texts, check_thresholds


@pytest.fixture
def fixture_backend(data_dir):
    return ReplayBackend.from_file(data_dir / "fixture_transcript.jsonl")


def test_params_round_trip_and_clone(fixture_backend):
    est = ArgumentGraphReconstructor(fixture_backend, enable_merge=False, seed=7)
    params = est.get_params()
    assert params["enable_merge"] is False and params["seed"] == 7
    twin = clone(est)
    assert twin.get_params()["seed"] == 7
    # a cloned replay backend starts from the beginning of the same transcript
    assert twin.backend is not fixture_backend
    assert twin.backend.transcript is fixture_backend.transcript
    twin.set_params(seed=8)
    assert est.seed == 7


def test_from_config_mirrors_pipeline_config(fixture_backend):
    cfg = PipelineConfig(enable_implicit=False, max_parse_retries=3)
    est = ArgumentGraphReconstructor.from_config(fixture_backend, cfg).fit()
    assert est.config_ == cfg


def test_transform_on_fixture_corpus(fixture_backend, data_dir, teacher_golden):
    docs = load_textbook_corpus(data_dir / "fixture_corpus.json")
    est = ArgumentGraphReconstructor(fixture_backend)
    graphs = est.fit_transform(np.array([d.text for d in docs], dtype=object))
    assert len(graphs) == 3
    assert graphs[0].to_json().count('"kind": "implicit"') == 2
    assert len(graphs[2].nodes) == 1


def test_parallel_transform_matches_serial(data_dir):
    docs = load_textbook_corpus(data_dir / "fixture_corpus.json")
    texts = [d.text for d in docs]
    out = []
    for jobs in (1, 3):
        backend = ReplayBackend.from_file(data_dir / "fixture_transcript.jsonl")
        est = ArgumentGraphReconstructor(backend, n_jobs=jobs).fit()
        out.append([g.to_json() for g in est.transform(texts)])
    assert out[0] == out[1]


def test_score_is_mean_span_f1(data_dir):
    docs = load_textbook_corpus(data_dir / "fixture_corpus.json")
    backend = ReplayBackend.from_file(data_dir / "fixture_transcript.jsonl")
    est = ArgumentGraphReconstructor(backend).fit()
    assert est.score([d.text for d in docs], [d.gold for d in docs]) == 1.0


def test_unfitted_and_bad_params(fixture_backend):
    with pytest.raises(NotFittedError):
        ArgumentGraphReconstructor(fixture_backend).transform(["x"])
    with pytest.raises(ValueError):
        ArgumentGraphReconstructor(None).fit()
    with pytest.raises(ValueError):
        ArgumentGraphReconstructor(fixture_backend, n_jobs=0).fit()


def test_validation_helpers():
    assert check_texts(np.array(["a", "b"])) == ["a", "b"]
    with pytest.raises(TypeError):
        check_texts("just one string")
    with pytest.raises(ValueError):
        check_texts(["ok", "  "])
    with pytest.raises(ValueError):
        check_texts(np.array([["a"]]))
    assert check_thresholds([0, 0.5, 1]) == [0.0, 0.5, 1.0]
    for bad in ([0.5, 0.2], [0.2, 0.2], [-0.1], [], ["x"]):
        with pytest.raises(ValueError):
            check_thresholds(bad)
    with pytest.raises(ValueError):
        check_same_length([1], [1, 2])
