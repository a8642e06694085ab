import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from argrecon.graph import ArgumentGraph  # noqa: E402
from argrecon.llm import FunctionBackend, ReplayBackend  # noqa: E402

DATA = resources.files("argrecon") / "data"


@pytest.fixture
def data_dir() -> Path:
    return Path(str(DATA))


@pytest.fixture
def teacher_text(data_dir) -> str:
    return (data_dir / "teacher.txt").read_text(encoding="utf-8")


@pytest.fixture
def teacher_replay(data_dir) -> ReplayBackend:
    return ReplayBackend.from_file(data_dir / "teacher_transcript.jsonl")


@pytest.fixture
def teacher_golden(data_dir) -> ArgumentGraph:
    return ArgumentGraph.from_json((data_dir / "teacher_golden.json").read_text(encoding="utf-8"))


def stage_of(request) -> str:
    """Which prompt template produced a request (by its opening sentence)."""
    head = request.user_prompt.split("\n\nText:", 1)[0]
    for stage, marker in [("components", "Identify and enumerate"),
                          ("merge", "should be merged"),
                          ("rewrite", "Rewrite each"),
                          ("conclusion", "main conclusion"),
                          ("premises", "Consider the target"),
                          ("attach", "not yet connected"),
                          ("structure", "jointly"),
                          ("implicit", "State the implicit"),
                          ("undercut", "undercut")]:
        if marker in head:
            return stage
    raise AssertionError(f"unknown prompt: {head[:80]!r}")


def scripted(answers: dict, default: str = "0") -> FunctionBackend:
    """Backend answering by stage; a list value is consumed one answer per call."""
    queues = {k: list(v) if isinstance(v, list) else v for k, v in answers.items()}
    calls = []

    def fn(request):
        stage = stage_of(request)
        calls.append((stage, request.user_prompt))
        value = queues.get(stage, default)
        if isinstance(value, list):
            return value.pop(0) if value else default
        if callable(value):
            return value(request.user_prompt)
        return value

    backend = FunctionBackend(fn)
    backend.calls = calls
    return backend


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance and acceptance.LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance.LINES, key=lambda l: int(l.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
