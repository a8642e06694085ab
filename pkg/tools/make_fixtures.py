"""Regenerate the shipped fixtures in src/argrecon/data/.

The model answers are scripted per document below and recorded through the
normal pipeline, so the transcript digests always match the current prompt
templates. Rerun after editing a template:

    python3 tools/make_fixtures.py

The golden Teacher graph is built by hand through the graph API, not by the
pipeline, so the golden-replay test compares two independent routes.
"""

from __future__ import annotations

import re
import sys
from pathlib import Path

from argrecon.corpus import Document, save_corpus
from argrecon.diagram import to_dot
from argrecon.evaluation import GoldAnnotation, GoldComponent, GoldRelation
from argrecon.graph import ArgumentGraph, ComponentKind, Polarity, Role
from argrecon.llm import FunctionBackend, RecordingBackend, Transcript
from argrecon.pipeline import PipelineConfig, run_pipeline

DATA = Path(__file__).resolve().parents[1] / "src" / "argrecon" / "data"

TEACHER_TEXT = (
    "The teacher will have to approve all students, since any failure would result in the "
    "students failing to drop out of the course, and the college's board does not want to miss "
    "out on receiving any tuition fees from these students. It could be different if concern for "
    "academic merit took precedence in this college, but clearly, it is not the case, as, at the "
    "departmental meeting, the director warned that the financial balance of the institution is "
    "the absolute priority for the semester."
)

TEACHER_EXTRACTS = [
    "The teacher will have to approve all students",
    "any failure would result in the students failing to drop out of the course",
    "the college's board does not want to miss out on receiving any tuition fees from these students",
    "It could be different if concern for academic merit took precedence in this college",
    "clearly, it is not the case",
    "at the departmental meeting, the director warned that the financial balance of the "
    "institution is the absolute priority for the semester",
]

TEACHER_REWRITES = [
    "The teacher must approve all students.",
    "Failing students would cause them to drop out of the course.",
    "The college board does not want to lose tuition revenue from these students.",
    "If academic merit took precedence, the situation would be different.",
    "Academic merit does not take precedence at this college.",
    "The director said at a departmental meeting that financial balance is the institution's "
    "absolute priority this semester.",
]

TEACHER_IMPLICIT = [
    "If the board does not want to lose tuition revenue from these students, it will take "
    "measures to prevent those students from failing (for example, by instructing or "
    "pressuring staff to pass them).",
    "The teacher is obliged or compelled to follow the board's directives/priorities, so will "
    "approve students when the board demands it.",
]

UMBRELLA_TEXT = (
    "We should take an umbrella. The forecast predicts heavy rain this afternoon. "
    "This forecast has been reliable all month."
)

SOCRATES_TEXT = "Socrates is mortal."


def numbered(items):
    return "\n".join(f"{i}. {t}" for i, t in enumerate(items, 1))


# Per-document scripts. Keys of the keyed stages are the labels that appear in
# the prompt: the target of an expansion, the attacker of an undercut, etc.
SCRIPTS = {
    "teacher": {
        "components": numbered(TEACHER_EXTRACTS),
        "merge": "0",
        "rewrite": numbered(TEACHER_REWRITES),
        "conclusion": "1",
        "premises": {"1": "2: support\n3: support\n5: support",
                     "2": "0", "3": "0",
                     "5": "6: support\n4: attack"},
        "structure": {"1": "2, 3"},
        "implicit": {("1", ("2", "3")): numbered(TEACHER_IMPLICIT)},
        "undercut": {"4": "1"},
    },
    "umbrella": {
        "components": numbered(["We should take an umbrella",
                                "The forecast predicts heavy rain this afternoon",
                                "This forecast has been reliable all month"]),
        "merge": "0",
        "rewrite": numbered(["We should take an umbrella.",
                             "The forecast predicts heavy rain this afternoon.",
                             "The weather forecast has been reliable all month."]),
        "conclusion": "1",
        "premises": {"1": "2: support", "2": "0"},
        "attach": {"3": "2: support"},
        "implicit": {("1", ("2",)): "1. If heavy rain is predicted, one should take an umbrella."},
    },
    "socrates": {
        "components": "1. Socrates is mortal.",
        "rewrite": "1. Socrates is mortal.",
    },
}

_STAGE_MARKERS = [
    ("components", "Identify and enumerate"),
    ("merge", "should be merged into one unit"),
    ("rewrite", "Rewrite each argumentative component"),
    ("conclusion", "main conclusion"),
    ("premises", "Consider the target component"),
    ("attach", "not yet connected"),
    ("structure", "jointly"),
    ("implicit", "State the implicit premises"),
    ("undercut", "undercut"),
]


def _stage(user: str) -> str:
    head = user.split("\n\nText:", 1)[0]
    for stage, marker in _STAGE_MARKERS:
        if marker in head:
            return stage
    raise KeyError(f"cannot tell the stage of prompt {head[:60]!r}")


def _section(user: str, name: str) -> str:
    m = re.search(rf"\n{name}:\n(.*?)(?:\n\n|$)", user, re.S)
    if not m:
        raise KeyError(name)
    return m.group(1)


def _labels(block: str):
    return tuple(re.findall(r"\[(\w+)\]", block)) or tuple(re.findall(r"^(\w+)\.", block, re.M))


def responder(script: dict):
    def answer(request) -> str:
        user = request.user_prompt
        stage = _stage(user)
        entry = script.get(stage, "0")
        if isinstance(entry, str):
            return entry
        if stage == "premises":
            key = _labels(_section(user, "Target"))[0]
        elif stage == "attach":
            key = _labels(_section(user, "Unconnected component"))[0]
        elif stage == "structure":
            key = _labels(_section(user, "Conclusion"))[0]
        elif stage == "implicit":
            key = (_labels(_section(user, "Conclusion"))[0], _labels(_section(user, "Premises")))
        elif stage == "undercut":
            key = _labels(_section(user, "Attacking component"))[0]
        else:
            key = None
        return entry.get(key, "0")
    return answer


def teacher_golden() -> ArgumentGraph:
    """The Teacher argument as drawn: rewritten texts, spans of the extracts."""
    g = ArgumentGraph(TEACHER_TEXT)
    ids = []
    for i, (extract, text) in enumerate(zip(TEACHER_EXTRACTS, TEACHER_REWRITES), 1):
        start = TEACHER_TEXT.index(extract)
        ids.append(g.add_component(text, ComponentKind.EXPLICIT, (start, start + len(extract)), str(i)))
    c1, c2, c3, c4, c5, c6 = ids
    g.set_conclusion(c1)
    imp = [g.add_component(t, ComponentKind.IMPLICIT, label=str(i))
           for i, t in enumerate(TEACHER_IMPLICIT, 7)]
    join = g.add_component("", ComponentKind.LINKED_JOIN)
    for p in (c2, c3, *imp):
        g.add_edge(p, join, Polarity.SUPPORT)
    g.add_edge(join, c1, Polarity.SUPPORT)
    g.add_edge(c5, c1, Polarity.SUPPORT)
    undercut = g.add_component("", ComponentKind.UNDERCUT_JOIN)
    g.add_edge(c6, undercut, Polarity.SUPPORT)
    g.add_edge(undercut, c5, Polarity.SUPPORT)
    g.add_edge(c4, undercut, Polarity.ATTACK)
    g.validate()
    return g


def _gold(text, extracts, roles, relations, conclusion) -> GoldAnnotation:
    comps = []
    for extract, role in zip(extracts, roles):
        start = text.index(extract)
        comps.append(GoldComponent(extract, (start, start + len(extract)), role))
    rels = [GoldRelation(s, t, pol) for s, t, pol in relations]
    return GoldAnnotation(comps, rels, conclusion)


def corpus():
    M, C, P = Role.MAJOR_CLAIM, Role.CLAIM, Role.PREMISE
    S, A = Polarity.SUPPORT, Polarity.ATTACK
    teacher = _gold(TEACHER_TEXT, TEACHER_EXTRACTS, [M, C, C, P, C, P],
                    [(1, 0, S), (2, 0, S), (4, 0, S), (5, 4, S), (3, 4, A)], 0)
    umbrella = _gold(UMBRELLA_TEXT,
                     ["We should take an umbrella", "The forecast predicts heavy rain this afternoon",
                      "This forecast has been reliable all month"],
                     [M, C, P], [(1, 0, S), (2, 1, S)], 0)
    socrates = _gold(SOCRATES_TEXT, ["Socrates is mortal"], [M], [], 0)
    return [Document("teacher", TEACHER_TEXT, teacher, {"origin": "worked example"}),
            Document("umbrella", UMBRELLA_TEXT, umbrella, {"origin": "hand-written fixture"}),
            Document("socrates", SOCRATES_TEXT, socrates, {"origin": "hand-written fixture"})]


def main() -> int:
    DATA.mkdir(parents=True, exist_ok=True)
    docs = corpus()
    config = PipelineConfig()
    transcript = Transcript(meta={"created_at": "fixture", "source": "scripted responses",
                                  "pipeline_config_digest": config.digest()})
    for doc in docs:
        backend = RecordingBackend(FunctionBackend(responder(SCRIPTS[doc.id])), transcript)
        graph, trace = run_pipeline(backend, doc.text, config)
        print(f"{doc.id}: {len(graph.nodes)} nodes, {len(graph.edges)} edges, "
              f"{len(trace.stage_records)} calls, warnings={trace.warnings}")
        if doc.id == "teacher":
            transcript_teacher = Transcript([e for e in transcript.entries], dict(transcript.meta))
            transcript_teacher.save(DATA / "teacher_transcript.jsonl")
    transcript.save(DATA / "fixture_transcript.jsonl")
    save_corpus(docs, DATA / "fixture_corpus.json")
    (DATA / "teacher.txt").write_text(TEACHER_TEXT, encoding="utf-8")
    golden = teacher_golden()
    (DATA / "teacher_golden.json").write_text(golden.to_json(), encoding="utf-8")
    (DATA / "teacher_golden.dot").write_text(to_dot(golden), encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
