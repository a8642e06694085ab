"""Reading and writing corpora, standoff annotations and graph files.

Corpus JSON (``"schema": "argcorpus/1"``)::

    {"schema": "argcorpus/1",
     "documents": [
        {"id": "...", "text": "...", "metadata": {...},
         "gold": {"components": [{"text", "span"?, "kind", "role"?}],
                  "relations": [{"source", "target", "polarity", "undercut_of"?}],
                  "conclusion": <index or null>}}]}

A bare JSON list of such documents is accepted as well.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Union

from .errors import OffsetMismatch, SchemaViolation, UnknownLabel, UnsupportedVersion
from .evaluation import GoldAnnotation, GoldComponent, GoldRelation, relation_polarity
from .graph import ArgumentGraph, Role

CORPUS_SCHEMA = "argcorpus/1"

PathLike = Union[str, Path]

_ROLE_NAMES = {r.value.lower(): r for r in Role}
_ROLE_NAMES.update({"major_claim": Role.MAJOR_CLAIM, "major claim": Role.MAJOR_CLAIM,
                    "conclusion": Role.MAJOR_CLAIM})


@dataclass
class Document:
    id: str
    text: str
    gold: Optional[GoldAnnotation] = None
    metadata: Dict[str, object] = field(default_factory=dict)


def parse_role(label: str) -> Role:
    try:
        return _ROLE_NAMES[str(label).strip().lower()]
    except KeyError:
        raise UnknownLabel(f"unknown component label {label!r}") from None


# ---------------------------------------------------------------------------
# corpus JSON

def _gold_from_dict(raw: dict, where: str) -> GoldAnnotation:
    if not isinstance(raw, dict):
        raise SchemaViolation(f"{where}: expected an object")
    try:
        comps = []
        for i, c in enumerate(raw.get("components", [])):
            span = c.get("span")
            role = c.get("role")
            comps.append(GoldComponent(
                text=c["text"],
                span=tuple(span) if span is not None else None,
                role=parse_role(role) if role is not None else None,
                kind=c.get("kind", "explicit"),
            ))
        rels = []
        for i, r in enumerate(raw.get("relations", [])):
            try:
                label = relation_polarity(r.get("polarity", "support"))
            except SchemaViolation:
                raise SchemaViolation(f"{where}.relations[{i}].polarity: "
                                      f"unknown label {r.get('polarity')!r}") from None
            rels.append(GoldRelation(r["source"], r["target"], label, r.get("undercut_of")))
    except KeyError as exc:
        raise SchemaViolation(f"{where}: missing field {exc.args[0]!r}") from None
    except UnknownLabel as exc:
        raise SchemaViolation(f"{where}: {exc}") from None
    return GoldAnnotation(comps, rels, raw.get("conclusion"))


def _gold_to_dict(gold: GoldAnnotation) -> dict:
    return {
        "components": [
            {"text": c.text, "span": list(c.span) if c.span is not None else None,
             "kind": c.kind, "role": c.role.value if c.role is not None else None}
            for c in gold.components
        ],
        "relations": [
            {"source": r.source, "target": r.target, "polarity": r.label.value,
             "undercut_of": r.undercut_of}
            for r in gold.relations
        ],
        "conclusion": gold.conclusion,
    }


def documents_from_json(data, where: str = "corpus") -> List[Document]:
    if isinstance(data, dict):
        schema = data.get("schema")
        if schema != CORPUS_SCHEMA:
            raise UnsupportedVersion(f"{where}: unsupported corpus schema {schema!r}")
        raw_docs = data.get("documents")
    else:
        raw_docs = data
    if not isinstance(raw_docs, list):
        raise SchemaViolation(f"{where}: 'documents' must be a list")
    docs: List[Document] = []
    seen = set()
    for i, raw in enumerate(raw_docs):
        if not isinstance(raw, dict):
            raise SchemaViolation(f"{where}: documents[{i}] is not an object")
        doc_id = raw.get("id")
        loc = f"{where}: document {doc_id!r}" if doc_id is not None else f"{where}: documents[{i}]"
        if not isinstance(doc_id, str) or not doc_id:
            raise SchemaViolation(f"{loc}: field 'id' must be a non-empty string")
        if doc_id in seen:
            raise SchemaViolation(f"{loc}: duplicate id")
        seen.add(doc_id)
        text = raw.get("text")
        if not isinstance(text, str):
            raise SchemaViolation(f"{loc}: field 'text' must be a string")
        gold = None
        if raw.get("gold") is not None:
            gold = _gold_from_dict(raw["gold"], f"{loc}: gold")
            gold.validate(text, f"{loc}: gold")
        docs.append(Document(doc_id, text, gold, dict(raw.get("metadata") or {})))
    return docs


def documents_to_json(docs: List[Document]) -> dict:
    return {
        "schema": CORPUS_SCHEMA,
        "documents": [
            {"id": d.id, "text": d.text, "metadata": d.metadata,
             "gold": _gold_to_dict(d.gold) if d.gold is not None else None}
            for d in docs
        ],
    }


def load_textbook_corpus(path: PathLike) -> List[Document]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"{path}: invalid JSON ({exc})") from None
    return documents_from_json(data, str(path))


def save_corpus(docs: List[Document], path: PathLike) -> None:
    Path(path).write_text(json.dumps(documents_to_json(docs), indent=2, ensure_ascii=False) + "\n",
                          encoding="utf-8")


# ---------------------------------------------------------------------------
# standoff annotations

_ENTITY_TAB = re.compile(r"^(T\d+)\t(\S+) (\d+ \d+(?:;\d+ \d+)*)\t(.*)$")
_ENTITY_SPACE = re.compile(r"^(T\d+) (\S+) (\d+ \d+) (.*)$")
_RELATION = re.compile(r"^(R\d+)\s+(\S+)\s+Arg1:(T\d+)\s+Arg2:(T\d+)\s*$")


def load_standoff(txt_path: PathLike, ann_path: PathLike) -> Document:
    """Read a ``.txt`` / ``.ann`` pair into a Document with gold annotation.

    Only ``T`` (entity) and ``R`` (relation) lines are interpreted; attribute,
    note and comment lines are skipped. Discontinuous spans are rejected.
    """
    txt_path, ann_path = Path(txt_path), Path(ann_path)
    with open(txt_path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    components: List[GoldComponent] = []
    index: Dict[str, int] = {}
    relations: list = []
    with open(ann_path, encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    for lineno, line in enumerate(lines, 1):
        where = f"{ann_path}:{lineno}"
        if not line.strip() or line[0] in "#AMNE*":
            continue
        if line.startswith("T"):
            m = _ENTITY_TAB.match(line) or _ENTITY_SPACE.match(line)
            if not m:
                raise SchemaViolation(f"{where}: malformed entity line {line!r}")
            ent_id, label, offsets, surface = m.groups()
            if ";" in offsets:
                raise SchemaViolation(f"{where}: discontinuous span for {ent_id} is not supported")
            start, end = map(int, offsets.split())
            if not 0 <= start < end <= len(text):
                raise SchemaViolation(f"{where}: span {start}-{end} of {ent_id} out of bounds")
            if text[start:end] != surface:
                raise OffsetMismatch(f"{where}: entity {ent_id} surface {surface!r} does not match "
                                     f"text[{start}:{end}] = {text[start:end]!r}")
            try:
                role = parse_role(label)
            except UnknownLabel:
                raise UnknownLabel(f"{where}: entity {ent_id} has unknown label {label!r}") from None
            if ent_id in index:
                raise SchemaViolation(f"{where}: duplicate entity id {ent_id}")
            index[ent_id] = len(components)
            components.append(GoldComponent(surface, (start, end), role))
        elif line.startswith("R"):
            m = _RELATION.match(line)
            if not m:
                raise SchemaViolation(f"{where}: malformed relation line {line!r}")
            rel_id, label, arg1, arg2 = m.groups()
            try:
                pol = relation_polarity(label)
            except SchemaViolation:
                raise UnknownLabel(f"{where}: relation {rel_id} has unknown label {label!r}") from None
            relations.append((where, arg1, arg2, pol))
        else:
            raise SchemaViolation(f"{where}: unrecognised line {line!r}")
    gold_rel = []
    for where, arg1, arg2, pol in relations:
        for arg in (arg1, arg2):
            if arg not in index:
                raise SchemaViolation(f"{where}: relation references unknown entity {arg}")
        gold_rel.append(GoldRelation(index[arg1], index[arg2], pol))
    majors = [i for i, c in enumerate(components) if c.role is Role.MAJOR_CLAIM]
    conclusion = majors[0] if len(majors) == 1 else None
    return Document(txt_path.stem, text, GoldAnnotation(components, gold_rel, conclusion),
                    {"source": str(txt_path)})


def load_standoff_dir(directory: PathLike) -> List[Document]:
    directory = Path(directory)
    return [load_standoff(txt, txt.with_suffix(".ann"))
            for txt in sorted(directory.glob("*.txt")) if txt.with_suffix(".ann").exists()]


# ---------------------------------------------------------------------------
# graphs

def save_graph(graph: ArgumentGraph, path: PathLike) -> None:
    graph.validate()
    Path(path).write_text(graph.to_json(), encoding="utf-8")


def load_graph(path: PathLike) -> ArgumentGraph:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaViolation(f"{path}: cannot read ({exc})") from None
    return ArgumentGraph.from_json(raw, str(path))
