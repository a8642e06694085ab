"""Metrics for comparing reconstructed graphs with gold annotations.

Internal tasks compare against textbook-style gold graphs: span detection,
main-conclusion accuracy and relation accuracy. External tasks follow the
usual argument-mining benchmark protocol: exact span identification,
component classification (MajorClaim / Claim / Premise) and relation
classification (link detection plus labels).
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import string
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InputMismatch, SchemaViolation
from .graph import ArgumentGraph, NodeId, Polarity, Role
from .similarity import char_overlap_similarity, normalize

__all__ = [
    "GoldComponent", "GoldRelation", "GoldAnnotation", "PRF", "EvalReport", "ThresholdCurve",
    "prf", "span_prf", "corpus_span_prf", "conclusion_accuracy", "relation_accuracy",
    "component_classification", "relation_classification", "char_overlap_similarity",
    "hungarian_match", "threshold_sweep", "align_components", "evaluate_corpus",
]

Span = Tuple[int, int]

RELATION_LABELS = {
    "support": Polarity.SUPPORT, "supports": Polarity.SUPPORT,
    "attack": Polarity.ATTACK, "attacks": Polarity.ATTACK,
    "partial_attack": Polarity.PARTIAL_ATTACK, "partial-attack": Polarity.PARTIAL_ATTACK,
    "partial-attacks": Polarity.PARTIAL_ATTACK, "partial_attacks": Polarity.PARTIAL_ATTACK,
    "partial attack": Polarity.PARTIAL_ATTACK,
}


def relation_polarity(label) -> Polarity:
    if isinstance(label, Polarity):
        return label
    try:
        return RELATION_LABELS[str(label).strip().lower()]
    except KeyError:
        raise SchemaViolation(f"unknown relation label {label!r}") from None


@dataclass
class GoldComponent:
    text: str
    span: Optional[Span] = None
    role: Optional[Role] = None
    kind: str = "explicit"


@dataclass
class GoldRelation:
    source: int
    target: int
    label: Polarity = Polarity.SUPPORT
    undercut_of: Optional[int] = None


@dataclass
class GoldAnnotation:
    components: List[GoldComponent] = field(default_factory=list)
    relations: List[GoldRelation] = field(default_factory=list)
    conclusion: Optional[int] = None

    def validate(self, text: Optional[str] = None, where: str = "gold") -> None:
        n = len(self.components)
        for i, c in enumerate(self.components):
            if c.span is not None and text is not None:
                start, end = c.span
                if not 0 <= start < end <= len(text):
                    raise SchemaViolation(f"{where}.components[{i}].span {c.span} out of bounds")
        for i, r in enumerate(self.relations):
            for name in ("source", "target"):
                idx = getattr(r, name)
                if not isinstance(idx, int) or not 0 <= idx < n:
                    raise SchemaViolation(f"{where}.relations[{i}].{name} = {idx!r} "
                                          f"does not reference one of {n} components")
            if r.undercut_of is not None and not 0 <= r.undercut_of < len(self.relations):
                raise SchemaViolation(f"{where}.relations[{i}].undercut_of out of range")
        if self.conclusion is not None and not 0 <= self.conclusion < n:
            raise SchemaViolation(f"{where}.conclusion = {self.conclusion} out of range")

    @property
    def conclusion_text(self) -> Optional[str]:
        return None if self.conclusion is None else self.components[self.conclusion].text


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float

    def __iter__(self):
        return iter((self.precision, self.recall, self.f1))


def prf(tp: int, n_pred: int, n_gold: int) -> PRF:
    """Precision/recall/F1 from counts; both sides empty counts as perfect."""
    if n_pred == 0 and n_gold == 0:
        return PRF(1.0, 1.0, 1.0)
    p = tp / n_pred if n_pred else 0.0
    r = tp / n_gold if n_gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PRF(p, r, f)


# ---------------------------------------------------------------------------
# span detection

_PUNCT = str.maketrans("", "", string.punctuation)


def normalize_surface(text: str) -> str:
    """Whitespace-, case- and punctuation-insensitive surface form."""
    return normalize(text.translate(_PUNCT))


def _span_matches(predicted: Sequence[Span], gold: Sequence[Span], mode: str,
                  text: Optional[str]) -> int:
    if mode == "exact":
        keys_p = [tuple(s) for s in predicted]
        keys_g = [tuple(s) for s in gold]
    elif mode == "normalized":
        if text is None:
            raise ValueError("normalized span matching needs the source text")
        keys_p = [normalize_surface(text[s:e]) for s, e in predicted]
        keys_g = [normalize_surface(text[s:e]) for s, e in gold]
    else:
        raise ValueError(f"unknown span mode {mode!r}")
    # multiset intersection == one-to-one matching on equal keys
    return sum((Counter(keys_p) & Counter(keys_g)).values())


def span_prf(predicted: Sequence[Span], gold: Sequence[Span], mode: str = "exact",
             text: Optional[str] = None) -> PRF:
    return prf(_span_matches(predicted, gold, mode, text), len(predicted), len(gold))


def corpus_span_prf(docs: Iterable[Tuple[Sequence[Span], Sequence[Span], Optional[str]]],
                    mode: str = "exact") -> Tuple[PRF, dict]:
    """Micro-averaged span scores over ``(predicted, gold, text)`` triples."""
    tp = n_pred = n_gold = 0
    for predicted, gold, text in docs:
        tp += _span_matches(predicted, gold, mode, text)
        n_pred += len(predicted)
        n_gold += len(gold)
    return prf(tp, n_pred, n_gold), {"matched": tp, "predicted": n_pred, "gold": n_gold}


# ---------------------------------------------------------------------------
# conclusion and relation accuracy

def text_match(a: str, b: str) -> bool:
    return normalize_surface(a) == normalize_surface(b)


def conclusion_accuracy(predictions: Sequence[Optional[str]], gold: Sequence[str],
                        matcher: Callable[[str, str], bool] = text_match) -> float:
    if len(predictions) != len(gold):
        raise InputMismatch(f"{len(predictions)} predictions for {len(gold)} gold conclusions")
    if not gold:
        return 1.0
    hits = sum(1 for p, g in zip(predictions, gold) if p is not None and matcher(p, g))
    return hits / len(gold)


def relation_accuracy(pred: ArgumentGraph, gold: GoldAnnotation,
                      component_map: Mapping[NodeId, int]) -> Optional[float]:
    """Agreement on premise-conclusion links among shared components.

    Each unordered pair of shared components is in one of three states (no
    link, link one way, link the other way); the score is the fraction of
    pairs whose state agrees. Polarity, join and implicit nodes are ignored.
    Returns None when fewer than two components are shared.
    """
    implicit = {n for n, c in pred.nodes.items() if c.kind.value == "implicit"}
    shared = {p: g for p, g in component_map.items() if p in pred.nodes and p not in implicit}
    if len(shared) < 2:
        return None
    pred_links = {(shared[s], shared[t]) for (s, t) in pred.collapsed_relations()
                  if s in shared and t in shared}
    gold_links = {(r.source, r.target) for r in gold.relations}
    gold_ids = sorted(set(shared.values()))

    def state(links, a, b):
        return ((a, b) in links, (b, a) in links)

    pairs = list(itertools.combinations(gold_ids, 2))
    agree = sum(state(pred_links, a, b) == state(gold_links, a, b) for a, b in pairs)
    return agree / len(pairs)


# ---------------------------------------------------------------------------
# classification tasks

def _per_class(tp: Counter, fp: Counter, fn: Counter, classes: Iterable) -> Dict[str, float]:
    out = {}
    for c in classes:
        out[str(getattr(c, "value", c))] = prf(tp[c], tp[c] + fp[c], tp[c] + fn[c]).f1
    return out


def _micro_macro(tp: Counter, fp: Counter, fn: Counter, classes: list) -> Tuple[float, float, Dict[str, float]]:
    if not classes:
        return 1.0, 1.0, {}
    micro = prf(sum(tp.values()), sum(tp.values()) + sum(fp.values()),
                sum(tp.values()) + sum(fn.values())).f1
    per = _per_class(tp, fp, fn, classes)
    macro = sum(per.values()) / len(per)
    return micro, macro, per


def component_classification(pred_roles: Mapping[NodeId, Role], gold_roles: Mapping[int, Role],
                             alignment: Iterable[Tuple[NodeId, int]]) -> Tuple[float, float, Dict[str, float]]:
    """Micro F1, macro F1 and per-class F1 of role labels.

    Unaligned predictions are false positives of their class, unaligned gold
    components false negatives. Macro averages over the classes that occur in
    gold or predictions.
    """
    tp: Counter = Counter()
    fp: Counter = Counter()
    fn: Counter = Counter()
    aligned_p, aligned_g = set(), set()
    for p, g in alignment:
        aligned_p.add(p)
        aligned_g.add(g)
        pr, gr = Role(pred_roles[p]), Role(gold_roles[g])
        if pr == gr:
            tp[pr] += 1
        else:
            fp[pr] += 1
            fn[gr] += 1
    for p, r in pred_roles.items():
        if p not in aligned_p:
            fp[Role(r)] += 1
    for g, r in gold_roles.items():
        if g not in aligned_g:
            fn[Role(r)] += 1
    classes = [r for r in Role if (tp[r] + fp[r] + fn[r]) > 0]
    return _micro_macro(tp, fp, fn, classes)


def relation_classification(pred: ArgumentGraph, gold: GoldAnnotation,
                            alignment: Iterable[Tuple[NodeId, int]]) -> Tuple[float, float, float]:
    """Link F1 (labels ignored), labeled micro F1 and labeled macro F1.

    Join nodes are collapsed first: ``p -> J -> t`` counts as ``p -> t``.
    """
    mapping = dict(alignment)
    pred_rel = {(mapping.get(s, ("pred", s)), mapping.get(t, ("pred", t))): pol
                for (s, t), pol in pred.collapsed_relations().items()}
    gold_rel = {(r.source, r.target): relation_polarity(r.label) for r in gold.relations}
    return _relation_scores(pred_rel, gold_rel)


def _relation_scores(pred_rel: Mapping[tuple, Polarity],
                     gold_rel: Mapping[tuple, Polarity]) -> Tuple[float, float, float]:
    link = prf(len(pred_rel.keys() & gold_rel.keys()), len(pred_rel), len(gold_rel)).f1
    tp: Counter = Counter()
    fp: Counter = Counter()
    fn: Counter = Counter()
    for key, pol in pred_rel.items():
        if gold_rel.get(key) is pol:
            tp[pol] += 1
        else:
            fp[pol] += 1
    for key, pol in gold_rel.items():
        if pred_rel.get(key) is not pol:
            fn[pol] += 1
    classes = [p for p in Polarity if (tp[p] + fp[p] + fn[p]) > 0]
    micro, macro, _ = _micro_macro(tp, fp, fn, classes)
    return link, micro, macro


# ---------------------------------------------------------------------------
# similarity-based matching

def similarity_matrix(predicted: Sequence[str], gold: Sequence[str],
                      similarity: Callable[[str, str], float] = char_overlap_similarity) -> np.ndarray:
    m = np.zeros((len(predicted), len(gold)))
    for i, p in enumerate(predicted):
        for j, g in enumerate(gold):
            m[i, j] = similarity(p, g)
    return m


def assign(matrix: np.ndarray) -> List[Tuple[int, int, float]]:
    """Maximum-weight one-to-one assignment on a rectangular matrix."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return []
    rows, cols = linear_sum_assignment(matrix, maximize=True)
    return [(int(r), int(c), float(matrix[r, c])) for r, c in zip(rows, cols)]


def hungarian_match(predicted: Sequence[str], gold: Sequence[str],
                    similarity: Callable[[str, str], float] = char_overlap_similarity
                    ) -> List[Tuple[int, int, float]]:
    """Optimal ``(pred index, gold index, similarity)`` pairs."""
    return assign(similarity_matrix(predicted, gold, similarity))


@dataclass
class ThresholdCurve:
    points: List[Tuple[float, float]]
    micro: List[float] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["threshold", "mean_f1", "micro_f1"])
        micro = self.micro or [float("nan")] * len(self.points)
        for (t, f), mf in zip(self.points, micro):
            w.writerow([f"{t:.4f}", f"{f:.6f}", f"{mf:.6f}"])
        return buf.getvalue()


def threshold_sweep(documents: Sequence[Tuple[Sequence[str], Sequence[str]]],
                    thresholds: Sequence[float],
                    similarity: Callable[[str, str], float] = char_overlap_similarity
                    ) -> ThresholdCurve:
    """Mean per-document F1 as a function of a similarity threshold.

    Each document's Hungarian assignment is computed once; at threshold ``t``
    an assigned pair counts as a match iff its similarity is ``>= t``.
    """
    thresholds = [float(t) for t in thresholds]
    if any(not 0.0 <= t <= 1.0 for t in thresholds):
        raise ValueError("thresholds must lie in [0, 1]")
    if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be strictly increasing")
    assigned = [(hungarian_match(p, g, similarity), len(p), len(g)) for p, g in documents]
    points, micro = [], []
    for t in thresholds:
        f1s = []
        tp_sum = np_sum = ng_sum = 0
        for pairs, n_p, n_g in assigned:
            tp = sum(1 for _, _, s in pairs if s >= t)
            f1s.append(prf(tp, n_p, n_g).f1)
            tp_sum, np_sum, ng_sum = tp_sum + tp, np_sum + n_p, ng_sum + n_g
        points.append((t, float(np.mean(f1s)) if f1s else 1.0))
        micro.append(prf(tp_sum, np_sum, ng_sum).f1)
    return ThresholdCurve(points, micro)


# ---------------------------------------------------------------------------
# corpus-level evaluation

def _node_surface(graph: ArgumentGraph, node: NodeId) -> str:
    comp = graph.nodes[node]
    if comp.span is not None:
        return graph.source_text[comp.span[0]:comp.span[1]]
    return comp.text


def align_components(graph: ArgumentGraph, gold: GoldAnnotation, mode: str = "normalized",
                     threshold: float = 0.8) -> List[Tuple[NodeId, int]]:
    """Pair predicted text components with gold components.

    ``exact`` pairs identical spans. ``normalized`` runs a Hungarian match
    on character overlap of the covered text and keeps pairs scoring at
    least ``threshold``.
    """
    nodes = [c.id for c in graph.components() if c.kind.value != "implicit"]
    if mode == "exact":
        by_span: Dict[Span, List[int]] = {}
        for j, g in enumerate(gold.components):
            if g.span is not None:
                by_span.setdefault(tuple(g.span), []).append(j)
        out = []
        for n in nodes:
            span = graph.nodes[n].span
            if span is not None and by_span.get(tuple(span)):
                out.append((n, by_span[tuple(span)].pop(0)))
        return out
    if mode != "normalized":
        raise ValueError(f"unknown alignment mode {mode!r}")
    pairs = hungarian_match([_node_surface(graph, n) for n in nodes],
                            [g.text for g in gold.components])
    return [(nodes[i], j) for i, j, s in pairs if s >= threshold]


@dataclass
class EvalReport:
    tasks: str
    span: Optional[PRF] = None
    conclusion_accuracy: Optional[float] = None
    relation_accuracy: Optional[float] = None
    component_cls: Optional[dict] = None
    link_f1: Optional[float] = None
    relation_cls: Optional[dict] = None
    counts: Dict[str, dict] = field(default_factory=dict)
    documents: Dict[str, dict] = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.span is not None:
            d["span"] = {"precision": self.span.precision, "recall": self.span.recall,
                         "f1": self.span.f1}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary_rows(self) -> List[Tuple[str, str]]:
        rows = []
        if self.span is not None:
            rows += [("span precision", f"{self.span.precision:.4f}"),
                     ("span recall", f"{self.span.recall:.4f}"),
                     ("span f1", f"{self.span.f1:.4f}")]
        if self.conclusion_accuracy is not None:
            rows.append(("conclusion accuracy", f"{self.conclusion_accuracy:.4f}"))
        if self.tasks == "internal":
            acc = self.relation_accuracy
            rows.append(("relation accuracy", "n/a" if acc is None else f"{acc:.4f}"))
        if self.component_cls is not None:
            rows += [("component f1", f"{self.component_cls['micro_f1']:.4f}"),
                     ("component macro f1", f"{self.component_cls['macro_f1']:.4f}")]
        if self.relation_cls is not None:
            rows += [("link f1", f"{self.link_f1:.4f}"),
                     ("relation f1", f"{self.relation_cls['micro_f1']:.4f}"),
                     ("relation macro f1", f"{self.relation_cls['macro_f1']:.4f}")]
        return rows


def fuzzy_match(a: str, b: str, threshold: float = 0.8) -> bool:
    return text_match(a, b) or char_overlap_similarity(a, b) >= threshold


def _fuzzy_any(pred, gold: str) -> bool:
    # pred: (covered source text, component text); either may match
    return any(fuzzy_match(p, gold) for p in pred)


def _spans(graph: ArgumentGraph) -> List[Span]:
    return [c.span for c in graph.components() if c.span is not None and c.kind.value == "explicit"]


def evaluate_corpus(predictions: Mapping[str, Optional[ArgumentGraph]], documents: Sequence,
                    tasks: str = "internal") -> EvalReport:
    """Score predicted graphs against documents carrying gold annotations.

    ``predictions`` maps document id to graph; a missing or None entry counts
    as an empty prediction.
    """
    if tasks not in ("internal", "external"):
        raise ValueError(f"unknown task suite {tasks!r}")
    docs = [d for d in documents if d.gold is not None]
    report = EvalReport(tasks)
    empty = {d.id: ArgumentGraph(d.text) for d in docs}
    graphs = {d.id: predictions.get(d.id) or empty[d.id] for d in docs}

    if tasks == "external":
        for d in docs:
            for i, c in enumerate(d.gold.components):
                if c.role is None:
                    raise SchemaViolation(f"document {d.id!r}: components[{i}] has no 'role' "
                                          "(external tasks need role labels)")
                if c.span is None:
                    raise SchemaViolation(f"document {d.id!r}: components[{i}] has no 'span' "
                                          "(external tasks need exact spans)")

    mode = "normalized" if tasks == "internal" else "exact"
    span_docs = [(_spans(graphs[d.id]), [c.span for c in d.gold.components if c.span is not None],
                  d.text) for d in docs]
    report.span, report.counts["span"] = corpus_span_prf(span_docs, mode)
    for d, (p, g, text) in zip(docs, span_docs):
        report.documents.setdefault(d.id, {})["span_f1"] = span_prf(p, g, mode, text).f1

    if tasks == "internal":
        preds, golds, accs = [], [], []
        for d in docs:
            g = graphs[d.id]
            if d.gold.conclusion is not None:
                preds.append(None if g.conclusion is None else
                             (_node_surface(g, g.conclusion), g.nodes[g.conclusion].text))
                golds.append(d.gold.conclusion_text)
            alignment = align_components(g, d.gold, "normalized")
            acc = relation_accuracy(g, d.gold, dict(alignment))
            report.documents[d.id]["relation_accuracy"] = acc
            if acc is not None:
                accs.append(acc)
        report.conclusion_accuracy = conclusion_accuracy(preds, golds, _fuzzy_any)
        report.relation_accuracy = float(np.mean(accs)) if accs else None
        report.counts["conclusion"] = {"documents": len(golds)}
        report.counts["relation"] = {"scored": len(accs), "excluded": len(docs) - len(accs)}
        return report

    pred_roles_all: Dict[Tuple[str, NodeId], Role] = {}
    gold_roles_all: Dict[Tuple[str, int], Role] = {}
    alignment_all = []
    pred_rel: Dict[tuple, Polarity] = {}
    gold_rel: Dict[tuple, Polarity] = {}
    for d in docs:
        g = graphs[d.id]
        alignment = align_components(g, d.gold, "exact")
        if g.conclusion is not None:
            for n, r in g.role_mapping().items():
                if g.nodes[n].kind.value == "explicit":
                    pred_roles_all[(d.id, n)] = r
        for j, c in enumerate(d.gold.components):
            gold_roles_all[(d.id, j)] = Role(c.role)
        alignment_all += [((d.id, n), (d.id, j)) for n, j in alignment]
        link, micro, _ = relation_classification(g, d.gold, alignment)
        report.documents[d.id].update({"link_f1": link, "relation_f1": micro})
        # pool relations across documents by namespacing keys with the doc id
        mapping = dict(alignment)
        for (s, t), pol in g.collapsed_relations().items():
            pred_rel[(d.id, mapping.get(s, ("pred", s)), mapping.get(t, ("pred", t)))] = pol
        for r in d.gold.relations:
            gold_rel[(d.id, r.source, r.target)] = relation_polarity(r.label)

    micro, macro, per = component_classification(pred_roles_all, gold_roles_all, alignment_all)
    report.component_cls = {"micro_f1": micro, "macro_f1": macro, "per_class": per}
    report.link_f1, rmicro, rmacro = _relation_scores(pred_rel, gold_rel)
    report.relation_cls = {"micro_f1": rmicro, "macro_f1": rmacro}
    report.counts["components"] = {"predicted": len(pred_roles_all), "gold": len(gold_roles_all),
                                   "aligned": len(alignment_all)}
    report.counts["relations"] = {"predicted": len(pred_rel), "gold": len(gold_rel)}
    return report
