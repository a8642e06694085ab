import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from argrecon.corpus import Document
from argrecon.errors import InputMismatch, SchemaViolation
from argrecon.evaluation import (
    GoldAnnotation,
    GoldComponent,
    GoldRelation,
    assign,
    component_classification,
    conclusion_accuracy,
    evaluate_corpus,
    hungarian_match,
    relation_accuracy,
    relation_classification,
    span_prf,
    threshold_sweep,
)
from argrecon.graph import ArgumentGraph, ComponentKind, Polarity, Role

import oracles

S, A = Polarity.SUPPORT, Polarity.ATTACK
MC, C, P = Role.MAJOR_CLAIM, Role.CLAIM, Role.PREMISE


# -- span detection ----------------------------------------------------------

def test_identical_spans():
    spans = [(0, 4), (5, 9)]
    assert tuple(span_prf(spans, spans)) == (1.0, 1.0, 1.0)


def test_three_pred_four_gold_two_matches():
    pred = [(0, 5), (6, 10), (20, 25)]
    gold = [(0, 5), (6, 10), (11, 15), (30, 35)]
    p, r, f = span_prf(pred, gold)
    assert abs(p - 2 / 3) < 1e-12 and abs(r - 0.5) < 1e-12 and abs(f - 4 / 7) < 1e-12


def test_empty_prediction():
    assert tuple(span_prf([], [(0, 3)])) == (0.0, 0.0, 0.0)


def test_normalized_spans_ignore_punctuation_and_case():
    text = "Socrates is mortal. socrates IS mortal"
    assert span_prf([(0, 19)], [(20, 38)], "normalized", text).f1 == 1.0
    assert span_prf([(0, 19)], [(20, 38)], "exact").f1 == 0.0
    with pytest.raises(ValueError):
        span_prf([(0, 1)], [(0, 1)], "normalized")


def test_span_counts_are_one_to_one():
    assert span_prf([(0, 2), (0, 2)], [(0, 2)]).precision == 0.5


# -- conclusion accuracy -----------------------------------------------------

def test_conclusion_all_match():
    assert conclusion_accuracy(["a", "b"], ["a", "b"]) == 1.0


def test_conclusion_37_of_40():
    gold = [f"conclusion number {i}" for i in range(40)]
    pred = gold[:37] + ["something else entirely"] * 3
    assert conclusion_accuracy(pred, gold) == 0.925


def test_conclusion_missing_prediction_counts_as_miss():
    assert conclusion_accuracy([None, "b"], ["a", "b"]) == 0.5
    with pytest.raises(InputMismatch):
        conclusion_accuracy(["a"], ["a", "b"])


# -- relation accuracy -------------------------------------------------------

def chain_graph(n, edges):
    g = ArgumentGraph()
    ids = [g.add_component(f"c{i}") for i in range(n)]
    for s, t in edges:
        g.add_edge(ids[s], ids[t])
    return g, ids


def gold_of(n, edges):
    return GoldAnnotation([GoldComponent(f"c{i}") for i in range(n)],
                          [GoldRelation(s, t) for s, t in edges])


def test_relation_accuracy_single_shared_component_is_excluded():
    g, ids = chain_graph(2, [(0, 1)])
    assert relation_accuracy(g, gold_of(2, [(0, 1)]), {ids[0]: 0}) is None


def test_relation_accuracy_identical_chains():
    g, ids = chain_graph(3, [(0, 1), (1, 2)])
    assert relation_accuracy(g, gold_of(3, [(0, 1), (1, 2)]), dict(zip(ids, range(3)))) == 1.0


def test_relation_accuracy_two_thirds():
    g, ids = chain_graph(3, [(0, 1)])
    acc = relation_accuracy(g, gold_of(3, [(0, 1), (1, 2)]), dict(zip(ids, range(3))))
    # pairs: (A,B) agree, (B,C) disagree, (A,C) agree (no link either side)
    assert acc == pytest.approx(2 / 3)


def test_relation_accuracy_ignores_implicit_nodes():
    g, ids = chain_graph(2, [(0, 1)])
    imp = g.add_component("hidden", ComponentKind.IMPLICIT)
    g.add_edge(imp, ids[1])
    assert relation_accuracy(g, gold_of(2, [(0, 1)]), {ids[0]: 0, ids[1]: 1, imp: 0}) == 1.0


# -- component classification ------------------------------------------------

def test_component_classification_perfect():
    micro, macro, _ = component_classification({0: MC, 1: P}, {0: MC, 1: P}, [(0, 0), (1, 1)])
    assert micro == macro == 1.0


def test_component_classification_macro_five_ninths():
    pred = {0: MC, 1: C, 2: P}
    gold = {0: MC, 1: P, 2: P}
    micro, macro, per = component_classification(pred, gold, [(0, 0), (1, 1), (2, 2)])
    assert per == pytest.approx({"MajorClaim": 1.0, "Claim": 0.0, "Premise": 2 / 3})
    assert macro == pytest.approx(5 / 9, abs=1e-12)
    assert micro == pytest.approx(2 / 3)


def test_component_classification_empty_alignment():
    _, macro, _ = component_classification({}, {0: MC, 1: P}, [])
    assert macro == 0.0


def test_component_classification_matches_sklearn():
    # independent route: sklearn over the aligned pairs, same label set
    from sklearn.metrics import f1_score
    rng = random.Random(1)
    roles = list(Role)
    for _ in range(50):
        n = rng.randint(1, 8)
        pred = {i: rng.choice(roles) for i in range(n)}
        gold = {i: rng.choice(roles) for i in range(n)}
        _, macro, _ = component_classification(pred, gold, [(i, i) for i in range(n)])
        labels = sorted({r.value for r in pred.values()} | {r.value for r in gold.values()})
        ref = f1_score([gold[i].value for i in range(n)], [pred[i].value for i in range(n)],
                       labels=labels, average="macro", zero_division=0)
        assert macro == pytest.approx(ref)


# -- relation classification -------------------------------------------------

def test_relation_classification_identical():
    g, ids = chain_graph(3, [(0, 1), (2, 1)])
    gold = gold_of(3, [(0, 1), (2, 1)])
    assert relation_classification(g, gold, list(zip(ids, range(3)))) == (1.0, 1.0, 1.0)


def test_relation_classification_wrong_label():
    g, ids = chain_graph(3, [(0, 1), (2, 1)])
    gold = GoldAnnotation([GoldComponent(f"c{i}") for i in range(3)],
                          [GoldRelation(0, 1, S), GoldRelation(2, 1, A)])
    link, micro, _ = relation_classification(g, gold, list(zip(ids, range(3))))
    assert link == 1.0 and micro == 0.5


def test_relation_classification_collapses_linked_join():
    g, ids = chain_graph(3, [(0, 2), (1, 2)])
    g.insert_linked_join(ids[:2], ids[2])
    gold = gold_of(3, [(0, 2), (1, 2)])
    link, micro, _ = relation_classification(g, gold, list(zip(ids, range(3))))
    assert link == 1.0 and micro == 1.0


# -- Hungarian matching ------------------------------------------------------

def test_identity_assignment():
    pairs = hungarian_match(["alpha", "beta"], ["alpha", "beta"])
    assert sorted((i, j) for i, j, _ in pairs) == [(0, 0), (1, 1)]
    assert all(s == 1.0 for _, _, s in pairs)


def test_two_by_two_prefers_total():
    pairs = assign(np.array([[0.9, 0.2], [0.8, 0.7]]))
    assert [(i, j) for i, j, _ in pairs] == [(0, 0), (1, 1)]
    assert sum(s for _, _, s in pairs) == pytest.approx(1.6)


def test_assignment_matches_enumeration():
    rng = np.random.default_rng(0)
    for _ in range(200):
        r, c = rng.integers(1, 6, size=2)
        m = rng.random((r, c))
        total = sum(s for _, _, s in assign(m))
        assert total == pytest.approx(oracles.best_assignment_total(m.tolist()), abs=1e-12)


def test_empty_inputs():
    assert hungarian_match([], ["a"]) == []


# -- threshold sweep ---------------------------------------------------------

def test_identical_lists_give_flat_curve():
    docs = [(["a cat", "a dog"], ["a cat", "a dog"])]
    curve = threshold_sweep(docs, [0.0, 0.5, 1.0])
    assert [f for _, f in curve.points] == [1.0, 1.0, 1.0]


def test_paraphrases_fall_to_zero_at_one():
    docs = [(["The teacher must approve all the students"],
             ["The teacher will have to approve all students"])]
    curve = threshold_sweep(docs, [0.0, 0.5, 1.0])
    assert curve.points[0][1] == 1.0 and curve.points[-1][1] == 0.0


def test_sweep_rejects_bad_thresholds():
    with pytest.raises(ValueError):
        threshold_sweep([], [0.5, 0.2])
    with pytest.raises(ValueError):
        threshold_sweep([], [0.0, 1.5])


def oracle_similarity(a, b):
    a, b = " ".join(a.casefold().split()), " ".join(b.casefold().split())
    if not a and not b:
        return 1.0
    return 2 * oracles.lcs_dp(a, b) / (len(a) + len(b))


def sweep_by_recomputation(docs, t):
    """Mean F1 recomputed from the assignment with oracle similarities.

    The assignment itself is checked for optimality against enumeration.
    """
    f1s = []
    for pred, gold in docs:
        pairs = hungarian_match(pred, gold)
        matrix = [[oracle_similarity(p, g) for g in gold] for p in pred]
        total = sum(matrix[i][j] for i, j, _ in pairs)
        assert total == pytest.approx(oracles.best_assignment_total(matrix))
        tp = sum(1 for i, j, _ in pairs if matrix[i][j] >= t - 1e-12)
        if not pred and not gold:
            f1s.append(1.0)
        elif tp == 0:
            f1s.append(0.0)
        else:
            prec, rec = tp / len(pred), tp / len(gold)
            f1s.append(2 * prec * rec / (prec + rec))
    return sum(f1s) / len(f1s)


words = st.lists(st.text(alphabet="abc ", min_size=1, max_size=8), max_size=4)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.tuples(words, words), min_size=1, max_size=4))
def test_sweep_monotone_and_consistent(docs):
    ts = [i / 10 for i in range(11)]
    curve = threshold_sweep(docs, ts)
    values = [f for _, f in curve.points]
    assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
    for t, f in curve.points:
        assert f == pytest.approx(sweep_by_recomputation(docs, t))


# -- corpus-level ------------------------------------------------------------

def gold_doc(doc_id="d", roles=True):
    text = "We should go. It is sunny. Rain is unlikely."
    comps = [GoldComponent("We should go", (0, 12), MC if roles else None),
             GoldComponent("It is sunny", (14, 25), C if roles else None),
             GoldComponent("Rain is unlikely", (27, 43), P if roles else None)]
    return Document(doc_id, text, GoldAnnotation(comps, [GoldRelation(1, 0), GoldRelation(2, 1)], 0))


def graph_for(doc):
    g = ArgumentGraph(doc.text)
    ids = [g.add_component(c.text, ComponentKind.EXPLICIT, c.span) for c in doc.gold.components]
    for r in doc.gold.relations:
        g.add_edge(ids[r.source], ids[r.target], r.label)
    g.set_conclusion(ids[doc.gold.conclusion])
    return g


@pytest.mark.parametrize("tasks", ["internal", "external"])
def test_perfect_predictions_score_one(tasks):
    doc = gold_doc()
    report = evaluate_corpus({doc.id: graph_for(doc)}, [doc], tasks)
    assert report.span.f1 == 1.0
    if tasks == "internal":
        assert report.conclusion_accuracy == 1.0 and report.relation_accuracy == 1.0
    else:
        assert report.component_cls["macro_f1"] == 1.0
        assert report.link_f1 == 1.0 and report.relation_cls["micro_f1"] == 1.0


def test_missing_prediction_scores_zero():
    doc = gold_doc()
    report = evaluate_corpus({}, [doc], "internal")
    assert report.span.f1 == 0.0 and report.conclusion_accuracy == 0.0
    assert report.relation_accuracy is None


def test_external_without_roles_names_the_field():
    doc = gold_doc(roles=False)
    with pytest.raises(SchemaViolation, match="role"):
        evaluate_corpus({}, [doc], "external")


def test_report_is_byte_stable():
    doc = gold_doc()
    a = evaluate_corpus({doc.id: graph_for(doc)}, [doc], "external").to_json()
    b = evaluate_corpus({doc.id: graph_for(doc)}, [doc], "external").to_json()
    assert a == b
