"""Argument graph data model.

An argument is stored as a directed acyclic graph whose edges point from a
premise towards the component it supports or attacks. Besides ordinary text
components the graph knows two kinds of empty helper nodes: linked joins,
which bundle premises that only work together, and undercut joins, which sit
inside an inference so that an attack can target the inference itself.

Every mutating method keeps the graph acyclic; operations that would break
that invariant raise before touching any state.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, Iterable, List, Optional, Set, Tuple, Union

from .errors import (
    ConclusionNotSink,
    CycleWouldForm,
    DuplicateEdge,
    FewerThanTwoPremises,
    GraphCyclic,
    InvalidSpan,
    InvariantViolation,
    JoinNodeInMerge,
    MergeCreatesCycle,
    MissingAttackEdge,
    MissingEndpoint,
    MissingInference,
    NoConclusion,
    NonEmptyJoinText,
    PremiseNotAttached,
    SchemaViolation,
    SelfLoop,
    UnsupportedVersion,
)

GRAPH_FORMAT_VERSION = 1

NodeId = int
Span = Tuple[int, int]


class ComponentKind(str, Enum):
    EXPLICIT = "explicit"
    IMPLICIT = "implicit"
    LINKED_JOIN = "linked_join"
    UNDERCUT_JOIN = "undercut_join"

    @property
    def is_join(self) -> bool:
        return self in (ComponentKind.LINKED_JOIN, ComponentKind.UNDERCUT_JOIN)


class Polarity(str, Enum):
    SUPPORT = "support"
    ATTACK = "attack"
    PARTIAL_ATTACK = "partial_attack"

    @property
    def is_attack(self) -> bool:
        return self is not Polarity.SUPPORT


# merge collisions keep the strongest polarity
_PRECEDENCE = {Polarity.SUPPORT: 0, Polarity.PARTIAL_ATTACK: 1, Polarity.ATTACK: 2}


def strongest(*polarities: Polarity) -> Polarity:
    return max(polarities, key=_PRECEDENCE.__getitem__)


class Role(str, Enum):
    MAJOR_CLAIM = "MajorClaim"
    CLAIM = "Claim"
    PREMISE = "Premise"


@dataclass
class Component:
    id: NodeId
    text: str
    kind: ComponentKind = ComponentKind.EXPLICIT
    span: Optional[Span] = None
    label: Optional[str] = None

    @property
    def is_join(self) -> bool:
        return self.kind.is_join


@dataclass(frozen=True, order=True)
class ArgEdge:
    source: NodeId
    target: NodeId
    polarity: Polarity = Polarity.SUPPORT


def _as_pair(edge: Union[ArgEdge, Tuple[NodeId, NodeId]]) -> Tuple[NodeId, NodeId]:
    if isinstance(edge, ArgEdge):
        return edge.source, edge.target
    source, target = edge[0], edge[1]
    return source, target


def _toposort(nodes: Iterable[NodeId], edges: Iterable[Tuple[NodeId, NodeId]]) -> Optional[List[NodeId]]:
    """Kahn's algorithm with smallest-id-first tie breaking; None on a cycle."""
    indeg: Dict[NodeId, int] = {n: 0 for n in nodes}
    succ: Dict[NodeId, List[NodeId]] = {n: [] for n in indeg}
    for s, t in edges:
        succ[s].append(t)
        indeg[t] += 1
    heap = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        n = heapq.heappop(heap)
        order.append(n)
        for m in succ[n]:
            indeg[m] -= 1
            if indeg[m] == 0:
                heapq.heappush(heap, m)
    if len(order) != len(indeg):
        return None
    return order


class ArgumentGraph:
    """Directed acyclic argument graph ``G = (N, E)`` with one main conclusion.

    Node ids are small integers handed out in increasing order and never
    reused. ``source_text`` is the text spans refer to; offsets count code
    points, half-open, 0-based.
    """

    def __init__(self, source_text: str = ""):
        self.source_text = source_text
        self.nodes: Dict[NodeId, Component] = {}
        self._edges: Dict[Tuple[NodeId, NodeId], Polarity] = {}
        self.conclusion: Optional[NodeId] = None
        self._next_id: NodeId = 0

    def __repr__(self) -> str:
        return (f"ArgumentGraph(nodes={len(self.nodes)}, edges={len(self._edges)}, "
                f"conclusion={self.conclusion})")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ArgumentGraph):
            return NotImplemented
        return (self.source_text == other.source_text
                and self.nodes == other.nodes
                and self._edges == other._edges
                and self.conclusion == other.conclusion)

    # -- inspection -------------------------------------------------------

    @property
    def edges(self) -> List[ArgEdge]:
        return [ArgEdge(s, t, p) for (s, t), p in sorted(self._edges.items())]

    def edge(self, source: NodeId, target: NodeId) -> Optional[ArgEdge]:
        pol = self._edges.get((source, target))
        return None if pol is None else ArgEdge(source, target, pol)

    def has_edge(self, source: NodeId, target: NodeId) -> bool:
        return (source, target) in self._edges

    def in_edges(self, node: NodeId) -> List[ArgEdge]:
        return [e for e in self.edges if e.target == node]

    def out_edges(self, node: NodeId) -> List[ArgEdge]:
        return [e for e in self.edges if e.source == node]

    def successors(self, node: NodeId) -> List[NodeId]:
        return sorted(t for (s, t) in self._edges if s == node)

    def predecessors(self, node: NodeId) -> List[NodeId]:
        return sorted(s for (s, t) in self._edges if t == node)

    def components(self, include_joins: bool = False) -> List[Component]:
        return [self.nodes[n] for n in sorted(self.nodes)
                if include_joins or not self.nodes[n].is_join]

    def by_label(self, label: str) -> Optional[NodeId]:
        for n in sorted(self.nodes):
            if self.nodes[n].label == label:
                return n
        return None

    def _require(self, *ids: NodeId) -> None:
        for n in ids:
            if n not in self.nodes:
                raise MissingEndpoint(f"node {n!r} not in graph")

    def reaches(self, start: NodeId, goal: NodeId) -> bool:
        """True iff a directed path (possibly empty) leads from start to goal."""
        self._require(start, goal)
        if start == goal:
            return True
        succ: Dict[NodeId, List[NodeId]] = {}
        for s, t in self._edges:
            succ.setdefault(s, []).append(t)
        seen = {start}
        stack = [start]
        while stack:
            n = stack.pop()
            for m in succ.get(n, ()):
                if m == goal:
                    return True
                if m not in seen:
                    seen.add(m)
                    stack.append(m)
        return False

    def would_create_cycle(self, source: NodeId, target: NodeId) -> bool:
        self._require(source, target)
        return self.reaches(target, source)

    def topological_order(self) -> List[NodeId]:
        order = _toposort(self.nodes, self._edges)
        if order is None:
            raise GraphCyclic("graph contains a directed cycle")
        return order

    def is_acyclic(self) -> bool:
        return _toposort(self.nodes, self._edges) is not None

    # -- construction -----------------------------------------------------

    def _check_component(self, text: str, kind: ComponentKind, span: Optional[Span]) -> None:
        if kind.is_join:
            if text:
                raise NonEmptyJoinText(f"{kind.value} nodes carry no text, got {text!r}")
            if span is not None:
                raise InvalidSpan("join nodes carry no span")
        if span is not None:
            if kind is ComponentKind.IMPLICIT:
                raise InvalidSpan("implicit components are generated and carry no span")
            start, end = span
            if not (0 <= start < end <= len(self.source_text)):
                raise InvalidSpan(f"span {span} outside source text of length {len(self.source_text)}")

    def add_component(self, text: str, kind: ComponentKind = ComponentKind.EXPLICIT,
                      span: Optional[Span] = None, label: Optional[str] = None) -> NodeId:
        kind = ComponentKind(kind)
        if span is not None:
            span = (int(span[0]), int(span[1]))
        self._check_component(text, kind, span)
        node_id = self._next_id
        self._next_id += 1
        self.nodes[node_id] = Component(node_id, text, kind, span, label)
        return node_id

    def set_conclusion(self, node: Optional[NodeId]) -> None:
        if node is not None:
            self._require(node)
            if self.successors(node):
                raise ConclusionNotSink(f"conclusion {node} has outgoing edges")
        self.conclusion = node

    def add_edge(self, source: NodeId, target: NodeId,
                 polarity: Polarity = Polarity.SUPPORT) -> None:
        self._require(source, target)
        if source == target:
            raise SelfLoop(f"self-loop on node {source}")
        if (source, target) in self._edges:
            raise DuplicateEdge(f"edge {source}->{target} already present")
        if source == self.conclusion:
            raise ConclusionNotSink(f"conclusion {source} cannot gain an outgoing edge")
        if self.reaches(target, source):
            raise CycleWouldForm(f"edge {source}->{target} would close a cycle")
        self._edges[(source, target)] = Polarity(polarity)

    def remove_edge(self, source: NodeId, target: NodeId) -> ArgEdge:
        try:
            pol = self._edges.pop((source, target))
        except KeyError:
            raise MissingEndpoint(f"no edge {source}->{target}") from None
        return ArgEdge(source, target, pol)

    def set_polarity(self, source: NodeId, target: NodeId, polarity: Polarity) -> None:
        if (source, target) not in self._edges:
            raise MissingEndpoint(f"no edge {source}->{target}")
        self._edges[(source, target)] = Polarity(polarity)

    def merge_components(self, ids: Iterable[NodeId], label: Optional[str] = None) -> NodeId:
        """Replace a set of components by one explicit composite component.

        Member texts are joined by single spaces in source order (by span
        start; spanless members follow in id order). External edges are
        rewired to the composite, edges internal to the set disappear, and
        parallel edges collapse to the strongest polarity. Raises
        MergeCreatesCycle, leaving the graph untouched, when rewiring would
        close a cycle through an outside node.
        """
        members = set(ids)
        if not members:
            raise ValueError("merge needs at least one component")
        self._require(*sorted(members))
        joins = sorted(n for n in members if self.nodes[n].is_join)
        if joins:
            raise JoinNodeInMerge(f"join nodes {joins} cannot be merged")

        ordered = sorted(members, key=lambda n: (self.nodes[n].span is None,
                                                 self.nodes[n].span or (0, 0), n))
        text = " ".join(self.nodes[n].text for n in ordered)
        spans = [self.nodes[n].span for n in ordered]
        span = None
        if all(sp is not None for sp in spans):
            span = (min(sp[0] for sp in spans), max(sp[1] for sp in spans))

        new_id = self._next_id
        rewired: Dict[Tuple[NodeId, NodeId], Polarity] = {}
        for (s, t), pol in self._edges.items():
            s2 = new_id if s in members else s
            t2 = new_id if t in members else t
            if s2 == t2:
                continue
            prev = rewired.get((s2, t2))
            rewired[(s2, t2)] = pol if prev is None else strongest(prev, pol)

        remaining = [n for n in self.nodes if n not in members] + [new_id]
        if _toposort(remaining, rewired) is None:
            raise MergeCreatesCycle(f"merging {sorted(members)} would create a cycle")
        if self.conclusion in members and any(s == new_id for s, _ in rewired):
            raise ConclusionNotSink("merged conclusion would gain outgoing edges")

        self._next_id += 1
        for n in members:
            del self.nodes[n]
        self.nodes[new_id] = Component(new_id, text, ComponentKind.EXPLICIT, span, label)
        self._edges = rewired
        if self.conclusion in members:
            self.conclusion = new_id
        return new_id

    def insert_linked_join(self, premises: Iterable[NodeId], target: NodeId) -> NodeId:
        """Route premises that jointly support ``target`` through one empty node."""
        group = sorted(set(premises))
        if len(group) < 2:
            raise FewerThanTwoPremises(f"a linked group needs >= 2 premises, got {group}")
        self._require(target, *group)
        for p in group:
            if self._edges.get((p, target)) is not Polarity.SUPPORT:
                raise PremiseNotAttached(f"premise {p} has no support edge into {target}")
        join = self.add_component("", ComponentKind.LINKED_JOIN)
        for p in group:
            del self._edges[(p, target)]
            self._edges[(p, join)] = Polarity.SUPPORT
        self._edges[(join, target)] = Polarity.SUPPORT
        return join

    def insert_undercut(self, attacker: NodeId,
                        inference: Union[ArgEdge, Tuple[NodeId, NodeId]]) -> NodeId:
        """Turn ``attacker``'s attack on an inference's target into an undercut.

        The inference ``s -> t`` becomes ``s -> U -> t`` and the attack edge
        ``attacker -> t`` becomes ``attacker -> U``.
        """
        source, target = _as_pair(inference)
        inf_pol = self._edges.get((source, target))
        if inf_pol is None:
            raise MissingInference(f"no inference {source}->{target}")
        att_pol = self._edges.get((attacker, target))
        if att_pol is None or not att_pol.is_attack:
            raise MissingAttackEdge(f"node {attacker} does not attack {target}")
        join = self.add_component("", ComponentKind.UNDERCUT_JOIN)
        del self._edges[(source, target)]
        del self._edges[(attacker, target)]
        self._edges[(source, join)] = inf_pol
        self._edges[(join, target)] = inf_pol
        self._edges[(attacker, join)] = att_pol
        return join

    # -- derived structure ------------------------------------------------

    def transitive_reduction(self) -> "ArgumentGraph":
        """Copy of the graph without redundant support shortcuts.

        Only support edges between two non-join nodes are candidates for
        removal; a candidate goes iff its target stays reachable from its
        source along other support edges. Attack edges and edges touching a
        join node are always kept.
        """
        order = self.topological_order()
        support_succ: Dict[NodeId, List[NodeId]] = {n: [] for n in self.nodes}
        for (s, t), pol in self._edges.items():
            if pol is Polarity.SUPPORT:
                support_succ[s].append(t)
        bit = {n: 1 << i for i, n in enumerate(order)}
        # reach[n]: bitset of nodes reachable from n by >= 1 support edge
        reach: Dict[NodeId, int] = {}
        for n in reversed(order):
            acc = 0
            for m in support_succ[n]:
                acc |= bit[m] | reach[m]
            reach[n] = acc

        out = self.copy()
        for (s, t), pol in self._edges.items():
            if pol is not Polarity.SUPPORT:
                continue
            if self.nodes[s].is_join or self.nodes[t].is_join:
                continue
            if any(w != t and reach[w] & bit[t] for w in support_succ[s]):
                del out._edges[(s, t)]
        return out

    def role_mapping(self) -> Dict[NodeId, Role]:
        """Map text components to the MajorClaim / Claim / Premise scheme.

        Join nodes are transparent: a premise feeding a join whose outgoing
        edge (possibly through further joins) enters the conclusion counts as
        directly attached.
        """
        if self.conclusion is None:
            raise NoConclusion("role mapping needs a designated conclusion")
        roles: Dict[NodeId, Role] = {}
        for comp in self.components():
            if comp.id == self.conclusion:
                roles[comp.id] = Role.MAJOR_CLAIM
            elif self.conclusion in self.effective_targets(comp.id):
                roles[comp.id] = Role.CLAIM
            else:
                roles[comp.id] = Role.PREMISE
        return roles

    def effective_targets(self, node: NodeId) -> Set[NodeId]:
        """Non-join nodes reached from ``node`` by hopping through join nodes."""
        found: Set[NodeId] = set()
        stack = list(self.successors(node))
        seen: Set[NodeId] = set()
        while stack:
            n = stack.pop()
            if n in seen:
                continue
            seen.add(n)
            if self.nodes[n].is_join:
                stack.extend(self.successors(n))
            else:
                found.add(n)
        return found

    def collapsed_relations(self) -> Dict[Tuple[NodeId, NodeId], Polarity]:
        """Relations between text components with join nodes collapsed.

        A path ``p -> J -> ... -> t`` through join nodes becomes ``p -> t``;
        its polarity is the attacking polarity on the path if there is one,
        otherwise support.
        """
        rel: Dict[Tuple[NodeId, NodeId], Polarity] = {}
        for comp in self.components():
            stack = [(t, self._edges[(comp.id, t)]) for t in self.successors(comp.id)]
            while stack:
                n, pol = stack.pop()
                if self.nodes[n].is_join:
                    stack.extend((m, strongest(pol, self._edges[(n, m)]))
                                 for m in self.successors(n))
                    continue
                prev = rel.get((comp.id, n))
                rel[(comp.id, n)] = pol if prev is None else strongest(prev, pol)
        return rel

    def validate(self) -> None:
        """Check every structural invariant; raise InvariantViolation on failure."""
        for (s, t) in self._edges:
            if s not in self.nodes or t not in self.nodes:
                raise InvariantViolation(f"edge {s}->{t} has a missing endpoint")
            if s == t:
                raise InvariantViolation(f"self-loop on {s}")
        if not self.is_acyclic():
            raise InvariantViolation("graph is cyclic")
        if self.conclusion is not None:
            if self.conclusion not in self.nodes:
                raise InvariantViolation(f"conclusion {self.conclusion} missing")
            if self.successors(self.conclusion):
                raise InvariantViolation("conclusion has outgoing edges")
        for comp in self.nodes.values():
            try:
                self._check_component(comp.text, comp.kind, comp.span)
            except (InvalidSpan, NonEmptyJoinText) as exc:
                raise InvariantViolation(f"node {comp.id}: {exc}") from None
            ins, outs = self.in_edges(comp.id), self.out_edges(comp.id)
            if comp.kind is ComponentKind.LINKED_JOIN:
                if len(ins) < 2 or any(e.polarity is not Polarity.SUPPORT for e in ins) or len(outs) != 1:
                    raise InvariantViolation(f"linked join {comp.id} malformed")
            elif comp.kind is ComponentKind.UNDERCUT_JOIN:
                attacks = [e for e in ins if e.polarity.is_attack]
                if len(attacks) != 1 or len(ins) < 2 or len(outs) != 1:
                    raise InvariantViolation(f"undercut join {comp.id} malformed")

    # -- copying and serialization ---------------------------------------

    def copy(self) -> "ArgumentGraph":
        g = ArgumentGraph(self.source_text)
        g.nodes = {n: replace(c) for n, c in self.nodes.items()}
        g._edges = dict(self._edges)
        g.conclusion = self.conclusion
        g._next_id = self._next_id
        return g

    def to_dict(self) -> dict:
        return {
            "version": GRAPH_FORMAT_VERSION,
            "source_text": self.source_text,
            "nodes": [
                {"id": c.id, "text": c.text, "kind": c.kind.value,
                 "span": list(c.span) if c.span is not None else None,
                 "label": c.label}
                for c in (self.nodes[n] for n in sorted(self.nodes))
            ],
            "edges": [
                {"source": e.source, "target": e.target, "polarity": e.polarity.value}
                for e in self.edges
            ],
            "conclusion": self.conclusion,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"

    @classmethod
    def from_dict(cls, data: dict, where: str = "graph") -> "ArgumentGraph":
        if not isinstance(data, dict):
            raise SchemaViolation(f"{where}: expected a JSON object")
        version = data.get("version")
        if version != GRAPH_FORMAT_VERSION:
            raise UnsupportedVersion(f"{where}: unsupported graph version {version!r}")
        try:
            g = cls(data["source_text"])
            for i, raw in enumerate(data["nodes"]):
                node_id = raw["id"]
                if not isinstance(node_id, int) or node_id in g.nodes:
                    raise SchemaViolation(f"{where}: nodes[{i}].id invalid or duplicate")
                span = tuple(raw["span"]) if raw.get("span") is not None else None
                kind = ComponentKind(raw["kind"])
                try:
                    g._check_component(raw["text"], kind, span)
                except (InvalidSpan, NonEmptyJoinText) as exc:
                    raise SchemaViolation(f"{where}: nodes[{i}]: {exc}") from None
                g.nodes[node_id] = Component(node_id, raw["text"], kind, span, raw.get("label"))
            g._next_id = max(g.nodes, default=-1) + 1
            for i, raw in enumerate(data["edges"]):
                s, t = raw["source"], raw["target"]
                if s not in g.nodes or t not in g.nodes:
                    raise SchemaViolation(f"{where}: edges[{i}] references a missing node")
                if s == t or (s, t) in g._edges:
                    raise SchemaViolation(f"{where}: edges[{i}] is a self-loop or duplicate")
                g._edges[(s, t)] = Polarity(raw["polarity"])
            conclusion = data["conclusion"]
        except KeyError as exc:
            raise SchemaViolation(f"{where}: missing field {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, SchemaViolation):
                raise
            raise SchemaViolation(f"{where}: {exc}") from None
        if conclusion is not None and conclusion not in g.nodes:
            raise SchemaViolation(f"{where}: conclusion {conclusion!r} is not a node")
        g.conclusion = conclusion
        if not g.is_acyclic():
            raise SchemaViolation(f"{where}: edges form a cycle")
        return g

    @classmethod
    def from_json(cls, text: str, where: str = "graph") -> "ArgumentGraph":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"{where}: invalid JSON ({exc})") from None
        return cls.from_dict(data, where)
