"""Multi-stage reconstruction of an argument graph from raw text.

Stages, in execution order (optional ones can be switched off):

 1. identify components          7. linked vs. convergent premises (opt)
 2. merge related components (opt)  8. implicit premises (opt)
 3. rewrite components (opt)      9. rebuttal vs. undercut (opt)
 4. identify the main conclusion 10. DAG enforcement
 5. premise expansion (BFS)      11. transitive reduction (opt)
 6. attach unvisited components (opt)

Only stages 1 and 4 abort a run. Every other stage degrades: on an answer
that stays unparseable after the configured retries it records a warning in
the trace and carries on with what it has.
"""

from __future__ import annotations

import hashlib
import json
import logging
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Set, Tuple, Union

import yaml

from .errors import (
    ConclusionNotFound,
    ConfigError,
    CycleWouldForm,
    GraphError,
    NoComponentsFound,
    ParseError,
    UnparseableResponse,
)
from .graph import ArgumentGraph, ComponentKind, NodeId, Polarity
from .llm import (
    Backend,
    ChatRequest,
    enumerate_lines,
    parse_enumerated_components,
    parse_groups,
    parse_id_list,
    parse_labeled_ids,
)
from .prompts import FORMAT_REMINDER, PromptTemplate, load_template
from .similarity import align_span

logger = logging.getLogger(__name__)

# config-file stage keys -> PipelineConfig attributes
STAGE_KEYS = {
    "merge": "enable_merge",
    "rewrite": "enable_rewrite",
    "attach_unvisited": "enable_attach_unvisited",
    "linked": "enable_linked",
    "implicit": "enable_implicit",
    "undercut": "enable_undercut",
    "dag_enforcement": "enable_dag_enforcement",
    "reduction": "enable_reduction",
    "partial_attack": "enable_partial_attack",
}


@dataclass
class ModelSettings:
    name: str = "gpt-5-mini"
    temperature: float = 0.0
    seed: Optional[int] = 42
    max_output_tokens: int = 2048


@dataclass
class PipelineConfig:
    enable_merge: bool = True
    enable_rewrite: bool = True
    enable_attach_unvisited: bool = True
    enable_linked: bool = True
    enable_implicit: bool = True
    enable_undercut: bool = True
    enable_dag_enforcement: bool = True
    enable_reduction: bool = True
    enable_partial_attack: bool = False
    model: ModelSettings = field(default_factory=ModelSettings)
    max_parse_retries: int = 2
    templates_dir: Optional[str] = None

    def __post_init__(self):
        if isinstance(self.model, dict):
            self.model = ModelSettings(**self.model)
        self.validate()

    def validate(self) -> None:
        if self.enable_undercut and not self.enable_dag_enforcement:
            raise ConfigError("the undercut stage requires DAG enforcement")
        if not isinstance(self.max_parse_retries, int) or not 1 <= self.max_parse_retries <= 10:
            raise ConfigError("max_parse_retries must be a small positive integer")
        if self.model.temperature < 0 or self.model.max_output_tokens <= 0:
            raise ConfigError("invalid model settings")

    @classmethod
    def minimal(cls, **overrides) -> "PipelineConfig":
        """Mandatory stages only, without DAG strictness (benchmark setting)."""
        params = {attr: False for attr in STAGE_KEYS.values()}
        params.update(overrides)
        return cls(**params)

    @classmethod
    def from_mapping(cls, data: dict) -> "PipelineConfig":
        data = dict(data or {})
        params: dict = {}
        stages = data.pop("stages", {}) or {}
        for key, value in stages.items():
            if key not in STAGE_KEYS:
                raise ConfigError(f"unknown stage {key!r} in config")
            if not isinstance(value, bool):
                raise ConfigError(f"stage {key!r} must be on/off, got {value!r}")
            params[STAGE_KEYS[key]] = value
        if "model" in data:
            try:
                params["model"] = ModelSettings(**(data.pop("model") or {}))
            except TypeError as exc:
                raise ConfigError(f"bad model block: {exc}") from None
        for key in ("max_parse_retries", "templates_dir"):
            if key in data:
                params[key] = data.pop(key)
        data.pop("llm", None)  # consumed by the CLI
        if data:
            raise ConfigError(f"unknown config keys: {sorted(data)}")
        return cls(**params)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "PipelineConfig":
        return cls.from_mapping(load_config_file(path))

    def to_dict(self) -> dict:
        return asdict(self)

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def load_config_file(path: Union[str, Path]) -> dict:
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return data


@dataclass
class StageRecord:
    stage: str
    inputs_digest: str
    raw_response: str
    parsed: object = None
    warnings: List[str] = field(default_factory=list)


@dataclass
class PipelineTrace:
    """One record per model call, in call order, plus stage-level warnings."""

    stage_records: List[StageRecord] = field(default_factory=list)
    warnings: List[Tuple[str, str]] = field(default_factory=list)
    timings: Dict[str, float] = field(default_factory=dict)

    def warn(self, stage: str, message: str) -> None:
        logger.warning("%s: %s", stage, message)
        self.warnings.append((stage, message))

    @property
    def degraded(self) -> bool:
        return bool(self.warnings) or any(r.warnings for r in self.stage_records)

    def calls(self, stage: str) -> List[StageRecord]:
        return [r for r in self.stage_records if r.stage == stage]

    def to_dict(self, include_timings: bool = False) -> dict:
        out = {
            "stage_records": [asdict(r) for r in self.stage_records],
            "warnings": [list(w) for w in self.warnings],
        }
        if include_timings:
            out["timings"] = dict(self.timings)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


def _jsonable(value):
    if isinstance(value, Polarity):
        return value.value
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


class ReconstructionPipeline:
    """Runs the stages for one document, building ``self.graph`` as it goes.

    The stage methods can also be called one by one; each works on the
    current graph and the current component order.
    """

    def __init__(self, backend: Backend, config: Optional[PipelineConfig] = None):
        self.backend = backend
        self.config = config or PipelineConfig()
        self.trace = PipelineTrace()
        self.graph = ArgumentGraph("")
        self.order: List[NodeId] = []
        self.visited: Set[NodeId] = set()
        self._templates: Dict[str, PromptTemplate] = {}

    # -- helpers ------------------------------------------------------------

    @property
    def text(self) -> str:
        return self.graph.source_text

    def _template(self, stage: str) -> PromptTemplate:
        if stage not in self._templates:
            self._templates[stage] = load_template(stage, self.config.templates_dir)
        return self._templates[stage]

    def _ask(self, stage: str, parse: Callable[[str], object], **values: str):
        """Query the model, re-asking with a format reminder on parse errors."""
        system, user = self._template(stage).render(text=self.text, **values)
        m = self.config.model
        last: Optional[Exception] = None
        for attempt in range(self.config.max_parse_retries + 1):
            prompt = user if attempt == 0 else user + FORMAT_REMINDER
            request = ChatRequest(system, prompt, m.name, m.temperature, m.seed, m.max_output_tokens)
            response = self.backend.complete(request)
            record = StageRecord(stage, request.digest(), response.text)
            self.trace.stage_records.append(record)
            try:
                result = parse(response.text)
            except ParseError as exc:
                record.warnings.append(f"unparseable response: {exc}")
                last = exc
                continue
            record.parsed = _jsonable(result)
            return result
        raise UnparseableResponse(f"{stage}: no usable answer after "
                                  f"{self.config.max_parse_retries + 1} attempts ({last})")

    def label(self, node: NodeId) -> str:
        return self.graph.nodes[node].label or str(node)

    def _listing(self, nodes: Sequence[NodeId]) -> str:
        return enumerate_lines([(self.label(n), self.graph.nodes[n].text) for n in nodes])

    def _node_for_label(self) -> Dict[str, NodeId]:
        return {self.graph.nodes[n].label: n for n in self.graph.nodes
                if self.graph.nodes[n].label is not None}

    def _next_label(self) -> str:
        numbers = [int(c.label) for c in self.graph.nodes.values()
                   if c.label is not None and c.label.isdigit()]
        return str(max(numbers, default=0) + 1)

    def _relabel(self) -> None:
        for i, n in enumerate(self.order, 1):
            self.graph.nodes[n].label = str(i)

    def _replace_in_order(self, members: Set[NodeId], new: NodeId) -> None:
        first = min(i for i, n in enumerate(self.order) if n in members)
        self.order = [n for n in self.order if n not in members]
        self.order.insert(first, new)

    def _describe(self, node: NodeId) -> str:
        comp = self.graph.nodes[node]
        if not comp.is_join:
            return f"[{self.label(node)}] {comp.text}"
        sources = []
        stack = list(self.graph.predecessors(node))
        while stack:
            n = stack.pop(0)
            if self.graph.nodes[n].is_join:
                stack.extend(self.graph.predecessors(n))
            elif self.graph.edge(n, node) is None or not self.graph.edge(n, node).polarity.is_attack:
                sources.append(f"[{self.label(n)}]")
        return "the joint premises " + ", ".join(sources)

    # -- stage 1 ------------------------------------------------------------

    def identify_components(self, text: str) -> List[NodeId]:
        if not text or not text.strip():
            raise ValueError("input text is empty")
        self.graph = ArgumentGraph(text)
        self.order, self.visited = [], set()
        try:
            items = self._ask("components", parse_enumerated_components)
        except UnparseableResponse as exc:
            raise NoComponentsFound(str(exc)) from None
        taken: List[Tuple[int, int]] = []
        for item in items:
            span = align_span(text, item, avoid=taken)
            if span is not None:
                taken.append(span)
            self.order.append(self.graph.add_component(item, ComponentKind.EXPLICIT, span))
        self._relabel()
        return list(self.order)

    # -- stage 2 ------------------------------------------------------------

    def merge_related_components(self) -> List[NodeId]:
        if len(self.order) < 2:
            return list(self.order)
        try:
            groups = self._ask("merge", parse_groups, components=self._listing(self.order))
        except UnparseableResponse as exc:
            self.trace.warn("merge", f"stage skipped: {exc}")
            return list(self.order)
        by_label = self._node_for_label()
        taken: Set[NodeId] = set()
        accepted = []
        for group in groups:
            unknown = [g for g in group if g not in by_label]
            if unknown:
                self.trace.warn("merge", f"group {group} ignored: unknown labels {unknown}")
                continue
            ids = {by_label[g] for g in group}
            if len(ids) < 2:
                continue
            if ids & taken:
                self.trace.warn("merge", f"group {group} ignored: overlaps an earlier group")
                continue
            taken |= ids
            accepted.append(ids)
        for ids in accepted:
            new = self.graph.merge_components(ids)
            self._replace_in_order(ids, new)
        self._relabel()
        return list(self.order)

    # -- stage 3 ------------------------------------------------------------

    def rewrite_components(self) -> List[NodeId]:
        n = len(self.order)

        def parse(raw: str) -> List[str]:
            items = parse_enumerated_components(raw)
            if len(items) != n:
                raise UnparseableResponse(f"expected {n} rewrites, got {len(items)}")
            return items

        try:
            rewrites = self._ask("rewrite", parse, components=self._listing(self.order))
        except UnparseableResponse as exc:
            self.trace.warn("rewrite", f"originals kept: {exc}")
            return list(self.order)
        for node, new_text in zip(self.order, rewrites):
            self.graph.nodes[node].text = new_text
        return list(self.order)

    # -- stage 4 ------------------------------------------------------------

    def identify_conclusion(self) -> NodeId:
        if not self.order:
            raise ConclusionNotFound("no components")
        if len(self.order) == 1:
            self.graph.set_conclusion(self.order[0])
            return self.order[0]
        labels = [self.label(n) for n in self.order]

        def parse(raw: str) -> str:
            ids = parse_id_list(raw, labels)
            if not ids:
                raise UnparseableResponse("no conclusion named")
            return ids[0]

        try:
            chosen = self._ask("conclusion", parse, components=self._listing(self.order))
        except UnparseableResponse as exc:
            raise ConclusionNotFound(str(exc)) from None
        node = self._node_for_label()[chosen]
        self.graph.set_conclusion(node)
        return node

    # -- stage 5 ------------------------------------------------------------

    def expand_premises(self, target: NodeId, visited: Set[NodeId]) -> List[Tuple[NodeId, Polarity]]:
        """Premises of ``target`` among the components outside ``visited``."""
        candidates = [n for n in self.order if n not in visited and n != target]
        if not candidates:
            return []
        stage = "premises_partial" if self.config.enable_partial_attack else "premises"
        labels = [self.label(n) for n in self.order]
        try:
            answer = self._ask(stage, lambda raw: parse_labeled_ids(raw, labels),
                               components=self._listing(self.order),
                               target=self._describe(target),
                               candidates=self._listing(candidates))
        except UnparseableResponse as exc:
            self.trace.warn("premises", f"no premises for [{self.label(target)}]: {exc}")
            return []
        by_label = self._node_for_label()
        allowed = set(candidates)
        out = []
        for lab, pol in answer:
            node = by_label[lab]
            if node not in allowed:
                self.trace.warn("premises", f"[{lab}] dropped: not a candidate for [{self.label(target)}]")
                continue
            if pol is Polarity.PARTIAL_ATTACK and not self.config.enable_partial_attack:
                pol = Polarity.ATTACK
            out.append((node, pol))
        return out

    def build_graph_bfs(self) -> ArgumentGraph:
        """Breadth-first premise expansion starting at the conclusion.

        With DAG enforcement every premise must be unvisited (neither expanded
        nor queued), which makes the result acyclic by construction. Without
        it any other component may be named; edges that would still close a
        cycle are dropped with a warning.
        """
        root = self.graph.conclusion
        if root is None:
            raise ConclusionNotFound("identify the conclusion first")
        strict = self.config.enable_dag_enforcement
        queue = deque([root])
        seen = {root}
        while queue:
            current = queue.popleft()
            exclude = seen if strict else {root, current} | set(self.graph.predecessors(current))
            for node, pol in self.expand_premises(current, exclude):
                if node == self.graph.conclusion:
                    self.trace.warn("premises", "the conclusion cannot act as a premise")
                    continue
                try:
                    self.graph.add_edge(node, current, pol)
                except CycleWouldForm:
                    self.trace.warn("premises", f"edge [{self.label(node)}]->[{self.label(current)}] "
                                                "dropped: it would close a cycle")
                    continue
                if node not in seen:
                    seen.add(node)
                    queue.append(node)
        self.visited = seen
        return self.graph

    # -- stage 6 ------------------------------------------------------------

    def attach_unvisited(self) -> ArgumentGraph:
        """Attach components the expansion never reached.

        Leftovers may attach to each other. When their proposals form a
        cycle, the members are merged into one composite that is queried
        again in the next round. Rounds are capped at the number of original
        leftovers.
        """
        pending = [n for n in self.order if n not in self.visited]
        cap = len(pending)
        rounds = 0
        while pending:
            if rounds >= cap:
                self.trace.warn("attach", f"round cap {cap} hit; "
                                          f"{[self.label(n) for n in pending]} left unattached")
                break
            rounds += 1
            proposals: Dict[NodeId, Optional[Tuple[NodeId, Polarity]]] = {}
            for node in pending:
                proposals[node] = self._propose_attachment(node)

            successor = {n: p[0] for n, p in proposals.items() if p and p[0] in proposals}
            cycles = _functional_cycles(successor)
            remap: Dict[NodeId, NodeId] = {}
            next_pending: List[NodeId] = []
            for cycle in cycles:
                members = set(cycle)
                try:
                    new = self.graph.merge_components(members, label=self._next_label())
                except GraphError as exc:
                    self.trace.warn("attach", f"cannot merge cycle {sorted(members)}: {exc}")
                    continue
                self._replace_in_order(members, new)
                for n in members:
                    remap[n] = new
                next_pending.append(new)

            for node in pending:
                if node in remap:
                    continue
                proposal = proposals[node]
                if proposal is None:
                    self.trace.warn("attach", f"[{self.label(node)}] left unattached")
                    continue
                target, pol = proposal
                target = remap.get(target, target)
                if target == node or self.graph.would_create_cycle(node, target) \
                        or self.graph.has_edge(node, target) or node == self.graph.conclusion:
                    self.trace.warn("attach", f"[{self.label(node)}] left unattached: "
                                              f"attachment to node {target} invalid")
                    continue
                self.graph.add_edge(node, target, pol)
                self.visited.add(node)
            pending = next_pending
        return self.graph

    def _propose_attachment(self, node: NodeId) -> Optional[Tuple[NodeId, Polarity]]:
        labels = [self.label(n) for n in self.order if n != node]
        try:
            answer = self._ask("attach", lambda raw: parse_labeled_ids(raw, labels),
                               components=self._listing(self.order),
                               component=self._describe(node))
        except UnparseableResponse as exc:
            self.trace.warn("attach", f"no attachment for [{self.label(node)}]: {exc}")
            return None
        if not answer:
            return None
        lab, pol = answer[0]
        if pol is Polarity.PARTIAL_ATTACK and not self.config.enable_partial_attack:
            pol = Polarity.ATTACK
        return self._node_for_label()[lab], pol

    # -- stage 7 ------------------------------------------------------------

    def classify_premise_structure(self) -> ArgumentGraph:
        for target in self.graph.topological_order():
            if self.graph.nodes[target].is_join:
                continue
            supporters = [e.source for e in self.graph.in_edges(target)
                          if e.polarity is Polarity.SUPPORT
                          and not self.graph.nodes[e.source].is_join]
            if len(supporters) < 2:
                continue
            labels = {self.label(n): n for n in supporters}

            def parse(raw: str, labels=labels) -> List[List[str]]:
                groups = parse_groups(raw)
                used: Set[str] = set()
                for group in groups:
                    unknown = [g for g in group if g not in labels]
                    if unknown:
                        raise UnparseableResponse(f"unknown premises {unknown}")
                    if used & set(group):
                        raise UnparseableResponse(f"premise listed in two groups: {group}")
                    used |= set(group)
                return groups

            try:
                groups = self._ask("structure", parse, target=self._describe(target),
                                   supporters=self._listing(supporters))
            except UnparseableResponse as exc:
                self.trace.warn("structure", f"[{self.label(target)}] left convergent: {exc}")
                continue
            for group in groups:
                if len(group) >= 2:
                    self.graph.insert_linked_join([labels[g] for g in group], target)
        return self.graph

    # -- stage 8 ------------------------------------------------------------

    def _inferences(self) -> List[Tuple[List[NodeId], NodeId, Optional[NodeId]]]:
        """Support inferences as (premises, target, linked join or None)."""
        rank = {n: i for i, n in enumerate(self.graph.topological_order())}
        found = []
        for e in self.graph.edges:
            if e.polarity is not Polarity.SUPPORT:
                continue
            src, tgt = self.graph.nodes[e.source], self.graph.nodes[e.target]
            if src.kind is ComponentKind.LINKED_JOIN and not tgt.is_join:
                found.append((self.graph.predecessors(e.source), e.target, e.source))
            elif not src.is_join and not tgt.is_join:
                found.append(([e.source], e.target, None))
        found.sort(key=lambda f: (-rank[f[1]], f[0]))
        return found

    def generate_implicit_premises(self) -> ArgumentGraph:
        """Ask for unstated premises of each support inference.

        Generated premises join the inference's linked join when it has one.
        For a single-premise inference they form a new linked group with that
        premise when linked classification is enabled, and otherwise support
        the target directly. Generated premises are never expanded further.
        """
        for premises, target, join in self._inferences():
            try:
                texts = self._ask("implicit", _parse_optional_list,
                                  target=self._describe(target),
                                  premises=self._listing(premises))
            except UnparseableResponse as exc:
                self.trace.warn("implicit", f"none generated for [{self.label(target)}]: {exc}")
                continue
            if not texts:
                continue
            created = [self.graph.add_component(t, ComponentKind.IMPLICIT, label=self._next_label())
                       for t in texts]
            if join is not None:
                for node in created:
                    self.graph.add_edge(node, join, Polarity.SUPPORT)
                continue
            for node in created:
                self.graph.add_edge(node, target, Polarity.SUPPORT)
            if self.config.enable_linked:
                self.graph.insert_linked_join(premises + created, target)
        return self.graph

    # -- stage 9 ------------------------------------------------------------

    def classify_undercuts(self) -> ArgumentGraph:
        attacks = [e for e in self.graph.edges
                   if e.polarity.is_attack and not self.graph.nodes[e.target].is_join]
        for attack in attacks:
            inferences = [e for e in self.graph.in_edges(attack.target)
                          if e.polarity is Polarity.SUPPORT and e.source != attack.source]
            if not inferences:
                continue
            listing = "\n".join(f"{i}. {self._describe(e.source)} supports {self._describe(e.target)}"
                                for i, e in enumerate(inferences, 1))
            valid = [str(i) for i in range(1, len(inferences) + 1)]
            try:
                chosen = self._ask("undercut", lambda raw: parse_id_list(raw, valid),
                                   attack=self._describe(attack.source),
                                   target=self._describe(attack.target),
                                   inferences=listing)
            except UnparseableResponse as exc:
                self.trace.warn("undercut", f"[{self.label(attack.source)}] kept as rebuttal: {exc}")
                continue
            if not chosen:
                continue
            inference = inferences[int(chosen[0]) - 1]
            self.graph.insert_undercut(attack.source, inference)
        return self.graph

    # -- driver -------------------------------------------------------------

    def _timed(self, stage: str, fn, *args):
        start = time.perf_counter()
        try:
            return fn(*args)
        finally:
            self.trace.timings[stage] = self.trace.timings.get(stage, 0.0) + time.perf_counter() - start

    def run(self, text: str) -> Tuple[ArgumentGraph, PipelineTrace]:
        cfg = self.config
        self.trace = PipelineTrace()
        self._timed("components", self.identify_components, text)
        if cfg.enable_merge:
            self._timed("merge", self.merge_related_components)
        if cfg.enable_rewrite:
            self._timed("rewrite", self.rewrite_components)
        self._timed("conclusion", self.identify_conclusion)
        self._timed("premises", self.build_graph_bfs)
        if cfg.enable_attach_unvisited:
            self._timed("attach", self.attach_unvisited)
        if cfg.enable_linked:
            self._timed("structure", self.classify_premise_structure)
        if cfg.enable_implicit:
            self._timed("implicit", self.generate_implicit_premises)
        if cfg.enable_undercut:
            self._timed("undercut", self.classify_undercuts)
        if cfg.enable_dag_enforcement:
            self.graph.validate()
        if cfg.enable_reduction:
            self.graph = self._timed("reduction", self.graph.transitive_reduction)
        return self.graph, self.trace


def _parse_optional_list(raw: str) -> List[str]:
    """Numbered list, or nothing when the model answers 0 / none."""
    stripped = raw.strip().strip(".").lower()
    if stripped in ("0", "none", "no", ""):
        return []
    try:
        return parse_enumerated_components(raw)
    except ParseError:
        raise UnparseableResponse(f"neither a list nor 0: {raw[:80]!r}") from None


def _functional_cycles(successor: Dict[NodeId, NodeId]) -> List[List[NodeId]]:
    """Cycles of a graph where every node has at most one successor."""
    cycles = []
    state: Dict[NodeId, int] = {}
    for start in sorted(successor):
        path = []
        node = start
        while node in successor and node not in state:
            state[node] = 1
            path.append(node)
            node = successor[node]
        if node in path:
            cycles.append(path[path.index(node):])
        for n in path:
            state[n] = 2
    return cycles


def run_pipeline(backend: Backend, text: str,
                 config: Optional[PipelineConfig] = None) -> Tuple[ArgumentGraph, PipelineTrace]:
    return ReconstructionPipeline(backend, config).run(text)
