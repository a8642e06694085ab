"""DOT rendering of argument graphs.

Visual conventions: explicit components are black boxes, implicit ones gray,
the main conclusion blue. Linked joins are small gray points, undercut joins
small red points. Support edges are black, attacks red, partial attacks red
and dashed. Edges point from premise to target, drawn bottom-to-top.
"""

from __future__ import annotations

import textwrap
from dataclasses import dataclass

from .graph import ArgumentGraph, Component, ComponentKind, Polarity


@dataclass(frozen=True)
class DiagramStyle:
    explicit_fill: str = "black"
    implicit_fill: str = "gray"
    conclusion_fill: str = "blue"
    font_color: str = "white"
    node_shape: str = "box"
    linked_join_color: str = "gray"
    undercut_join_color: str = "red"
    join_size: float = 0.12
    support_color: str = "black"
    attack_color: str = "red"
    partial_attack_style: str = "dashed"
    wrap_width: int = 28
    rankdir: str = "BT"
    font_name: str = "Helvetica"


def _quote(value: str) -> str:
    escaped = value.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n")
    return f'"{escaped}"'


def _attrs(**attrs) -> str:
    parts = []
    for key, value in attrs.items():
        if isinstance(value, float):
            value = f"{value:g}"
        parts.append(f"{key}={_quote(str(value))}")
    return "[" + ", ".join(parts) + "]"


def node_label(comp: Component, width: int) -> str:
    text = comp.text if not comp.label else f"{comp.label}. {comp.text}"
    return "\n".join(textwrap.wrap(text, width=width)) or " "


def to_dot(graph: ArgumentGraph, style: DiagramStyle = DiagramStyle()) -> str:
    """Deterministic DOT source for ``graph`` (nodes and edges sorted by id)."""
    lines = [
        "digraph argument {",
        f"  graph {_attrs(rankdir=style.rankdir)};",
        f"  node {_attrs(shape=style.node_shape, style='filled', fontname=style.font_name, fontcolor=style.font_color)};",
        f"  edge {_attrs(color=style.support_color)};",
    ]
    for node_id in sorted(graph.nodes):
        comp = graph.nodes[node_id]
        name = f"n{node_id}"
        if comp.kind is ComponentKind.LINKED_JOIN or comp.kind is ComponentKind.UNDERCUT_JOIN:
            color = (style.linked_join_color if comp.kind is ComponentKind.LINKED_JOIN
                     else style.undercut_join_color)
            lines.append(f"  {name} {_attrs(label='', shape='point', width=style.join_size, height=style.join_size, color=color, fillcolor=color)};")
            continue
        if node_id == graph.conclusion:
            fill = style.conclusion_fill
        elif comp.kind is ComponentKind.IMPLICIT:
            fill = style.implicit_fill
        else:
            fill = style.explicit_fill
        lines.append(f"  {name} {_attrs(label=node_label(comp, style.wrap_width), fillcolor=fill)};")
    for edge in graph.edges:
        if edge.polarity is Polarity.SUPPORT:
            attrs = _attrs(color=style.support_color)
        elif edge.polarity is Polarity.ATTACK:
            attrs = _attrs(color=style.attack_color)
        else:
            attrs = _attrs(color=style.attack_color, style=style.partial_attack_style)
        lines.append(f"  n{edge.source} -> n{edge.target} {attrs};")
    lines.append("}")
    return "\n".join(lines) + "\n"
