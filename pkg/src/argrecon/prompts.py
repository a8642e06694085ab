"""Prompt templates, one plain-text file per pipeline stage.

A template file holds the system prompt, a line containing only ``---``, and
the user prompt. Leading lines starting with ``#`` are comments. ``{name}`` placeholders are filled at render time; braces
that do not name a supplied value are left alone.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from .errors import ConfigError

STAGES = (
    "components", "merge", "rewrite", "conclusion", "premises", "premises_partial",
    "attach", "structure", "implicit", "undercut",
)

FORMAT_REMINDER = (
    "\n\nYour previous answer could not be parsed. Answer again, using exactly "
    "the response format described above and nothing else."
)

_PLACEHOLDER = re.compile(r"\{([a-z_]+)\}")
_SEPARATOR = re.compile(r"^---\s*$", re.M)


@dataclass(frozen=True)
class PromptTemplate:
    stage: str
    system: str
    user: str

    def render(self, **values: str) -> tuple:
        def sub(m):
            return str(values[m.group(1)]) if m.group(1) in values else m.group(0)
        return _PLACEHOLDER.sub(sub, self.system), _PLACEHOLDER.sub(sub, self.user)

    @classmethod
    def parse(cls, stage: str, raw: str) -> "PromptTemplate":
        lines = raw.splitlines(keepends=True)
        while lines and lines[0].startswith("#"):
            lines.pop(0)
        parts = _SEPARATOR.split("".join(lines), maxsplit=1)
        if len(parts) != 2:
            raise ConfigError(f"template {stage!r} lacks the '---' separator line")
        system, user = (p.strip() for p in parts)
        if not system or not user:
            raise ConfigError(f"template {stage!r} has an empty section")
        return cls(stage, system, user)


def load_template(stage: str, templates_dir: Optional[Union[str, Path]] = None) -> PromptTemplate:
    """Load a stage template, preferring ``templates_dir`` over the bundled copy."""
    if stage not in STAGES:
        raise ConfigError(f"unknown pipeline stage {stage!r}")
    if templates_dir is not None:
        candidate = Path(templates_dir) / f"{stage}.txt"
        if candidate.is_file():
            return PromptTemplate.parse(stage, candidate.read_text(encoding="utf-8"))
    raw = resources.files("argrecon").joinpath("templates", f"{stage}.txt").read_text(encoding="utf-8")
    return PromptTemplate.parse(stage, raw)
