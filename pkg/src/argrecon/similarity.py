"""Character-overlap similarity and fuzzy location of components in text."""

from __future__ import annotations

import re
from difflib import SequenceMatcher
from typing import List, Optional, Sequence, Tuple

_WS = re.compile(r"\s+")
_WORD = re.compile(r"\w+")


def normalize(text: str) -> str:
    """Case-fold and collapse whitespace runs to single spaces."""
    return _WS.sub(" ", text.casefold()).strip()


def lcs_length(a: str, b: str) -> int:
    """Length of the longest common subsequence (bit-parallel, Hyyrö 2004)."""
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    masks: dict = {}
    for i, ch in enumerate(a):
        masks[ch] = masks.get(ch, 0) | (1 << i)
    full = (1 << len(a)) - 1
    v = full
    for ch in b:
        u = v & masks.get(ch, 0)
        v = ((v + u) | (v - u)) & full
    return len(a) - bin(v).count("1")


def char_overlap_similarity(a: str, b: str) -> float:
    """Dice-style overlap ``2 * LCS / (|a| + |b|)`` on normalized strings.

    Symmetric, 1.0 for identical (and for two empty) strings, 0.0 when one
    side is empty and the other is not.
    """
    a, b = normalize(a), normalize(b)
    if not a and not b:
        return 1.0
    return 2.0 * lcs_length(a, b) / (len(a) + len(b))


def _normalized_with_offsets(text: str) -> Tuple[str, List[int]]:
    """Normalized text plus, per output char, the index of its source char."""
    out: List[str] = []
    offsets: List[int] = []
    pending_space = False
    for i, ch in enumerate(text):
        if ch.isspace():
            pending_space = bool(out)
            continue
        if pending_space:
            out.append(" ")
            offsets.append(i - 1)
            pending_space = False
        for folded in ch.casefold():
            out.append(folded)
            offsets.append(i)
    return "".join(out), offsets


def _overlaps(span: Tuple[int, int], others: Sequence[Tuple[int, int]]) -> bool:
    return any(span[0] < b and a < span[1] for a, b in others)


def align_span(source: str, fragment: str, threshold: float = 0.8,
               avoid: Sequence[Tuple[int, int]] = ()) -> Optional[Tuple[int, int]]:
    """Locate ``fragment`` in ``source`` and return its ``(start, end)`` span.

    An exact case- and whitespace-insensitive occurrence wins, the first one
    not overlapping a span in ``avoid`` if there is one. Otherwise the
    best-scoring window between word boundaries near the longest shared
    blocks is taken, provided its similarity reaches ``threshold``.
    """
    norm_src, offsets = _normalized_with_offsets(source)
    frag = normalize(fragment)
    if not frag or not norm_src:
        return None

    def to_source(lo: int, hi: int) -> Tuple[int, int]:
        return offsets[lo], offsets[hi - 1] + 1

    pos = norm_src.find(frag)
    if pos >= 0:
        first = to_source(pos, pos + len(frag))
        while pos >= 0:
            span = to_source(pos, pos + len(frag))
            if not _overlaps(span, avoid):
                return span
            pos = norm_src.find(frag, pos + 1)
        return first

    starts = [m.start() for m in _WORD.finditer(norm_src)]
    ends = [m.end() for m in _WORD.finditer(norm_src)]
    if not starts:
        return None
    length = len(frag)
    slack = length // 4 + 5
    blocks = SequenceMatcher(None, norm_src, frag, autojunk=False).get_matching_blocks()
    blocks = sorted((b for b in blocks if b.size >= 3), key=lambda b: -b.size)[:5]

    best: Optional[Tuple[float, int, int]] = None
    seen = set()
    for blk in blocks:
        base = blk.a - blk.b
        cand_starts = [s for s in starts if abs(s - base) <= slack]
        cand_ends = [e for e in ends if abs(e - (base + length)) <= slack]
        for s in cand_starts:
            for e in cand_ends:
                if e <= s or (s, e) in seen:
                    continue
                seen.add((s, e))
                score = char_overlap_similarity(norm_src[s:e], frag)
                key = (score, -s, -(e - s))
                if best is None or key > (best[0], -best[1], -(best[2] - best[1])):
                    best = (score, s, e)
    if best is None or best[0] < threshold:
        return None
    return to_source(best[1], best[2])
