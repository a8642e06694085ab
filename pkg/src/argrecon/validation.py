"""Input validation helpers shared by the estimator and the CLI."""

from __future__ import annotations

from typing import Iterable, List, Sequence

import numpy as np


def check_texts(X, allow_empty_list: bool = False) -> List[str]:
    """Coerce ``X`` to a list of non-empty strings.

    A bare string is rejected: pass ``[text]`` for a single document.
    """
    if isinstance(X, (str, bytes)):
        raise TypeError("expected a sequence of texts, got a single string; wrap it in a list")
    if isinstance(X, np.ndarray):
        if X.ndim != 1:
            raise ValueError(f"expected a 1-D array of texts, got shape {X.shape}")
        X = X.tolist()
    try:
        texts = list(X)
    except TypeError:
        raise TypeError(f"expected a sequence of texts, got {type(X).__name__}") from None
    if not texts and not allow_empty_list:
        raise ValueError("no texts given")
    for i, t in enumerate(texts):
        if not isinstance(t, str):
            raise TypeError(f"text {i} is {type(t).__name__}, not str")
        if not t.strip():
            raise ValueError(f"text {i} is empty")
    return texts


def check_thresholds(thresholds: Iterable[float]) -> List[float]:
    """Thresholds must be numbers in [0, 1], strictly increasing."""
    try:
        values = [float(t) for t in thresholds]
    except (TypeError, ValueError):
        raise ValueError("thresholds must be numbers") from None
    if not values:
        raise ValueError("at least one threshold is required")
    if any(not 0.0 <= t <= 1.0 for t in values):
        raise ValueError("thresholds must lie in [0, 1]")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ValueError("thresholds must be sorted in strictly increasing order")
    return values


def check_same_length(a: Sequence, b: Sequence, what: str = "inputs") -> None:
    if len(a) != len(b):
        raise ValueError(f"{what} have different lengths: {len(a)} vs {len(b)}")
