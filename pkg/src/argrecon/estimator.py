"""scikit-learn compatible front end to the reconstruction pipeline."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .evaluation import GoldAnnotation, span_prf
from .graph import ArgumentGraph
from .llm import Backend
from .pipeline import ModelSettings, PipelineConfig, PipelineTrace, run_pipeline
from .validation import check_same_length, check_texts


class ArgumentGraphReconstructor(TransformerMixin, BaseEstimator):
    """Turn raw texts into argument graphs.

    Every pipeline stage switch and model setting is a constructor parameter,
    so the estimator works with ``get_params``/``set_params``, ``clone`` and
    grid-style sweeps. ``fit`` only validates the parameters (nothing is
    learned); ``transform`` returns one :class:`ArgumentGraph` per text.

    Parameters
    ----------
    backend : Backend
        Chat-completion backend (live, replay, recording or a stub).
    enable_merge, enable_rewrite, enable_attach_unvisited, enable_linked,
    enable_implicit, enable_undercut, enable_dag_enforcement, enable_reduction,
    enable_partial_attack : bool
        Optional stage switches.
    model_name, temperature, seed, max_output_tokens
        Request settings.
    max_parse_retries : int
        Re-asks per model call when the answer cannot be parsed.
    templates_dir : str, optional
        Directory overriding the bundled prompt templates.
    n_jobs : int
        Documents processed concurrently.
    """

    def __init__(self, backend: Optional[Backend] = None, *, enable_merge=True, enable_rewrite=True,
                 enable_attach_unvisited=True, enable_linked=True, enable_implicit=True,
                 enable_undercut=True, enable_dag_enforcement=True, enable_reduction=True,
                 enable_partial_attack=False, model_name="gpt-5-mini", temperature=0.0, seed=42,
                 max_output_tokens=2048, max_parse_retries=2, templates_dir=None, n_jobs=1):
        self.backend = backend
        self.enable_merge = enable_merge
        self.enable_rewrite = enable_rewrite
        self.enable_attach_unvisited = enable_attach_unvisited
        self.enable_linked = enable_linked
        self.enable_implicit = enable_implicit
        self.enable_undercut = enable_undercut
        self.enable_dag_enforcement = enable_dag_enforcement
        self.enable_reduction = enable_reduction
        self.enable_partial_attack = enable_partial_attack
        self.model_name = model_name
        self.temperature = temperature
        self.seed = seed
        self.max_output_tokens = max_output_tokens
        self.max_parse_retries = max_parse_retries
        self.templates_dir = templates_dir
        self.n_jobs = n_jobs

    @classmethod
    def from_config(cls, backend: Backend, config: PipelineConfig, **kwargs) -> "ArgumentGraphReconstructor":
        params = {k: v for k, v in config.to_dict().items() if k.startswith("enable_")}
        m = config.model
        return cls(backend, model_name=m.name, temperature=m.temperature, seed=m.seed,
                   max_output_tokens=m.max_output_tokens, max_parse_retries=config.max_parse_retries,
                   templates_dir=config.templates_dir, **params, **kwargs)

    def _make_config(self) -> PipelineConfig:
        toggles = {k: bool(v) for k, v in self.get_params(deep=False).items() if k.startswith("enable_")}
        model = ModelSettings(self.model_name, float(self.temperature), self.seed, int(self.max_output_tokens))
        return PipelineConfig(**toggles, model=model, max_parse_retries=self.max_parse_retries,
                              templates_dir=self.templates_dir)

    def fit(self, X=None, y=None):
        if self.backend is None:
            raise ValueError("a chat-completion backend is required")
        if not isinstance(self.n_jobs, int) or self.n_jobs < 1:
            raise ValueError("n_jobs must be a positive integer")
        if X is not None:
            check_texts(X)
        self.config_ = self._make_config()
        return self

    def transform_with_traces(self, X) -> List[Tuple[ArgumentGraph, PipelineTrace]]:
        check_is_fitted(self, "config_")
        texts = check_texts(X)
        if self.n_jobs == 1:
            return [run_pipeline(self.backend, t, self.config_) for t in texts]
        with ThreadPoolExecutor(self.n_jobs) as pool:
            return list(pool.map(lambda t: run_pipeline(self.backend, t, self.config_), texts))

    def transform(self, X) -> List[ArgumentGraph]:
        return [g for g, _ in self.transform_with_traces(X)]

    def score(self, X, y: Sequence[GoldAnnotation]) -> float:
        """Mean span F1 (whitespace/case/punctuation-insensitive) against gold."""
        texts = check_texts(X)
        check_same_length(texts, y, "texts and gold annotations")
        scores = []
        for text, graph, gold in zip(texts, self.transform(texts), y):
            pred = [c.span for c in graph.components() if c.span is not None]
            gold_spans = [c.span for c in gold.components if c.span is not None]
            scores.append(span_prf(pred, gold_spans, "normalized", text).f1)
        return float(np.mean(scores))
