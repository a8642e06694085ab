"""Reconstruct argument graphs from natural-language text with an LLM."""

from .corpus import Document, load_graph, load_standoff, load_standoff_dir, load_textbook_corpus, save_graph
from .diagram import DiagramStyle, to_dot
from .errors import ArgReconError, ConfigError, GraphError, LLMError, PipelineError, SchemaViolation
from .estimator import ArgumentGraphReconstructor
from .evaluation import (EvalReport, GoldAnnotation, GoldComponent, GoldRelation, ThresholdCurve,
                         component_classification, conclusion_accuracy, evaluate_corpus,
                         hungarian_match, relation_accuracy, relation_classification, span_prf,
                         threshold_sweep)
from .graph import ArgEdge, ArgumentGraph, Component, ComponentKind, Polarity, Role
from .llm import (ChatRequest, ChatResponse, FunctionBackend, HttpBackend, RecordingBackend,
                  ReplayBackend, Transcript)
from .pipeline import PipelineConfig, PipelineTrace, ReconstructionPipeline, run_pipeline
from .similarity import align_span, char_overlap_similarity, lcs_length

__version__ = "0.1.0"

__all__ = [
    "ArgEdge", "ArgReconError", "ArgumentGraph", "ArgumentGraphReconstructor", "ChatRequest",
    "ChatResponse", "Component", "ComponentKind", "ConfigError", "DiagramStyle", "Document",
    "EvalReport", "FunctionBackend", "GoldAnnotation", "GoldComponent", "GoldRelation",
    "GraphError", "HttpBackend", "LLMError", "PipelineConfig", "PipelineError", "PipelineTrace",
    "Polarity", "ReconstructionPipeline", "RecordingBackend", "ReplayBackend", "Role",
    "SchemaViolation", "ThresholdCurve", "Transcript", "align_span", "char_overlap_similarity",
    "component_classification", "conclusion_accuracy", "evaluate_corpus", "hungarian_match",
    "lcs_length", "load_graph", "load_standoff", "load_standoff_dir", "load_textbook_corpus",
    "relation_accuracy", "relation_classification", "run_pipeline", "save_graph", "span_prf",
    "threshold_sweep", "to_dot",
]
