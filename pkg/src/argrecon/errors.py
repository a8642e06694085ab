"""Exception hierarchy shared across the package."""


class ArgReconError(Exception):
    """Base class for all package errors."""


# graph model

class GraphError(ArgReconError):
    pass


class InvalidSpan(GraphError):
    pass


class NonEmptyJoinText(GraphError):
    pass


class MissingEndpoint(GraphError):
    pass


class SelfLoop(GraphError):
    pass


class DuplicateEdge(GraphError):
    pass


class CycleWouldForm(GraphError):
    pass


class GraphCyclic(GraphError):
    pass


class JoinNodeInMerge(GraphError):
    pass


class MergeCreatesCycle(GraphError):
    pass


class PremiseNotAttached(GraphError):
    pass


class FewerThanTwoPremises(GraphError):
    pass


class MissingInference(GraphError):
    pass


class MissingAttackEdge(GraphError):
    pass


class NoConclusion(GraphError):
    pass


class ConclusionNotSink(GraphError):
    pass


class InvariantViolation(GraphError):
    pass


# llm access and response parsing

class LLMError(ArgReconError):
    pass


class TransportFailure(LLMError):
    pass


class ProviderError(LLMError):
    def __init__(self, status_code: int, body: str):
        super().__init__(f"provider returned HTTP {status_code}: {body[:500]}")
        self.status_code = status_code
        self.body = body


class ReplayMiss(LLMError):
    pass


class ParseError(ArgReconError):
    pass


class EmptyList(ParseError):
    pass


class UnparseableResponse(ParseError):
    pass


# pipeline

class PipelineError(ArgReconError):
    pass


class NoComponentsFound(PipelineError):
    pass


class ConclusionNotFound(PipelineError):
    pass


class ConfigError(ArgReconError):
    pass


# evaluation and io

class InputMismatch(ArgReconError):
    pass


class SchemaViolation(ArgReconError):
    pass


class UnsupportedVersion(SchemaViolation):
    pass


class OffsetMismatch(SchemaViolation):
    pass


class UnknownLabel(SchemaViolation):
    pass
