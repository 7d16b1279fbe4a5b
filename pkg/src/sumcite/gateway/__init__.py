"""Uniform access to generation, decomposition and entailment backends."""

from .backends import (
    AuthenticationError,
    Backend,
    BackendError,
    BackendSpec,
    ChatCompletionBackend,
    CompletionResult,
    CostLedger,
    DeadlineExceededError,
    GatewayError,
    LocalHttpBackend,
    MockBackend,
    ModelGateway,
    RetryExhaustedError,
    TokenBucket,
    TransientBackendError,
    build_backend,
    estimate_tokens,
    load_backend_config,
    prompt_digest,
)
from .judging import (
    CachedJudge,
    ClaimDecomposer,
    Decomposition,
    EntailmentJudge,
    HttpNliJudge,
    Judgment,
    MockDecomposer,
    MockJudge,
    PromptedDecomposer,
    PromptedJudge,
    decompose_claims,
    judge_entailment,
    parse_subclaim_list,
)
from .parsing import GenerationParseError, ParsedGeneration, is_negative_text, parse_generation
from .prompts import (
    PROMPT_PHRASES,
    DemoBank,
    DemoExample,
    render_answer,
    render_document,
    render_ete_prompt,
    render_generation_prompt,
    render_stt_summarizer_prompt,
    render_tts_summarizer_prompt,
)

__all__ = [
    "AuthenticationError",
    "Backend",
    "BackendError",
    "BackendSpec",
    "CachedJudge",
    "ChatCompletionBackend",
    "ClaimDecomposer",
    "CompletionResult",
    "CostLedger",
    "DeadlineExceededError",
    "Decomposition",
    "DemoBank",
    "DemoExample",
    "EntailmentJudge",
    "GatewayError",
    "GenerationParseError",
    "HttpNliJudge",
    "Judgment",
    "LocalHttpBackend",
    "MockBackend",
    "MockDecomposer",
    "MockJudge",
    "ModelGateway",
    "ParsedGeneration",
    "PROMPT_PHRASES",
    "PromptedDecomposer",
    "PromptedJudge",
    "RetryExhaustedError",
    "TokenBucket",
    "TransientBackendError",
    "build_backend",
    "decompose_claims",
    "estimate_tokens",
    "is_negative_text",
    "judge_entailment",
    "load_backend_config",
    "parse_generation",
    "parse_subclaim_list",
    "prompt_digest",
    "render_answer",
    "render_document",
    "render_ete_prompt",
    "render_generation_prompt",
    "render_stt_summarizer_prompt",
    "render_tts_summarizer_prompt",
]
