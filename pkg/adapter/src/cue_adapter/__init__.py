"""Adapter producing cue input files from a local model stack."""

from .adapter import (
    AdapterConfig,
    AdapterError,
    DataError,
    GENERATION_PROMPT_V1,
    JUDGE_PROMPT_V1,
    MissingInputError,
    ModelError,
    PTRUE_PROMPT_V1,
    ToyJudgeModel,
    ToyLocalModel,
    VC_PROMPT_V1,
    build_judge_model,
    build_target_model,
    generate,
    judge_llm,
    load_record_rows,
    load_samples,
    load_targets,
    normalize_tokens,
    parse_verdict,
    predict_encoder,
    similarity_sidecar,
    train_encoder_corrector,
    write_generate_outputs,
    write_jsonl_sharded,
    write_meta,
)

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "DataError",
    "GENERATION_PROMPT_V1",
    "JUDGE_PROMPT_V1",
    "MissingInputError",
    "ModelError",
    "PTRUE_PROMPT_V1",
    "ToyJudgeModel",
    "ToyLocalModel",
    "VC_PROMPT_V1",
    "build_judge_model",
    "build_target_model",
    "generate",
    "judge_llm",
    "load_record_rows",
    "load_samples",
    "load_targets",
    "normalize_tokens",
    "parse_verdict",
    "predict_encoder",
    "similarity_sidecar",
    "train_encoder_corrector",
    "write_generate_outputs",
    "write_jsonl_sharded",
    "write_meta",
]
