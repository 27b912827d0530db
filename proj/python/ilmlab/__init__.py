"""Desk-scale lab for CTC internal language model estimation."""

from ._core import (
    CtxLM,
    DeadPrefixError,
    FramePrior,
    PosteriorGrid,
    TrainingPair,
    ValidationError,
    World,
    brute_force_seq_distribution,
    build_world,
    collapse,
    ctc_log_prob,
    decode_fused,
    enumerate_joint,
    estimate_frame_prior,
    exact_ilm_posterior,
    exact_ilm_seq,
    label_error_rate,
    label_posterior_row,
    make_elm,
    perplexity,
    prefix_log_prob,
    sample_dataset,
    train,
    unigram_from_prior,
)

__all__ = [
    "CtxLM",
    "DeadPrefixError",
    "FramePrior",
    "PosteriorGrid",
    "TrainingPair",
    "ValidationError",
    "World",
    "brute_force_seq_distribution",
    "build_world",
    "collapse",
    "ctc_log_prob",
    "decode_fused",
    "enumerate_joint",
    "estimate_frame_prior",
    "exact_ilm_posterior",
    "exact_ilm_seq",
    "label_error_rate",
    "label_posterior_row",
    "make_elm",
    "perplexity",
    "prefix_log_prob",
    "sample_dataset",
    "train",
    "unigram_from_prior",
]
