"""Mixed-precision quantization toolkit for a toy vision transformer."""

from ._core import (
    AllocationProblem,
    BitAllocation,
    allocate,
    bitops,
    calibrate_uniform,
    default_spec_json,
    export_lp,
    fake_quant_log,
    fake_quant_uniform,
    kl_divergence,
    model_size_bits,
    normalize_scores,
    objective,
    pair_synergy,
    profile,
    search_log_base,
    solve_bnb,
    solve_bruteforce,
)

__all__ = [
    "AllocationProblem",
    "BitAllocation",
    "allocate",
    "bitops",
    "calibrate_uniform",
    "default_spec_json",
    "export_lp",
    "fake_quant_log",
    "fake_quant_uniform",
    "kl_divergence",
    "model_size_bits",
    "normalize_scores",
    "objective",
    "pair_synergy",
    "profile",
    "search_log_base",
    "solve_bnb",
    "solve_bruteforce",
]
