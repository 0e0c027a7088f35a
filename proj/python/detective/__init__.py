"""Python access to the detector core."""

from ._detective import (
    DetectiveError,
    Model,
    chunk_text,
    compute_metrics,
    split_sizes,
    t_test_upper,
    tokenize,
)

__all__ = [
    "DetectiveError",
    "Model",
    "chunk_text",
    "compute_metrics",
    "split_sizes",
    "t_test_upper",
    "tokenize",
]
