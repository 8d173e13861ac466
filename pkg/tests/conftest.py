"""Shared builders for random matrices and small vocabularies."""

from __future__ import annotations

import numpy as np

from ctcspot import LogProbMatrix, Vocabulary


def log_softmax_rows(x: np.ndarray) -> np.ndarray:
    """Row-wise log softmax in float64, returned as float32."""
    x64 = np.asarray(x, dtype=np.float64)
    top = x64.max(axis=1, keepdims=True)
    lse = top + np.log(np.exp(x64 - top).sum(axis=1, keepdims=True))
    return (x64 - lse).astype(np.float32)


def random_matrix(rng: np.random.Generator, frames: int, width: int,
                  scale: float = 2.0) -> LogProbMatrix:
    """A normalized random log-prob matrix; scale spreads the distribution."""
    return LogProbMatrix(
        values=log_softmax_rows(rng.normal(size=(frames, width)) * scale),
        normalized=True,
    )


def one_hot_matrix(hot: list[int], width: int) -> LogProbMatrix:
    """Exact one-hot rows: the hot token gets log 1 = 0, the rest log 0 = -inf."""
    values = np.full((len(hot), width), -np.inf, dtype=np.float32)
    for t, tok in enumerate(hot):
        values[t, tok] = 0.0
    return LogProbMatrix(values=values, normalized=True)


def char_vocab(letters: str) -> Vocabulary:
    """Character-level vocabulary: letters, a space, and a trailing blank."""
    return Vocabulary(tokens=tuple(letters) + (" ", "<b>"), blank_id=len(letters) + 1)
