"""Sequential access to prediction sequences.

Forecasters consume values strictly left to right and never look ahead of
their own prediction point.  The stream interface mirrors that: a cursor,
``skip`` for observed-but-unused stretches, ``read_mean`` for the window
averages the algorithms actually need, and a one-shot ``target_mean`` that
the evaluation harness uses to score a prediction *after* the forecaster
has stopped reading.
"""

from __future__ import annotations

import math

import numpy as np


class StreamError(Exception):
    """Raised on reads past the end of a sequence or out-of-range values."""


class SequenceStream:
    """Base class: cursor bookkeeping shared by all stream implementations."""

    def __init__(self, n: int):
        self.n = int(n)
        self.position = 0

    def _advance(self, count: int) -> None:
        if count < 0:
            raise ValueError("cannot read a negative number of values")
        if self.position + count > self.n:
            raise StreamError(
                f"read past end of sequence: at {self.position}, "
                f"asked for {count} of {self.n}"
            )
        self.position += count

    def skip(self, count: int) -> None:
        """Observe and discard the next ``count`` values."""
        self._advance(count)

    def read_mean(self, count: int) -> float:
        """Mean of the next ``count`` values; advances the cursor."""
        raise NotImplementedError

    def target_mean(self, t: int, w: int) -> float:
        """Mean of values t+1 .. t+w (0-based slice [t, t+w)).

        Only forward windows are served (t must not precede the cursor);
        scoring never rewinds what a forecaster already consumed.
        """
        raise NotImplementedError


class ArrayStream(SequenceStream):
    """Stream over a fully materialised sequence of values in [0, 1]."""

    def __init__(self, values):
        arr = np.asarray(values, dtype=float)
        if arr.ndim != 1:
            raise ValueError("sequence must be one-dimensional")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise StreamError("sequence values must lie in [0, 1]")
        super().__init__(arr.size)
        self.values = arr

    def read_mean(self, count: int) -> float:
        start = self.position
        self._advance(count)
        if count == 0:
            raise ValueError("mean of an empty window is undefined")
        return math.fsum(self.values[start : self.position]) / count

    def target_mean(self, t: int, w: int) -> float:
        if t < self.position:
            raise StreamError("target window precedes values already consumed")
        if w < 1 or t + w > self.n:
            raise StreamError(f"window ({t}, {w}) does not fit horizon {self.n}")
        return math.fsum(self.values[t : t + w]) / w


def as_stream(source) -> SequenceStream:
    """Wrap raw arrays/lists; pass streams through unchanged."""
    if isinstance(source, SequenceStream):
        return source
    return ArrayStream(source)


def require_horizon(stream: SequenceStream, n: int) -> SequenceStream:
    """Fail fast when a stream cannot cover an instance's full horizon."""
    if stream.n < n:
        raise StreamError(f"stream holds {stream.n} values but the instance needs {n}")
    return stream
