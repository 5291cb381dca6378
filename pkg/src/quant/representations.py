"""Input representations: raw series, smoothed first difference, second difference, DFT magnitude.

All functions operate on the last axis, so they accept a single series or a
``(q, n)`` stack of series.
"""

from __future__ import annotations

import enum
import logging

import numpy as np

from .core import ConfigError

log = logging.getLogger(__name__)


class Representation(enum.IntEnum):
    RAW = 0
    DIFF1 = 1
    DIFF2 = 2
    FOURIER = 3

    @property
    def flag(self) -> str:
        return _FLAGS[self]

    @classmethod
    def parse(cls, text: str) -> Representation:
        key = text.strip().lower()
        for rep, flag in _FLAGS.items():
            if key in (flag, rep.name.lower()):
                return rep
        raise ConfigError(f"unknown representation {text!r} (expected one of {', '.join(_FLAGS.values())})")


_FLAGS = {
    Representation.RAW: "raw",
    Representation.DIFF1: "diff1",
    Representation.DIFF2: "diff2",
    Representation.FOURIER: "fft",
}

ALL_REPRESENTATIONS = tuple(Representation)


def parse_representations(text: str) -> tuple[Representation, ...]:
    """Parse a comma list such as ``"raw,diff1,fft"`` into a sorted, de-duplicated tuple."""
    reps = {Representation.parse(t) for t in text.split(",") if t.strip()}
    if not reps:
        raise ConfigError("at least one representation is required")
    return tuple(sorted(reps))


def representation_length(rep: Representation, n: int) -> int:
    return {
        Representation.RAW: n,
        Representation.DIFF1: n - 1,
        Representation.DIFF2: n - 2,
        Representation.FOURIER: n // 2 + 1,
    }[rep]


def first_difference(x):
    return np.diff(np.asarray(x, dtype=np.float64), axis=-1)


def second_difference(x):
    return first_difference(first_difference(x))


def moving_average(x, window: int = 5):
    """Centered moving average; near the edges the window is truncated to in-range values."""
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"smoothing window must be an odd integer >= 1, got {window}")
    x = np.asarray(x, dtype=np.float64)
    if window == 1:
        return x.copy()
    n = x.shape[-1]
    h = window // 2
    csum = np.zeros(x.shape[:-1] + (n + 1,))
    np.cumsum(x, axis=-1, out=csum[..., 1:])
    lo = np.maximum(np.arange(n) - h, 0)
    hi = np.minimum(np.arange(n) + h + 1, n)
    return (csum[..., hi] - csum[..., lo]) / (hi - lo)


def dft_magnitude(x):
    """Magnitudes of the non-redundant DFT coefficients, ``n // 2 + 1`` of them, unnormalised."""
    return np.abs(np.fft.rfft(np.asarray(x, dtype=np.float64), axis=-1))


def active_representations(n: int, requested) -> tuple[Representation, ...]:
    """Drop representations that are undefined for series of length ``n``."""
    requested = tuple(sorted(set(requested)))
    if not requested:
        raise ConfigError("the active representation set is empty")
    keep = []
    for rep in requested:
        if representation_length(rep, n) < 1:
            log.warning("series length %d is too short for %s; representation skipped", n, rep.name)
            continue
        keep.append(rep)
    if not keep:
        raise ConfigError(f"no requested representation is defined for series of length {n}")
    return tuple(keep)


def build_representations(x, representations=ALL_REPRESENTATIONS, window: int = 5) -> dict:
    """Compute every usable representation of ``x`` (a series or a stack of series).

    Smoothing applies only to the first difference.
    """
    x = np.asarray(x, dtype=np.float64)
    reps = active_representations(x.shape[-1], representations)
    out = {}
    for rep in reps:
        if rep is Representation.RAW:
            out[rep] = x
        elif rep is Representation.DIFF1:
            out[rep] = moving_average(first_difference(x), window)
        elif rep is Representation.DIFF2:
            out[rep] = second_difference(x)
        else:
            out[rep] = dft_magnitude(x)
    return out
