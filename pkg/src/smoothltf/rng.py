"""Seeded, splittable random streams.

Every sampler takes a ``seed`` that is either an integer master seed or an
already-built :class:`numpy.random.Generator`. Integer seeds are combined with
an optional stream id into a Philox (counter-based) generator, so that task
``k`` of a parallel run draws the same numbers regardless of scheduling.
"""

import zlib

import numpy as np


def _stream_key(part):
    if isinstance(part, (int, np.integer)):
        if part < 0:
            raise ValueError("stream ids must be non-negative")
        return int(part)
    return zlib.crc32(str(part).encode("utf-8"))


def make_rng(seed, *stream):
    """Return a Philox generator keyed by ``(seed, *stream)``.

    A Generator passed as ``seed`` is returned unchanged when no stream id is
    given, and otherwise used to derive a child generator.
    """
    if isinstance(seed, np.random.Generator):
        if not stream:
            return seed
        seed = int(seed.integers(0, 2**63 - 1))
    if seed is None:
        seq = np.random.SeedSequence(spawn_key=tuple(_stream_key(s) for s in stream))
    else:
        if int(seed) < 0:
            raise ValueError("seed must be non-negative")
        seq = np.random.SeedSequence(int(seed), spawn_key=tuple(_stream_key(s) for s in stream))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(seed, *stream):
    """An integer seed for a sub-task, reproducible from ``(seed, *stream)``."""
    return int(make_rng(seed, *stream).integers(0, 2**63 - 1))
