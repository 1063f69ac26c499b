"""Deterministic counter-based random streams.

Every random quantity is a pure function of (seed, stream name, integer
counters): a splitmix64-style finalizer applied to an absorbed key
chain. There is no generator state, so results are independent of
evaluation order, thread count, and batch slicing — processing a
sub-batch with the same counters reproduces the corresponding slice of
the full batch bit-exactly.

All counter arguments may be scalars or integer arrays; arrays broadcast
together and the sampled output has the broadcast shape.
"""

from __future__ import annotations

import numpy as np

_U64 = np.uint64
_GOLDEN = _U64(0x9E3779B97F4A7C15)
_MIX_A = _U64(0xBF58476D1CE4E5B9)
_MIX_B = _U64(0x94D049BB133111EB)
_INV_2_53 = 2.0 ** -53
_MASK64 = (1 << 64) - 1

# domain-separation constants for deriving sub-hashes
_DOM_NORMAL_U1 = _U64(0x9A4C93AED1F3B217)
_DOM_NORMAL_U2 = _U64(0x6E2F1D84C5A7093B)


def _mix64(x):
    with np.errstate(over="ignore"):   # uint64 wraparound is the point
        x = x ^ (x >> _U64(30))
        x = x * _MIX_A
        x = x ^ (x >> _U64(27))
        x = x * _MIX_B
        x = x ^ (x >> _U64(31))
    return x


def _as_u64(value):
    if isinstance(value, np.ndarray):
        if value.dtype == np.uint64:
            return value
        if not np.issubdtype(value.dtype, np.integer):
            raise TypeError(f"counter arrays must be integers, got {value.dtype}")
        # signed ints wrap two's-complement, which is fine: the mapping
        # stays injective per 64-bit pattern
        return value.astype(np.int64).astype(np.uint64)
    if isinstance(value, (np.integer, int)):
        return _U64(int(value) & _MASK64)
    raise TypeError(f"counters must be integers, got {type(value).__name__}")


def absorb(h, value):
    """Fold one integer (or integer array) into hash state h."""
    with np.errstate(over="ignore"):
        shifted = _as_u64(value) + _GOLDEN
    return _mix64(h ^ _mix64(shifted))


def stream_key(seed: int, stream: str) -> np.uint64:
    """Root hash for a named stream under a seed."""
    data = stream.encode("utf-8")
    h = absorb(_GOLDEN, seed)
    h = absorb(h, len(data))
    for i in range(0, len(data), 8):
        h = absorb(h, int.from_bytes(data[i:i + 8], "little"))
    return h


def counter_hash(key, *counters):
    h = key
    for c in counters:
        h = absorb(h, c)
    return h


def _unit(h):
    """[0, 1) from the top 53 bits."""
    return (h >> _U64(11)) * _INV_2_53


def _unit_open(h):
    """(0, 1], safe to feed to log()."""
    return ((h >> _U64(11)) + _U64(1)) * _INV_2_53


def uniform(key, *counters, low: float = 0.0, high: float = 1.0):
    """Uniform in [low, high) with the broadcast shape of the counters."""
    u = _unit(counter_hash(key, *counters))
    return low + (high - low) * u


def normal(key, *counters):
    """Standard normal via Box-Muller on two derived sub-hashes."""
    h = counter_hash(key, *counters)
    u1 = _unit_open(absorb(h, _DOM_NORMAL_U1))
    u2 = _unit(absorb(h, _DOM_NORMAL_U2))
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * np.pi * u2)


def categorical(key, probs, *counters):
    """Index draws from a discrete distribution.

    probs: (K,) non-negative weights summing to ~1. Returns int64 with
    the broadcast shape of the counters (0-d array for scalar counters).
    """
    probs = np.asarray(probs, dtype=np.float64)
    if probs.ndim != 1 or probs.size == 0:
        raise ValueError("probs must be a non-empty 1-D array")
    if np.any(probs < 0.0):
        raise ValueError("probs must be non-negative")
    edges = np.cumsum(probs)
    u = np.asarray(uniform(key, *counters)) * edges[-1]
    idx = np.searchsorted(edges, u, side="right")
    return np.minimum(idx, len(probs) - 1).astype(np.int64)
