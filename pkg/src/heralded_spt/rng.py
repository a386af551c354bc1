"""Per-trajectory random streams.

Every trajectory owns an independent xoshiro256** generator. Its 256-bit
state is derived from ``(master_seed, stream_id)`` through numpy's
``SeedSequence`` with ``spawn_key=(stream_id,)``, so a trajectory is
bit-identical no matter which worker runs it or in which order.

The generator itself is written as numba functions operating on a
``uint64[4]`` state array so that it can be advanced inside compiled
kernels.
"""

from __future__ import annotations

import numba as nb
import numpy as np

_U64 = np.uint64


def stream_state(master_seed: int, stream_id: int) -> np.ndarray:
    """Return the 4-word xoshiro256** state for one trajectory."""
    ss = np.random.SeedSequence(int(master_seed), spawn_key=(int(stream_id),))
    state = ss.generate_state(4, np.uint64)
    if not state.any():  # the all-zero state is a fixed point of xoshiro
        state[0] = _U64(0x9E3779B97F4A7C15)
    return state


def stream_states(master_seed: int, stream_ids) -> np.ndarray:
    ids = np.asarray(stream_ids, dtype=np.int64)
    out = np.empty((ids.size, 4), dtype=np.uint64)
    for k, sid in enumerate(ids):
        out[k] = stream_state(master_seed, sid)
    return out


class RngStream:
    """Python-side handle on one trajectory stream."""

    def __init__(self, master_seed: int, stream_id: int = 0):
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        self.state = stream_state(master_seed, stream_id)

    def next_u64(self) -> int:
        return int(next_u64(self.state))

    def random(self) -> float:
        return float(next_double(self.state))

    def __repr__(self):
        return f"RngStream(master_seed={self.master_seed}, stream_id={self.stream_id})"


@nb.njit(inline="always")
def _rotl(x, k):
    return (x << _U64(k)) | (x >> _U64(64 - k))


@nb.njit(nogil=True, cache=True)
def next_u64(s):
    result = _rotl(s[1] * _U64(5), 7) * _U64(9)
    t = s[1] << _U64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@nb.njit(nogil=True, cache=True)
def next_double(s):
    """Uniform double in [0, 1) from the top 53 bits."""
    return np.float64(next_u64(s) >> _U64(11)) * (1.0 / 9007199254740992.0)


@nb.njit(nogil=True, cache=True)
def next_below(s, n):
    """Uniform integer in [0, n) by Lemire's multiply-shift on 32 bits.

    The bias is at most ``n / 2**32``, negligible for lattice sizes used here.
    """
    hi = next_u64(s) >> _U64(32)
    return np.int64((hi * _U64(n)) >> _U64(32))
