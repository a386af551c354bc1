"""Configuration of one decoupled sublattice.

Coordinates: cell ``m`` holds the stabilizer on physical site ``2m``
(``d[m] = 1`` marks a defect, ``S_2m = -1``) and the erasure flag on
physical site ``2m - 1`` (``e[m] = 1``). Flag ``e[m]`` therefore sits
between defects ``d[m-1]`` and ``d[m]``. Indices wrap modulo ``L`` for the
periodic boundary. The chiral-open kernel has no flags and treats ``d[0]``
(the noiseless boundary stabilizer) as frozen.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .params import Boundary, Initial, SimParams
from .rng import RngStream, next_u64

INITIAL_CODES = {Initial.CLUSTER: 0, Initial.RANDOM_EVEN_PARITY: 1, Initial.ALL_ERASED: 2}


@dataclass
class SublatticeState:
    d: np.ndarray
    e: np.ndarray
    time: float = 0.0
    boundary: Boundary = field(default=Boundary.PERIODIC)

    @property
    def L(self) -> int:
        return self.d.size

    def copy(self) -> "SublatticeState":
        return SublatticeState(self.d.copy(), self.e.copy(), self.time, self.boundary)

    def parity(self) -> int:
        return int(self.d.sum() % 2)

    def to_snapshot(self) -> dict:
        return {"d": bits_to_hex(self.d), "e": bits_to_hex(self.e), "L": self.L,
                "time": self.time, "boundary": self.boundary.value}

    @classmethod
    def from_snapshot(cls, snap: dict) -> "SublatticeState":
        L = int(snap["L"])
        return cls(hex_to_bits(snap["d"], L), hex_to_bits(snap["e"], L),
                   float(snap["time"]), Boundary(snap.get("boundary", "periodic")))

    @classmethod
    def from_strings(cls, d: str, e: str | None = None, boundary=Boundary.PERIODIC):
        """Build a state from '0'/'1' strings, index 0 first (handy in tests)."""
        dd = np.array([int(c) for c in d], dtype=np.uint8)
        ee = np.zeros_like(dd) if e is None else np.array([int(c) for c in e], dtype=np.uint8)
        if dd.size != ee.size:
            raise ValueError("d and e must have equal length")
        return cls(dd, ee, 0.0, Boundary(boundary))

    def bitstrings(self) -> tuple[str, str]:
        return "".join(map(str, self.d)), "".join(map(str, self.e))


def bits_to_hex(bits: np.ndarray) -> str:
    """Hex encoding with bit ``k`` of the integer equal to ``bits[k]``."""
    value = 0
    for k in np.flatnonzero(bits):
        value |= 1 << int(k)
    width = (bits.size + 3) // 4
    return format(value, f"0{width}x")


def hex_to_bits(text: str, L: int) -> np.ndarray:
    value = int(text, 16)
    if value >> L:
        raise ValueError("hex string has bits beyond L")
    return np.array([(value >> k) & 1 for k in range(L)], dtype=np.uint8)


@nb.njit(nogil=True, cache=True)
def _init_arrays(d, e, kind, chiral, rng):
    L = d.size
    d[:] = 0
    e[:] = 0
    if kind == 1:
        lo = 1 if chiral else 0
        par = 0
        for m in range(lo, L):
            bit = np.uint8(next_u64(rng) >> np.uint64(63))
            d[m] = bit
            par ^= bit
        if par:
            d[lo] ^= 1
    elif kind == 2 and not chiral:
        e[:] = 1


def init_state(params: SimParams, rng: RngStream) -> SublatticeState:
    """Initial configuration for one trajectory.

    ``RANDOM_EVEN_PARITY`` draws every defect bit from a fair coin and then
    flips ``d[0]`` if the parity came out odd (``d[1]`` on the chiral chain,
    whose cell 0 is frozen). ``ALL_ERASED`` has no meaning without flags
    and yields the cluster configuration on the chiral chain.
    """
    L = params.L
    d = np.zeros(L, dtype=np.uint8)
    e = np.zeros(L, dtype=np.uint8)
    chiral = params.boundary is Boundary.CHIRAL_OPEN
    _init_arrays(d, e, INITIAL_CODES[params.initial], chiral, rng.state)
    return SublatticeState(d, e, 0.0, params.boundary)


def region_parity(state: SublatticeState, i: int, l: int) -> int:
    """Product of ``1 - 2 d[k]`` over ``k = i .. i+l-1`` (periodic wrap)."""
    L = state.L
    if not 1 <= l <= L:
        raise ValueError(f"window length must satisfy 1 <= l <= L, got {l}")
    if state.boundary is Boundary.CHIRAL_OPEN and not 0 <= i <= L - l:
        raise ValueError("window leaves the open chain")
    idx = (i + np.arange(l)) % L
    return -1 if state.d[idx].sum() % 2 else 1
