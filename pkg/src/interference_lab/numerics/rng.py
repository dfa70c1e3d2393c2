"""Counter-based random streams (Philox-4x64-10).

A stream is keyed by ``(seed, stream_id)``; the 128-bit key selects a
bijection and a 256-bit counter walks it.  Output is bit-compatible with
:class:`numpy.random.Philox` (same key, counter starting at zero), which the
tests use as an oracle.

Stream state is a numpy structured record (key, counter, four-word output
buffer, buffer position).  Kernels receive the record itself, which numba
passes as a bare pointer, so a draw costs no reference counting.  At the
Python boundary a stream is a one-element array of that dtype.
"""

import numpy as np

from .._jit import USE_NUMBA, njit

STATE_DTYPE = np.dtype(
    [("key", np.uint64, 2), ("ctr", np.uint64, 4), ("buf", np.uint64, 4), ("pos", np.int64)]
)

PURPOSE_POLICY = 1
PURPOSE_REWARD = 2
PURPOSE_VALIDATION = 3

_MAX_REP = 1 << 40
_MAX_VARIANT = 1 << 16

_M0 = 0xD2E7470EE14C6C93
_M1 = 0xCA5A826395121157
_W0 = 0x9E3779B97F4A7C15
_W1 = 0xBB67AE8584CAA73B
_M64 = (1 << 64) - 1
_TWO_M53 = 1.0 / 9007199254740992.0

# uint64 constants for the compiled path; mixing uint64 with int64 literals
# would promote to float64 inside numba.
_U_M0 = np.uint64(_M0)
_U_M1 = np.uint64(_M1)
_U_W0 = np.uint64(_W0)
_U_W1 = np.uint64(_W1)
_U_11 = np.uint64(11)
_U_0 = np.uint64(0)
_U_1 = np.uint64(1)


def stream_id(rep: int, variant: int, purpose: int) -> int:
    """Pack (replication, variant, purpose) into a unique 64-bit stream id."""
    if not 0 <= rep < _MAX_REP:
        raise ValueError(f"replication index out of range: {rep}")
    if not 0 <= variant < _MAX_VARIANT:
        raise ValueError(f"variant index out of range: {variant}")
    if not 0 <= purpose < 256:
        raise ValueError(f"purpose tag out of range: {purpose}")
    return (rep << 24) | (variant << 8) | purpose


def new_states(keys) -> np.ndarray:
    """One fresh stream per ``(seed, stream_id)`` pair, as a record array."""
    states = np.zeros(len(keys), dtype=STATE_DTYPE)
    for i, (seed, sid) in enumerate(keys):
        if not 0 <= seed <= _M64 or not 0 <= sid <= _M64:
            raise ValueError("seed and stream id must be unsigned 64-bit integers")
        states[i]["key"][0] = seed
        states[i]["key"][1] = sid
    states["pos"] = 4
    return states


def new_state(seed: int, sid: int) -> np.ndarray:
    return new_states([(seed, sid)])


# -- compiled path ---------------------------------------------------------


if USE_NUMBA:
    from llvmlite import ir as _ir
    from numba.core import types as _types
    from numba.extending import intrinsic as _intrinsic

    @_intrinsic
    def _mulhi(typingctx, a, b):
        # native 64x64 -> 128-bit multiply, high word
        sig = _types.uint64(_types.uint64, _types.uint64)

        def codegen(context, builder, signature, args):
            i128 = _ir.IntType(128)
            prod = builder.mul(builder.zext(args[0], i128), builder.zext(args[1], i128))
            return builder.trunc(builder.lshr(prod, _ir.Constant(i128, 64)), _ir.IntType(64))

        return sig, codegen

    @njit
    def _mulhilo_nb(a, b):
        return _mulhi(a, b), a * b


@njit
def _philox_nb(c0, c1, c2, c3, k0, k1):
    for r in range(10):
        if r > 0:
            k0 = k0 + _U_W0
            k1 = k1 + _U_W1
        hi0, lo0 = _mulhilo_nb(_U_M0, c0)
        hi1, lo1 = _mulhilo_nb(_U_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@njit
def _next_u64_nb(state):
    pos = state["pos"]
    if pos < 4:
        state["pos"] = pos + 1
        return state["buf"][pos]
    ctr = state["ctr"]
    ctr[0] += _U_1
    if ctr[0] == _U_0:
        ctr[1] += _U_1
        if ctr[1] == _U_0:
            ctr[2] += _U_1
            if ctr[2] == _U_0:
                ctr[3] += _U_1
    key = state["key"]
    buf = state["buf"]
    o0, o1, o2, o3 = _philox_nb(ctr[0], ctr[1], ctr[2], ctr[3], key[0], key[1])
    buf[0] = o0
    buf[1] = o1
    buf[2] = o2
    buf[3] = o3
    state["pos"] = 1
    return o0


@njit
def _next_double_nb(state):
    # the shifted word fits in 53 bits; int64 -> float is cheaper than uint64 -> float
    return np.int64(_next_u64_nb(state) >> _U_11) * _TWO_M53


@njit
def _counter_double_nb(k0, k1, c0, c1):
    o0, _, _, _ = _philox_nb(np.uint64(c0), np.uint64(c1), _U_0, _U_0, k0, k1)
    return np.int64(o0 >> _U_11) * _TWO_M53


# -- interpreted path --------------------------------------------------------


def _philox_py(c0, c1, c2, c3, k0, k1):
    for r in range(10):
        if r > 0:
            k0 = (k0 + _W0) & _M64
            k1 = (k1 + _W1) & _M64
        p0 = _M0 * c0
        p1 = _M1 * c2
        c0, c1, c2, c3 = (p1 >> 64) ^ c1 ^ k0, p1 & _M64, (p0 >> 64) ^ c3 ^ k1, p0 & _M64
    return c0, c1, c2, c3


def _next_u64_py(state):
    pos = int(state["pos"])
    buf = state["buf"]
    if pos < 4:
        state["pos"] = pos + 1
        return int(buf[pos])
    ctr = state["ctr"]
    words = [int(c) for c in ctr]
    for i in range(4):
        words[i] = (words[i] + 1) & _M64
        if words[i] != 0:
            break
    ctr[:] = words
    key = state["key"]
    out = _philox_py(words[0], words[1], words[2], words[3], int(key[0]), int(key[1]))
    buf[:] = out
    state["pos"] = 1
    return out[0]


def _next_double_py(state):
    return float(_next_u64_py(state) >> 11) * _TWO_M53


def _counter_double_py(k0, k1, c0, c1):
    o0 = _philox_py(int(c0), int(c1), 0, 0, int(k0), int(k1))[0]
    return float(o0 >> 11) * _TWO_M53


if USE_NUMBA:
    next_u64 = _next_u64_nb
    next_double = _next_double_nb
    counter_double = _counter_double_nb
else:
    next_u64 = _next_u64_py
    next_double = _next_double_py
    counter_double = _counter_double_py

next_double.__doc__ = "Next uniform deviate in [0, 1) with 53 random bits; advances ``state``."
counter_double.__doc__ = (
    "Uniform deviate at counter ``(c0, c1, 0, 0)`` under key ``(k0, k1)``; stateless."
)


class RngStream:
    """A reproducible random stream identified by ``(seed, stream_id)``.

    Single-owner: never share one instance between workers.
    """

    __slots__ = ("seed", "stream_id", "states")

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self.states = new_state(self.seed, self.stream_id)

    @classmethod
    def for_variant(cls, seed: int, rep: int, variant: int, purpose: int = PURPOSE_POLICY):
        return cls(seed, stream_id(rep, variant, purpose))

    def __repr__(self) -> str:
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id})"
