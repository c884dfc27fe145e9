"""Poseidon-style sponge over the BN254 scalar field.

Parameters: state width 3 (capacity 1, rate 2), S-box x^5, 8 full rounds
split 4/4 around 57 partial rounds. Round constants are SHA-256 in counter
mode over ``ROUND_CONSTANT_SEED``; the linear layer is the Cauchy matrix
1/(x_i + y_j) with x = (0, 1, 2), y = (3, 4, 5).

The capacity element starts at ``tag * 2**64 + len(inputs)`` so that
different call sites and input lengths never share a permutation input.
"""

from __future__ import annotations

import hashlib
from collections.abc import Iterable, Sequence
from enum import IntEnum

from .field import P

WIDTH = 3
RATE = 2
FULL_ROUNDS = 8
PARTIAL_ROUNDS = 57
ALPHA = 5
ROUND_CONSTANT_SEED = b"zklogin.sponge.v1/bn254/w3/x5"


class Domain(IntEnum):
    NONCE = 1
    ADDR = 2
    SALT = 3
    MSG = 4
    COMMIT = 5
    CSYS = 6
    PACK = 7


def _round_constants() -> list:
    total = (FULL_ROUNDS + PARTIAL_ROUNDS) * WIDTH
    out = []
    for ctr in range(total):
        h = hashlib.sha256(ROUND_CONSTANT_SEED + ctr.to_bytes(4, "big")).digest()
        out.append(int.from_bytes(h, "big") % P)
    return [out[r * WIDTH:(r + 1) * WIDTH] for r in range(FULL_ROUNDS + PARTIAL_ROUNDS)]


def _mds() -> list:
    xs, ys = (0, 1, 2), (3, 4, 5)
    return [[pow(x + y, P - 2, P) for y in ys] for x in xs]


ROUND_CONSTANTS = _round_constants()
MDS = _mds()


def is_full_round(r: int) -> bool:
    half = FULL_ROUNDS // 2
    return r < half or r >= half + PARTIAL_ROUNDS


def permute(state: Sequence[int]) -> list:
    s = [x % P for x in state]
    if len(s) != WIDTH:
        raise ValueError("state width is 3")
    m = MDS
    for r, rc in enumerate(ROUND_CONSTANTS):
        s = [(s[i] + rc[i]) % P for i in range(WIDTH)]
        if is_full_round(r):
            s = [pow(x, ALPHA, P) for x in s]
        else:
            s[0] = pow(s[0], ALPHA, P)
        s = [(m[i][0] * s[0] + m[i][1] * s[1] + m[i][2] * s[2]) % P for i in range(WIDTH)]
    return s


def initial_state(tag: int, n_inputs: int) -> list:
    return [(int(tag) << 64) + n_inputs, 0, 0]


def sponge_hash(inputs: Iterable[int], tag: int) -> int:
    """Hash field elements under a domain tag; returns a field element."""
    xs = [int(x) % P for x in inputs]
    s = initial_state(tag, len(xs))
    if not xs:
        return permute(s)[1]
    for k in range(0, len(xs), RATE):
        chunk = xs[k:k + RATE]
        for i, x in enumerate(chunk):
            s[1 + i] = (s[1 + i] + x) % P
        s = permute(s)
    return s[1]


def pack_bytes(data: bytes, chunk: int = 31) -> list:
    """Big-endian 31-byte chunks, the last one right-padded with zeros."""
    out = []
    for k in range(0, len(data), chunk):
        piece = data[k:k + chunk].ljust(chunk, b"\0")
        out.append(int.from_bytes(piece, "big"))
    return out


def pack_string(data: bytes, max_len: int) -> list:
    """Fixed-shape packing: ceil(max_len/31) elements, then the length."""
    if len(data) > max_len:
        raise ValueError("string longer than its configured maximum")
    n = -(-max_len // 31)
    elems = pack_bytes(data.ljust(31 * n, b"\0"))
    return elems + [len(data)]


def hash_bytes(data: bytes, tag: int = Domain.MSG) -> int:
    return sponge_hash(pack_bytes(data) + [len(data)], tag)
