"""Bit-level SHA-256 with in-circuit padding for variable-length messages.

All ``ceil((max_len + 9) / 64)`` blocks are always compressed; the digest is
selected from the terminal block with a one-hot vector. Words are lists of 32
bit variables, least significant first.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from ..csys import LC, ONE, ConstraintSystem
from .core import (
    Constants,
    as_lc,
    decompose,
    mask_point,
    materialize,
    mul,
    one_hot,
    prefix_mask,
)

K = [
    0x428A2F98, 0x71374491, 0xB5C0FBCF, 0xE9B5DBA5, 0x3956C25B, 0x59F111F1, 0x923F82A4, 0xAB1C5ED5,
    0xD807AA98, 0x12835B01, 0x243185BE, 0x550C7DC3, 0x72BE5D74, 0x80DEB1FE, 0x9BDC06A7, 0xC19BF174,
    0xE49B69C1, 0xEFBE4786, 0x0FC19DC6, 0x240CA1CC, 0x2DE92C6F, 0x4A7484AA, 0x5CB0A9DC, 0x76F988DA,
    0x983E5152, 0xA831C66D, 0xB00327C8, 0xBF597FC7, 0xC6E00BF3, 0xD5A79147, 0x06CA6351, 0x14292967,
    0x27B70A85, 0x2E1B2138, 0x4D2C6DFC, 0x53380D13, 0x650A7354, 0x766A0ABB, 0x81C2C92E, 0x92722C85,
    0xA2BFE8A1, 0xA81A664B, 0xC24B8B70, 0xC76C51A3, 0xD192E819, 0xD6990624, 0xF40E3585, 0x106AA070,
    0x19A4C116, 0x1E376C08, 0x2748774C, 0x34B0BCB5, 0x391C0CB3, 0x4ED8AA4A, 0x5B9CCA4F, 0x682E6FF3,
    0x748F82EE, 0x78A5636F, 0x84C87814, 0x8CC70208, 0x90BEFFFA, 0xA4506CEB, 0xBEF9A3F7, 0xC67178F2,
]
H0 = [0x6A09E667, 0xBB67AE85, 0x3C6EF372, 0xA54FF53A, 0x510E527F, 0x9B05688C, 0x1F83D9AB, 0x5BE0CD19]


def num_blocks(max_len: int) -> int:
    return (max_len + 9 + 63) // 64


class _Bits:
    """Bit-operation helpers bound to one constraint system."""

    def __init__(self, cs: ConstraintSystem):
        self.cs = cs
        c = Constants.of(cs)
        self.zero, self.one = c.zero, c.one

    def const_word(self, x: int) -> list:
        return [self.one if (x >> i) & 1 else self.zero for i in range(32)]

    def xor(self, a: int, b: int) -> int:
        z = self.zero
        if a == z:
            return b
        if b == z:
            return a
        cs = self.cs
        t = cs.alloc()
        if a == b:
            cs.enforce(LC({a: 2}), LC({b: 1}), LC({a: 2, t: -1}), solve=t)
        else:
            cs.enforce(LC({a: 2}), LC({b: 1}), LC({a: 1, b: 1, t: -1}), solve=t)
        return t

    def xor3_word(self, x: list, y: list, z: list) -> list:
        return [self.xor(self.xor(a, b), c) for a, b, c in zip(x, y, z)]

    def rotr(self, w: list, n: int) -> list:
        return [w[(i + n) % 32] for i in range(32)]

    def shr(self, w: list, n: int) -> list:
        return [w[i + n] if i + n < 32 else self.zero for i in range(32)]

    def ch(self, e: list, f: list, g: list) -> list:
        cs = self.cs
        out = []
        for ei, fi, gi in zip(e, f, g):
            if fi == gi:
                out.append(fi)
                continue
            t = cs.alloc()
            cs.enforce(LC({ei: 1}), LC({fi: 1, gi: -1}), LC({t: 1, gi: -1}), solve=t)
            out.append(t)
        return out

    def maj(self, a: list, b: list, c: list) -> list:
        cs = self.cs
        out = []
        for ai, bi, ci in zip(a, b, c):
            if bi == ci:
                out.append(bi)
                continue
            t = cs.alloc()
            cs.enforce(LC({bi: 1}), LC({ci: 1}), LC({t: 1}), solve=t)
            m = cs.alloc()
            cs.enforce(LC({ai: 1}), LC({bi: 1, ci: 1, t: -2}), LC({m: 1, t: -1}), solve=m)
            out.append(m)
        return out

    @staticmethod
    def packed(w: list) -> LC:
        out = LC()
        for i, b in enumerate(w):
            out[b] = out.get(b, 0) + (1 << i)
        return out

    def add(self, words: Sequence[list], const: int = 0) -> list:
        """Sum of words (+ const) modulo 2^32, via one decomposition."""
        total = LC()
        for w in words:
            for i, b in enumerate(w):
                total[b] = total.get(b, 0) + (1 << i)
        if const:
            total[ONE] = total.get(ONE, 0) + const
        bound = len(words) * 0xFFFFFFFF + const
        width = max(32, bound.bit_length())
        return decompose(self.cs, total, width)[:32]


def compress(cs: ConstraintSystem, state: list, block: list) -> list:
    """One compression: state is 8 words, block is 16 words (bit lists)."""
    bt = _Bits(cs)
    w = list(block)
    for t in range(16, 64):
        x15, x2 = w[t - 15], w[t - 2]
        s0 = bt.xor3_word(bt.rotr(x15, 7), bt.rotr(x15, 18), bt.shr(x15, 3))
        s1 = bt.xor3_word(bt.rotr(x2, 17), bt.rotr(x2, 19), bt.shr(x2, 10))
        w.append(bt.add([s1, w[t - 7], s0, w[t - 16]]))
    a, b, c, d, e, f, g, h = state
    for t in range(64):
        big_s1 = bt.xor3_word(bt.rotr(e, 6), bt.rotr(e, 11), bt.rotr(e, 25))
        chv = bt.ch(e, f, g)
        big_s0 = bt.xor3_word(bt.rotr(a, 2), bt.rotr(a, 13), bt.rotr(a, 22))
        mj = bt.maj(a, b, c)
        new_e = bt.add([d, h, big_s1, chv, w[t]], K[t])
        new_a = bt.add([h, big_s1, chv, w[t], big_s0, mj], K[t])
        a, b, c, d, e, f, g, h = new_a, a, b, c, new_e, e, f, g
    return [bt.add([x, y]) for x, y in zip(state, [a, b, c, d, e, f, g, h])]


def initial_state(cs: ConstraintSystem) -> list:
    bt = _Bits(cs)
    return [bt.const_word(x) for x in H0]


@dataclass
class Sha256Circuit:
    digest: list          # 8 variables, big-endian 32-bit words of the digest
    digest_bits: list     # per word, 32 bit variables (LSB first), terminal block
    mask: list            # mask[k] = [k < length] for k < max_len
    block_select: list    # one-hot over blocks at the terminal block index
    padded_bits: list     # per padded byte, 8 bit variables (LSB first)


def g_sha256(cs: ConstraintSystem, msg: Sequence, length, max_len: int) -> Sha256Circuit:
    """SHA-256 of msg[0:length] where msg holds ``max_len`` byte variables.

    Bytes at positions >= length are forced to zero. ``length`` may be any
    linear combination; the gadget forces length <= max_len.
    """
    if len(msg) != max_len:
        raise ValueError("message must have exactly max_len byte variables")
    nb = num_blocks(max_len)
    length = as_lc(length)
    msg_lc = [as_lc(m) for m in msg]
    bt = _Bits(cs)

    mask = prefix_mask(cs, length, max_len)
    for k in range(max_len):
        # bytes past the end are zero
        cs.enforce(msg_lc[k], LC({ONE: 1, mask[k]: -1}), LC())

    def split_terminal(x):
        t = (x + 8) // 64
        bitlen = 8 * x
        return [t, (x + 8) % 64, bitlen >> 8, bitlen & 0xFF]

    t_idx, rem, len_hi, len_lo = cs.hint(split_terminal, [length], 4)
    decompose(cs, LC({rem: 1}), 6)
    cs.enforce(LC({t_idx: 64, rem: 1}), LC({ONE: 1}), length + 8)
    cs.enforce(LC({len_hi: 256, len_lo: 1}), LC({ONE: 1}), length * 8)
    sel = one_hot(cs, LC({t_idx: 1}), nb)
    hi_at = [mul(cs, LC({s: 1}), LC({len_hi: 1})) for s in sel]
    lo_at = [mul(cs, LC({s: 1}), LC({len_lo: 1})) for s in sel]

    padded_bits = []
    for k in range(64 * nb):
        byte = msg_lc[k].copy() if k < max_len else LC()
        if k <= max_len:
            for v, c in mask_point(mask, k).items():
                byte[v] = byte.get(v, 0) + 128 * c
        blk, off = divmod(k, 64)
        if off == 62:
            byte[hi_at[blk]] = 1
        elif off == 63:
            byte[lo_at[blk]] = 1
        padded_bits.append(decompose(cs, byte, 8))

    state = initial_state(cs)
    states = []
    for blk in range(nb):
        words = []
        for wi in range(16):
            base = 64 * blk + 4 * wi
            word = []
            for byte_i in (3, 2, 1, 0):  # big-endian bytes, LSB-first bits
                word.extend(padded_bits[base + byte_i])
            words.append(word)
        state = compress(cs, state, words)
        states.append(state)

    digest = []
    for wi in range(8):
        picked = LC()
        for s, st in zip(sel, states):
            picked[mul(cs, LC({s: 1}), bt.packed(st[wi]))] = 1
        digest.append(materialize(cs, picked))
    digest_bits = None
    if nb == 1:
        digest_bits = states[0]
    return Sha256Circuit(digest, digest_bits, mask, sel, padded_bits)


def fill_message(values: bytes, max_len: int) -> list:
    if len(values) > max_len:
        raise ValueError("message longer than max_len")
    return list(values) + [0] * (max_len - len(values))


def digest_from_words(words: Sequence[int]) -> bytes:
    return b"".join(int(w).to_bytes(4, "big") for w in words)
