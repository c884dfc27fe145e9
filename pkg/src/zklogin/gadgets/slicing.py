"""Variable-offset substring extraction: out[k] = S[i + k] for a fixed width m."""

from __future__ import annotations

from collections.abc import Sequence

from ..csys import LC, ConstraintSystem
from .core import ByteVar, as_lc, decompose, materialize, mux, one_hot, pack_lc, select

WORD = 16  # bytes per packed word (128 bits)


def _checked_offset(cs: ConstraintSystem, i: LC, n: int, m: int) -> None:
    # n - m - i >= 0
    decompose(cs, LC.const(n - m) - i, max(1, (n - m).bit_length()))


def g_slice_naive(cs: ConstraintSystem, S: Sequence, i, m: int) -> list:
    """One-hot selector over every start position, one dot product per output."""
    n = len(S)
    if not 0 <= m <= n:
        raise ValueError("slice width out of range")
    i = as_lc(i)
    with cs.region("slice"):
        sel = one_hot(cs, i, n - m + 1)
        return [ByteVar(materialize(cs, select(cs, sel, S[k:k + n - m + 1]))) for k in range(m)]


def shift_left(cs: ConstraintSystem, items: Sequence, bits: Sequence[int], out_len: int) -> list:
    """out[k] = items[k + s] where s = sum(bits[b] << b); positions past the end read 0.

    One multiplexer per output position per stage.
    """
    cur = [as_lc(x) for x in items]
    span = (1 << len(bits)) - 1
    for b, bit in enumerate(bits):
        step = 1 << b
        # later stages can still move by at most this much
        rest = span - ((1 << (b + 1)) - 1)
        need = min(len(cur), out_len + rest)
        nxt = []
        for k in range(need):
            hi = cur[k + step] if k + step < len(cur) else LC()
            lo = cur[k]
            if hi == lo:
                nxt.append(lo)
            else:
                nxt.append(LC({mux(cs, LC({bit: 1}), hi, lo): 1}))
        cur = nxt
    cur = cur[:out_len]
    return cur + [LC()] * (out_len - len(cur))


def g_slice_packed(cs: ConstraintSystem, S: Sequence, i, m: int) -> list:
    """Same contract as :func:`g_slice_naive` at word granularity.

    S is packed into 16-byte big-endian words; the word holding S[i] and the
    following ones are picked with a one-hot over word offsets, unpacked to
    bits, and the remaining intra-word offset is removed by a 4-stage shift.
    """
    n = len(S)
    if not 0 <= m <= n:
        raise ValueError("slice width out of range")
    i = as_lc(i)
    with cs.region("slice"):
        _checked_offset(cs, i, n, m)
        if m == 0:
            return []
        q, s = cs.hint(lambda x: divmod(x, WORD), [i], 2)
        s_bits = decompose(cs, LC({s: 1}), 4)
        nq = (n - m) // WORD + 1
        sel = one_hot(cs, LC({q: 1}), nq)
        cs.enforce(LC({q: WORD, s: 1}), LC.const(1), i)
        width = -(-(m + WORD - 1) // WORD)
        n_words = nq + width - 1
        padded = [as_lc(x) for x in S] + [LC()] * (n_words * WORD - n)
        words = [pack_lc(padded[w * WORD:(w + 1) * WORD], 8) for w in range(n_words)]
        flat = []
        for w in range(width):
            picked = select(cs, sel, words[w:w + nq])
            bits = decompose(cs, picked, 8 * WORD)
            for k in range(WORD):
                lo = 8 * (WORD - 1 - k)
                flat.append(LC({bits[lo + t]: 1 << t for t in range(8)}))
        out = shift_left(cs, flat, s_bits, m)
        return [ByteVar(materialize(cs, x)) if len(x) != 1 or next(iter(x.values())) != 1
                else ByteVar(next(iter(x))) for x in out]
