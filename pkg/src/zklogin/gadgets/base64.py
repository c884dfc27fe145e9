"""Base64url decoding (URL-safe alphabet, no '=' padding)."""

from __future__ import annotations

import itertools
from collections.abc import Sequence
from dataclasses import dataclass

from ..csys import LC, ONE, ConstraintSystem
from .core import as_lc, assert_equal, byte_from_bits, decompose, ge_const, is_zero, mul

# Thresholds splitting the alphabet into digit / upper / lower ranges.
_CUTS = (48, 58, 65, 91, 97, 123)


@dataclass
class DecodedChar:
    value: int        # variable in [0, 64)
    bits: list        # 6 bit variables, LSB first
    is_nul: int | None  # 1 iff the input byte was 0 (only when zero is allowed)


def decode_char(cs: ConstraintSystem, c, allow_nul: bool = False) -> DecodedChar:
    """Map one alphabet byte to its 6-bit value; any other byte violates.

    With ``allow_nul`` the byte 0 is also accepted and decodes to 0.
    """
    c = as_lc(c)
    ge = [ge_const(cs, c, k, 8) for k in _CUTS]
    digit = LC({ge[0]: 1, ge[1]: -1})
    upper = LC({ge[2]: 1, ge[3]: -1})
    lower = LC({ge[4]: 1, ge[5]: -1})
    dash = is_zero(cs, c - 45)
    under = is_zero(cs, c - 95)
    nul = is_zero(cs, c) if allow_nul else None
    total = digit + upper + lower + LC({dash: 1, under: 1})
    if nul is not None:
        total[nul] = 1
    assert_equal(cs, total, 1)
    p_digit = mul(cs, digit, c + 4)
    p_upper = mul(cs, upper, c - 65)
    p_lower = mul(cs, lower, c - 71)
    value = LC({p_digit: 1, p_upper: 1, p_lower: 1, dash: 62, under: 63})
    bits = decompose(cs, value, 6)
    v = cs.alloc()
    # value is a fixed linear function of its bits; keep a handle variable
    cs.enforce(LC({b: 1 << i for i, b in enumerate(bits)}), LC({ONE: 1}), LC({v: 1}), solve=v)
    return DecodedChar(v, bits, nul)


def _bytes_from_group(cs, vals: Sequence[DecodedChar]) -> list:
    b = [d.bits for d in vals]
    out = [byte_from_bits(cs, [b[1][4], b[1][5]] + b[0][:6])]
    if len(vals) > 2:
        out.append(byte_from_bits(cs, b[2][2:6] + b[1][0:4]))
    if len(vals) > 3:
        out.append(byte_from_bits(cs, b[3][:6] + b[2][0:2]))
    return out


def decoded_length(n_chars: int) -> int:
    if n_chars % 4 == 1:
        raise ValueError("base64 text cannot have length 1 mod 4")
    return n_chars // 4 * 3 + max(0, n_chars % 4 - 1)


def g_base64url_decode(cs: ConstraintSystem, chars: Sequence, allow_nul_tail: bool = False) -> list:
    """Decode a fixed number of base64url characters into ByteVars.

    Characters must already be known to be bytes. With ``allow_nul_tail`` a
    run of zero bytes may end the input (used for fixed-width buffers that
    hold a shorter text); zeros decode as value 0 and may not be followed by
    a non-zero character.
    """
    decoded_length(len(chars))
    dec = [decode_char(cs, c, allow_nul_tail) for c in chars]
    if allow_nul_tail:
        for a, b in itertools.pairwise(dec):
            cs.enforce(LC({a.is_nul: 1}), LC({ONE: 1, b.is_nul: -1}), LC())
    out = []
    for k in range(0, len(dec), 4):
        out.extend(_bytes_from_group(cs, dec[k:k + 4]))
    return out


def char_values(cs: ConstraintSystem, chars: Sequence) -> list:
    """Per-character decoded values (no byte regrouping)."""
    return [decode_char(cs, c) for c in chars]


def range_checked_chars(cs: ConstraintSystem, vars_: Sequence[int]) -> list:
    from .core import byte_input
    return [byte_input(cs, v) for v in vars_]
