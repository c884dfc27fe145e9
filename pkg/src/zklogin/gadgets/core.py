"""Small reusable gadgets: bits, booleans, selection, masks and comparisons."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from ..csys import LC, ONE, ConstraintSystem
from ..field import P

_EMPTY = LC()


def _one():
    return LC({ONE: 1})


@dataclass
class ByteVar:
    """A variable known to lie in [0, 256).

    ``bits`` (least significant first) is present when the range was
    established by an explicit 8-bit decomposition; otherwise the range
    follows from how the variable was built (for example a selection
    among byte-valued variables).
    """

    v: int
    bits: list | None = None

    @property
    def lc(self) -> LC:
        return LC({self.v: 1})


def as_lc(x) -> LC:
    if isinstance(x, LC):
        return x
    if isinstance(x, ByteVar):
        return LC({x.v: 1})
    if isinstance(x, int):
        return LC.const(x)
    raise TypeError(type(x).__name__)


def lc_var(v: int, c: int = 1) -> LC:
    return LC({v: c})


def boolean(cs: ConstraintSystem, v: int) -> None:
    cs.enforce(LC({v: 1}), LC({v: 1, ONE: -1}), LC())


def assert_zero(cs: ConstraintSystem, lc) -> None:
    cs.enforce(as_lc(lc), _one(), LC())


def assert_equal(cs: ConstraintSystem, a, b) -> None:
    cs.enforce(as_lc(a) - as_lc(b), _one(), LC())


def materialize(cs: ConstraintSystem, lc) -> int:
    out = cs.alloc()
    cs.enforce(as_lc(lc), _one(), LC({out: 1}), solve=out)
    return out


def mul(cs: ConstraintSystem, a, b) -> int:
    out = cs.alloc()
    cs.enforce(as_lc(a), as_lc(b), LC({out: 1}), solve=out)
    return out


def mux(cs: ConstraintSystem, sel, when_one, when_zero) -> int:
    """sel ? when_one : when_zero, for boolean sel (one constraint)."""
    a, b = as_lc(when_one), as_lc(when_zero)
    out = cs.alloc()
    cs.enforce(as_lc(sel), a - b, LC({out: 1}) - b, solve=out)
    return out


def decompose(cs: ConstraintSystem, lc, k: int) -> list:
    """k boolean variables whose weighted sum equals lc (k + 1 constraints)."""
    lc = as_lc(lc)
    bits = cs.bits(lc, k)
    for b in bits:
        cs.enforce(LC({b: 1}), LC({b: 1, ONE: -1}), _EMPTY)
    cs.enforce(LC({b: 1 << i for i, b in enumerate(bits)}), _one(), lc)
    return bits


def range_check(cs: ConstraintSystem, lc, k: int) -> list:
    return decompose(cs, lc, k)


def byte_from_bits(cs: ConstraintSystem, bits: Sequence[int]) -> ByteVar:
    """Materialize a byte from 8 already-boolean bits (LSB first)."""
    v = materialize(cs, LC({b: 1 << i for i, b in enumerate(bits)}))
    return ByteVar(v, list(bits))


def byte_input(cs: ConstraintSystem, v: int) -> ByteVar:
    """Range-check an existing variable as a byte (9 constraints)."""
    return ByteVar(v, decompose(cs, LC({v: 1}), 8))


def is_zero(cs: ConstraintSystem, lc) -> int:
    """Boolean variable equal to 1 iff lc = 0 (two constraints)."""
    lc = as_lc(lc)
    inv = cs.inverse(lc)
    z = cs.alloc()
    cs.enforce(lc, LC({inv: 1}), LC({ONE: 1, z: -1}), solve=z)
    cs.enforce(lc, LC({z: 1}), _EMPTY)
    return z


def is_equal(cs: ConstraintSystem, a, b) -> int:
    return is_zero(cs, as_lc(a) - as_lc(b))


def ge_const(cs: ConstraintSystem, lc, k: int, width: int) -> int:
    """Boolean [x >= k] for x = lc known to lie in [0, 2^width)."""
    bits = decompose(cs, as_lc(lc) + ((1 << width) - k), width + 1)
    return bits[width]


def xor_bit(cs: ConstraintSystem, a: int, b: int) -> int:
    t = cs.alloc()
    cs.enforce(LC({a: 2}), LC({b: 1}), LC({a: 1, b: 1, t: -1}) if a != b else LC({t: -1, a: 2}),
               solve=t)
    return t


def and_bit(cs: ConstraintSystem, a: int, b: int) -> int:
    return mul(cs, LC({a: 1}), LC({b: 1}))


def prefix_mask(cs: ConstraintSystem, length, n: int) -> list:
    """n booleans with mask[k] = [k < length]; forces 0 <= length <= n.

    Costs 2n constraints: booleanity, monotonicity, and one sum.
    """
    length = as_lc(length)

    def fill(x):
        return [1 if k < x else 0 for k in range(n)]

    mask = cs.hint(fill, [length], n)
    for m in mask:
        boolean(cs, m)
    for k in range(n - 1):
        # mask[k+1] = 1 implies mask[k] = 1
        cs.enforce(LC({mask[k + 1]: 1}), LC({ONE: 1, mask[k]: -1}), _EMPTY)
    cs.enforce(LC({m: 1 for m in mask}), _one(), length)
    return mask


def mask_point(mask: Sequence[int], k: int) -> LC:
    """[k == length] as a linear combination of a prefix mask (k <= n)."""
    before = LC({ONE: 1}) if k == 0 else LC({mask[k - 1]: 1})
    if k < len(mask):
        return before - LC({mask[k]: 1})
    return before


def one_hot(cs: ConstraintSystem, index, n: int) -> list:
    """n booleans, exactly one set, at position ``index`` (forces index < n)."""
    index = as_lc(index)

    def fill(x):
        return [1 if k == x else 0 for k in range(n)]

    sel = cs.hint(fill, [index], n)
    for s in sel:
        boolean(cs, s)
    cs.enforce(LC({s: 1 for s in sel}), _one(), _one())
    if n > 1:
        cs.enforce(LC({s: k for k, s in enumerate(sel) if k}), _one(), index)
    else:
        assert_zero(cs, index)
    return sel


def select(cs: ConstraintSystem, sel: Sequence[int], items: Sequence) -> LC:
    """Sum of sel[k] * items[k] as a linear combination (one constraint per item)."""
    out = LC()
    for s, it in zip(sel, items):
        lc = as_lc(it)
        c = lc.constant_value()
        if c is not None:
            if c:
                out[s] = out.get(s, 0) + c
            continue
        out[mul(cs, LC({s: 1}), lc)] = 1
    return out


def pack_lc(vars_: Sequence, base_bits: int, big_endian: bool = True) -> LC:
    """Linear combination packing variables (or LCs) as base-2^base_bits digits."""
    n = len(vars_)
    out = LC()
    for k, x in enumerate(vars_):
        shift = base_bits * (n - 1 - k) if big_endian else base_bits * k
        w = 1 << shift
        for v, c in as_lc(x).items():
            out[v] = (out.get(v, 0) + c * w) % P
    return out


class Constants:
    """Per-system witness variables pinned to 0 and 1 (for bit-level gadgets)."""

    def __init__(self, cs: ConstraintSystem):
        self.zero = cs.alloc()
        cs.enforce(LC(), _one(), LC({self.zero: 1}), solve=self.zero)
        self.one = cs.alloc()
        cs.enforce(_one(), _one(), LC({self.one: 1}), solve=self.one)

    @classmethod
    def of(cls, cs: ConstraintSystem) -> Constants:
        c = getattr(cs, "_bit_constants", None)
        if c is None:
            c = cls(cs)
            cs._bit_constants = c
        return c
