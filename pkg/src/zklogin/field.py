"""Prime-field elements and fixed-width 2048-bit modular arithmetic."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

P = 21888242871839275222246405745257275088548364400416034343698204186575808495617

LIMB_BITS = 64
NUM_LIMBS = 32
_LIMB_MASK = (1 << LIMB_BITS) - 1


class InverseOfZero(ZeroDivisionError):
    pass


class ModulusInvalid(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class FieldElement:
    value: int

    def __post_init__(self):
        if not 0 <= self.value < P:
            object.__setattr__(self, "value", self.value % P)

    @classmethod
    def coerce(cls, x) -> FieldElement:
        return x if isinstance(x, FieldElement) else cls(int(x))

    def __add__(self, other):
        return FieldElement((self.value + FieldElement.coerce(other).value) % P)

    __radd__ = __add__

    def __sub__(self, other):
        return FieldElement((self.value - FieldElement.coerce(other).value) % P)

    def __rsub__(self, other):
        return FieldElement((FieldElement.coerce(other).value - self.value) % P)

    def __mul__(self, other):
        return FieldElement((self.value * FieldElement.coerce(other).value) % P)

    __rmul__ = __mul__

    def __neg__(self):
        return FieldElement((-self.value) % P)

    def inv(self) -> FieldElement:
        if self.value == 0:
            raise InverseOfZero("zero has no inverse")
        return FieldElement(pow(self.value, P - 2, P))

    def __truediv__(self, other):
        return self * FieldElement.coerce(other).inv()

    def __pow__(self, e: int):
        if e < 0:
            return self.inv() ** (-e)
        return FieldElement(pow(self.value, e, P))

    def __int__(self):
        return self.value

    def __bool__(self):
        return self.value != 0

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(32, "little")

    @classmethod
    def from_bytes(cls, data: bytes) -> FieldElement:
        if len(data) != 32:
            raise ValueError("field element encoding is 32 bytes")
        v = int.from_bytes(data, "little")
        if v >= P:
            raise ValueError("non-canonical field element")
        return cls(v)

    def __repr__(self):
        return f"FieldElement({self.value})"


def fe_add(a, b):
    return FieldElement.coerce(a) + b


def fe_sub(a, b):
    return FieldElement.coerce(a) - b


def fe_mul(a, b):
    return FieldElement.coerce(a) * b


def fe_neg(a):
    return -FieldElement.coerce(a)


def fe_inv(a):
    return FieldElement.coerce(a).inv()


# --- 2048-bit integers as 32 little-endian 64-bit limbs ---------------------


@dataclass(frozen=True, slots=True)
class BigUint2048:
    limbs: tuple

    def __post_init__(self):
        if len(self.limbs) != NUM_LIMBS or any(not 0 <= x <= _LIMB_MASK for x in self.limbs):
            raise ValueError("expected 32 limbs of 64 bits")

    @classmethod
    def from_int(cls, x: int) -> BigUint2048:
        if not 0 <= x < 1 << (LIMB_BITS * NUM_LIMBS):
            raise ValueError("value does not fit in 2048 bits")
        return cls(tuple((x >> (LIMB_BITS * i)) & _LIMB_MASK for i in range(NUM_LIMBS)))

    def to_int(self) -> int:
        acc = 0
        for limb in reversed(self.limbs):
            acc = (acc << LIMB_BITS) | limb
        return acc

    def to_bytes(self) -> bytes:
        return b"".join(limb.to_bytes(8, "little") for limb in self.limbs)

    @classmethod
    def from_bytes(cls, data: bytes) -> BigUint2048:
        if len(data) != 8 * NUM_LIMBS:
            raise ValueError("2048-bit encoding is 256 bytes")
        return cls(tuple(int.from_bytes(data[8 * i:8 * i + 8], "little") for i in range(NUM_LIMBS)))

    def __int__(self):
        return self.to_int()


def _cmp(a: list, b: list) -> int:
    for x, y in zip(reversed(a), reversed(b)):
        if x != y:
            return 1 if x > y else -1
    return 0


def _sub_in_place(a: list, b: list) -> None:
    borrow = 0
    for i in range(len(a)):
        d = a[i] - b[i] - borrow
        borrow = 1 if d < 0 else 0
        a[i] = d & _LIMB_MASK


class _Montgomery:
    """Word-serial Montgomery multiplication for one odd modulus (R = 2^2048)."""

    def __init__(self, m: list):
        self.m = m
        # -m^{-1} mod 2^64 by Newton iteration.
        inv = 1
        for _ in range(7):
            inv = (inv * (2 - m[0] * inv)) & _LIMB_MASK
        self.m_neg_inv = (-inv) & _LIMB_MASK
        # R^2 mod m by 4096 modular doublings of 1.
        r = [1] + [0] * (NUM_LIMBS - 1)
        for _ in range(2 * LIMB_BITS * NUM_LIMBS):
            carry = 0
            for i in range(NUM_LIMBS):
                v = (r[i] << 1) | carry
                carry = v >> LIMB_BITS
                r[i] = v & _LIMB_MASK
            if carry or _cmp(r, m) >= 0:
                _sub_in_place(r, m)
        self.r2 = r

    def mul(self, a: list, b: list) -> list:
        """a * b * R^{-1} mod m (CIOS)."""
        n = NUM_LIMBS
        m = self.m
        t = [0] * (n + 2)
        for i in range(n):
            ai = a[i]
            carry = 0
            for j in range(n):
                v = t[j] + ai * b[j] + carry
                t[j] = v & _LIMB_MASK
                carry = v >> LIMB_BITS
            v = t[n] + carry
            t[n] = v & _LIMB_MASK
            t[n + 1] = v >> LIMB_BITS
            u = (t[0] * self.m_neg_inv) & _LIMB_MASK
            carry = (t[0] + u * m[0]) >> LIMB_BITS
            for j in range(1, n):
                v = t[j] + u * m[j] + carry
                t[j - 1] = v & _LIMB_MASK
                carry = v >> LIMB_BITS
            v = t[n] + carry
            t[n - 1] = v & _LIMB_MASK
            t[n] = t[n + 1] + (v >> LIMB_BITS)
        out = t[:n]
        if t[n] or _cmp(out, m) >= 0:
            _sub_in_place(out, m)
        return out

    def to_mont(self, a: list) -> list:
        return self.mul(a, self.r2)

    def from_mont(self, a: list) -> list:
        return self.mul(a, [1] + [0] * (NUM_LIMBS - 1))


def _check_modulus(m: BigUint2048) -> list:
    limbs = list(m.limbs)
    if not limbs[0] & 1 or m.to_int() <= 1:
        raise ModulusInvalid("modulus must be odd and greater than one")
    return limbs


@lru_cache(maxsize=64)
def _context(limbs: tuple) -> _Montgomery:
    return _Montgomery(list(limbs))


def big_modmul(a: BigUint2048, b: BigUint2048, m: BigUint2048) -> BigUint2048:
    ml = _check_modulus(m)
    al, bl = list(a.limbs), list(b.limbs)
    if _cmp(al, ml) >= 0 or _cmp(bl, ml) >= 0:
        raise ValueError("operands must be reduced modulo m")
    ctx = _context(tuple(ml))
    return BigUint2048(tuple(ctx.mul(ctx.to_mont(al), bl)))


def big_modexp_65537(base: BigUint2048, m: BigUint2048) -> BigUint2048:
    """base^65537 mod m with the fixed schedule of 16 squarings and one multiply."""
    ml = _check_modulus(m)
    bl = list(base.limbs)
    if _cmp(bl, ml) >= 0:
        raise ValueError("base must be reduced modulo m")
    ctx = _context(tuple(ml))
    bm = ctx.to_mont(bl)
    x = bm
    for _ in range(16):
        x = ctx.mul(x, x)
    x = ctx.mul(x, bm)
    return BigUint2048(tuple(ctx.from_mont(x)))


def int_to_limbs(x: int, n: int = NUM_LIMBS, bits: int = LIMB_BITS) -> list:
    mask = (1 << bits) - 1
    return [(x >> (bits * i)) & mask for i in range(n)]


def limbs_to_int(limbs, bits: int = LIMB_BITS) -> int:
    acc = 0
    for limb in reversed(list(limbs)):
        acc = (acc << bits) | int(limb)
    return acc
