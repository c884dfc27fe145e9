import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from zklogin.field import (
    BigUint2048,
    FieldElement,
    InverseOfZero,
    ModulusInvalid,
    P,
    big_modexp_65537,
    big_modmul,
    fe_add,
    fe_inv,
    fe_mul,
    fe_neg,
    fe_sub,
    int_to_limbs,
    limbs_to_int,
)

felts = st.integers(min_value=0, max_value=P - 1)
wide = st.integers(min_value=0, max_value=(1 << 2048) - 1)


@given(felts, felts)
def test_field_ops_match_integers(a, b):
    assert int(fe_add(a, b)) == (a + b) % P
    assert int(fe_sub(a, b)) == (a - b) % P
    assert int(fe_mul(a, b)) == a * b % P
    assert int(fe_neg(a)) == -a % P


@given(felts.filter(bool))
def test_inverse(a):
    assert int(fe_mul(a, fe_inv(a))) == 1
    assert FieldElement(a) / a == FieldElement(1)
    assert FieldElement(a) ** -1 == fe_inv(a)


def test_inverse_of_zero():
    with pytest.raises(InverseOfZero):
        fe_inv(0)


def test_reduction_and_encoding():
    assert FieldElement(P + 5).value == 5
    assert FieldElement(-1).value == P - 1
    x = FieldElement(123456789)
    assert FieldElement.from_bytes(x.to_bytes()) == x
    with pytest.raises(ValueError):
        FieldElement.from_bytes(P.to_bytes(32, "little"))
    with pytest.raises(ValueError):
        FieldElement.from_bytes(b"\0" * 31)


@given(wide)
def test_limb_roundtrip(x):
    b = BigUint2048.from_int(x)
    assert b.to_int() == x
    assert BigUint2048.from_bytes(b.to_bytes()) == b
    assert limbs_to_int(int_to_limbs(x)) == x


def test_biguint_bounds():
    with pytest.raises(ValueError):
        BigUint2048.from_int(1 << 2048)
    with pytest.raises(ValueError):
        BigUint2048((0,) * 31)


odd_moduli = st.integers(min_value=3, max_value=(1 << 2048) - 1).map(lambda m: m | 1)


@settings(max_examples=60, deadline=None)
@given(odd_moduli, st.data())
def test_modmul_and_modexp_match_pow(m, data):
    a = data.draw(st.integers(min_value=0, max_value=m - 1))
    b = data.draw(st.integers(min_value=0, max_value=m - 1))
    M = BigUint2048.from_int(m)
    assert big_modmul(BigUint2048.from_int(a), BigUint2048.from_int(b), M).to_int() == a * b % m
    assert big_modexp_65537(BigUint2048.from_int(a), M).to_int() == pow(a, 65537, m)


def test_modulus_must_be_odd():
    with pytest.raises(ModulusInvalid):
        big_modmul(BigUint2048.from_int(1), BigUint2048.from_int(1), BigUint2048.from_int(10))
    with pytest.raises(ValueError):
        big_modmul(BigUint2048.from_int(11), BigUint2048.from_int(1), BigUint2048.from_int(11))
