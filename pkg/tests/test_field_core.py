import pytest
from hypothesis import given, strategies as st

from src.errors import ModulusMismatch, ModulusTooLarge, NotPrime, TooSmall, ZeroInverse
from src.field_core import FieldElement, FieldOp, fe_arith, fe_inv, fe_pow, inv_mod, validate_modulus


@pytest.mark.parametrize("p, width", [(3, 1), (251, 1), (257, 2), (65537, 3), ((1 << 61) - 1, 8)])
def test_validate_modulus_width(p, width):
    mod = validate_modulus(p)
    assert mod.p == p
    assert mod.elem_width == width


@pytest.mark.parametrize("p, exc", [
    (2, TooSmall),
    (1, TooSmall),
    (9, NotPrime),
    (250, NotPrime),
    (1 << 63, ModulusTooLarge),
])
def test_validate_modulus_rejects(p, exc):
    with pytest.raises(exc):
        validate_modulus(p)


def test_arith_mod7(mod7):
    a, b = mod7.element(5), mod7.element(4)
    assert (a + b).value == 2
    assert (mod7.element(3) - mod7.element(5)).value == 5
    assert (mod7.element(3) * mod7.element(5)).value == 1
    assert (-mod7.element(3)).value == 4
    assert fe_arith(a, b, "mul").value == 6
    assert fe_arith(a, b, FieldOp.SUB).value == 1


def test_inverse_and_pow(mod7):
    assert fe_inv(mod7.element(3)).value == 5
    assert mod7.element(3).inverse().value == 5
    assert fe_pow(mod7.element(3), 6).value == 1
    assert (mod7.element(2) ** 0).value == 1
    with pytest.raises(ValueError):
        fe_pow(mod7.element(3), -1)


def test_zero_inverse_is_zero_division(mod7):
    with pytest.raises(ZeroInverse):
        fe_inv(mod7.element(0))
    with pytest.raises(ZeroDivisionError):
        inv_mod(14, 7)


def test_mismatched_moduli(mod7, mod251):
    with pytest.raises(ModulusMismatch):
        mod7.element(1) + mod251.element(1)


def test_element_must_be_canonical(mod7):
    with pytest.raises(ValueError):
        FieldElement(7, mod7)
    assert mod7.element(-1).value == 6


@given(st.integers(min_value=1, max_value=250))
def test_inverse_property_251(a):
    mod = validate_modulus(251)
    x = mod.element(a)
    assert (x * x.inverse()).value == 1
    assert x.inverse().inverse() == x


@given(st.integers(min_value=1, max_value=250), st.integers(min_value=0, max_value=10_000))
def test_fermat_251(a, e):
    mod = validate_modulus(251)
    x = mod.element(a)
    assert (x ** 250).value == 1
    assert (x ** e).value == (x ** (e % 250)).value
