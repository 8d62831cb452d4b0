# src/field_core.py
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from sympy import isprime

from .errors import ModulusMismatch, ModulusTooLarge, NotPrime, TooSmall, ZeroInverse

# Produtos de dois resíduos cabem em aritmética de largura dupla
MAX_MODULUS = 1 << 63


class FieldOp(str, Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    NEG = "neg"


def _elem_width(p: int) -> int:
    """Menor w com 256^w >= p (bytes por elemento no wire)."""
    w = 1
    while 256 ** w < p:
        w += 1
    return w


@dataclass(frozen=True)
class PrimeModulus:
    p: int
    elem_width: int = field(compare=False)

    def element(self, value: int) -> "FieldElement":
        return FieldElement(value % self.p, self)


def validate_modulus(p: int) -> PrimeModulus:
    """
    Valida o primo p. Primalidade via sympy.isprime, que é Miller–Rabin
    determinístico para entradas de 64 bits.
    """
    p = int(p)
    if p < 3:
        raise TooSmall(f"módulo {p} < 3")
    if p >= MAX_MODULUS:
        raise ModulusTooLarge(f"módulo {p} >= 2^63")
    if not isprime(p):
        raise NotPrime(f"{p} não é primo")
    return PrimeModulus(p=p, elem_width=_elem_width(p))


@dataclass(frozen=True)
class FieldElement:
    value: int
    mod: PrimeModulus

    def __post_init__(self):
        if not 0 <= self.value < self.mod.p:
            raise ValueError(f"resíduo {self.value} fora de [0, {self.mod.p})")

    def _check(self, other: "FieldElement") -> None:
        if other.mod.p != self.mod.p:
            raise ModulusMismatch(f"módulos diferentes: {self.mod.p} vs {other.mod.p}")

    def __add__(self, other: "FieldElement") -> "FieldElement":
        return fe_arith(self, other, FieldOp.ADD)

    def __sub__(self, other: "FieldElement") -> "FieldElement":
        return fe_arith(self, other, FieldOp.SUB)

    def __mul__(self, other: "FieldElement") -> "FieldElement":
        return fe_arith(self, other, FieldOp.MUL)

    def __neg__(self) -> "FieldElement":
        return fe_arith(self, self, FieldOp.NEG)

    def __pow__(self, e: int) -> "FieldElement":
        return fe_pow(self, e)

    def inverse(self) -> "FieldElement":
        return fe_inv(self)

    def __repr__(self) -> str:
        return f"{self.value} (mod {self.mod.p})"


def fe_arith(a: FieldElement, b: FieldElement, op: FieldOp | str) -> FieldElement:
    a._check(b)
    p = a.mod.p
    op = FieldOp(op)
    if op is FieldOp.ADD:
        v = a.value + b.value
    elif op is FieldOp.SUB:
        v = a.value - b.value
    elif op is FieldOp.MUL:
        v = a.value * b.value
    else:
        v = -a.value
    return FieldElement(v % p, a.mod)


def fe_inv(a: FieldElement) -> FieldElement:
    if a.value == 0:
        raise ZeroInverse(f"0 não tem inverso em F_{a.mod.p}")
    # pow(x, -1, p) = Euclides estendido
    return FieldElement(pow(a.value, -1, a.mod.p), a.mod)


def fe_pow(a: FieldElement, e: int) -> FieldElement:
    if e < 0:
        raise ValueError("expoente negativo: use fe_inv primeiro")
    return FieldElement(pow(a.value, e, a.mod.p), a.mod)


def inv_mod(a: int, p: int) -> int:
    """Inverso de um resíduo cru (sem FieldElement), usado pelos kernels de matriz."""
    a %= p
    if a == 0:
        raise ZeroInverse(f"0 não tem inverso em F_{p}")
    return pow(a, -1, p)
