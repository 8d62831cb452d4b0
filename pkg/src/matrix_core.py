# src/matrix_core.py
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np
from sympy import isprime, primefactors
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import (
    gf_add,
    gf_degree,
    gf_gcd,
    gf_mul,
    gf_mul_ground,
    gf_pow_mod,
    gf_strip,
    gf_sub,
)

from .errors import (
    DimensionMismatch,
    FieldTooSmall,
    MatrixError,
    ModulusMismatch,
    ModulusTooSmall,
    Singular,
)
from .field_core import FieldElement, PrimeModulus, inv_mod
from .randomness import RandomSource

log = logging.getLogger(__name__)

_INT64_LIMIT = 1 << 63


def _dtype_for(p: int, d: int):
    """int64 enquanto uma soma de d produtos cabe em 63 bits; senão ints do Python."""
    return np.int64 if d * (p - 1) ** 2 < _INT64_LIMIT else object


# ---------------------------------------------------------------------
# Matriz densa d×d sobre F_p (imutável)
# ---------------------------------------------------------------------
class Matrix:
    __slots__ = ("mod", "data", "_flat")

    def __init__(self, mod: PrimeModulus, rows: Iterable[Iterable[int]]):
        values = [[int(v) for v in row] for row in rows]
        d = len(values)
        if d == 0 or any(len(r) != d for r in values):
            raise DimensionMismatch("matriz precisa ser quadrada e não vazia")
        p = mod.p
        arr = np.array([[v % p for v in row] for row in values], dtype=_dtype_for(p, d))
        self._init(mod, arr)

    def _init(self, mod: PrimeModulus, arr: np.ndarray) -> None:
        arr.setflags(write=False)
        self.mod = mod
        self.data = arr
        self._flat: Optional[tuple[int, ...]] = None

    @classmethod
    def _wrap(cls, mod: PrimeModulus, arr: np.ndarray) -> "Matrix":
        # arr já reduzido mod p e com o dtype certo
        obj = cls.__new__(cls)
        obj._init(mod, arr)
        return obj

    @classmethod
    def identity(cls, mod: PrimeModulus, d: int) -> "Matrix":
        return cls._wrap(mod, np.eye(d, dtype=np.int64).astype(_dtype_for(mod.p, d)))

    @classmethod
    def diag(cls, mod: PrimeModulus, values: Sequence[int]) -> "Matrix":
        d = len(values)
        rows = [[values[i] if i == j else 0 for j in range(d)] for i in range(d)]
        return cls(mod, rows)

    @classmethod
    def from_flat(cls, mod: PrimeModulus, d: int, values: Sequence[int]) -> "Matrix":
        if len(values) != d * d:
            raise DimensionMismatch(f"esperados {d * d} elementos, recebidos {len(values)}")
        return cls(mod, [values[i * d:(i + 1) * d] for i in range(d)])

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def flat(self) -> tuple[int, ...]:
        """Entradas em ordem row-major como ints do Python."""
        if self._flat is None:
            self._flat = tuple(int(v) for v in self.data.ravel().tolist())
        return self._flat

    def rows(self) -> list[list[int]]:
        d = self.dim
        f = self.flat()
        return [list(f[i * d:(i + 1) * d]) for i in range(d)]

    def is_invertible(self) -> bool:
        return mat_det(self).value != 0

    def __matmul__(self, other: "Matrix") -> "Matrix":
        return mat_mul(self, other)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matrix):
            return NotImplemented
        return self.mod.p == other.mod.p and self.dim == other.dim and self.flat() == other.flat()

    def __hash__(self) -> int:
        return hash((self.mod.p, self.dim, self.flat()))

    def __repr__(self) -> str:
        return f"Matrix(p={self.mod.p}, d={self.dim}, rows={self.rows()})"


def _check_pair(a: Matrix, b: Matrix) -> None:
    if a.mod.p != b.mod.p:
        raise ModulusMismatch(f"módulos diferentes: {a.mod.p} vs {b.mod.p}")
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensões diferentes: {a.dim} vs {b.dim}")


# ---------------------------------------------------------------------
# Operações básicas
# ---------------------------------------------------------------------
def mat_mul(a: Matrix, b: Matrix) -> Matrix:
    _check_pair(a, b)
    return Matrix._wrap(a.mod, (a.data @ b.data) % a.mod.p)


def _det_array(arr: np.ndarray, p: int) -> int:
    """
    Eliminação gaussiana com pivotamento (primeiro pivô não nulo) sobre F_p.

    Divide pelo pivô com inverso modular em vez de usar eliminação sem frações
    (Bareiss): em F_p todo pivô não nulo é invertível e o resultado é o mesmo.
    """
    a = arr.copy()
    d = a.shape[0]
    det = 1
    for c in range(d):
        nz = np.flatnonzero(a[c:, c])
        if nz.size == 0:
            return 0
        piv = c + int(nz[0])
        if piv != c:
            a[[c, piv]] = a[[piv, c]]
            det = -det
        pv = int(a[c, c])
        det = det * pv % p
        if c + 1 < d:
            factors = (a[c + 1:, c] * inv_mod(pv, p)) % p
            a[c + 1:] = (a[c + 1:] - factors[:, None] * a[c]) % p
    return det % p


def mat_det(m: Matrix) -> FieldElement:
    return FieldElement(_det_array(m.data, m.mod.p), m.mod)


def mat_inv(m: Matrix) -> Matrix:
    """Gauss–Jordan sobre [M | I]."""
    p = m.mod.p
    d = m.dim
    aug = np.concatenate([m.data, np.eye(d, dtype=np.int64).astype(m.data.dtype)], axis=1)
    for c in range(d):
        nz = np.flatnonzero(aug[c:, c])
        if nz.size == 0:
            raise Singular("matriz singular (det = 0)")
        piv = c + int(nz[0])
        if piv != c:
            aug[[c, piv]] = aug[[piv, c]]
        aug[c] = (aug[c] * inv_mod(int(aug[c, c]), p)) % p
        col = aug[:, c].copy()
        col[c] = 0
        aug = (aug - col[:, None] * aug[c]) % p
    return Matrix._wrap(m.mod, np.ascontiguousarray(aug[:, d:]))


def mat_pow(m: Matrix, e: int) -> Matrix:
    """Square-and-multiply sobre |e|; e < 0 usa (m⁻¹)^|e|."""
    base = mat_inv(m) if e < 0 else m
    e = abs(e)
    result: Optional[Matrix] = None
    while e:
        if e & 1:
            result = base if result is None else mat_mul(result, base)
        e >>= 1
        if e:
            base = mat_mul(base, base)
    return result if result is not None else Matrix.identity(m.mod, m.dim)


def commutes(a: Matrix, b: Matrix) -> bool:
    return mat_mul(a, b) == mat_mul(b, a)


# ---------------------------------------------------------------------
# Diagonais e conjugação (subgrupo comutativo das chaves)
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class DiagonalSpec:
    lambdas: tuple[int, ...]
    mod: PrimeModulus

    def __post_init__(self):
        lams = tuple(int(v) for v in self.lambdas)
        object.__setattr__(self, "lambdas", lams)
        if not lams:
            raise MatrixError("diagonal vazia")
        if any(not 0 < v < self.mod.p for v in lams):
            raise MatrixError(f"λ fora de F_{self.mod.p}* em {lams}")
        if len(set(lams)) != len(lams):
            raise MatrixError(f"λ repetidos em {lams}")

    @property
    def dim(self) -> int:
        return len(self.lambdas)

    def matrix(self) -> Matrix:
        return Matrix.diag(self.mod, self.lambdas)

    def powered(self, e: int) -> tuple[int, ...]:
        """λᵢ^e (e com sinal). Pode repetir valores, por isso não é DiagonalSpec."""
        p = self.mod.p
        if e < 0:
            return tuple(pow(inv_mod(v, p), -e, p) for v in self.lambdas)
        return tuple(pow(v, e, p) for v in self.lambdas)


def conjugate(
    p_mat: Matrix,
    d_spec: Union[DiagonalSpec, Sequence[int]],
    *,
    p_inv: Optional[Matrix] = None,
) -> Matrix:
    """P·D·P⁻¹. Aceita `p_inv` já calculado para evitar a inversão."""
    values = d_spec.lambdas if isinstance(d_spec, DiagonalSpec) else tuple(int(v) for v in d_spec)
    if len(values) != p_mat.dim:
        raise DimensionMismatch(f"diagonal com {len(values)} valores para d={p_mat.dim}")
    if p_inv is None:
        p_inv = mat_inv(p_mat)
    p = p_mat.mod.p
    lam = np.array([v % p for v in values], dtype=p_mat.data.dtype)
    # P·D escala as colunas de P
    scaled = (p_mat.data * lam[None, :]) % p
    return Matrix._wrap(p_mat.mod, (scaled @ p_inv.data) % p)


# ---------------------------------------------------------------------
# Polinômios (coeficientes ascendentes) e irredutibilidade
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class Polynomial:
    coeffs: tuple[int, ...]
    mod: PrimeModulus

    def __post_init__(self):
        p = self.mod.p
        cs = [int(c) % p for c in self.coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        if not cs:
            raise ValueError("polinômio nulo não tem grau")
        object.__setattr__(self, "coeffs", tuple(cs))

    @classmethod
    def from_descending(cls, mod: PrimeModulus, coeffs: Sequence[int]) -> "Polynomial":
        return cls(tuple(int(c) for c in reversed(list(coeffs))), mod)

    def descending(self) -> list[int]:
        return list(reversed(self.coeffs))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_monic(self) -> bool:
        return self.coeffs[-1] == 1

    def evaluate(self, x: int) -> int:
        p = self.mod.p
        acc = 0
        for c in reversed(self.coeffs):
            acc = (acc * x + c) % p
        return acc

    def __str__(self) -> str:
        terms = []
        for i in range(self.degree, -1, -1):
            c = self.coeffs[i]
            if c == 0:
                continue
            coef = "" if c == 1 and i > 0 else str(c)
            if i == 0:
                terms.append(str(c))
            elif i == 1:
                terms.append(f"{coef}x")
            else:
                terms.append(f"{coef}x^{i}")
        return " + ".join(terms)


def char_poly(m: Matrix) -> Polynomial:
    """
    det(xI − m) avaliado em x = 0..d e interpolado por Lagrange.
    Exige p > d + 1 (pontos distintos suficientes).
    """
    p = m.mod.p
    d = m.dim
    if p <= d + 1:
        raise ModulusTooSmall(f"char_poly exige p > d + 1 (p={p}, d={d})")
    xs = list(range(d + 1))
    eye = np.eye(d, dtype=np.int64).astype(m.data.dtype)
    ys = [_det_array((x * eye - m.data) % p, p) for x in xs]

    acc: list = []
    for i, xi in enumerate(xs):
        num: list = [1]
        denom = 1
        for j, xj in enumerate(xs):
            if j == i:
                continue
            num = gf_mul(num, [1, (-xj) % p], p, ZZ)
            denom = denom * (xi - xj) % p
        scale = ys[i] * inv_mod(denom, p) % p
        acc = gf_add(acc, gf_mul_ground(num, scale, p, ZZ), p, ZZ)

    poly = Polynomial.from_descending(m.mod, [int(c) for c in acc])
    if poly.degree != d or not poly.is_monic:
        raise MatrixError(f"interpolação inconsistente: {poly}")
    return poly


def _frobenius_chain(g: list, p: int, steps: int) -> list[list]:
    """[x^(p^0), x^(p^1), …, x^(p^steps)] mod g."""
    h = gf_strip([1, 0])
    chain = [h]
    for _ in range(steps):
        h = gf_pow_mod(h, p, g, p, ZZ)
        chain.append(h)
    return chain


def poly_is_irreducible(f: Polynomial) -> bool:
    """
    Teste de Rabin: x^(p^d) ≡ x (mod f) e gcd(x^(p^(d/q)) − x, f) = 1
    para todo primo q | d.
    """
    d = f.degree
    if d < 1:
        raise ValueError("grau precisa ser >= 1")
    if not f.is_monic:
        raise ValueError(f"polinômio precisa ser mônico: {f}")
    if d == 1:
        return True
    p = f.mod.p
    g = f.descending()
    x = [1, 0]
    chain = _frobenius_chain(g, p, d)
    if gf_sub(chain[d], x, p, ZZ):
        return False
    for q in primefactors(d):
        diff = gf_sub(chain[d // q], x, p, ZZ)
        if gf_degree(gf_gcd(diff, g, p, ZZ)) != 0:
            return False
    return True


def poly_is_primitive(f: Polynomial, factorization: Mapping[int, int]) -> bool:
    """
    Primitividade com fatoração de p^d − 1 fornecida pelo chamador
    ({primo: expoente}); não fatoramos nada aqui.
    """
    p = f.mod.p
    d = f.degree
    order = p ** d - 1
    if math.prod(q ** e for q, e in factorization.items()) != order:
        raise ValueError(f"fatoração fornecida não reproduz p^d − 1 = {order}")
    if any(not isprime(q) for q in factorization):
        raise ValueError("fatoração contém fator não primo")
    if not poly_is_irreducible(f):
        return False
    g = f.descending()
    x = [1, 0]
    if gf_pow_mod(x, order, g, p, ZZ) != [1]:
        return False
    return all(gf_pow_mod(x, order // q, g, p, ZZ) != [1] for q in factorization)


# ---------------------------------------------------------------------
# Amostragem
# ---------------------------------------------------------------------
def sample_matrix(mod: PrimeModulus, d: int, rng: RandomSource) -> Matrix:
    return Matrix.from_flat(mod, d, [rng.randbelow(mod.p) for _ in range(d * d)])


def sample_invertible(mod: PrimeModulus, d: int, rng: RandomSource) -> Matrix:
    """Rejection sampling: entradas uniformes até det ≠ 0 (uniforme em GL(d, F_p))."""
    attempts = 0
    while True:
        attempts += 1
        m = sample_matrix(mod, d, rng)
        if mat_det(m).value != 0:
            if attempts > 1:
                log.debug("sample_invertible: %d tentativas (p=%d, d=%d)", attempts, mod.p, d)
            return m


def sample_distinct_diagonal(mod: PrimeModulus, d: int, rng: RandomSource) -> DiagonalSpec:
    if mod.p - 1 < d:
        raise FieldTooSmall(f"F_{mod.p}* tem só {mod.p - 1} valores para d={d}")
    return DiagonalSpec(tuple(rng.sample(range(1, mod.p), d)), mod)
