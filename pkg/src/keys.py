# src/keys.py
from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Sequence, Union

from . import config
from .errors import (
    ArtifactIOError,
    ConfigError,
    FieldTooSmall,
    FingerprintMismatch,
    MatrixError,
    ModulusTooSmall,
)
from .field_core import PrimeModulus, validate_modulus
from .file_utils import read_json, write_json_atomic
from .matrix_core import (
    DiagonalSpec,
    Matrix,
    char_poly,
    conjugate,
    mat_det,
    mat_inv,
    mat_mul,
    poly_is_irreducible,
    poly_is_primitive,
    sample_distinct_diagonal,
    sample_invertible,
)
from .randomness import RandomSource
from .wire import encode_matrix, matrix_from_hex, matrix_to_hex

log = logging.getLogger(__name__)

MAX_EXPONENT_BOUND = (1 << 64) - 1
PRIVATE_KEY_MODE = 0o600


# ---------------------------------------------------------------------
# Parâmetros públicos da comunidade
# ---------------------------------------------------------------------
def compute_fingerprint(mod: PrimeModulus, d: int, m: int, n: int, P: Matrix, G: Matrix) -> bytes:
    """SHA-256(p ‖ d ‖ m ‖ n ‖ P ‖ G)[:8], inteiros little-endian."""
    h = hashlib.sha256()
    h.update(mod.p.to_bytes(8, "little"))
    h.update(d.to_bytes(2, "little"))
    h.update(m.to_bytes(8, "little"))
    h.update(n.to_bytes(8, "little"))
    h.update(encode_matrix(P))
    h.update(encode_matrix(G))
    return h.digest()[:8]


def _check_field_size(p: int, d: int) -> None:
    if p - 1 < d:
        raise FieldTooSmall(f"F_{p}* tem só {p - 1} valores para d={d}")
    if p <= d + 1:
        raise ModulusTooSmall(f"exige p > d + 1 (p={p}, d={d})")


@dataclass(frozen=True)
class ParamSet:
    mod: PrimeModulus
    d: int
    P: Matrix
    G: Matrix
    m: int
    n: int
    exponent_bound: int
    strict_order: bool
    fingerprint: bytes

    def __post_init__(self):
        _check_field_size(self.mod.p, self.d)
        if not 1 <= self.exponent_bound <= MAX_EXPONENT_BOUND:
            raise ConfigError(f"exponent_bound fora de [1, 2^64): {self.exponent_bound}")
        if not (1 <= self.m <= self.exponent_bound and 1 <= self.n <= self.exponent_bound):
            raise ConfigError(f"m, n precisam estar em [1, {self.exponent_bound}] (m={self.m}, n={self.n})")
        for name, mat in (("P", self.P), ("G", self.G)):
            if mat.dim != self.d or mat.mod.p != self.mod.p:
                raise MatrixError(f"{name} não é {self.d}x{self.d} sobre F_{self.mod.p}")
            if mat_det(mat).value == 0:
                raise MatrixError(f"{name} é singular")
            if self.strict_order and not poly_is_irreducible(char_poly(mat)):
                raise MatrixError(f"char_poly({name}) não é irredutível (strict_order)")
        expected = compute_fingerprint(self.mod, self.d, self.m, self.n, self.P, self.G)
        if expected != self.fingerprint:
            raise FingerprintMismatch(
                f"fingerprint {self.fingerprint.hex()} não confere com o conteúdo ({expected.hex()})"
            )

    @cached_property
    def P_inv(self) -> Matrix:
        return mat_inv(self.P)

    @property
    def p(self) -> int:
        return self.mod.p


def build_params(
    p: Union[int, PrimeModulus],
    d: int,
    P: Union[Matrix, Sequence[Sequence[int]]],
    G: Union[Matrix, Sequence[Sequence[int]]],
    m: int,
    n: int,
    *,
    exponent_bound: int = config.DEFAULT_EXPONENT_BOUND,
    strict_order: bool = False,
) -> ParamSet:
    """Monta um ParamSet a partir de valores explícitos (testes, arquivos)."""
    mod = p if isinstance(p, PrimeModulus) else validate_modulus(p)
    _check_field_size(mod.p, d)
    P = P if isinstance(P, Matrix) else Matrix(mod, P)
    G = G if isinstance(G, Matrix) else Matrix(mod, G)
    fp = compute_fingerprint(mod, d, m, n, P, G)
    return ParamSet(mod, d, P, G, m, n, exponent_bound, strict_order, fp)


def _sample_param_matrix(
    mod: PrimeModulus,
    d: int,
    rng: RandomSource,
    strict_order: bool,
    factorization: Optional[Mapping[int, int]],
) -> Matrix:
    attempts = 0
    while True:
        attempts += 1
        mat = sample_invertible(mod, d, rng)
        if not strict_order:
            return mat
        f = char_poly(mat)
        if not poly_is_irreducible(f):
            continue
        if factorization is not None and not poly_is_primitive(f, factorization):
            continue
        log.debug("🎯 matriz com char_poly irredutível após %d tentativas", attempts)
        return mat


def gen_params(
    p: int = config.DEFAULT_PRIME,
    d: int = config.DEFAULT_DIM,
    exponent_bound: int = config.DEFAULT_EXPONENT_BOUND,
    strict_order: bool = True,
    rng: Optional[RandomSource] = None,
    *,
    primitive_factorization: Optional[Mapping[int, int]] = None,
) -> ParamSet:
    """
    Acordo da comunidade: (P, G) inversíveis e (m, n) uniformes em [1, exponent_bound].
    Com strict_order, P e G são re-sorteadas até o polinômio característico ser
    irredutível (e primitivo, se a fatoração de p^d − 1 for fornecida).
    """
    rng = rng or RandomSource()
    mod = validate_modulus(p)
    _check_field_size(mod.p, d)
    if not 1 <= exponent_bound <= MAX_EXPONENT_BOUND:
        raise ConfigError(f"exponent_bound fora de [1, 2^64): {exponent_bound}")

    P = _sample_param_matrix(mod, d, rng, strict_order, primitive_factorization)
    G = _sample_param_matrix(mod, d, rng, strict_order, primitive_factorization)
    m = rng.randint(1, exponent_bound)
    n = rng.randint(1, exponent_bound)
    fp = compute_fingerprint(mod, d, m, n, P, G)
    params = ParamSet(mod, d, P, G, m, n, exponent_bound, strict_order, fp)
    log.info("🧩 Parâmetros gerados: p=%d d=%d bound=%d strict=%s fingerprint=%s",
             mod.p, d, exponent_bound, strict_order, fp.hex())
    return params


# ---------------------------------------------------------------------
# Chaves
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class PrivateKey:
    owner_id: str
    lambdas: DiagonalSpec = field(repr=False)
    A: Matrix = field(repr=False)
    A_inv: Matrix = field(repr=False)
    params_fingerprint: bytes
    conj: Matrix = field(repr=False, compare=False)
    conj_inv: Matrix = field(repr=False, compare=False)

    @classmethod
    def from_lambdas(
        cls,
        params: ParamSet,
        owner_id: str,
        lambdas: Union[DiagonalSpec, Sequence[int]],
    ) -> "PrivateKey":
        if not isinstance(lambdas, DiagonalSpec):
            lambdas = DiagonalSpec(tuple(lambdas), params.mod)
        if lambdas.dim != params.d:
            raise MatrixError(f"{lambdas.dim} λ para d={params.d}")
        A = conjugate(params.P, lambdas, p_inv=params.P_inv)
        A_inv = conjugate(params.P, lambdas.powered(-1), p_inv=params.P_inv)
        return cls(owner_id, lambdas, A, A_inv, params.fingerprint, params.P, params.P_inv)

    def power(self, e: int) -> Matrix:
        """A^e (e com sinal) como P·D^e·P⁻¹, mesma matriz que mat_pow(A, e)."""
        return conjugate(self.conj, self.lambdas.powered(e), p_inv=self.conj_inv)


@dataclass(frozen=True)
class PublicKey:
    owner_id: str
    g_x: Matrix
    params_fingerprint: bytes


def require_fingerprint(params: ParamSet, *artifacts: Any) -> None:
    for a in artifacts:
        fp = a.params_fingerprint
        if fp != params.fingerprint:
            owner = getattr(a, "owner_id", "?")
            raise FingerprintMismatch(
                f"artefato de '{owner}' usa parâmetros {fp.hex()}, esperado {params.fingerprint.hex()}"
            )


def derive_public(params: ParamSet, priv: PrivateKey) -> PublicKey:
    """G_X = X^m · G · X^n."""
    require_fingerprint(params, priv)
    g_x = mat_mul(mat_mul(priv.power(params.m), params.G), priv.power(params.n))
    return PublicKey(priv.owner_id, g_x, params.fingerprint)


def gen_keypair(params: ParamSet, owner_id: str, rng: Optional[RandomSource] = None) -> tuple[PrivateKey, PublicKey]:
    rng = rng or RandomSource()
    lambdas = sample_distinct_diagonal(params.mod, params.d, rng)
    priv = PrivateKey.from_lambdas(params, owner_id, lambdas)
    pub = derive_public(params, priv)
    log.info("🔑 Par de chaves gerado para '%s' (params %s)", owner_id, params.fingerprint.hex())
    return priv, pub


# ---------------------------------------------------------------------
# Cardinalidade do espaço de chaves
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class KeyspaceReport:
    p: int
    d: int
    cardinality_published: int
    cardinality_derived: int
    bits_published: float
    bits_derived: float

    def to_json(self) -> Dict[str, Any]:
        return {
            "p": self.p,
            "d": self.d,
            "cardinality_published": self.cardinality_published,
            "cardinality_derived": self.cardinality_derived,
            "bits_published": self.bits_published,
            "bits_derived": self.bits_derived,
            "approx_bits_published": round(self.bits_published),
            "approx_bits_derived": round(self.bits_derived),
        }


def _bits(x: int) -> float:
    # produto vazio/nulo (p − 1 = d) não tem log; reportamos 0
    return math.log2(x) if x > 0 else 0.0


def keyspace_cardinality(p: int, d: int) -> KeyspaceReport:
    """
    Duas contagens, sem escolher uma:
      - published: ∏_{i=2}^{d+1} (p − i)  (começa em p − 2)
      - derived:   ∏_{i=1}^{d} (p − i)    (d valores distintos de F_p*, ordenados)
    """
    mod = validate_modulus(p)
    if mod.p - 1 < d:
        raise FieldTooSmall(f"F_{p}* tem só {p - 1} valores para d={d}")
    published = math.prod(mod.p - i for i in range(2, d + 2))
    derived = math.prod(mod.p - i for i in range(1, d + 1))
    return KeyspaceReport(mod.p, d, published, derived, _bits(published), _bits(derived))


# ---------------------------------------------------------------------
# Arquivos (JSON)
# ---------------------------------------------------------------------
def params_to_json(params: ParamSet) -> Dict[str, Any]:
    return {
        "p": params.mod.p,
        "d": params.d,
        "m": params.m,
        "n": params.n,
        "exponent_bound": params.exponent_bound,
        "strict_order": params.strict_order,
        "P": matrix_to_hex(params.P),
        "G": matrix_to_hex(params.G),
        "fingerprint": params.fingerprint.hex(),
    }


def params_from_json(data: Dict[str, Any]) -> ParamSet:
    try:
        mod = validate_modulus(int(data["p"]))
        d = int(data["d"])
        P = matrix_from_hex(data["P"], d, mod)
        G = matrix_from_hex(data["G"], d, mod)
        fp = bytes.fromhex(data["fingerprint"])
        m, n = int(data["m"]), int(data["n"])
        bound = int(data["exponent_bound"])
        strict = bool(data["strict_order"])
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactIOError(f"arquivo de parâmetros inválido: {e}")
    return ParamSet(mod, d, P, G, m, n, bound, strict, fp)


def save_params(path: str | Path, params: ParamSet) -> str:
    out = write_json_atomic(path, params_to_json(params))
    log.info("💾 Parâmetros salvos em %s", out)
    return out


def load_params(path: str | Path) -> ParamSet:
    return params_from_json(read_json(path))


def _fingerprint_field(data: Dict[str, Any]) -> bytes:
    try:
        return bytes.fromhex(data["params_fingerprint"])
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactIOError(f"params_fingerprint ausente/inválido: {e}")


def save_private_key(path: str | Path, priv: PrivateKey) -> str:
    payload = {
        "owner_id": priv.owner_id,
        "lambdas": list(priv.lambdas.lambdas),
        "params_fingerprint": priv.params_fingerprint.hex(),
    }
    out = write_json_atomic(path, payload, mode=PRIVATE_KEY_MODE)
    log.info("💾 Chave privada de '%s' salva em %s", priv.owner_id, out)
    return out


def load_private_key(path: str | Path, params: ParamSet) -> PrivateKey:
    """Só λ fica no disco; A é recalculada e amarrada ao fingerprint."""
    data = read_json(path)
    fp = _fingerprint_field(data)
    if fp != params.fingerprint:
        raise FingerprintMismatch(f"{path}: chave de parâmetros {fp.hex()}, esperado {params.fingerprint.hex()}")
    try:
        return PrivateKey.from_lambdas(params, str(data["owner_id"]), [int(v) for v in data["lambdas"]])
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactIOError(f"{path}: chave privada inválida: {e}")


def public_key_to_json(pub: PublicKey) -> Dict[str, Any]:
    return {
        "owner_id": pub.owner_id,
        "g_x": matrix_to_hex(pub.g_x),
        "params_fingerprint": pub.params_fingerprint.hex(),
    }


def save_public_key(path: str | Path, pub: PublicKey) -> str:
    out = write_json_atomic(path, public_key_to_json(pub))
    log.info("💾 Chave pública de '%s' salva em %s", pub.owner_id, out)
    return out


def load_public_key(path: str | Path, params: ParamSet) -> PublicKey:
    data = read_json(path)
    fp = _fingerprint_field(data)
    if fp != params.fingerprint:
        raise FingerprintMismatch(f"{path}: chave de parâmetros {fp.hex()}, esperado {params.fingerprint.hex()}")
    try:
        g_x = matrix_from_hex(data["g_x"], params.d, params.mod)
        owner_id = str(data["owner_id"])
    except (KeyError, TypeError, ValueError) as e:
        raise ArtifactIOError(f"{path}: chave pública inválida: {e}")
    if mat_det(g_x).value == 0:
        raise ArtifactIOError(f"{path}: g_x singular")
    return PublicKey(owner_id, g_x, fp)


def load_registry(directory: str | Path, params: ParamSet) -> Dict[str, PublicKey]:
    """
    Diretório de chaves públicas conhecidas (*.pub / *.json).
    Arquivos ilegíveis ou de outros parâmetros são pulados com aviso.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise ArtifactIOError(f"registry {directory} não é um diretório")
    registry: Dict[str, PublicKey] = {}
    for path in sorted(list(directory.glob("*.pub")) + list(directory.glob("*.json"))):
        try:
            pub = load_public_key(path, params)
        except (ArtifactIOError, FingerprintMismatch) as e:
            log.warning("⚠️ Ignorando %s: %s", path.name, e)
            continue
        if pub.owner_id in registry:
            log.warning("⚠️ id '%s' duplicado no registry, mantendo o primeiro", pub.owner_id)
            continue
        registry[pub.owner_id] = pub
    log.info("📇 Registry carregado: %d chave(s) em %s", len(registry), directory)
    return registry
