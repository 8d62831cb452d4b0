# src/gsdp_oracle.py
from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Iterator, List, Optional, Sequence

from . import config
from .errors import ConfigError, EnumerationTooLarge, FieldTooSmall, MatrixError, NoSolution
from .field_core import PrimeModulus
from .keys import ParamSet, PrivateKey, PublicKey, require_fingerprint
from .matrix_core import DiagonalSpec, Matrix, conjugate, mat_det, mat_inv, mat_mul, mat_pow
from .protocol import SessionConfig, session_run
from .randomness import RandomSource

log = logging.getLogger(__name__)

DEFAULT_ENUMERATION_CAP = config.ENUMERATION_CAP
ORDERS = ("lex", "reverse")


@dataclass(frozen=True)
class GsdpInstance:
    """Encontrar z = P·D·P⁻¹ com y = z^m · x · z^n."""

    mod: PrimeModulus
    d: int
    P: Matrix
    x: Matrix
    y: Matrix
    m: int
    n: int

    def __post_init__(self):
        if self.m < 0 or self.n < 0:
            raise ConfigError(f"m, n precisam ser >= 0 (m={self.m}, n={self.n})")
        for name, mat in (("P", self.P), ("x", self.x), ("y", self.y)):
            if mat.dim != self.d or mat.mod.p != self.mod.p:
                raise MatrixError(f"{name} não é {self.d}x{self.d} sobre F_{self.mod.p}")
            if mat_det(mat).value == 0:
                raise MatrixError(f"{name} é singular")

    @classmethod
    def from_params(cls, params: ParamSet, x: Matrix, y: Matrix) -> "GsdpInstance":
        return cls(params.mod, params.d, params.P, x, y, params.m, params.n)

    @cached_property
    def P_inv(self) -> Matrix:
        return mat_inv(self.P)

    def is_solution(self, lambdas: Sequence[int]) -> bool:
        """Conferência com aritmética matricial completa (independe do filtro da busca)."""
        z = conjugate(self.P, lambdas, p_inv=self.P_inv)
        return mat_mul(mat_mul(mat_pow(z, self.m), self.x), mat_pow(z, self.n)) == self.y


@dataclass
class GsdpSolutionSet:
    solutions: List[DiagonalSpec] = field(default_factory=list)
    candidates_tested: int = 0
    elapsed_ms: float = 0.0

    @property
    def lambdas(self) -> List[tuple[int, ...]]:
        return [s.lambdas for s in self.solutions]

    def __contains__(self, lambdas: object) -> bool:
        return tuple(lambdas) in set(self.lambdas)  # type: ignore[arg-type]

    def to_json(self) -> Dict[str, Any]:
        return {
            "candidates_tested": self.candidates_tested,
            "solutions": [list(t) for t in self.lambdas],
            "elapsed_ms": round(self.elapsed_ms, 3),
        }


# ---------------------------------------------------------------------
# Enumeração do subgrupo conjugado-diagonal
# ---------------------------------------------------------------------
def _check_order(order: str) -> None:
    if order not in ORDERS:
        raise ConfigError(f"order precisa ser um de {ORDERS} (recebido {order!r})")


def subgroup_size(mod: PrimeModulus, d: int) -> int:
    if mod.p - 1 < d:
        raise FieldTooSmall(f"F_{mod.p}* tem só {mod.p - 1} valores para d={d}")
    return math.perm(mod.p - 1, d)


def _check_cap(mod: PrimeModulus, d: int, cap: Optional[int]) -> int:
    cap = DEFAULT_ENUMERATION_CAP if cap is None else cap
    total = subgroup_size(mod, d)
    if total > cap:
        raise EnumerationTooLarge(
            f"{total} candidatos (p={mod.p}, d={d}) acima do limite {cap}; use --cap para forçar"
        )
    return total


def _values(p: int, order: str) -> list[int]:
    return list(range(1, p)) if order == "lex" else list(range(p - 1, 0, -1))


def enumerate_subgroup(
    mod: PrimeModulus,
    d: int,
    cap: Optional[int] = None,
    *,
    order: str = "lex",
) -> Iterator[DiagonalSpec]:
    """
    Todas as d-uplas ordenadas de valores distintos de F_p*, cada uma uma vez.
    O limite é checado já na chamada, não no primeiro next().
    """
    _check_order(order)
    _check_cap(mod, d, cap)
    return (DiagonalSpec(t, mod) for t in itertools.permutations(_values(mod.p, order), d))


# ---------------------------------------------------------------------
# Busca
# ---------------------------------------------------------------------
@dataclass(frozen=True)
class _SearchTask:
    p: int
    d: int
    pow_m: tuple[int, ...]  # pow_m[v] = v^m mod p (índice 0 sem uso)
    pow_n: tuple[int, ...]
    x_flat: tuple[int, ...]  # P⁻¹·x·P
    y_flat: tuple[int, ...]  # P⁻¹·y·P
    allowed: tuple[frozenset, ...]
    values: tuple[int, ...]
    firsts: tuple[int, ...]


def _search_partition(task: _SearchTask) -> tuple[list[tuple[int, ...]], int]:
    """
    Em coordenadas diagonais a equação vira, entrada a entrada,
      y'_ij = λ_i^m · x'_ij · λ_j^n.
    Nível de módulo para rodar em ProcessPoolExecutor.
    """
    p, d = task.p, task.d
    pow_m, pow_n, xf, yf, allowed = task.pow_m, task.pow_n, task.x_flat, task.y_flat, task.allowed
    found: list[tuple[int, ...]] = []
    tested = 0
    for first in task.firsts:
        rest = [v for v in task.values if v != first]
        for tail in itertools.permutations(rest, d - 1):
            tested += 1
            lam = (first,) + tail
            if not all(lam[i] in allowed[i] for i in range(d)):
                continue
            ok = True
            for i in range(d):
                li = pow_m[lam[i]]
                row = i * d
                for j in range(d):
                    if i != j and (li * xf[row + j] * pow_n[lam[j]]) % p != yf[row + j]:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                found.append(lam)
    return found, tested


def _build_task(inst: GsdpInstance, order: str) -> _SearchTask:
    p, d = inst.mod.p, inst.d
    x_diag = mat_mul(mat_mul(inst.P_inv, inst.x), inst.P).flat()
    y_diag = mat_mul(mat_mul(inst.P_inv, inst.y), inst.P).flat()
    pow_m = tuple(pow(v, inst.m, p) for v in range(p))
    pow_n = tuple(pow(v, inst.n, p) for v in range(p))
    values = _values(p, order)
    allowed = tuple(
        frozenset(v for v in values if (pow_m[v] * x_diag[i * d + i] * pow_n[v]) % p == y_diag[i * d + i])
        for i in range(d)
    )
    return _SearchTask(p, d, pow_m, pow_n, x_diag, y_diag, allowed, tuple(values), tuple(values))


def _split(task: _SearchTask, workers: int) -> list[_SearchTask]:
    chunks = [task.firsts[i::workers] for i in range(workers)]
    return [
        _SearchTask(task.p, task.d, task.pow_m, task.pow_n, task.x_flat, task.y_flat,
                    task.allowed, task.values, chunk)
        for chunk in chunks if chunk
    ]


def gsdp_solve_bruteforce(
    inst: GsdpInstance,
    *,
    cap: Optional[int] = None,
    workers: Optional[int] = None,
    order: str = "lex",
    require_solution: bool = False,
) -> GsdpSolutionSet:
    """
    Testa todo elemento do subgrupo e devolve todas as soluções, em ordem
    lexicográfica. Com workers > 1 o espaço é particionado pelo primeiro λ.
    """
    _check_order(order)
    total = _check_cap(inst.mod, inst.d, cap)
    workers = config.ORACLE_WORKERS if workers is None else workers
    if workers < 1:
        raise ConfigError(f"workers deve ser >= 1 (recebido {workers})")

    t0 = time.perf_counter()
    task = _build_task(inst, order)
    if workers == 1:
        found, tested = _search_partition(task)
    else:
        found, tested = [], 0
        with ProcessPoolExecutor(max_workers=workers) as executor:
            for part_found, part_tested in executor.map(_search_partition, _split(task, workers)):
                found.extend(part_found)
                tested += part_tested
    elapsed_ms = (time.perf_counter() - t0) * 1000.0

    if tested != total:
        log.warning("⚠️ contagem de candidatos divergente: %d testados, %d esperados", tested, total)

    solutions: List[DiagonalSpec] = []
    for lam in sorted(found):
        if inst.is_solution(lam):
            solutions.append(DiagonalSpec(lam, inst.mod))
        else:
            log.error("❌ candidato %s passou no filtro mas falhou na conferência matricial", lam)

    log.info("🔎 Força bruta p=%d d=%d: %d solução(ões) em %d candidatos (%.1f ms, workers=%d)",
             inst.mod.p, inst.d, len(solutions), tested, elapsed_ms, workers)
    if require_solution and not solutions:
        raise NoSolution(f"nenhuma solução entre {tested} candidatos")
    return GsdpSolutionSet(solutions, tested, elapsed_ms)


# ---------------------------------------------------------------------
# Ataque: recuperar uma chave equivalente a partir da chave pública
# ---------------------------------------------------------------------
def attack_recover_key(
    params: ParamSet,
    victim_pub: PublicKey,
    cap: Optional[int] = None,
    *,
    workers: Optional[int] = None,
) -> GsdpSolutionSet:
    """Resolve G_A = z^m · G · z^n sobre o subgrupo; toda solução serve para se passar pela vítima."""
    require_fingerprint(params, victim_pub)
    inst = GsdpInstance.from_params(params, params.G, victim_pub.g_x)
    result = gsdp_solve_bruteforce(inst, cap=cap, workers=workers)
    log.info("🗝️ '%s': %d chave(s) equivalente(s) recuperada(s)", victim_pub.owner_id, len(result.solutions))
    return result


def check_recovered_keys(
    params: ParamSet,
    result: GsdpSolutionSet,
    victim_pub: PublicKey,
    verifier_priv: PrivateKey,
    verifier_pub: PublicKey,
    rounds: int,
    rng: RandomSource,
) -> List[Dict[str, Any]]:
    """Roda uma sessão completa com cada chave recuperada contra um verificador honesto."""
    report = []
    for spec in result.solutions:
        forged = PrivateKey.from_lambdas(params, victim_pub.owner_id, spec)
        verdict = session_run(forged, victim_pub, verifier_priv, verifier_pub, params,
                              SessionConfig(rounds=rounds), rng)
        report.append({
            "lambdas": list(spec.lambdas),
            "accepted": verdict.accepted,
            "rounds_passed": verdict.rounds_passed,
        })
    return report
