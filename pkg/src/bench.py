# src/bench.py
from __future__ import annotations

import logging
import timeit
from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

from . import config
from .field_core import validate_modulus
from .matrix_core import mat_inv, mat_mul, mat_pow, sample_invertible
from .randomness import RandomSource

log = logging.getLogger(__name__)

DEFAULT_DIMS = (8, 16)
DEFAULT_EXPONENTS = (2, 256, 65536)


@dataclass(frozen=True)
class BenchResult:
    op: str
    d: int
    exponent: Optional[int]
    repeat: int
    best_ms: float


def _best_ms(fn, number: int, repeat: int) -> float:
    runs = timeit.repeat(fn, number=number, repeat=repeat)
    return min(runs) / number * 1000.0


def run_bench(
    dims: Sequence[int] = DEFAULT_DIMS,
    exponents: Sequence[int] = DEFAULT_EXPONENTS,
    *,
    p: int = config.DEFAULT_PRIME,
    repeat: int = 5,
    number: int = 20,
    rng: Optional[RandomSource] = None,
) -> List[BenchResult]:
    """Tempo (melhor de `repeat`) de mat_mul, mat_inv e mat_pow com expoentes até 65536."""
    rng = rng or RandomSource()
    mod = validate_modulus(p)
    results: List[BenchResult] = []
    for d in dims:
        a = sample_invertible(mod, d, rng)
        b = sample_invertible(mod, d, rng)
        results.append(BenchResult("mat_mul", d, None, repeat, _best_ms(lambda: mat_mul(a, b), number, repeat)))
        results.append(BenchResult("mat_inv", d, None, repeat, _best_ms(lambda: mat_inv(a), number, repeat)))
        for e in exponents:
            ms = _best_ms(lambda: mat_pow(a, e), max(1, number // 4), repeat)
            results.append(BenchResult("mat_pow", d, e, repeat, ms))
            ms = _best_ms(lambda: mat_pow(a, -e), max(1, number // 4), repeat)
            results.append(BenchResult("mat_pow", d, -e, repeat, ms))
    for r in results:
        log.info("⏱️ %-7s d=%-2d e=%-6s %.4f ms", r.op, r.d, "" if r.exponent is None else r.exponent, r.best_ms)
    return results


def bench_to_json(results: Sequence[BenchResult], p: int) -> Dict[str, object]:
    return {"p": p, "results": [asdict(r) for r in results]}
