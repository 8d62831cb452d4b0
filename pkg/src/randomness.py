# src/randomness.py
from __future__ import annotations

import logging
import random
import secrets
from typing import Optional, Sequence, TypeVar

log = logging.getLogger(__name__)

T = TypeVar("T")


class RandomSource:
    """
    Fonte de aleatoriedade injetada em todas as operações que sorteiam algo.

    - seed=None  → secrets.SystemRandom (CSPRNG do sistema operacional)
    - seed=int   → random.Random(seed), reprodutível bit a bit. Só para testes/demos:
      NÃO é seguro para autenticação real.
    """

    def __init__(self, seed: Optional[int] = None):
        self.seed = seed
        if seed is None:
            self._rng: random.Random = secrets.SystemRandom()
        else:
            log.debug("🎲 RandomSource determinístico (seed=%s), inseguro fora de testes.", seed)
            self._rng = random.Random(seed)

    @property
    def deterministic(self) -> bool:
        return self.seed is not None

    def randbelow(self, n: int) -> int:
        """Inteiro uniforme em [0, n)."""
        return self._rng.randrange(n)

    def randint(self, lo: int, hi: int) -> int:
        """Inteiro uniforme em [lo, hi] (inclusivo)."""
        return self._rng.randint(lo, hi)

    def bit(self) -> int:
        return self._rng.getrandbits(1)

    def sample(self, population: Sequence[T], k: int) -> list[T]:
        return self._rng.sample(population, k)

    def __repr__(self) -> str:
        kind = f"seed={self.seed}" if self.deterministic else "system"
        return f"RandomSource({kind})"
