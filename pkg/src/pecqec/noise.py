"""Code-capacity i.i.d. Pauli noise: weight probabilities and samplers.

Randomness is drawn from counter-based streams keyed by integer tuples
(see :func:`keyed_rng`), so a block of shots is reproducible regardless of
the order or process in which it is generated.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np

from .codes import PauliString

BIT_FLIP = "bit_flip"
DEPOLARIZING = "depolarizing"
NOISE_KINDS = (BIT_FLIP, DEPOLARIZING)

# letter codes used by the batched samplers
LETTER_X, LETTER_Y, LETTER_Z = 1, 2, 3


@dataclass(frozen=True)
class NoiseSpec:
    kind: str
    p: float
    n: int

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {self.kind!r}")
        if not 0.0 <= self.p < 1.0:
            raise ValueError(f"p must lie in [0, 1), got {self.p}")
        if self.n < 1:
            raise ValueError("n must be positive")

    @property
    def letter_count(self) -> int:
        """Number of Pauli letters an error at one site can take."""
        return 1 if self.kind == BIT_FLIP else 3


def stable_key(*parts) -> int:
    """Deterministic 32-bit key for strings/ints (``hash`` is salted per process)."""
    return zlib.crc32(":".join(map(str, parts)).encode())


def keyed_rng(seed: int, *key: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def weight_probability(noise: NoiseSpec, k: int) -> float:
    """Probability p^k (1-p)^(N-k) of one specific weight-k support."""
    n, p = noise.n, noise.p
    if not 0 <= k <= n:
        raise ValueError(f"k={k} out of range for n={n}")
    if p == 0.0:
        return 1.0 if k == 0 else 0.0
    log_pk = k * math.log(p) + (n - k) * math.log1p(-p)
    return math.exp(log_pk)


def _letters(kind: str, shape, rng: np.random.Generator) -> np.ndarray:
    if kind == BIT_FLIP:
        return np.full(shape, LETTER_X, dtype=np.uint8)
    return rng.integers(LETTER_X, LETTER_Z + 1, size=shape, dtype=np.uint8)


def letters_to_xz(letters: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = ((letters == LETTER_X) | (letters == LETTER_Y)).astype(np.uint8)
    z = ((letters == LETTER_Y) | (letters == LETTER_Z)).astype(np.uint8)
    return x, z


def _to_pauli(x_bits, z_bits) -> PauliString:
    n = len(x_bits)
    x = sum(1 << q for q in range(n) if x_bits[q])
    z = sum(1 << q for q in range(n) if z_bits[q])
    return PauliString(n, x, z)


def sample_error(noise: NoiseSpec, rng: np.random.Generator) -> PauliString:
    x, z = sample_errors(noise, 1, rng)
    return _to_pauli(x[0], z[0])


def sample_error_in_stratum(noise: NoiseSpec, k: int, rng: np.random.Generator) -> PauliString:
    if not 0 <= k <= noise.n:
        raise ValueError(f"k={k} out of range for n={noise.n}")
    x, z = sample_errors_in_stratum(noise.kind, noise.n, k, 1, rng)
    return _to_pauli(x[0], z[0])


def sample_errors(noise: NoiseSpec, shots: int, rng: np.random.Generator):
    """Batch of i.i.d. errors as (x, z) uint8 arrays of shape (shots, n)."""
    hit = rng.random((shots, noise.n)) < noise.p
    letters = _letters(noise.kind, (shots, noise.n), rng) * hit
    return letters_to_xz(letters)


def random_orders(shots: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """One uniformly random permutation of range(n) per row."""
    return np.argsort(rng.random((shots, n)), axis=1)


def scatter(orders: np.ndarray, start: int, stop: int, letters: np.ndarray, n: int) -> np.ndarray:
    """Letter array with ``letters`` placed at positions orders[:, start:stop]."""
    out = np.zeros((orders.shape[0], n), dtype=np.uint8)
    rows = np.arange(orders.shape[0])[:, None]
    out[rows, orders[:, start:stop]] = letters
    return out


def sample_errors_in_stratum(kind: str, n: int, k: int, shots: int, rng: np.random.Generator):
    """Errors with a uniformly random weight-k support and uniform letters."""
    orders = random_orders(shots, n, rng)
    letters = scatter(orders, 0, k, _letters(kind, (shots, k), rng), n)
    return letters_to_xz(letters)


def random_letters(kind: str, shape, rng: np.random.Generator) -> np.ndarray:
    return _letters(kind, shape, rng)

