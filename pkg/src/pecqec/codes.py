"""Repetition and rotated surface codes in a bitmask Pauli representation.

Pauli strings are stored as a pair of Python-int bitsets (X support, Z
support); qubit ``i`` is bit ``i``.  Phases are not tracked.
"""

from __future__ import annotations

import hashlib
import itertools
from dataclasses import dataclass
from typing import Iterator

import numpy as np


class SyndromeError(ValueError):
    """Raised when a residual that should be in the code space is not."""


@dataclass(frozen=True)
class PauliString:
    n: int
    x_mask: int = 0
    z_mask: int = 0

    def __post_init__(self):
        limit = 1 << self.n
        if not (0 <= self.x_mask < limit and 0 <= self.z_mask < limit):
            raise ValueError(f"masks exceed {self.n} qubits")

    @classmethod
    def identity(cls, n: int) -> PauliString:
        return cls(n)

    @classmethod
    def from_support(cls, n: int, support, letter: str = "X") -> PauliString:
        mask = 0
        for q in support:
            mask |= 1 << q
        x = mask if letter in ("X", "Y") else 0
        z = mask if letter in ("Z", "Y") else 0
        return cls(n, x, z)

    @classmethod
    def from_letters(cls, letters: str) -> PauliString:
        """Build from a string like ``"XIZY"`` (qubit 0 first)."""
        x = z = 0
        for q, ch in enumerate(letters.upper()):
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
            if ch not in "IXYZ":
                raise ValueError(f"bad Pauli letter {ch!r}")
        return cls(len(letters), x, z)

    @property
    def weight(self) -> int:
        return (self.x_mask | self.z_mask).bit_count()

    def compose(self, other: PauliString) -> PauliString:
        if other.n != self.n:
            raise ValueError(f"size mismatch: {self.n} vs {other.n}")
        return PauliString(self.n, self.x_mask ^ other.x_mask, self.z_mask ^ other.z_mask)

    __mul__ = compose

    def commutes_with(self, other: PauliString) -> bool:
        if other.n != self.n:
            raise ValueError(f"size mismatch: {self.n} vs {other.n}")
        overlap = (self.x_mask & other.z_mask) ^ (self.z_mask & other.x_mask)
        return overlap.bit_count() % 2 == 0

    def is_identity(self) -> bool:
        return self.x_mask == 0 and self.z_mask == 0

    def x_array(self) -> np.ndarray:
        return mask_to_array(self.x_mask, self.n)

    def __str__(self) -> str:
        out = []
        for q in range(self.n):
            x, z = (self.x_mask >> q) & 1, (self.z_mask >> q) & 1
            out.append("IXZY"[x + 2 * z])
        return "".join(out)


def mask_to_array(mask: int, n: int) -> np.ndarray:
    return np.array([(mask >> q) & 1 for q in range(n)], dtype=np.uint8)


def array_to_mask(bits) -> int:
    mask = 0
    for q, b in enumerate(bits):
        if b:
            mask |= 1 << q
    return mask


@dataclass(frozen=True)
class CodeSpec:
    kind: str
    d: int
    n: int
    stabilizers: tuple[PauliString, ...]
    stabilizer_types: tuple[str, ...]
    logical_z: PauliString
    logical_x: PauliString

    @property
    def omega(self) -> int:
        return (self.d + 1) // 2

    @property
    def z_check_indices(self) -> tuple[int, ...]:
        """Indices of the Z-type stabilizers, i.e. the ones that detect X errors."""
        return tuple(i for i, t in enumerate(self.stabilizer_types) if t == "Z")

    @property
    def z_check_matrix(self) -> np.ndarray:
        rows = [self.stabilizers[i].z_mask for i in self.z_check_indices]
        return np.array([mask_to_array(m, self.n) for m in rows], dtype=np.uint8)

    @property
    def logical_z_array(self) -> np.ndarray:
        return mask_to_array(self.logical_z.z_mask, self.n)

    @property
    def layout_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.kind}:{self.d}:{self.n}".encode())
        for s, t in zip(self.stabilizers, self.stabilizer_types):
            h.update(f"|{t}:{s.x_mask:x}:{s.z_mask:x}".encode())
        h.update(f"|LZ:{self.logical_z.z_mask:x}|LX:{self.logical_x.x_mask:x}".encode())
        return h.hexdigest()[:16]

    def check_invariants(self) -> None:
        stabs = self.stabilizers
        for a, b in itertools.combinations(stabs, 2):
            if not a.commutes_with(b):
                raise ValueError("stabilizers do not commute")
        for s in stabs:
            if not (s.commutes_with(self.logical_z) and s.commutes_with(self.logical_x)):
                raise ValueError("logical operator does not commute with a stabilizer")
        if self.logical_z.commutes_with(self.logical_x):
            raise ValueError("logical Z and X must anticommute")


def _check_distance(d: int) -> None:
    if not isinstance(d, (int, np.integer)) or d < 3 or d % 2 == 0:
        raise ValueError(f"distance must be an odd integer >= 3, got {d!r}")


def build_repetition_code(d: int) -> CodeSpec:
    _check_distance(d)
    n = d
    stabs = tuple(PauliString.from_support(n, (i, i + 1), "Z") for i in range(n - 1))
    code = CodeSpec(
        kind="repetition",
        d=d,
        n=n,
        stabilizers=stabs,
        stabilizer_types=("Z",) * len(stabs),
        logical_z=PauliString.from_support(n, range(n), "Z"),
        logical_x=PauliString.from_support(n, range(n), "X"),
    )
    code.check_invariants()
    return code


def build_rotated_surface_code(d: int) -> CodeSpec:
    """Rotated surface code on a d x d grid, qubit (r, c) -> r * d + c.

    Plaquette (i, j), 0 <= i, j <= d, touches qubits (i-1, j-1), (i-1, j),
    (i, j-1), (i, j).  Bulk plaquettes are Z-type when i + j is even.  Weight-2
    Z checks sit on the top/bottom edges and weight-2 X checks on the
    left/right edges, so Z on column 0 and X on row 0 are valid logicals.
    """
    _check_distance(d)
    n = d * d

    def support(i, j):
        return [
            r * d + c
            for r, c in ((i - 1, j - 1), (i - 1, j), (i, j - 1), (i, j))
            if 0 <= r < d and 0 <= c < d
        ]

    z_stabs, x_stabs = [], []
    for i in range(d + 1):
        for j in range(d + 1):
            bulk = 1 <= i <= d - 1 and 1 <= j <= d - 1
            even = (i + j) % 2 == 0
            if bulk:
                (z_stabs if even else x_stabs).append(support(i, j))
            elif i in (0, d) and 1 <= j <= d - 1 and even:
                z_stabs.append(support(i, j))
            elif j in (0, d) and 1 <= i <= d - 1 and not even:
                x_stabs.append(support(i, j))

    stabs = tuple(PauliString.from_support(n, s, "Z") for s in z_stabs) + tuple(
        PauliString.from_support(n, s, "X") for s in x_stabs
    )
    code = CodeSpec(
        kind="rotated_surface",
        d=d,
        n=n,
        stabilizers=stabs,
        stabilizer_types=("Z",) * len(z_stabs) + ("X",) * len(x_stabs),
        logical_z=PauliString.from_support(n, [r * d for r in range(d)], "Z"),
        logical_x=PauliString.from_support(n, range(d), "X"),
    )
    code.check_invariants()
    return code


def build_code(kind: str, d: int) -> CodeSpec:
    if kind in ("repetition", "rep"):
        return build_repetition_code(d)
    if kind in ("rotated_surface", "surface"):
        return build_rotated_surface_code(d)
    raise ValueError(f"unknown code kind {kind!r}")


def syndrome(code: CodeSpec, error: PauliString) -> tuple[int, ...]:
    if error.n != code.n:
        raise ValueError(f"error acts on {error.n} qubits, code has {code.n}")
    return tuple(0 if s.commutes_with(error) else 1 for s in code.stabilizers)


def x_syndrome(code: CodeSpec, error: PauliString) -> tuple[int, ...]:
    """Syndrome restricted to the Z-type checks (the decoded sector)."""
    full = syndrome(code, error)
    return tuple(full[i] for i in code.z_check_indices)


def is_logical_failure(code: CodeSpec, residual: PauliString) -> bool:
    """True iff the residual flips |0_L> to |1_L>, i.e. anticommutes with logical Z."""
    if any(x_syndrome(code, residual)):
        raise SyndromeError("residual has a non-trivial syndrome in the decoded sector")
    return not residual.commutes_with(code.logical_z)


def enumerate_supports(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """All k-subsets of range(n) in lexicographic order."""
    if not 0 <= k <= n:
        raise ValueError(f"k={k} out of range for n={n}")
    return itertools.combinations(range(n), k)


def support_chunks(n: int, k: int, chunk: int = 1 << 16) -> Iterator[np.ndarray]:
    """Same stream as :func:`enumerate_supports`, as (chunk, k) index arrays."""
    it = enumerate_supports(n, k)
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.intp).reshape(len(block), k)
