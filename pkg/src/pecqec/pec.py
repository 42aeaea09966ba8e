"""Approximate inverse channel that cancels every weight-omega error.

The channel is ``(P0 * I - P_w * sum_{|S|=w} G_S) / A`` with
``A = P0 - C(N, w) * P_w``.  It has two sampling outcomes: the identity
branch and the "superbranch" (a uniformly random weight-omega insertion).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codes import CodeSpec, PauliString
from .noise import BIT_FLIP, NoiseSpec, letters_to_xz, random_letters, weight_probability


class PoleError(ValueError):
    """Physical error rate at or beyond the pole of the inverse channel."""


def pole(n: int, omega: int) -> float:
    """Error rate at which the normalisation A vanishes: 1 / (1 + C(N, w)^(1/w))."""
    if not (isinstance(n, (int, np.integer)) and isinstance(omega, (int, np.integer))):
        raise TypeError("n and omega must be integers")
    if not 1 <= omega <= n:
        raise ValueError(f"need 1 <= omega <= n, got n={n}, omega={omega}")
    return 1.0 / (1.0 + math.comb(n, omega) ** (1.0 / omega))


@dataclass(frozen=True)
class InverseChannelSpec:
    n: int
    omega: int
    noise_kind: str
    p: float
    p0: float
    p_omega: float
    n_supports: int

    @property
    def A(self) -> float:
        return self.p0 - self.n_supports * self.p_omega

    @property
    def identity_weight(self) -> float:
        return self.p0 / self.A

    @property
    def superbranch_total_weight(self) -> float:
        return -self.n_supports * self.p_omega / self.A

    @property
    def l1_norm(self) -> float:
        return (self.p0 + self.n_supports * self.p_omega) / abs(self.A)

    @property
    def pole(self) -> float:
        return pole(self.n, self.omega)

    @property
    def n_branches(self) -> int:
        """Number of non-identity branches (supports times letter choices)."""
        letters = 1 if self.noise_kind == BIT_FLIP else 3
        return self.n_supports * letters**self.omega

    @property
    def superbranch_probability(self) -> float:
        return abs(self.superbranch_total_weight) / self.l1_norm


def build_inverse_channel(code: CodeSpec, noise: NoiseSpec) -> InverseChannelSpec:
    n, omega = code.n, code.omega
    if noise.n != n:
        raise ValueError(f"noise acts on {noise.n} qubits, code has {n}")
    p_pole = pole(n, omega)
    if noise.p >= p_pole:
        raise PoleError(f"p={noise.p} is not below the pole p_pole={p_pole:.6g} (N={n}, omega={omega})")
    spec = InverseChannelSpec(
        n=n,
        omega=omega,
        noise_kind=noise.kind,
        p=noise.p,
        p0=weight_probability(noise, 0),
        p_omega=weight_probability(noise, omega),
        n_supports=math.comb(n, omega),
    )
    if spec.A <= 0:
        raise PoleError(f"normalisation A={spec.A} is not positive at p={noise.p}")
    return spec


def sampling_overhead(spec: InverseChannelSpec) -> float:
    return spec.l1_norm**2


def combination_factor(spec: InverseChannelSpec) -> float:
    """G with P_PEC = (1 + G) P_I - G P_S."""
    return spec.n_supports * spec.p_omega / spec.A


def sample_branch(spec: InverseChannelSpec, rng: np.random.Generator) -> tuple[int, PauliString]:
    """Draw (sign, inserted Pauli) from the quasi-probability decomposition."""
    if rng.random() >= spec.superbranch_probability:
        return +1, PauliString.identity(spec.n)
    support = rng.choice(spec.n, size=spec.omega, replace=False)
    letters = random_letters(spec.noise_kind, spec.omega, rng)
    x, z = letters_to_xz(letters)
    xm = sum(1 << int(q) for q, b in zip(support, x) if b)
    zm = sum(1 << int(q) for q, b in zip(support, z) if b)
    return -1, PauliString(spec.n, xm, zm)
