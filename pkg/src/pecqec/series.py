"""Polynomials in p with exact rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence


class SeriesPoly:
    """Dense polynomial sum_i c_i p^i over the rationals.

    Trailing zeros are stripped, so ``degree`` of the zero polynomial is -1.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable = ()):
        cs = [Fraction(c) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs: tuple[Fraction, ...] = tuple(cs)

    @classmethod
    def constant(cls, c) -> SeriesPoly:
        return cls([c])

    @classmethod
    def p(cls) -> SeriesPoly:
        return cls([0, 1])

    @classmethod
    def binomial_term(cls, k: int, n: int, scale=1) -> SeriesPoly:
        """(scale * p)^k (1 - scale * p)^(n - k)."""
        s = Fraction(scale)
        return cls([0, s]) ** k * cls([1, -s]) ** (n - k)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __getitem__(self, k: int) -> Fraction:
        if k < 0:
            raise IndexError(k)
        return self.coeffs[k] if k < len(self.coeffs) else Fraction(0)

    coefficient = __getitem__

    @staticmethod
    def _lift(other) -> SeriesPoly:
        return other if isinstance(other, SeriesPoly) else SeriesPoly([other])

    def __add__(self, other) -> SeriesPoly:
        other = self._lift(other)
        n = max(len(self.coeffs), len(other.coeffs))
        return SeriesPoly(self[i] + other[i] for i in range(n))

    __radd__ = __add__

    def __neg__(self) -> SeriesPoly:
        return SeriesPoly(-c for c in self.coeffs)

    def __sub__(self, other) -> SeriesPoly:
        return self + (-self._lift(other))

    def __rsub__(self, other) -> SeriesPoly:
        return self._lift(other) - self

    def __mul__(self, other) -> SeriesPoly:
        other = self._lift(other)
        if not self.coeffs or not other.coeffs:
            return SeriesPoly()
        out = [Fraction(0)] * (len(self.coeffs) + len(other.coeffs) - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(other.coeffs):
                    out[i + j] += a * b
        return SeriesPoly(out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> SeriesPoly:
        if k < 0:
            raise ValueError("negative powers are not polynomials")
        result, base = SeriesPoly([1]), self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = SeriesPoly([other])
        return isinstance(other, SeriesPoly) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def truncate(self, order: int) -> SeriesPoly:
        """Drop every term of degree > order."""
        return SeriesPoly(self.coeffs[: order + 1])

    def __call__(self, p):
        acc = 0 if isinstance(p, (int, Fraction)) else 0.0
        for c in reversed(self.coeffs):
            acc = acc * p + (c if isinstance(p, (int, Fraction)) else float(c))
        return acc

    def series_div(self, denom: SeriesPoly, order: int) -> SeriesPoly:
        """Taylor coefficients of self / denom up to p^order (needs denom(0) != 0)."""
        if denom[0] == 0:
            raise ZeroDivisionError("denominator vanishes at p = 0")
        q: list[Fraction] = []
        for k in range(order + 1):
            acc = self[k] - sum(q[j] * denom[k - j] for j in range(max(0, k - denom.degree), k))
            q.append(acc / denom[0])
        return SeriesPoly(q)

    def lowest_order(self) -> int:
        for i, c in enumerate(self.coeffs):
            if c:
                return i
        return -1

    def __repr__(self) -> str:
        if not self.coeffs:
            return "SeriesPoly(0)"
        terms = [f"{c}*p^{i}" for i, c in enumerate(self.coeffs) if c]
        return "SeriesPoly(" + " + ".join(terms) + ")"


def binomial_sum(counts: Sequence, n: int, scale=1) -> SeriesPoly:
    """sum_j counts[j] (scale p)^j (1 - scale p)^(n - j)."""
    out = SeriesPoly()
    for j, c in enumerate(counts):
        if c:
            out = out + SeriesPoly.binomial_term(j, n, scale) * Fraction(c)
    return out
