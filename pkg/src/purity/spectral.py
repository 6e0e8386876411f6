"""Eigenvalue multisets: the fast path for spectra of tensor powers.

A :class:`SpectralMultiset` stores (eigenvalue, multiplicity) pairs with exact
integer multiplicities, so the spectrum of ``rho^(tensor n)`` never requires a
``d^n``-dimensional matrix.  Multiplicities are Python ints and can exceed
2^63 without overflow.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement
from math import factorial

import numpy as np

__all__ = ["SpectralMultiset", "iid_power"]


@dataclass(frozen=True)
class SpectralMultiset:
    """Strictly descending eigenvalues with positive integer multiplicities."""

    entries: tuple[tuple[float, int], ...]

    def __post_init__(self):
        entries = tuple((float(v), int(m)) for v, m in self.entries)
        for v, m in entries:
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"eigenvalue {v!r} outside [0, 1]")
            if m < 0:
                raise ValueError(f"negative multiplicity {m}")
        entries = tuple((v, m) for v, m in entries if m > 0)
        vals = [v for v, _ in entries]
        if any(vals[i] <= vals[i + 1] for i in range(len(vals) - 1)):
            raise ValueError("eigenvalues must be strictly descending")
        if sum(v * m for v, m in entries) > 1.0 + 1e-10:
            raise ValueError("total mass exceeds 1")
        object.__setattr__(self, "entries", entries)

    @classmethod
    def from_values(cls, values) -> "SpectralMultiset":
        """Collect a list of eigenvalues into a multiset (exact float grouping)."""
        acc: dict[float, int] = {}
        for v in values:
            acc[float(v)] = acc.get(float(v), 0) + 1
        return cls(tuple(sorted(acc.items(), key=lambda t: -t[0])))

    @property
    def support_size(self) -> int:
        return sum(m for v, m in self.entries if v > 0.0)

    def total_mass(self) -> float:
        return float(sum(v * m for v, m in self.entries))

    def truncate_tail(self, eps: float) -> "SpectralMultiset":
        """Zero out the smallest eigenvalues whose mass is at most ``eps``.

        Greedy and maximal: after truncation, removing one more copy of the
        smallest retained eigenvalue would push the removed mass past ``eps``.
        """
        if not (0.0 <= eps <= 1.0):
            raise ValueError(f"eps {eps!r} outside [0, 1]")
        slack = 1e-12 * max(1.0, eps)
        budget = float(eps)
        kept = []
        for v, m in reversed(self.entries):  # ascending
            if v == 0.0:
                continue  # zero eigenvalues are removable at no cost
            removable = min(m, int((budget + slack) // v))
            while removable > 0 and removable * v > budget + slack:
                removable -= 1
            budget -= removable * v
            if m - removable > 0:
                kept.append((v, m - removable))
        return SpectralMultiset(tuple(reversed(kept)))


def iid_power(ms: SpectralMultiset, n: int) -> SpectralMultiset:
    """Exact spectrum of the n-fold tensor power of a state with this spectrum.

    Each choice of exponents ``k_i`` summing to ``n`` over the distinct
    eigenvalues contributes the product ``prod v_i^k_i`` with multiplicity
    ``multinomial(n; k) * prod m_i^k_i``.  Products that collide as floats are
    merged.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    vals = [v for v, _ in ms.entries]
    mults = [m for _, m in ms.entries]
    r = len(vals)
    acc: dict[float, int] = {}
    for picks in combinations_with_replacement(range(r), n):
        counts = [0] * r
        for i in picks:
            counts[i] += 1
        weight = factorial(n)
        prod_val = 1.0
        for i, k in enumerate(counts):
            weight //= factorial(k)
            weight *= mults[i] ** k
            prod_val *= vals[i] ** k
        acc[prod_val] = acc.get(prod_val, 0) + weight
    entries = tuple(sorted(acc.items(), key=lambda t: -t[0]))
    return SpectralMultiset(entries)
