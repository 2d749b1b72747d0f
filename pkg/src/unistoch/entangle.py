"""Maximally entangled bases from a Latin square and a complex Hadamard matrix."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hadamard import is_complex_hadamard
from .matcore import ATOL, DimensionMismatch, UnistochError, complex_to_pairs


class NotHadamard(UnistochError):
    pass


@dataclass(frozen=True, eq=False)
class LatinSquare:
    cells: np.ndarray

    def __post_init__(self):
        c = np.array(self.cells, dtype=int)
        n = c.shape[0]
        if c.shape != (n, n):
            raise ValueError("Latin square must be square")
        full = np.arange(n)
        rows_ok = all(np.array_equal(np.sort(r), full) for r in c)
        cols_ok = all(np.array_equal(np.sort(r), full) for r in c.T)
        if not (rows_ok and cols_ok):
            raise ValueError("every row and column must be a permutation of 0..n-1")
        c.setflags(write=False)
        object.__setattr__(self, "cells", c)

    @property
    def n(self) -> int:
        return self.cells.shape[0]


@dataclass(frozen=True, eq=False)
class EntangledBasis:
    """``vectors[a*n + b]`` is the basis vector for Latin row ``a`` and Hadamard row ``b``.

    Components are indexed by the bipartite pair (i, j) flattened to ``i*n + j``.
    """

    n: int
    vectors: np.ndarray

    def to_dict(self) -> dict:
        return {"n": self.n, "kind": "basis", "vectors": complex_to_pairs(self.vectors)}


@dataclass(frozen=True)
class BasisReport:
    gram_deviation: float
    reduced_deviation_a: float
    reduced_deviation_b: float

    @property
    def reduced_deviation(self) -> float:
        return max(self.reduced_deviation_a, self.reduced_deviation_b)

    def accepted(self, atol: float = ATOL) -> bool:
        return self.gram_deviation < atol and self.reduced_deviation < atol


def flat_index(i: int, j: int, n: int) -> int:
    return i * n + j


def split_index(k: int, n: int) -> tuple[int, int]:
    return divmod(k, n)


def cyclic_latin(n: int) -> LatinSquare:
    if n < 2:
        raise ValueError("n must be at least 2")
    a, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return LatinSquare((a + i) % n)


def build_basis(ls: LatinSquare, h, atol: float = ATOL) -> EntangledBasis:
    """Place row ``b`` of ``h`` on the cells ``(i, ls[a, i])`` to get vector (a, b).

    Vectors are unit length, with the global phase chosen so the first
    nonzero component is real positive.
    """
    h = np.asarray(h, dtype=complex)
    n = ls.n
    if h.shape != (n, n):
        raise DimensionMismatch(f"Latin square of order {n} needs an {n}x{n} Hadamard matrix")
    if not is_complex_hadamard(h, atol=atol):
        raise NotHadamard("matrix is not a complex Hadamard matrix")
    vecs = np.zeros((n * n, n * n), dtype=complex)
    i = np.arange(n)
    for a in range(n):
        pos = flat_index(i, ls.cells[a], n)
        for b in range(n):
            v = np.sqrt(n) * h[b]  # unimodular phases
            vecs[a * n + b, pos] = v * np.conj(v[0]) / abs(v[0]) / np.sqrt(n)
    return EntangledBasis(n, vecs)


def reduced_states(vectors: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Partial traces of each pure state over the second and over the first factor."""
    m = np.asarray(vectors).reshape(-1, n, n)
    rho_a = m @ m.conj().transpose(0, 2, 1)
    rho_b = m.transpose(0, 2, 1) @ m.conj()
    return rho_a, rho_b


def verify_basis(basis: EntangledBasis) -> BasisReport:
    v = np.asarray(basis.vectors)
    n = basis.n
    gram = v.conj() @ v.T
    rho_a, rho_b = reduced_states(v, n)
    target = np.eye(n) / n
    return BasisReport(
        gram_deviation=float(np.abs(gram - np.eye(len(v))).max()),
        reduced_deviation_a=float(np.abs(rho_a - target).max()),
        reduced_deviation_b=float(np.abs(rho_b - target).max()),
    )
