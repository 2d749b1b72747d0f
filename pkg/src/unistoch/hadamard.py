"""Complex Hadamard matrices: Fourier, the 4x4 family, Sylvester and Gauss circulants.

All constructors return unitaries, i.e. entries of modulus ``1/sqrt(n)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .matcore import ATOL, DimensionMismatch, UnistochError, UnitaryMatrix


class EvenLength(UnistochError):
    pass


class NotBiunimodular(UnistochError):
    pass


class TooLarge(UnistochError):
    pass


def dft(x) -> np.ndarray:
    """Unnormalized transform ``xhat_j = sum_k x_k q^(jk)`` with ``q = exp(2 pi i / n)``."""
    x = np.asarray(x, dtype=complex)
    return np.fft.ifft(x) * len(x)


@dataclass(frozen=True, eq=False)
class BiunimodularSequence:
    values: np.ndarray
    atol: float = ATOL

    def __post_init__(self):
        v = np.array(self.values, dtype=complex)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        n = len(v)
        if np.abs(np.abs(v) - 1).max() > self.atol:
            raise NotBiunimodular("sequence entries are not unimodular")
        if np.abs(np.abs(dft(v)) - np.sqrt(n)).max() > self.atol * n:
            raise NotBiunimodular("transform of the sequence does not have constant modulus sqrt(n)")

    @property
    def n(self) -> int:
        return len(self.values)


def fourier(n: int) -> UnitaryMatrix:
    """``U_jk = q^(jk) / sqrt(n)``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    jk = np.outer(np.arange(n), np.arange(n)) % n
    return UnitaryMatrix(np.exp(2j * np.pi * jk / n) / np.sqrt(n), atol=1e-12)


def is_complex_hadamard(u: UnitaryMatrix, atol: float = ATOL) -> bool:
    u = np.asarray(u)
    n = u.shape[0]
    return bool(np.abs(np.abs(u) ** 2 - 1.0 / n).max() <= atol)


def hadamard_family_n4(phi: float) -> UnitaryMatrix:
    """The one-parameter family of 4x4 complex Hadamard matrices."""
    e = np.exp(1j * phi)
    h = np.array(
        [
            [1, 1, 1, 1],
            [1, e, -1, -e],
            [1, -1, 1, -1],
            [1, -e, -1, e],
        ],
        dtype=complex,
    )
    return UnitaryMatrix(h / 2, atol=1e-12)


def sylvester(k: int) -> UnitaryMatrix:
    """Real Hadamard matrix of order ``2**k`` by repeated doubling."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    h = np.ones((1, 1))
    for _ in range(k):
        h = np.block([[h, h], [h, -h]]) / np.sqrt(2)
    return UnitaryMatrix(h, atol=1e-12)


def gauss_sequence(n: int) -> BiunimodularSequence:
    """``q^(k^2)`` for odd n."""
    if n % 2 == 0:
        raise EvenLength("Gauss sequences need odd length")
    if n < 3:
        raise ValueError("n must be at least 3")
    k = np.arange(n)
    return BiunimodularSequence(np.exp(2j * np.pi * ((k * k) % n) / n))


def circulant_hadamard(seq) -> UnitaryMatrix:
    """Circulant ``C_jk = seq[(k - j) mod n] / sqrt(n)``."""
    if not isinstance(seq, BiunimodularSequence):
        seq = BiunimodularSequence(seq)
    n = seq.n
    j, k = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    return UnitaryMatrix(seq.values[(k - j) % n] / np.sqrt(n))


def _dephase_batch(m: np.ndarray) -> np.ndarray:
    # all entries nonzero: divide out the phases of row 0, then of column 0
    m = m / (m[..., :1, :] / np.abs(m[..., :1, :]))
    return m / (m[..., :, :1] / np.abs(m[..., :, :1]))


def equivalent_small(u1: UnitaryMatrix, u2: UnitaryMatrix, atol: float = 1e-9) -> bool:
    """Whether ``u2 = D1 P1 u1 P2 D2`` for permutations P and diagonal unitaries D.

    Brute force over all row and column permutations, comparing dephased
    forms.  Both inputs must be complex Hadamard (no zero entries).
    """
    a, b = np.asarray(u1), np.asarray(u2)
    if a.shape != b.shape:
        raise DimensionMismatch("matrices of different size")
    n = a.shape[0]
    if n > 5:
        raise TooLarge("brute-force equivalence is limited to n <= 5")
    target = _dephase_batch(b)
    cols = np.array(list(permutations(range(n))))
    for rows in permutations(range(n)):
        cand = _dephase_batch(a[list(rows)][:, cols].transpose(1, 0, 2))
        if (np.abs(cand - target).max(axis=(1, 2)) <= atol).any():
            return True
    return False
