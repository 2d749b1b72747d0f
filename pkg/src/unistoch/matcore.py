"""Core matrix types, validation, rephasing and unitarity triangles.

Every other module builds on the value types defined here.  The types are
frozen dataclasses wrapping read-only numpy arrays, so they can be shared
freely between threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from pathlib import Path

import numpy as np

ATOL = 1e-10


class UnistochError(ValueError):
    """Base class for all input/validation errors raised by the package."""


class NotSquare(UnistochError):
    pass


class NegativeEntry(UnistochError):
    pass


class RowSumError(UnistochError):
    pass


class ColSumError(UnistochError):
    pass


class NotUnitary(UnistochError):
    pass


class DegenerateInput(UnistochError):
    pass


class DimensionMismatch(UnistochError):
    pass


class ParseError(UnistochError):
    pass


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _square(a, min_n=2):
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSquare(f"expected a square matrix, got shape {a.shape}")
    if a.shape[0] < min_n:
        raise NotSquare(f"dimension must be at least {min_n}")
    return a


@dataclass(frozen=True, eq=False)
class BistochasticMatrix:
    """Nonnegative square matrix with unit row and column sums."""

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _frozen(_square(self.entries), float))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class UnitaryMatrix:
    """Square complex matrix with orthonormal columns.

    Construction checks ``max|U^dagger U - I| <= atol``.
    """

    entries: np.ndarray
    atol: float = ATOL

    def __post_init__(self):
        u = _frozen(_square(self.entries, min_n=1), complex)
        object.__setattr__(self, "entries", u)
        d = unitarity_defect(u)
        if not d <= self.atol:
            raise NotUnitary(f"unitarity defect {d:.3e} exceeds atol {self.atol:.1e}")

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)


@dataclass(frozen=True, eq=False)
class DephasedUnitary:
    """Unitary whose first row and first column are real and nonnegative."""

    inner: UnitaryMatrix

    def __post_init__(self):
        u = self.inner.entries
        edge = np.concatenate([u[0], u[1:, 0]])
        tol = max(self.inner.atol, ATOL)
        if np.abs(edge.imag).max() > tol or edge.real.min() < -tol:
            raise UnistochError("first row/column of a dephased unitary must be real nonnegative")

    @property
    def n(self) -> int:
        return self.inner.n

    @property
    def entries(self) -> np.ndarray:
        return self.inner.entries

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(self.inner.entries)

    @property
    def phases(self) -> np.ndarray:
        return np.angle(self.inner.entries)


@dataclass(frozen=True)
class TriangleAreas:
    """Areas of the six unitarity triangles of a 3x3 unitary.

    ``labels[k]`` says which pair produced ``areas[k]``: ``("col", j, k)`` or
    ``("row", i, k)``.
    """

    areas: tuple[float, ...]
    labels: tuple[tuple[str, int, int], ...]

    def __post_init__(self):
        if len(self.areas) != 6 or any(a < 0 for a in self.areas):
            raise ValueError("need exactly six nonnegative areas")

    @property
    def spread(self) -> float:
        return max(self.areas) - min(self.areas)


def unitarity_defect(u) -> float:
    u = np.asarray(u)
    return float(np.abs(u.conj().T @ u - np.eye(u.shape[0])).max())


def validate_bistochastic(entries, atol: float = ATOL) -> BistochasticMatrix:
    """Check the three bistochastic conditions and clamp entries to [0, 1].

    Raises NotSquare, NegativeEntry, RowSumError or ColSumError.
    """
    if not atol > 0:
        raise ValueError("atol must be positive")
    b = _square(np.asarray(entries, dtype=float))
    if not np.all(np.isfinite(b)):
        raise NegativeEntry("matrix has non-finite entries")
    if b.min() < -atol:
        i, j = np.unravel_index(np.argmin(b), b.shape)
        raise NegativeEntry(f"entry ({i},{j}) = {b[i, j]:.3e} is negative")
    rows = b.sum(axis=1)
    if np.abs(rows - 1).max() > atol:
        i = int(np.argmax(np.abs(rows - 1)))
        raise RowSumError(f"row {i} sums to {rows[i]!r}")
    cols = b.sum(axis=0)
    if np.abs(cols - 1).max() > atol:
        j = int(np.argmax(np.abs(cols - 1)))
        raise ColSumError(f"column {j} sums to {cols[j]!r}")
    return BistochasticMatrix(np.clip(b, 0.0, 1.0))


def squared_moduli(u: UnitaryMatrix) -> BistochasticMatrix:
    """The bistochastic matrix ``B_ij = |U_ij|^2`` of a unitary."""
    u = np.asarray(u, dtype=complex)
    b = u.real**2 + u.imag**2
    atol = max(ATOL, 4 * unitarity_defect(u))
    return validate_bistochastic(b, atol=atol)


def _unit_phase(z: complex) -> complex:
    return z / abs(z)


def dephase(u: UnitaryMatrix, atol: float = ATOL) -> DephasedUnitary:
    """Rephase ``u`` to ``D1 u D2`` with first row and column real nonnegative.

    Entries with modulus below ``atol`` are treated as zero and never fix a
    phase.  Phases left free by zeros are propagated through the remaining
    nonzero pattern, and an isolated block gets row phase 1, so e.g.
    ``diag(i, i)`` dephases to the identity.
    """
    if not isinstance(u, UnitaryMatrix):
        u = UnitaryMatrix(u)
    a = u.entries
    n = a.shape[0]
    nonzero = np.abs(a) > atol
    row = [None] * n
    col = [None] * n

    row[0] = 1.0 + 0j
    for j in range(n):
        if nonzero[0, j]:
            col[j] = np.conj(_unit_phase(a[0, j]))
    if col[0] is None:
        col[0] = 1.0 + 0j
    for i in range(1, n):
        if nonzero[i, 0]:
            row[i] = np.conj(_unit_phase(a[i, 0] * col[0]))

    # remaining phases: breadth-first over the nonzero pattern, lowest index first
    while any(r is None for r in row) or any(c is None for c in col):
        progressed = False
        for i in range(n):
            if row[i] is None:
                for j in range(n):
                    if col[j] is not None and nonzero[i, j]:
                        row[i] = np.conj(_unit_phase(a[i, j] * col[j]))
                        progressed = True
                        break
        for j in range(n):
            if col[j] is None:
                for i in range(n):
                    if row[i] is not None and nonzero[i, j]:
                        col[j] = np.conj(_unit_phase(a[i, j] * row[i]))
                        progressed = True
                        break
        if not progressed:
            if any(r is None for r in row):
                row[row.index(None)] = 1.0 + 0j
            else:
                col[col.index(None)] = 1.0 + 0j

    out = np.asarray(row)[:, None] * a * np.asarray(col)[None, :]
    out[0] = out[0].real
    out[1:, 0] = out[1:, 0].real
    return DephasedUnitary(UnitaryMatrix(out, atol=max(u.atol, ATOL)))


def _kahan_area(a: float, b: float, c: float, atol: float) -> float:
    # numerically stable Heron's formula (sides sorted descending)
    a, b, c = sorted((a, b, c), reverse=True)
    p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
    if p < -atol:
        raise DegenerateInput(
            f"sides ({a:.6g}, {b:.6g}, {c:.6g}) violate the triangle inequality"
        )
    return 0.25 * float(np.sqrt(max(p, 0.0)))


def unitarity_triangle_areas(u: UnitaryMatrix, atol: float = ATOL) -> TriangleAreas:
    """Heron areas of the six unitarity triangles of a 3x3 unitary.

    Sides for the column pair (j, k) are ``|U_ij||U_ik|`` for i = 0, 1, 2;
    row pairs are handled on the transpose.
    """
    m = np.abs(np.asarray(u))
    if m.shape != (3, 3):
        raise DimensionMismatch("unitarity triangles need a 3x3 unitary")
    areas, labels = [], []
    for kind, mat in (("col", m), ("row", m.T)):
        for j, k in combinations(range(3), 2):
            sides = mat[:, j] * mat[:, k]
            areas.append(_kahan_area(*sides, atol=atol))
            labels.append((kind, j, k))
    return TriangleAreas(tuple(areas), tuple(labels))


# -- JSON matrix format ------------------------------------------------------


def complex_to_pairs(a) -> list:
    a = np.asarray(a, dtype=complex)
    if a.ndim == 0:
        return [float(a.real), float(a.imag)]
    return [complex_to_pairs(x) for x in a]


def pairs_to_complex(obj) -> np.ndarray:
    a = np.asarray(obj, dtype=float)
    if a.shape[-1:] != (2,):
        raise ParseError("complex values must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def matrix_to_dict(m) -> dict:
    if isinstance(m, DephasedUnitary):
        m = m.inner
    if isinstance(m, BistochasticMatrix):
        return {"n": m.n, "kind": "bistochastic", "entries": m.entries.tolist()}
    if isinstance(m, UnitaryMatrix):
        return {"n": m.n, "kind": "unitary", "entries": complex_to_pairs(m.entries)}
    raise TypeError(f"cannot serialize {type(m).__name__}")


def matrix_from_dict(d: dict, atol: float = ATOL):
    """Inverse of :func:`matrix_to_dict`.  Raises ParseError on shape problems."""
    try:
        n, kind, entries = int(d["n"]), d["kind"], d["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed matrix object: {exc}") from None
    try:
        if kind == "bistochastic":
            a = np.asarray(entries, dtype=float)
        elif kind == "unitary":
            a = pairs_to_complex(entries)
        else:
            raise ParseError(f"unknown matrix kind {kind!r}")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"bad entries: {exc}") from None
    if a.shape != (n, n):
        raise ParseError(f"entries have shape {a.shape}, expected ({n}, {n})")
    if kind == "bistochastic":
        return validate_bistochastic(a, atol=atol)
    return UnitaryMatrix(a, atol=atol)


def dumps_matrix(m) -> str:
    return json.dumps(matrix_to_dict(m))


def load_matrix(path, atol: float = ATOL):
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise ParseError("top-level JSON value must be an object")
    return matrix_from_dict(d, atol=atol)
