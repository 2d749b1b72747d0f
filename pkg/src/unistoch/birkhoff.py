"""Birkhoff polytope: permutation corners, decomposition, edges and sampling."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from typing import Iterator

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .matcore import (
    ATOL,
    BistochasticMatrix,
    DimensionMismatch,
    UnistochError,
    validate_bistochastic,
)


class MatchingFailure(UnistochError):
    pass


class EqualInputs(UnistochError):
    pass


class Unsupported(UnistochError):
    pass


@dataclass(frozen=True)
class PermutationMatrix:
    """Permutation ``perm[i]`` = column holding the 1 in row ``i``."""

    perm: tuple[int, ...]

    def __post_init__(self):
        perm = tuple(int(p) for p in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise ValueError(f"{perm} is not a permutation")
        object.__setattr__(self, "perm", perm)

    @property
    def n(self) -> int:
        return len(self.perm)

    @property
    def matrix(self) -> np.ndarray:
        m = np.zeros((self.n, self.n))
        m[np.arange(self.n), self.perm] = 1.0
        return m

    def compose(self, other: "PermutationMatrix") -> "PermutationMatrix":
        """``self o other``: apply ``other`` first."""
        return PermutationMatrix(tuple(self.perm[j] for j in other.perm))

    def inverse(self) -> "PermutationMatrix":
        inv = [0] * self.n
        for i, p in enumerate(self.perm):
            inv[p] = i
        return PermutationMatrix(tuple(inv))

    def cycles(self) -> list[tuple[int, ...]]:
        """Nontrivial cycles, each starting at its smallest element."""
        seen, out = set(), []
        for start in range(self.n):
            if start in seen:
                continue
            cyc, k = [], start
            while k not in seen:
                seen.add(k)
                cyc.append(k)
                k = self.perm[k]
            if len(cyc) > 1:
                out.append(tuple(cyc))
        return out

    @property
    def is_even(self) -> bool:
        return sum(len(c) - 1 for c in self.cycles()) % 2 == 0


@dataclass(frozen=True)
class BirkhoffDecomposition:
    terms: tuple[tuple[float, PermutationMatrix], ...]

    def reconstruct(self) -> np.ndarray:
        return sum(w * p.matrix for w, p in self.terms)

    @property
    def total_weight(self) -> float:
        return float(sum(w for w, _ in self.terms))


def van_der_waerden(n: int) -> BistochasticMatrix:
    """The center of the polytope: all entries ``1/n``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    return BistochasticMatrix(np.full((n, n), 1.0 / n))


def all_permutations(n: int) -> list[PermutationMatrix]:
    return [PermutationMatrix(p) for p in permutations(range(n))]


@lru_cache(maxsize=None)
def _perm_table(n: int) -> np.ndarray:
    return np.array(list(permutations(range(n))), dtype=np.intp)


def _lex_smallest_matching(support: np.ndarray) -> tuple[int, ...] | None:
    n = support.shape[0]
    if n <= 7:
        perms = _perm_table(n)
        ok = support[np.arange(n), perms].all(axis=1)
        if not ok.any():
            return None
        return tuple(int(x) for x in perms[int(np.argmax(ok))])

    # row by row, keep the smallest column that still admits a perfect matching
    def feasible(mask):
        match = maximum_bipartite_matching(csr_matrix(mask.astype(np.int8)), perm_type="column")
        return bool((match >= 0).all())

    if not feasible(support):
        return None
    mask = support.copy()
    perm = []
    for i in range(n):
        for j in np.flatnonzero(mask[i]):
            trial = mask.copy()
            trial[i, :] = False
            trial[:, j] = False
            trial[i, j] = True
            if feasible(trial):
                mask = trial
                perm.append(int(j))
                break
    return tuple(perm)


def birkhoff_decompose(b: BistochasticMatrix, atol: float = ATOL) -> BirkhoffDecomposition:
    """Greedy Birkhoff-von Neumann decomposition.

    Each step takes the lexicographically smallest permutation supported on
    the positive entries of the residual and subtracts it with the largest
    admissible weight, which zeroes at least one entry.
    """
    r = np.array(b.entries if isinstance(b, BistochasticMatrix) else b, dtype=float)
    n = r.shape[0]
    zero = 1e-14
    terms = []
    rows = np.arange(n)
    while r.max() > zero:
        perm = _lex_smallest_matching(r > zero)
        if perm is None:
            if r.max() <= atol:
                break
            raise MatchingFailure("residual has no perfect matching; input is not bistochastic")
        w = float(r[rows, perm].min())
        r[rows, perm] -= w
        r[r < zero] = 0.0
        terms.append((w, PermutationMatrix(perm)))
        if len(terms) > n * n:
            raise MatchingFailure("decomposition did not terminate")
    return BirkhoffDecomposition(tuple(terms))


def is_extremal_edge(p: PermutationMatrix, q: PermutationMatrix) -> bool:
    """Whether the segment between two corners is an edge of the polytope.

    True iff ``p o q^-1`` consists of exactly one nontrivial cycle.
    """
    if p.n != q.n:
        raise DimensionMismatch("permutations of different size")
    if p == q:
        raise EqualInputs("an edge needs two distinct corners")
    return len(p.compose(q.inverse()).cycles()) == 1


# -- corner census -----------------------------------------------------------


@dataclass(frozen=True)
class CornerCensus:
    n: int
    corners: int
    dimension: int
    groups: tuple[tuple[PermutationMatrix, ...], ...]
    side_squared: tuple[float, ...]
    regular: bool
    plane_inner_max: float | None = None  # n = 3 only


def affine_dimension(points: np.ndarray) -> int:
    pts = np.asarray(points, dtype=float).reshape(len(points), -1)
    return int(np.linalg.matrix_rank(pts[1:] - pts[0], tol=1e-9))


def _sq_dist(p: PermutationMatrix, q: PermutationMatrix) -> float:
    return float(((p.matrix - q.matrix) ** 2).sum())


def corner_census(n: int, tol: float = 1e-9) -> CornerCensus:
    """Count and group the corners of the polytope for n = 3 or n = 4.

    For n = 3 the corners split into even and odd permutations, two
    equilateral triangles in orthogonal 2-planes.  For n = 4 they split into
    the six cosets of the Klein four-group, each a regular tetrahedron.
    """
    if n not in (3, 4):
        raise Unsupported("corner census is implemented for n = 3 and n = 4 only")
    corners = all_permutations(n)
    dim = affine_dimension(np.array([c.matrix for c in corners]))

    if n == 3:
        groups = [tuple(c for c in corners if c.is_even), tuple(c for c in corners if not c.is_even)]
    else:
        klein = [PermutationMatrix(p) for p in [(0, 1, 2, 3), (1, 0, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0)]]
        seen, groups = set(), []
        for c in corners:
            if c.perm in seen:
                continue
            coset = tuple(sorted((c.compose(k) for k in klein), key=lambda x: x.perm))
            seen.update(x.perm for x in coset)
            groups.append(coset)

    sides, regular = [], True
    for g in groups:
        d = [_sq_dist(a, b) for a, b in combinations(g, 2)]
        regular &= max(d) - min(d) <= tol
        sides.append(d[0])
    regular &= max(sides) - min(sides) <= tol

    plane = None
    if n == 3:
        span = [[(g[1].matrix - g[0].matrix).ravel(), (g[2].matrix - g[0].matrix).ravel()] for g in groups]
        plane = max(abs(float(u @ v)) for u in span[0] for v in span[1])
        regular &= plane <= tol
    return CornerCensus(
        n=n,
        corners=len(corners),
        dimension=dim,
        groups=tuple(groups),
        side_squared=tuple(sides),
        regular=bool(regular),
        plane_inner_max=plane,
    )


# -- uniform sampling --------------------------------------------------------


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(stream)]))


def complete_block(x: np.ndarray) -> np.ndarray:
    """Complete upper-left (n-1)x(n-1) blocks (shape ``(..., n-1, n-1)``) to n x n."""
    x = np.asarray(x, dtype=float)
    m = x.shape[-1]
    out = np.empty(x.shape[:-2] + (m + 1, m + 1))
    out[..., :m, :m] = x
    out[..., :m, m] = 1.0 - x.sum(axis=-1)
    out[..., m, :m] = 1.0 - x.sum(axis=-2)
    out[..., m, m] = x.sum(axis=(-1, -2)) - (m - 1)
    return out


def _rejection_n3(count: int, rng: np.random.Generator, batch: int = 1 << 16) -> np.ndarray:
    out, have = [], 0
    while have < count:
        full = complete_block(rng.random((batch, 2, 2)))
        full = full[(full >= 0).all(axis=(1, 2))]
        out.append(full)
        have += len(full)
    return np.concatenate(out)[:count]


def _constraints(n: int) -> tuple[np.ndarray, np.ndarray]:
    # A x <= b over the flattened (n-1)^2 free block
    m = n - 1
    d = m * m
    idx = np.arange(d).reshape(m, m)
    a, b = [], []
    for k in range(d):  # x >= 0
        row = np.zeros(d)
        row[k] = -1
        a.append(row)
        b.append(0.0)
    for i in range(m):  # last column >= 0
        row = np.zeros(d)
        row[idx[i]] = 1
        a.append(row)
        b.append(1.0)
    for j in range(m):  # last row >= 0
        row = np.zeros(d)
        row[idx[:, j]] = 1
        a.append(row)
        b.append(1.0)
    a.append(-np.ones(d))  # corner >= 0
    b.append(-(m - 1.0))
    return np.array(a), np.array(b)


def hit_and_run_defaults(n: int) -> tuple[int, int]:
    """(burn-in, thinning) step counts for dimension n."""
    d = (n - 1) ** 2
    return 1000 * d, 10 * d


def _hit_and_run(n: int, count: int, rng: np.random.Generator, chains: int = 64) -> np.ndarray:
    # independent chains advanced in lockstep, each with full burn-in and thinning
    a, b = _constraints(n)
    d = (n - 1) ** 2
    burn, thin = hit_and_run_defaults(n)
    k = min(chains, count)
    per_chain = -(-count // k)
    x = np.full((k, d), 1.0 / n)
    out = np.empty((per_chain, k, d))
    for step in range(burn + thin * per_chain):
        u = rng.standard_normal((k, d))
        slack = b - x @ a.T
        rate = u @ a.T
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = slack / rate
        hi = np.where(rate > 1e-15, ratio, np.inf).min(axis=1)
        lo = np.where(rate < -1e-15, ratio, -np.inf).max(axis=1)
        x = x + (lo + rng.random(k) * (hi - lo))[:, None] * u
        if step >= burn and (step - burn) % thin == thin - 1:
            out[(step - burn) // thin] = x
    flat = out.reshape(per_chain * k, d)[:count]
    full = complete_block(flat.reshape(count, n - 1, n - 1))
    return np.clip(full, 0.0, None)


def sample_uniform_array(n: int, count: int, seed: int, stream: int = 0) -> np.ndarray:
    """``count`` uniform points of the n x n Birkhoff polytope, shape ``(count, n, n)``.

    n = 3 uses exact rejection from the unit 4-cube; n >= 4 runs up to 64
    hit-and-run chains from the center and interleaves their outputs.  ``(seed, stream)`` selects an
    independent reproducible substream.
    """
    if n < 2 or count < 1:
        raise ValueError("need n >= 2 and count >= 1")
    rng = _rng(seed, stream)
    if n == 2:
        x = rng.random(count)
        return complete_block(x.reshape(count, 1, 1))
    if n == 3:
        return _rejection_n3(count, rng)
    return _hit_and_run(n, count, rng)


def sample_uniform(n: int, count: int, seed: int, stream: int = 0) -> Iterator[BistochasticMatrix]:
    for m in sample_uniform_array(n, count, seed, stream):
        yield validate_bistochastic(m, atol=1e-9)


def rejection_acceptance_rate(draws: int, seed: int) -> float:
    """Fraction of uniform 2x2 upper-left blocks that complete to a 3x3 bistochastic matrix."""
    rng = _rng(seed, 0)
    hits, done = 0, 0
    while done < draws:
        k = min(1 << 20, draws - done)
        full = complete_block(rng.random((k, 2, 2)))
        hits += int((full >= 0).all(axis=(1, 2)).sum())
        done += k
    return hits / draws

