"""Deciding unistochasticity and rebuilding witness unitaries.

For n = 2 every bistochastic matrix is unistochastic.  For n = 3 the
question reduces to whether three chain links close into a triangle.  For
larger n a multi-start phase search looks for a witness; a failed search
proves nothing, so that route never answers "no".
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .birkhoff import van_der_waerden
from .matcore import (
    ATOL,
    BistochasticMatrix,
    DephasedUnitary,
    DimensionMismatch,
    UnistochError,
    UnitaryMatrix,
    complex_to_pairs,
    dephase,
    validate_bistochastic,
)

CLOSE_TOL = 1e-10
ORTHO_TOL = 1e-8


class NotUnistochasticInput(UnistochError):
    pass


class RadiusTooLarge(UnistochError):
    pass


class Status(str, enum.Enum):
    UNISTOCHASTIC = "Unistochastic"
    NOT_UNISTOCHASTIC = "NotUnistochastic"
    UNDECIDED = "Undecided"


class Method(str, enum.Enum):
    EXACT_N2 = "ExactN2"
    EXACT_N3 = "ExactN3"
    NUMERICAL = "Numerical"


@dataclass(frozen=True)
class UnistochasticityVerdict:
    status: Status
    witness: DephasedUnitary | None
    defect: float
    method: Method

    def __post_init__(self):
        if self.status is Status.UNISTOCHASTIC and self.witness is None:
            raise ValueError("a positive verdict needs a witness")
        if self.status is Status.NOT_UNISTOCHASTIC:
            if self.method is Method.NUMERICAL:
                raise ValueError("the numerical search cannot certify non-unistochasticity")
            if not self.defect > 0:
                raise ValueError("a negative verdict needs a positive defect")

    def to_dict(self) -> dict:
        return {
            "status": self.status.value,
            "defect": float(self.defect),
            "method": self.method.value,
            "witness": None if self.witness is None else complex_to_pairs(self.witness.entries),
        }


def _entries(b) -> np.ndarray:
    return np.asarray(b.entries if isinstance(b, BistochasticMatrix) else b, dtype=float)


def _need(b: np.ndarray, n: int):
    if b.shape != (n, n):
        raise DimensionMismatch(f"expected a {n}x{n} matrix, got {b.shape}")


# -- random unitaries --------------------------------------------------------


def haar_unitary_array(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitaries, shape ``(count, n, n)``.

    QR of a complex Ginibre matrix, with each column of Q rotated by the
    phase of the matching diagonal entry of R so the factorization is unique.
    """
    z = (rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (d / np.abs(d))[:, None, :]


def haar_unitary(n: int, rng: np.random.Generator) -> UnitaryMatrix:
    return UnitaryMatrix(haar_unitary_array(n, 1, rng)[0])


# -- n = 2 -------------------------------------------------------------------


def check_exact_n2(b: BistochasticMatrix) -> UnistochasticityVerdict:
    """Every 2x2 bistochastic matrix comes from a rotation by ``arccos(sqrt(B00))``."""
    m = _entries(b)
    _need(m, 2)
    theta = np.arccos(np.sqrt(np.clip(m[0, 0], 0.0, 1.0)))
    c, s = np.cos(theta), np.sin(theta)
    rot = UnitaryMatrix(np.array([[c, -s], [s, c]]))
    return UnistochasticityVerdict(Status.UNISTOCHASTIC, dephase(rot), 0.0, Method.EXACT_N2)


# -- n = 3 -------------------------------------------------------------------


@dataclass(frozen=True)
class ChainLinks:
    """Three link lengths ``sqrt(B_i j * B_i k)`` for one column pair."""

    links: tuple[float, float, float]

    @property
    def slack(self) -> float:
        """Sum of the two shorter links minus the longest (negative: cannot close)."""
        return float(sum(self.links) - 2 * max(self.links))

    @property
    def defect(self) -> float:
        return max(0.0, -self.slack)

    def closable(self, atol: float = CLOSE_TOL) -> bool:
        return -self.slack <= atol


def chain_links(b: BistochasticMatrix, col_pair: tuple[int, int] = (0, 1)) -> ChainLinks:
    m = _entries(b)
    _need(m, 3)
    j, k = col_pair
    if j == k:
        raise ValueError("column pair needs two distinct columns")
    links = np.sqrt(m[:, j] * m[:, k])
    return ChainLinks(tuple(float(x) for x in links))


def closure_slack(batch: np.ndarray) -> np.ndarray:
    """Vectorized :attr:`ChainLinks.slack` for columns (0, 1) of ``(..., 3, 3)`` arrays."""
    links = np.sqrt(np.clip(batch[..., :, 0] * batch[..., :, 1], 0.0, None))
    return links.sum(axis=-1) - 2 * links.max(axis=-1)


def _witness_n3(m: np.ndarray, alpha_sign: int) -> np.ndarray:
    r = np.sqrt(np.clip(m, 0.0, 1.0))
    l0, l1, l2 = r[:, 0] * r[:, 1]
    tiny = 1e-15
    if l0 > tiny and l1 > tiny:
        cos_a = (l2 * l2 - l0 * l0 - l1 * l1) / (2 * l0 * l1)
        alpha = alpha_sign * np.arccos(np.clip(cos_a, -1.0, 1.0))
    else:
        alpha = 0.0  # a vanishing link leaves this phase free
    if l2 > tiny:
        beta = float(np.angle(-(l0 + l1 * np.exp(1j * alpha))))
    else:
        beta = 0.0

    u = np.zeros((3, 3), dtype=complex)
    u[:, 0] = r[:, 0]
    u[:, 1] = r[:, 1] * np.exp(1j * np.array([0.0, alpha, beta]))
    third = np.conj(np.cross(u[:, 0], u[:, 1]))
    lead = np.flatnonzero(np.abs(third) > 1e-12)
    if lead.size:
        third *= np.conj(third[lead[0]]) / abs(third[lead[0]])
    u[:, 2] = third
    return u


def check_exact_n3(b: BistochasticMatrix) -> UnistochasticityVerdict:
    """Exact 3x3 decision through the chain links of columns 0 and 1."""
    m = _entries(b)
    _need(m, 3)
    cl = chain_links(m)
    if not cl.closable():
        return UnistochasticityVerdict(Status.NOT_UNISTOCHASTIC, None, cl.defect, Method.EXACT_N3)
    w = dephase(UnitaryMatrix(_witness_n3(m, +1), atol=1e-9))
    return UnistochasticityVerdict(Status.UNISTOCHASTIC, w, 0.0, Method.EXACT_N3)


def reconstruct_n3(b: BistochasticMatrix) -> list[DephasedUnitary]:
    """All dephased unitaries with squared moduli ``b``.

    Generically two, complex conjugates of each other (the two orientations of
    the unitarity triangle); one when the triangle is degenerate.  If a link
    vanishes the solution set may be a continuum, and one representative is
    returned.
    """
    m = _entries(b)
    _need(m, 3)
    if not chain_links(m).closable():
        raise NotUnistochasticInput("chain links do not close; no unitary exists")
    first = _witness_n3(m, +1)
    second = _witness_n3(m, -1)
    sols = [first]
    if np.abs(first - second).max() > 1e-9:
        sols.append(second)
    return [dephase(UnitaryMatrix(u, atol=1e-9)) for u in sols]


def is_orthostochastic_n3(b: BistochasticMatrix, atol: float = ORTHO_TOL) -> bool:
    """True iff the unitarity triangle is degenerate, i.e. a real orthogonal witness exists."""
    return abs(chain_links(b).slack) <= atol


# -- general n: phase search -------------------------------------------------


class _PhaseProblem:
    """Column-orthogonality residuals of a dephased matrix with fixed moduli."""

    def __init__(self, b: np.ndarray):
        n = b.shape[0]
        self.n = n
        self.r = np.sqrt(np.clip(b, 0.0, 1.0))
        self.pairs = [(j, k) for j in range(n) for k in range(j + 1, n)]
        pj = np.array([p[0] for p in self.pairs])
        pk = np.array([p[1] for p in self.pairs])
        self.pj, self.pk = pj, pk
        vp, vq = np.meshgrid(np.arange(1, n), np.arange(1, n), indexing="ij")
        self.vp, self.vq = vp.ravel(), vq.ravel()
        # sign of d c_jk / d phi_pq: +1 if q == k, -1 if q == j
        self.sign = (self.vq[None, :] == pk[:, None]).astype(float) - (self.vq[None, :] == pj[:, None])

    def matrix(self, phi: np.ndarray) -> np.ndarray:
        full = np.zeros((self.n, self.n))
        full[1:, 1:] = phi.reshape(self.n - 1, self.n - 1)
        return self.r * np.exp(1j * full)

    def overlaps(self, u: np.ndarray) -> np.ndarray:
        g = u.conj().T @ u
        return g[self.pj, self.pk]

    def residuals(self, phi):
        c = self.overlaps(self.matrix(phi))
        return np.concatenate([c.real, c.imag])

    def jacobian(self, phi):
        u = self.matrix(phi)
        t = np.conj(u[self.vp[None, :], self.pj[:, None]]) * u[self.vp[None, :], self.pk[:, None]]
        jc = 1j * t * self.sign
        return np.concatenate([jc.real, jc.imag])

    def objective(self, phi) -> float:
        c = self.overlaps(self.matrix(phi))
        return float(np.sum(c.real**2 + c.imag**2))


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(restart)]))


def check_numerical(
    b: BistochasticMatrix,
    restarts: int = 20,
    seed: int = 0,
    tol: float = 1e-14,
    max_iter: int = 5000,
    init: list[np.ndarray] | None = None,
) -> UnistochasticityVerdict:
    """Multi-start search for phases making the dephased matrix unitary.

    Minimizes the sum of squared column overlaps over the ``(n-1)^2`` free
    phases with Levenberg-Marquardt and an analytic Jacobian.  Restart ``k``
    starts from ``init[k]`` when given, otherwise from phases drawn uniformly
    with a generator seeded by ``(seed, k)``.  Restarts are tried in index
    order and the first one below ``tol`` wins, so the answer does not depend
    on how restarts are scheduled.  Returns Unistochastic or Undecided.
    """
    m = _entries(b)
    n = m.shape[0]
    if m.ndim != 2 or n != m.shape[1] or n < 2:
        raise DimensionMismatch("need a square matrix with n >= 2")
    prob = _PhaseProblem(m)
    nvar = (n - 1) ** 2
    init = list(init or [])
    best_f, best_phi = np.inf, None
    for k in range(restarts):
        if k < len(init):
            x0 = np.asarray(init[k], dtype=float).ravel()
        else:
            x0 = restart_rng(seed, k).uniform(0.0, 2 * np.pi, nvar)
        if prob.objective(x0) < tol:
            phi = x0
        else:
            sol = least_squares(
                prob.residuals, x0, jac=prob.jacobian, method="lm",
                xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=max_iter,
            )
            phi = sol.x
        f = prob.objective(phi)
        if f < best_f:
            best_f, best_phi = f, phi
        if best_f < tol:
            break

    if best_f < tol:
        u = prob.matrix(best_phi)
        atol = max(ATOL, 10 * np.sqrt(best_f))
        w = DephasedUnitary(UnitaryMatrix(u, atol=atol))
        return UnistochasticityVerdict(Status.UNISTOCHASTIC, w, float(best_f), Method.NUMERICAL)
    return UnistochasticityVerdict(Status.UNDECIDED, None, float(best_f), Method.NUMERICAL)


def check(b: BistochasticMatrix, restarts: int = 20, seed: int = 0, tol: float = 1e-14) -> UnistochasticityVerdict:
    """Route to the exact test for n <= 3, the phase search otherwise."""
    n = _entries(b).shape[0]
    if n == 2:
        return check_exact_n2(b)
    if n == 3:
        return check_exact_n3(b)
    return check_numerical(b, restarts=restarts, seed=seed, tol=tol)


def fourier_phases(n: int) -> np.ndarray:
    """Free phases of the Fourier matrix, a starting point at the center."""
    i, j = np.meshgrid(np.arange(1, n), np.arange(1, n), indexing="ij")
    return (2 * np.pi * i * j / n).ravel()


# -- geometric probes --------------------------------------------------------


def star_ray_probe(b: BistochasticMatrix, steps: int = 10) -> bool:
    """Whether the segment from the center to ``b`` stays unistochastic at ``steps`` points."""
    m = _entries(b)
    _need(m, 3)
    if check_exact_n3(m).status is not Status.UNISTOCHASTIC:
        raise NotUnistochasticInput("ray endpoint must be unistochastic")
    w = van_der_waerden(3).entries
    for t in np.arange(1, steps) / steps:
        if not chain_links((1 - t) * w + t * m).closable():
            return False
    return True


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % p for p in range(2, int(n**0.5) + 1))


def tangent_direction(n: int, rng: np.random.Generator) -> np.ndarray:
    """Random unit-norm matrix with zero row and column sums."""
    g = rng.standard_normal((n, n))
    g = g - g.mean(axis=0, keepdims=True) - g.mean(axis=1, keepdims=True) + g.mean()
    return g / np.linalg.norm(g)


def prime_ball_probe(
    n: int,
    radius: float,
    trials: int,
    seed: int = 0,
    restarts: int = 20,
    tol: float = 1e-14,
) -> float:
    """Fraction of random steps of length ``radius`` from the center that stay unistochastic.

    Steps leaving the polytope are discarded; if all are discarded the radius
    is too large.  Uses the exact test for n = 3 and the phase search (with
    Undecided counted as failure) otherwise.
    """
    if not _is_prime(n):
        raise ValueError(f"{n} is not prime")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), n]))
    w = van_der_waerden(n).entries
    kept = passed = 0
    for t in range(trials):
        m = w + radius * tangent_direction(n, rng)
        if m.min() < 0:
            continue
        kept += 1
        b = validate_bistochastic(m, atol=1e-9)
        v = check_exact_n3(b) if n == 3 else check_numerical(b, restarts=restarts, seed=t, tol=tol)
        passed += v.status is Status.UNISTOCHASTIC
    if kept == 0:
        raise RadiusTooLarge(f"every step of length {radius} leaves the polytope")
    return passed / kept
