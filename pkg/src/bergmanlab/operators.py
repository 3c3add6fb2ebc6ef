"""Orthonormal monomial bases, truncated Toeplitz matrices, matrix norms.

The monomials are orthogonal in every weighted Bergman space of the ball;
the basis here stores their norms (via log-gamma, so degree-1000
truncations stay in range) and the Toeplitz / embedding-Gram matrices are
assembled exactly: finite sums for atomic symbols, diagonal moment
formulas for radial symbols, and per-cell Fourier moments for tabulated
polar densities.  Both matrix kinds are Hermitian positive semidefinite
whenever the symbol is a positive measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np
from scipy.special import gammaln

from ._fastpath import pairwise_sum
from .geometry import BallPoint
from .kernels import graded_indices, kernel_values, KernelParams
from .measures import (AtomicMeasure, GridDensityMeasure, MeasureSpec,
                       RadialPowerMeasure)
from .quadrature import DEFAULT_SCHEME, QuadratureScheme, disk_grid


@dataclass(frozen=True)
class BasisSpec:
    """Orthonormal monomial basis of A^2_alpha truncated at degree D."""

    n: int
    alpha: float
    degree: int
    ordering: tuple[tuple[int, ...], ...]
    norm_constants: tuple[float, ...]   # ||z^m||_{A^2_alpha}

    @property
    def dim(self) -> int:
        return len(self.ordering)

    def norms(self) -> np.ndarray:
        return np.asarray(self.norm_constants)


@lru_cache(maxsize=32)
def build_basis(n: int = 1, alpha: float = 0.0, degree: int = 64) -> BasisSpec:
    """Monomial basis with ||z^m||^2 = m! Gamma(n+1+a) / Gamma(n+1+|m|+a)."""
    if alpha <= -1.0:
        raise ValueError("alpha must exceed -1")
    if degree < 0:
        raise ValueError("degree must be nonnegative")
    ordering = tuple(graded_indices(n, degree))
    norms = []
    for m in ordering:
        logsq = (sum(gammaln(k + 1) for k in m) + gammaln(n + 1 + alpha)
                 - gammaln(n + 1 + sum(m) + alpha))
        norms.append(math.exp(0.5 * logsq))
    return BasisSpec(n=n, alpha=alpha, degree=degree, ordering=ordering,
                     norm_constants=tuple(norms))


def basis_values(basis: BasisSpec, point: BallPoint) -> np.ndarray:
    """Vector (e_m(point))_m of orthonormal basis values."""
    pt = BallPoint.of(point, basis.n)
    if pt.n != basis.n:
        raise ValueError("point dimension does not match basis")
    zv = pt.vector()
    out = np.empty(basis.dim, dtype=np.complex128)
    for i, m in enumerate(basis.ordering):
        out[i] = np.prod(zv ** np.asarray(m)) / basis.norm_constants[i]
    return out


def basis_values_1d(basis: BasisSpec, points: np.ndarray) -> np.ndarray:
    """Matrix e_m(points) for n = 1, shape (len(points), dim)."""
    if basis.n != 1:
        raise ValueError("vectorized basis evaluation is n = 1 only")
    pts = np.asarray(points, dtype=np.complex128)
    powers = np.vander(pts, basis.dim, increasing=True)
    return powers / basis.norms()[None, :]


@dataclass(frozen=True)
class TruncatedOperator:
    """Dense matrix of a Toeplitz operator or embedding Gram on the basis."""

    basis: BasisSpec
    matrix: np.ndarray
    kind: str  # "toeplitz" | "embedding_gram"

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))


@dataclass(frozen=True)
class SummingEstimate:
    """An interval bracketing a summing norm at one truncation degree."""

    r: float
    lower: float
    upper: float
    method: str   # "exact-hilbert" | "sampled" | "order-bounded"
    degree: int

    def __post_init__(self):
        if math.isfinite(self.upper) and self.lower > self.upper * (1 + 1e-12):
            raise ValueError("lower bracket exceeds upper bracket")

    def to_json(self) -> dict:
        return {"r": self.r, "lower": self.lower,
                "upper": "inf" if math.isinf(self.upper) else self.upper,
                "method": self.method, "D": self.degree}


def _radial_moments(mu: MeasureSpec, basis: BasisSpec) -> np.ndarray:
    """integral of |z^m|^2 dmu for radial mu, ordered like the basis."""
    degs = np.asarray([sum(m) for m in basis.ordering], dtype=float)
    if isinstance(mu, RadialPowerMeasure):
        logfac = np.asarray([sum(gammaln(k + 1) for k in m)
                             for m in basis.ordering])
        logs = (logfac + gammaln(basis.n + 1) + gammaln(mu.t + 1)
                - gammaln(basis.n + 1 + degs + mu.t))
        return mu.scale * np.exp(logs)
    if isinstance(mu, GridDensityMeasure):
        if basis.n != 1:
            raise ValueError("tabulated densities live on the disk")
        u_edges = np.asarray(mu.r_edges) ** 2
        heights = np.asarray(mu.values)[:, 0]
        m = degs
        acc = np.zeros(m.size)
        for h, u1, u2 in zip(heights, u_edges[:-1], u_edges[1:]):
            acc += h * (u2 ** (m + 1) - (u1 ** (m + 1) if u1 > 0 else 0.0)) \
                / (m + 1)
        return acc
    raise TypeError(f"not a radial measure: {mu!r}")


def _grid_fourier_matrix(mu: GridDensityMeasure, basis: BasisSpec) -> np.ndarray:
    """Exact per-cell moments sum_cells rho R_{i+j} A_{j-i} / (n_i n_j)."""
    d = basis.dim
    degs = np.arange(d, dtype=float)
    u_edges = np.asarray(mu.r_edges) ** 2
    th = np.asarray(mu.theta_edges)
    vals = np.asarray(mu.values)
    # radial moments per cell row: integral 2 r^(k+1) dr = (u2^(k/2+1)-...)
    out = np.zeros((d, d), dtype=np.complex128)
    ks = np.arange(2 * d - 1, dtype=float)   # i+j
    for row in range(vals.shape[0]):
        u1, u2 = u_edges[row], u_edges[row + 1]
        rmom = (u2 ** (ks / 2 + 1) - u1 ** (ks / 2 + 1)) / (ks / 2 + 1)
        for col in range(vals.shape[1]):
            h = vals[row, col]
            if h == 0.0:
                continue
            t1, t2 = th[col], th[col + 1]
            for off in range(-(d - 1), d):
                if off == 0:
                    ang = (t2 - t1) / (2.0 * np.pi)
                else:
                    ang = (np.exp(1j * off * t2) - np.exp(1j * off * t1)) \
                        / (2j * np.pi * off)
                i = np.arange(max(0, -off), min(d, d - off))
                j = i + off
                out[i, j] += h * rmom[(i + j)] * ang
    norms = basis.norms()
    return out / norms[:, None] / norms[None, :]


def toeplitz_matrix(mu: MeasureSpec, basis: BasisSpec,
                    kind: str = "toeplitz") -> TruncatedOperator:
    """Matrix of the Toeplitz operator with symbol mu on the basis.

    Entries are the mu-inner products of basis monomials, so the matrix is
    Hermitian PSD; radial symbols give a diagonal matrix.
    """
    if isinstance(mu, AtomicMeasure):
        if mu.n != basis.n:
            raise ValueError("measure dimension does not match basis")
        mat = np.zeros((basis.dim, basis.dim), dtype=np.complex128)
        for pt, mass in mu.atoms:
            v = np.conj(basis_values(basis, pt))
            mat += mass * np.outer(v, np.conj(v))
    elif isinstance(mu, RadialPowerMeasure) or (
            isinstance(mu, GridDensityMeasure) and mu.is_radial()):
        mom = _radial_moments(mu, basis)
        mat = np.diag((mom / basis.norms() ** 2).astype(np.complex128))
    else:
        mat = _grid_fourier_matrix(mu, basis)
    if not np.all(np.isfinite(mat)):
        raise ValueError("divergent matrix entry")
    return TruncatedOperator(basis=basis, matrix=mat, kind=kind)


def embedding_gram(mu: MeasureSpec, basis: BasisSpec) -> TruncatedOperator:
    """Gram matrix of the embedding A^2 -> L^2(mu) on the basis.

    Same entries as the Toeplitz matrix; its trace is the squared 2-summing
    norm of the truncated embedding.
    """
    return toeplitz_matrix(mu, basis, kind="embedding_gram")


def toeplitz_apply(mu: MeasureSpec, f, z: BallPoint,
                   kp: KernelParams | None = None,
                   scheme: QuadratureScheme = DEFAULT_SCHEME) -> complex:
    """Pointwise T_mu f(z) = integral of f(w) K(z, w) dmu(w).

    Exact finite sum for atomic measures (any dimension); disk quadrature
    against the density otherwise.  ``f`` maps point arrays to values.
    """
    z = BallPoint.of(z)
    kp = kp or KernelParams(n=z.n)
    if isinstance(mu, AtomicMeasure):
        total = 0.0 + 0.0j
        for pt, mass in mu.atoms:
            inner = complex(np.sum(z.vector() * np.conj(pt.vector())))
            kern = (1.0 - inner) ** (-kp.power)
            total += mass * complex(f(np.asarray([pt.z]))[0]
                                    if pt.n == 1 else f(pt)) * kern
        return complex(total)
    if z.n != 1:
        raise ValueError("quadrature route is n = 1 only")
    grid = disk_grid(scheme)
    dens = mu.density(grid.z)
    vals = np.asarray(f(grid.z)) * kernel_values(kp, z.z, grid.z) * dens
    return complex(pairwise_sum(vals * grid.w))


def hs_norm(op: TruncatedOperator) -> float:
    """Frobenius norm; the 2-summing norm of the truncation."""
    return float(math.sqrt(float(np.real(
        pairwise_sum((np.abs(op.matrix) ** 2).ravel())))))


def op_norm(op: TruncatedOperator | np.ndarray, tol: float = 1e-10,
            max_iter: int = 10_000) -> float:
    """Largest singular value by power iteration on T* T.

    Deterministic all-ones start vector; raises after ``max_iter``
    non-converged sweeps.
    """
    mat = op.matrix if isinstance(op, TruncatedOperator) else np.asarray(op)
    d = mat.shape[0]
    if d == 0:
        return 0.0
    big = mat.conj().T @ mat
    v = np.ones(d, dtype=np.complex128) / math.sqrt(d)
    lam_prev = -1.0
    for _ in range(max_iter):
        w = big @ v
        lam = float(np.real(np.vdot(v, w)))
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(lam - lam_prev) <= tol * max(1.0, abs(lam)):
            return math.sqrt(max(lam, 0.0))
        lam_prev = lam
    raise RuntimeError(f"power iteration did not converge in {max_iter} sweeps")
