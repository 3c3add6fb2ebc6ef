"""Estimators bracketing absolutely-summing norms of truncated operators.

Lower bounds come straight from the defining inequality of an r-summing
operator: a test family {x_k} gives the ratio of the strong r-sum of the
images to the weak r-sum of the family.  On the Hilbert diagonal
(p = r = 2) the weak sum has the exact closed form ``sqrt(||Gram||)`` and
the ratio is a rigorous lower bound; for other exponents the supremum over
the dual ball is only sampled over a candidate set (normalized kernels on
a polar grid plus normalized monomials) and results carry a ``sampled``
tag.  Upper bounds use order boundedness: a p-integrable majorant of the
image of the unit ball dominates the p-summing norm, and the majorant

    h(z) = integral of K(xi,xi)^(1/p) mu-hat_delta(xi) |K(z,xi)| dv(xi)

is computable; ``||h||_{L^p}`` (or its divergence flag) is the bracket.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ._fastpath import kernel_weighted_sums, pairwise_sum
from .geometry import BallPoint, Lattice
from .kernels import HoloPoly, KernelParams, UNWEIGHTED, kernel_ap_norm, kernel_poly
from .measures import (AtomicMeasure, GridDensityMeasure, MeasureSpec,
                       RadialPowerMeasure, is_radial, mu_hat_grid,
                       _ball_masses, _volume_profile_cache)
from .operators import (BasisSpec, SummingEstimate, TruncatedOperator,
                        basis_values_1d, build_basis, op_norm)
from .quadrature import (DEFAULT_SCHEME, QuadratureScheme, ball_rule,
                         disk_grid, mobius_area_jacobian, radial_panel_sums,
                         radial_rule, refine_and_flag)


# ---------------------------------------------------------------------------
# test families

@dataclass(frozen=True)
class TestFamily:
    """A finite family of polynomials in the source space A^p."""

    __test__ = False        # not a pytest collection target

    kind: str
    members: tuple[HoloPoly, ...]
    p: float

    def __len__(self):
        return len(self.members)

    def member_matrix(self, basis: BasisSpec) -> np.ndarray:
        """Columns = members in orthonormal-basis coordinates (n = 1)."""
        cols = np.zeros((basis.dim, len(self.members)), dtype=np.complex128)
        norms = basis.norms()
        for k, f in enumerate(self.members):
            dense = f.dense(basis.degree)
            cols[:dense.size, k] = dense * norms[:dense.size]
        return cols


def onb_family(basis: BasisSpec, count: int | None = None,
               p: float = 2.0) -> TestFamily:
    """The orthonormal basis vectors themselves as a test family."""
    count = basis.dim if count is None else count
    members = []
    for m, nrm in zip(basis.ordering[:count], basis.norm_constants[:count]):
        members.append(HoloPoly.make(basis.n, {m: 1.0 / nrm}))
    return TestFamily(kind="onb", members=tuple(members), p=p)


def kernel_family(lat: Lattice, p: float, degree: int,
                  kp: KernelParams = UNWEIGHTED) -> TestFamily:
    """Normalized reproducing kernels at the lattice points, truncated."""
    members = []
    for a in lat.points:
        nrm = kernel_ap_norm(kp, BallPoint.of(a), p)
        poly = kernel_poly(BallPoint.of(a), kp.power, degree)
        members.append(HoloPoly.make(1, {m: v / nrm
                                         for m, v in poly.coeffs}))
    return TestFamily(kind="kernel", members=tuple(members), p=p)


def derivative_family(lat: Lattice, degree: int) -> TestFamily:
    """Normalized z-derivatives of the kernel at lattice points (p = 1).

    The member at a lattice point ``a`` is L(z, a) = 2 conj(a) (1 - z
    conj(a))^-3 divided by its A^1 norm; the origin contributes the zero
    function and is skipped.
    """
    members = []
    for a in lat.points:
        if abs(a) < 1e-14:
            continue
        nrm_int = kernel_ap_norm(UNWEIGHTED, BallPoint.of(a), 1.5) ** 1.5
        nrm = 2.0 * abs(a) * nrm_int   # ||L(.,a)||_{A^1} exactly
        poly = kernel_poly(BallPoint.of(a), 3.0, degree)
        members.append(HoloPoly.make(1, {m: 2.0 * np.conj(a) * v / nrm
                                         for m, v in poly.coeffs}))
    return TestFamily(kind="derivative", members=tuple(members), p=1.0)


def rademacher_function(k: int, t: float) -> int:
    """The k-th dyadic sign function on [0, 1) (k >= 1)."""
    if k < 1:
        raise ValueError("index starts at 1")
    scaled = (2.0 ** (k - 1)) * t
    return 1 if (scaled - math.floor(scaled)) < 0.5 else -1


def rademacher_signs(count: int, draws: int, seed: int) -> np.ndarray:
    """Seeded iid sign matrix (the law of the dyadic signs at uniform t)."""
    rng = np.random.default_rng(seed)
    return rng.integers(0, 2, size=(draws, count)) * 2 - 1


def rademacher_family(lat: Lattice, coefficients, p: float, draws: int,
                      seed: int, degree: int = 64,
                      kp: KernelParams = UNWEIGHTED) -> TestFamily:
    """Random-sign combinations of normalized kernels at lattice points.

    Each draw t gives the member sum_j c_j sign_j(t) k_{a_j, p}; the sign
    patterns are seeded and reproducible bit for bit.
    """
    c = np.asarray(coefficients, dtype=np.complex128)
    if c.size != len(lat.points):
        raise ValueError(f"need one coefficient per lattice point "
                         f"({c.size} != {len(lat.points)})")
    base = kernel_family(lat, p, degree, kp)
    mat = np.zeros((degree + 1, len(base.members)), dtype=np.complex128)
    for k, f in enumerate(base.members):
        mat[:, k] = f.dense(degree)
    signs = rademacher_signs(c.size, draws, seed)
    members = []
    for s in signs:
        dense = mat @ (c * s)
        members.append(HoloPoly.from_dense(dense))
    return TestFamily(kind="rademacher", members=tuple(members), p=p)


def khinchine_probe(coefficients, draws: int, seed: int) -> dict:
    """Empirical moment check of random-sign sums against sum |b_k|^2.

    Returns the draws' mean of |S|^l for l in {1, 2, 4}, the exact l = 2
    target, the standard error at l = 2, and the bracketing constants
    (which satisfy low <= 1 <= high for any sample, by power-mean
    monotonicity).
    """
    b = np.asarray(coefficients, dtype=np.complex128)
    signs = rademacher_signs(b.size, draws, seed)
    sums = signs.astype(np.complex128) @ b
    absval = np.abs(sums)
    means = {1: float(np.mean(absval)), 2: float(np.mean(absval ** 2)),
             4: float(np.mean(absval ** 4))}
    target = float(np.sum(np.abs(b) ** 2))
    se2 = float(np.std(absval ** 2, ddof=1) / math.sqrt(draws))
    return {"means": means, "target_l2": target, "stderr_l2": se2,
            "bracket_low": means[1] / math.sqrt(means[2]),
            "bracket_high": means[4] ** 0.25 / math.sqrt(means[2])}


# ---------------------------------------------------------------------------
# dual sampling and weak norms

@dataclass(frozen=True)
class DualSampler:
    """Unit-norm functionals over which the dual-ball supremum is sampled."""

    rows: np.ndarray          # (candidates, basis dim); row @ coeffs = x*(f)
    p_dual: float
    exact_hilbert: bool

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    def subset(self, count: int) -> "DualSampler":
        return DualSampler(self.rows[:count], self.p_dual, self.exact_hilbert)


def build_dual_sampler(p: float, basis: BasisSpec,
                       kernel_radii: int = 60, kernel_angles: int = 32,
                       monomials: int = 64) -> DualSampler:
    """Kernel candidates on a polar grid plus leading monomial candidates.

    Every candidate has unit A^{p'} norm; pairing a candidate with f in
    coefficient coordinates is one row-vector product.
    """
    if p <= 1.0:
        raise ValueError("p must exceed 1 (the dual index must be finite)")
    conj = p / (p - 1.0)
    radii = np.linspace(0.02, 0.97, kernel_radii)
    angles = np.exp(2j * np.pi * np.arange(kernel_angles) / kernel_angles)
    ws = (radii[:, None] * angles[None, :]).ravel()
    vander = basis_values_1d(basis, ws)          # e_m(w)
    knorms = np.asarray([kernel_ap_norm(UNWEIGHTED, BallPoint.of(w), conj)
                         for w in ws])
    rows = [vander / knorms[:, None]]
    mono = min(monomials, basis.dim)
    degs = np.arange(mono, dtype=float)
    # ||z^m||_{A^p'} on the disk = (2 / (m p' + 2))^(1/p')
    mono_norms = (2.0 / (degs * conj + 2.0)) ** (1.0 / conj)
    mrows = np.zeros((mono, basis.dim), dtype=np.complex128)
    mrows[np.arange(mono), np.arange(mono)] = \
        np.asarray(basis.norm_constants[:mono]) / mono_norms
    rows.append(mrows)
    return DualSampler(rows=np.vstack(rows), p_dual=conj,
                       exact_hilbert=bool(abs(p - 2.0) < 1e-12))


@dataclass(frozen=True)
class WeakNorm:
    value: float
    method: str  # "exact-hilbert" | "sampled"


def weak_r_norm(family: TestFamily, r: float, sampler: DualSampler,
                basis: BasisSpec) -> WeakNorm:
    """sup over dual candidates of (sum_k |x*(x_k)|^r)^(1/r).

    With p = r = 2 the supremum over the whole dual ball is the operator
    norm of the family's Gram matrix and is returned exactly; otherwise the
    sampled value is a certified lower approximation of the supremum.
    """
    if len(family) == 0:
        raise ValueError("empty test family")
    cols = family.member_matrix(basis)
    if sampler.exact_hilbert and abs(family.p - 2.0) < 1e-12 \
            and abs(r - 2.0) < 1e-12:
        gram = cols.conj().T @ cols
        return WeakNorm(value=math.sqrt(op_norm(gram)), method="exact-hilbert")
    pairings = sampler.rows @ cols
    vals = np.sum(np.abs(pairings) ** r, axis=1) ** (1.0 / r)
    return WeakNorm(value=float(np.max(vals)), method="sampled")


def poly_norms_ap(coeff_cols: np.ndarray, p: float, basis: BasisSpec,
                  scheme: QuadratureScheme = DEFAULT_SCHEME,
                  chunk: int = 8192) -> np.ndarray:
    """A^p_alpha norms of polynomials given in basis coordinates (columns)."""
    if abs(p - 2.0) < 1e-12 and basis.alpha == 0.0:
        return np.linalg.norm(coeff_cols, axis=0)
    grid = disk_grid(scheme)
    alpha = basis.alpha
    if alpha:
        calpha = math.exp(math.lgamma(2 + alpha) - math.lgamma(alpha + 1))
        wmod = grid.w * calpha * (1.0 - np.abs(grid.z) ** 2) ** alpha
    else:
        wmod = grid.w
    acc = np.zeros(coeff_cols.shape[1])
    for lo in range(0, grid.z.size, chunk):
        pts = grid.z[lo:lo + chunk]
        vals = basis_values_1d(basis, pts) @ coeff_cols
        acc += wmod[lo:lo + chunk] @ (np.abs(vals) ** p)
    return acc ** (1.0 / p)


def summing_lower_bound(op: TruncatedOperator, family: TestFamily, r: float,
                        sampler: DualSampler) -> SummingEstimate:
    """Definition-based lower bracket (strong r-sum over weak r-sum).

    Rigorous on the exact-Hilbert branch; with a sampled weak norm the
    denominator only under-approximates the supremum, so the ratio is an
    upper-biased heuristic for the lower bound and keeps the ``sampled``
    tag.
    """
    basis = op.basis
    cols = family.member_matrix(basis)
    images = op.matrix @ cols
    if abs(family.p - 2.0) < 1e-12:
        img_norms = np.linalg.norm(images, axis=0)
    else:
        img_norms = poly_norms_ap(images, family.p, basis)
    strong = float(np.sum(img_norms ** r) ** (1.0 / r))
    weak = weak_r_norm(family, r, sampler, basis)
    if weak.value == 0.0:
        raise ZeroDivisionError("test family has zero weak norm")
    return SummingEstimate(r=float(r), lower=strong / weak.value,
                           upper=math.inf, method=weak.method,
                           degree=basis.degree)


def pi2_embedding_exact(mu: MeasureSpec, basis: BasisSpec) -> float:
    """2-summing norm of the truncated embedding A^2 -> L^2(mu).

    The square equals the trace of the embedding Gram matrix, and grows to
    the full integral of the kernel diagonal against mu as the degree
    increases.
    """
    from .operators import embedding_gram
    return math.sqrt(max(embedding_gram(mu, basis).trace(), 0.0))


# ---------------------------------------------------------------------------
# order-bounded upper bounds

def _majorant_radial(mu: MeasureSpec, p: float, delta: float,
                     scheme: QuadratureScheme):
    rad = radial_rule(scheme)
    radii, vols = _volume_profile_cache(float(delta), scheme)
    masses = _ball_masses(mu, delta, radii.astype(np.complex128), scheme)
    g = (1.0 - radii ** 2) ** (-2.0 / p) * masses / vols
    inner = refine_and_flag(radial_panel_sums(g, scheme), scheme)
    if inner.diverged:
        return None, inner
    x = radii ** 2
    hvals = (rad.w * g) @ (1.0 / (1.0 - np.outer(x, x).T))
    return hvals, inner


def _majorant_pointwise(mu: MeasureSpec, p: float, delta: float,
                        scheme: QuadratureScheme, zs: np.ndarray):
    """h(z) over an array of z, for measures of bounded support."""
    if isinstance(mu, AtomicMeasure):
        u, uw = ball_rule(delta, scheme)
        total = np.zeros(zs.size, dtype=np.complex128)
        for pt, mass in mu.atoms:
            xi = (pt.z - u) / (1.0 - np.conj(pt.z) * u)
            jac = mobius_area_jacobian(pt.z, u)
            radii, vols = _volume_profile_cache(float(delta), scheme)
            volxi = np.interp(np.abs(xi), radii, vols)
            wfac = uw * jac * (1.0 - np.abs(xi) ** 2) ** (-2.0 / p) / volxi
            total += mass * kernel_weighted_sums(xi, wfac, zs, 2.0, True)
        return np.real(total)
    grid = disk_grid(scheme)
    mh = mu_hat_grid(mu, delta, scheme)
    mask = mh > 0.0
    nodes = grid.z[mask]
    wfac = grid.w[mask] * mh[mask] \
        * (1.0 - np.abs(nodes) ** 2) ** (-2.0 / p)
    return np.real(kernel_weighted_sums(nodes, wfac, zs, 2.0, True))


def order_bounded_upper(mu: MeasureSpec, p: float, delta: float,
                        scheme: QuadratureScheme = DEFAULT_SCHEME,
                        degree: int = -1) -> SummingEstimate:
    """Order-boundedness upper bracket for the p-summing norm of T_mu.

    Computes the L^p norm of the explicit majorant of |T_mu g| over the
    unit ball of A^p; divergence of either the majorant integral or of its
    L^p norm is a legitimate infinite bracket, not an error.  The estimate
    is tagged r = p (it also dominates every r >= p by inclusion).
    """
    if p < 1.0:
        raise ValueError("p must be at least 1")
    if delta <= 0.0:
        raise ValueError("delta must be positive")
    if is_radial(mu):
        hvals, inner = _majorant_radial(mu, p, delta, scheme)
        if hvals is None:
            return SummingEstimate(r=float(p), lower=0.0, upper=math.inf,
                                   method="order-bounded", degree=degree)
        outer = refine_and_flag(radial_panel_sums(hvals ** p, scheme), scheme)
        upper = math.inf if outer.diverged else outer.value ** (1.0 / p)
        return SummingEstimate(r=float(p), lower=0.0, upper=float(upper),
                               method="order-bounded", degree=degree)
    outer_scheme = QuadratureScheme(panels=16, nodes_per_panel=10,
                                    angular=128, r_max=scheme.r_max)
    ogrid = disk_grid(outer_scheme)
    hvals = _majorant_pointwise(mu, p, delta, scheme, ogrid.z)
    outer = refine_and_flag(
        radial_panel_sums(np.clip(hvals, 0.0, None) ** p, outer_scheme),
        outer_scheme)
    upper = math.inf if outer.diverged else outer.value ** (1.0 / p)
    return SummingEstimate(r=float(p), lower=0.0, upper=float(upper),
                           method="order-bounded", degree=degree)


# ---------------------------------------------------------------------------
# exponent bookkeeping for the degree-shift factorization

def proof_exponents(p: float, r: float, order: float, n: int = 1) -> dict:
    """The three weight exponents of the degree-shift factorizations.

    alpha and beta drive the small-r chain (their positivity is the choice
    constraint on the shift order N), eta drives the intermediate-r chain;
    the inclusion step additionally wants n+1+alpha = (n+1+beta)/2, which
    the reported flag checks honestly (it holds at p = 2).
    """
    if p <= 1.0 or r < 1.0 or order <= 0.0:
        raise ValueError("need p > 1, r >= 1, N > 0")
    alpha = order + (n + 1) * (1.0 / p - 1.0)
    beta = 2.0 * order + (n + 1) * (1.0 - 2.0 / p)
    eta = order * r - (n + 1) * (1.0 - r / p)
    return {
        "alpha": alpha,
        "beta": beta,
        "eta": eta,
        "alpha_positive": alpha > 0.0,
        "beta_positive": beta > 0.0,
        "eta_positive": eta > 0.0,
        "inclusion_relation_holds":
            abs((n + 1 + alpha) - 0.5 * (n + 1 + beta)) < 1e-12,
    }
