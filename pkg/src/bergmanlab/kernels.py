"""Bergman kernels, kernel norms, Forelli-Rudin integrals, degree scaling.

The weighted kernel on the ball is ``K_a(z, w) = (1 - <z,w>)^-(n+1+a)``
with ``<z,w> = sum z_j conj(w_j)``; ``a = 0`` is the unweighted case.  Its
A^p norm reduces to a Gauss hypergeometric value,

    ||K_z||_{A^p_a}^p = 2F1(c, c; n+1+a; |z|^2),   c = p (n+1+a) / 2,

which is exact in every dimension (the p = 2 case collapses to
``K(z,z)^{1/2}``); disk quadrature is kept as an independent cross-check.
All Gamma-function ratios go through log-gamma so degree-10^3 truncations
do not overflow.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy.special import gammaln, hyp2f1

from .geometry import BallPoint
from ._fastpath import pairwise_sum
from .quadrature import (DEFAULT_SCHEME, QuadratureScheme, disk_grid,
                         radial_panel_sums, refine_and_flag)


@dataclass(frozen=True)
class KernelParams:
    """Dimension and weight exponent of the Bergman space A^2_alpha."""

    n: int = 1
    alpha: float = 0.0

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("dimension must be at least 1")
        if self.alpha <= -1.0:
            raise ValueError("weight exponent must exceed -1")

    @property
    def power(self) -> float:
        return self.n + 1 + self.alpha


UNWEIGHTED = KernelParams()


def hermitian_inner(z: BallPoint, w: BallPoint) -> complex:
    z, w = BallPoint.of(z), BallPoint.of(w)
    if z.n != w.n:
        raise ValueError(f"dimension mismatch: {z.n} vs {w.n}")
    return complex(np.sum(z.vector() * np.conj(w.vector())))


def kernel_eval(kp: KernelParams, z: BallPoint, w: BallPoint) -> complex:
    """K_alpha(z, w) = (1 - <z,w>)^-(n+1+alpha)."""
    return complex((1.0 - hermitian_inner(z, w)) ** (-kp.power))


def kernel_diag(kp: KernelParams, z: BallPoint) -> float:
    u = BallPoint.of(z).norm() ** 2
    return float((1.0 - u) ** (-kp.power))


def kernel_values(kp: KernelParams, z: complex, w: np.ndarray) -> np.ndarray:
    """Vectorized n = 1 evaluation of K(z, w) over an array of w."""
    return (1.0 - z * np.conj(np.asarray(w, dtype=np.complex128))) ** (-kp.power)


def kernel_ap_norm(kp: KernelParams, z: BallPoint, p: float) -> float:
    """||K_z||_{A^p_alpha} through the hypergeometric closed form.

    For p = 1 the boundary growth of the norm is only logarithmic in
    1/(1-|z|) (the Forelli-Rudin exponent vanishes); the exact value is
    still returned, with a borderline warning.
    """
    if p < 1.0:
        raise ValueError("p must be at least 1")
    z = BallPoint.of(z)
    if z.n != kp.n:
        raise ValueError("point dimension does not match kernel parameters")
    if abs(p * kp.power - kp.power) < 1e-12:
        warnings.warn("borderline kernel-norm growth (logarithmic regime); "
                      "values near the boundary converge slowly",
                      RuntimeWarning, stacklevel=2)
    c = 0.5 * p * kp.power
    val = float(hyp2f1(c, c, kp.power, z.norm() ** 2))
    return val ** (1.0 / p)


def normalized_kernel_eval(kp: KernelParams, z: BallPoint, p: float,
                           w: BallPoint) -> complex:
    """k_{z,p}(w) = K(w, z) / ||K_z||_{A^p}; unit A^p norm by construction."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        nrm = kernel_ap_norm(kp, z, p)
    return kernel_eval(kp, BallPoint.of(w), BallPoint.of(z)) / nrm


def derivative_kernel(z: BallPoint, w: BallPoint) -> complex:
    """d/dz_1 of the unweighted kernel: (n+1) conj(w_1) (1-<z,w>)^-(n+2)."""
    z, w = BallPoint.of(z), BallPoint.of(w)
    if z.n != w.n:
        raise ValueError(f"dimension mismatch: {z.n} vs {w.n}")
    n = z.n
    return complex((n + 1) * np.conj(w.coords[0])
                   * (1.0 - hermitian_inner(z, w)) ** (-(n + 2)))


# ---------------------------------------------------------------------------
# Forelli-Rudin integrals and the induced integral operator

@lru_cache(maxsize=64)
def _boundary_weight(scheme: QuadratureScheme, b: float):
    grid = disk_grid(scheme)
    return grid, (1.0 - np.abs(grid.z) ** 2) ** b


def forelli_rudin(b: float, c: float, kp: KernelParams, z: BallPoint,
                  scheme: QuadratureScheme = DEFAULT_SCHEME,
                  details: bool = False):
    """integral of (1-|w|^2)^b |1 - <z,w>|^-c over the disk (n = 1).

    Divergence (reached numerically as b drops to -1 and below) is reported
    as ``math.inf``; the two boundary-refinement values are available via
    ``details=True``.  The growth borderline ``c - (n+1) - b = 0`` carries a
    warning since only the order of growth, not a limit constant, exists.
    """
    if kp.n != 1:
        raise ValueError("Forelli-Rudin quadrature is implemented for n = 1")
    z = BallPoint.of(z)
    grid, bf = _boundary_weight(scheme, float(b))
    integrand = np.abs(1.0 - z.z * np.conj(grid.z)) ** (-c) * bf
    flagged = refine_and_flag(radial_panel_sums(integrand, scheme), scheme)
    a_exp = c - (kp.n + 1) - b
    if abs(a_exp) < 1e-12:
        warnings.warn("borderline Forelli-Rudin exponent (logarithmic "
                      "growth); no finite boundary limit exists",
                      RuntimeWarning, stacklevel=2)
    if details:
        return {"value": flagged.as_float(), "diverged": flagged.diverged,
                "refinements": (flagged.coarse, flagged.fine),
                "borderline": bool(abs(a_exp) < 1e-12)}
    return flagged.as_float()


def apply_forelli_rudin(b: float, c: float,
                        f: Callable[[np.ndarray], np.ndarray] | np.ndarray,
                        z: BallPoint,
                        scheme: QuadratureScheme = DEFAULT_SCHEME) -> complex:
    """S_{b,c} f(z) = integral of f(w) (1-|w|^2)^b |1-<z,w>|^-c dv(w).

    A divergence flag (refinement comparison on the |f|-mass) comes back as
    complex infinity; callers test with ``np.isinf``.
    """
    z = BallPoint.of(z)
    grid, bf = _boundary_weight(scheme, float(b))
    fv = f(grid.z) if callable(f) else np.broadcast_to(np.asarray(f), grid.z.shape)
    integrand = fv * np.abs(1.0 - z.z * np.conj(grid.z)) ** (-c) * bf
    mag = refine_and_flag(radial_panel_sums(np.abs(integrand), scheme), scheme)
    if mag.diverged:
        return complex(math.inf, 0.0)
    return complex(pairwise_sum(integrand * grid.w))


# ---------------------------------------------------------------------------
# holomorphic polynomials and the fractional degree-scaling operators

def graded_indices(n: int, degree: int) -> list[tuple[int, ...]]:
    """Multi-indices |m| <= degree in graded lexicographic order."""
    out: list[tuple[int, ...]] = []

    def level(total: int):
        def rec(prefix, remaining, slots):
            if slots == 1:
                out.append(prefix + (remaining,))
                return
            for head in range(remaining, -1, -1):
                rec(prefix + (head,), remaining - head, slots - 1)
        rec((), total, n)

    for total in range(degree + 1):
        level(total)
    return out


@dataclass(frozen=True)
class HoloPoly:
    """Polynomial in z_1..z_n with finitely many monomial coefficients."""

    n: int
    degree: int
    coeffs: tuple[tuple[tuple[int, ...], complex], ...]

    @staticmethod
    def make(n: int, coeffs: dict[tuple[int, ...], complex]) -> "HoloPoly":
        clean = {tuple(m): complex(v) for m, v in coeffs.items() if v != 0}
        degree = max((sum(m) for m in clean), default=0)
        for m in clean:
            if len(m) != n or any(k < 0 for k in m):
                raise ValueError(f"bad multi-index {m} for dimension {n}")
        ordered = tuple(sorted(clean.items()))
        return HoloPoly(n=n, degree=degree, coeffs=ordered)

    @staticmethod
    def from_dense(vec: Iterable[complex]) -> "HoloPoly":
        return HoloPoly.make(1, {(j,): complex(v) for j, v in enumerate(vec)
                                 if v != 0})

    def coeff_map(self) -> dict[tuple[int, ...], complex]:
        return dict(self.coeffs)

    def dense(self, degree: int | None = None) -> np.ndarray:
        if self.n != 1:
            raise ValueError("dense coefficients only defined for n = 1")
        d = self.degree if degree is None else degree
        out = np.zeros(d + 1, dtype=np.complex128)
        for (m,), v in self.coeffs:
            if m <= d:
                out[m] = v
        return out

    def __call__(self, points):
        if self.n == 1:
            pts = np.asarray(points, dtype=np.complex128)
            return np.polynomial.polynomial.polyval(pts, self.dense())
        z = BallPoint.of(points).vector()
        return complex(sum(v * np.prod(z ** np.asarray(m))
                           for m, v in self.coeffs))

    def to_json(self) -> dict:
        return {"n": self.n, "degree": self.degree,
                "coeffs": [{"m": list(m), "re": v.real, "im": v.imag}
                           for m, v in self.coeffs]}

    @staticmethod
    def from_json(obj: dict) -> "HoloPoly":
        return HoloPoly.make(int(obj["n"]),
                             {tuple(c["m"]): complex(c["re"], c["im"])
                              for c in obj["coeffs"]})


def degree_scaling_ratios(n: int, order: float, degree: int) -> np.ndarray:
    """Gamma(n+1) Gamma(n+1+j+N) / (Gamma(n+1+N) Gamma(n+1+j)), j <= degree."""
    j = np.arange(degree + 1, dtype=np.float64)
    return np.exp(gammaln(n + 1) + gammaln(n + 1 + j + order)
                  - gammaln(n + 1 + order) - gammaln(n + 1 + j))


def apply_fractional(direction: str, order: float, f: HoloPoly) -> HoloPoly:
    """Scale each homogeneous block of ``f`` by the degree ratio (or inverse).

    ``raise`` maps the kernel of exponent n+1 to exponent n+1+N; ``lower``
    is its inverse, so the two compose to the identity coefficientwise.
    """
    if direction not in ("raise", "lower"):
        raise ValueError("direction must be 'raise' or 'lower'")
    if order <= 0:
        raise ValueError("order must be positive")
    ratios = degree_scaling_ratios(f.n, order, f.degree)
    if direction == "lower":
        ratios = 1.0 / ratios
    return HoloPoly.make(f.n, {m: v * ratios[sum(m)] for m, v in f.coeffs})


def binomial_series_coeffs(power: float, degree: int) -> np.ndarray:
    """Coefficients of (1 - x)^-power, via log-gamma: Gamma(j+c)/(Gamma(c) j!)."""
    j = np.arange(degree + 1, dtype=np.float64)
    return np.exp(gammaln(j + power) - gammaln(power) - gammaln(j + 1))


def kernel_poly(w: BallPoint, power: float, degree: int) -> HoloPoly:
    """Degree-truncated expansion of z -> (1 - <z,w>)^-power.

    In one variable the j-th coefficient is the binomial series coefficient
    times conj(w)^j; in several variables each block spreads over the
    multinomials of <z,w>^j.
    """
    w = BallPoint.of(w)
    bins = binomial_series_coeffs(power, degree)
    if w.n == 1:
        wc = np.conj(w.z)
        vec = bins * wc ** np.arange(degree + 1)
        return HoloPoly.from_dense(vec)
    coeffs: dict[tuple[int, ...], complex] = {}
    wconj = np.conj(w.vector())
    for m in graded_indices(w.n, degree):
        j = sum(m)
        logmult = gammaln(j + 1) - sum(gammaln(k + 1) for k in m)
        coeffs[m] = bins[j] * math.exp(logmult) * np.prod(wconj ** np.asarray(m))
    return HoloPoly.make(w.n, coeffs)
