"""Positive Borel measures on the ball and their summability functionals.

Three measure families are supported: finite atomic measures, radial power
densities ``scale * (1-|z|^2)^t dv`` (finite mass for t > -1), and
tabulated piecewise-constant polar densities on the disk.  On top of them
this module computes the Berezin transform, the averaged density over
Bergman balls, invariant-measure L^p norms, lattice sequence norms, and
the exponent selectors kappa(p, r) and s(p, q) together with the
Carleson-type s-norm functional they feed.

Radial measures take closed-form or hypergeometric fast paths (the Berezin
transform of a radial power density is a Gauss 2F1 value, and a radial
step density yields an elementary rational expression); everything else
falls back to the deterministic disk quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Union

import numpy as np
from scipy.special import gammaln, hyp2f1

from ._fastpath import kernel_weighted_sums, pairwise_sum, pseudo_distances
from .geometry import BallPoint, Lattice, ball_volume
from .quadrature import (DEFAULT_SCHEME, QuadratureScheme, ball_rule,
                         disk_grid, mobius_area_jacobian, mobius_shift,
                         radial_panel_sums, refine_and_flag)


# ---------------------------------------------------------------------------
# measure specifications

@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely many point masses; positions strictly inside the ball."""

    atoms: tuple[tuple[BallPoint, float], ...]

    def __post_init__(self):
        if len(self.atoms) < 1:
            raise ValueError("atomic measure needs at least one atom")
        for pt, mass in self.atoms:
            if not (mass >= 0.0 and math.isfinite(mass)):
                raise ValueError(f"atom mass must be finite and >= 0: {mass}")

    @staticmethod
    def single(position, mass: float = 1.0) -> "AtomicMeasure":
        return AtomicMeasure(((BallPoint.of(position), float(mass)),))

    @property
    def n(self) -> int:
        return self.atoms[0][0].n

    def positions(self) -> np.ndarray:
        return np.asarray([pt.z for pt, _ in self.atoms], dtype=np.complex128)

    def masses(self) -> np.ndarray:
        return np.asarray([m for _, m in self.atoms])

    def label(self) -> str:
        if len(self.atoms) == 1:
            pt = self.atoms[0][0]
            return f"atom({pt.norm():g})"
        return f"atoms[{len(self.atoms)}]"


@dataclass(frozen=True)
class RadialPowerMeasure:
    """Density scale * (1 - |z|^2)^t against normalized volume."""

    t: float
    scale: float = 1.0

    def __post_init__(self):
        if self.t <= -1.0:
            raise ValueError("radial power exponent must exceed -1 "
                             "(finite total mass)")
        if not (self.scale > 0.0 and math.isfinite(self.scale)):
            raise ValueError("scale must be positive and finite")

    def density(self, w: np.ndarray) -> np.ndarray:
        return self.scale * (1.0 - np.abs(np.asarray(w)) ** 2) ** self.t

    def label(self) -> str:
        if self.scale == 1.0:
            return f"radial_power(t={self.t:g})"
        return f"radial_power(t={self.t:g},scale={self.scale:g})"


@dataclass(frozen=True)
class GridDensityMeasure:
    """Piecewise-constant polar density on the disk (n = 1 only).

    ``values[i][j]`` is the density on the cell
    ``r_edges[i] <= |z| < r_edges[i+1]``, ``theta_edges[j] <= arg z <
    theta_edges[j+1]``; zero outside all cells.
    """

    r_edges: tuple[float, ...]
    theta_edges: tuple[float, ...]
    values: tuple[tuple[float, ...], ...]

    def __post_init__(self):
        re, te = np.asarray(self.r_edges), np.asarray(self.theta_edges)
        if re.ndim != 1 or re.size < 2 or np.any(np.diff(re) <= 0):
            raise ValueError("r_edges must be strictly increasing")
        if re[0] < 0 or re[-1] >= 1.0:
            raise ValueError("radial support must lie inside [0, 1)")
        if te.size < 2 or np.any(np.diff(te) <= 0) or te[0] < 0 \
                or te[-1] > 2 * np.pi + 1e-12:
            raise ValueError("theta_edges must increase within [0, 2pi]")
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (re.size - 1, te.size - 1):
            raise ValueError("values shape must be (radial cells, angular cells)")
        if np.any(~np.isfinite(vals)) or np.any(vals < 0):
            raise ValueError("density values must be finite and >= 0")

    @staticmethod
    def annulus(r_inner: float, r_outer: float,
                height: float = 1.0) -> "GridDensityMeasure":
        return GridDensityMeasure((r_inner, r_outer), (0.0, 2.0 * np.pi),
                                  ((height,),))

    def is_radial(self) -> bool:
        vals = np.asarray(self.values)
        full_circle = (abs(self.theta_edges[0]) < 1e-12
                       and abs(self.theta_edges[-1] - 2 * np.pi) < 1e-12)
        return full_circle and bool(np.all(vals == vals[:, :1]))

    def density(self, w: np.ndarray) -> np.ndarray:
        w = np.asarray(w, dtype=np.complex128)
        r = np.abs(w)
        th = np.mod(np.angle(w), 2.0 * np.pi)
        ri = np.searchsorted(self.r_edges, r, side="right") - 1
        ti = np.searchsorted(self.theta_edges, th, side="right") - 1
        vals = np.asarray(self.values)
        ok = (ri >= 0) & (ri < vals.shape[0]) & (ti >= 0) & (ti < vals.shape[1])
        out = np.zeros(w.shape)
        out[ok] = vals[ri[ok], ti[ok]]
        return out

    def label(self) -> str:
        return f"grid[{self.r_edges[0]:g},{self.r_edges[-1]:g}]"


MeasureSpec = Union[AtomicMeasure, RadialPowerMeasure, GridDensityMeasure]


def measure_to_json(mu: MeasureSpec) -> dict:
    if isinstance(mu, AtomicMeasure):
        atoms = []
        for pt, mass in mu.atoms:
            flat: list[float] = []
            for c in pt.coords:
                flat.extend((c.real, c.imag))
            atoms.append({"z": flat, "mass": mass})
        return {"type": "atomic", "atoms": atoms}
    if isinstance(mu, RadialPowerMeasure):
        return {"type": "radial_power", "t": mu.t, "scale": mu.scale}
    return {"type": "grid", "r": list(mu.r_edges),
            "theta": list(mu.theta_edges),
            "values": [list(row) for row in mu.values]}


def measure_from_json(obj: dict) -> MeasureSpec:
    kind = obj.get("type")
    if kind == "atomic":
        atoms = []
        for rec in obj["atoms"]:
            flat = rec["z"]
            coords = tuple(complex(flat[2 * i], flat[2 * i + 1])
                           for i in range(len(flat) // 2))
            atoms.append((BallPoint(coords), float(rec["mass"])))
        return AtomicMeasure(tuple(atoms))
    if kind == "radial_power":
        return RadialPowerMeasure(t=float(obj["t"]),
                                  scale=float(obj.get("scale", 1.0)))
    if kind == "grid":
        return GridDensityMeasure(tuple(float(v) for v in obj["r"]),
                                  tuple(float(v) for v in obj["theta"]),
                                  tuple(tuple(float(v) for v in row)
                                        for row in obj["values"]))
    raise ValueError(f"unknown measure type {kind!r}")


def is_radial(mu: MeasureSpec) -> bool:
    if isinstance(mu, RadialPowerMeasure):
        return True
    if isinstance(mu, GridDensityMeasure):
        return mu.is_radial()
    return False


# ---------------------------------------------------------------------------
# Berezin transform

def _radial_power_berezin(t: float, scale: float, n: int,
                          x: np.ndarray) -> np.ndarray:
    # closed 2F1 form of the transform of (1-|w|^2)^t dv at x = |z|^2
    const = scale * math.exp(gammaln(n + 1) + gammaln(t + 1)
                             - gammaln(n + 1 + t))
    return const * (1.0 - x) ** (n + 1) * hyp2f1(n + 1, n + 1, n + 1 + t, x)


def _radial_grid_berezin(mu: GridDensityMeasure, x: np.ndarray) -> np.ndarray:
    # per annulus: integral of |1-z conj(w)|^-4 over r in [r1,r2] has the
    # elementary antiderivative u / (1 - x u)^2 at u = r^2
    x = np.asarray(x)
    u_edges = np.asarray(mu.r_edges) ** 2
    heights = np.asarray(mu.values)[:, 0]
    acc = np.zeros_like(x, dtype=float)
    for h, u1, u2 in zip(heights, u_edges[:-1], u_edges[1:]):
        acc += h * (u2 / (1.0 - x * u2) ** 2 - u1 / (1.0 - x * u1) ** 2)
    return (1.0 - x) ** 2 * acc


@lru_cache(maxsize=32)
def _grid_measure_nodes(mu: GridDensityMeasure, per_cell: int = 12):
    # Gauss-Legendre cells aligned with the density's own mesh
    gx, gw = np.polynomial.legendre.leggauss(per_cell)
    rs, ws = [], []
    for r1, r2 in zip(mu.r_edges[:-1], mu.r_edges[1:]):
        r = 0.5 * (r2 - r1) * gx + 0.5 * (r1 + r2)
        rs.append(r)
        ws.append(gw * 0.5 * (r2 - r1) * 2.0 * r)
    thetas, tws = [], []
    for t1, t2 in zip(mu.theta_edges[:-1], mu.theta_edges[1:]):
        th = 0.5 * (t2 - t1) * gx + 0.5 * (t1 + t2)
        thetas.append(th)
        tws.append(gw * 0.5 * (t2 - t1) / (2.0 * np.pi))
    r = np.concatenate(rs)
    wr = np.concatenate(ws)
    th = np.concatenate(thetas)
    wt = np.concatenate(tws)
    nodes = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
    weights = (wr[:, None] * wt[None, :]).ravel() * mu.density(nodes)
    return nodes, weights


def berezin_transform(mu: MeasureSpec, z: BallPoint,
                      scheme: QuadratureScheme = DEFAULT_SCHEME) -> float:
    """mu-tilde(z): the measure seen through |k_{z,2}|^2."""
    z = BallPoint.of(z)
    if z.n == 1:
        return float(berezin_grid(mu, np.asarray([z.z]), scheme)[0])
    return _berezin_atomic_nd(mu, z)


def _berezin_atomic_nd(mu: MeasureSpec, z: BallPoint) -> float:
    if not isinstance(mu, AtomicMeasure):
        raise ValueError("only atomic measures are supported for n >= 2")
    num = 0.0
    zv = z.vector()
    u = z.norm() ** 2
    npow = z.n + 1
    for pt, mass in mu.atoms:
        inner = complex(np.sum(zv * np.conj(pt.vector())))
        num += mass * abs(1.0 - inner) ** (-2 * npow)
    return float(num * (1.0 - u) ** npow)


def berezin_grid(mu: MeasureSpec, zs: np.ndarray,
                 scheme: QuadratureScheme = DEFAULT_SCHEME,
                 n: int = 1) -> np.ndarray:
    """Vectorized Berezin transform at complex points (n = 1)."""
    if n != 1:
        raise ValueError("vectorized Berezin transform is n = 1 only")
    zs = np.asarray(zs, dtype=np.complex128)
    x = np.abs(zs) ** 2
    if isinstance(mu, RadialPowerMeasure):
        return _radial_power_berezin(mu.t, mu.scale, 1, x)
    if isinstance(mu, AtomicMeasure):
        acc = np.zeros(zs.shape)
        for pt, mass in mu.atoms:
            acc += mass * np.abs(1.0 - zs * np.conj(pt.z)) ** (-4.0)
        return acc * (1.0 - x) ** 2
    if mu.is_radial():
        return _radial_grid_berezin(mu, x)
    nodes, weights = _grid_measure_nodes(mu)
    vals = kernel_weighted_sums(nodes, weights, zs, 4.0, use_abs=True)
    return np.real(vals) * (1.0 - x) ** 2


# ---------------------------------------------------------------------------
# averaged measure over Bergman balls

@lru_cache(maxsize=64)
def _volume_profile_cache(delta: float, scheme: QuadratureScheme):
    grid = disk_grid(scheme)
    radii = grid.radial.r
    return radii, _ball_volumes_quadrature(radii, delta, scheme)


def _ball_volumes_quadrature(radii: np.ndarray, delta: float,
                             scheme: QuadratureScheme) -> np.ndarray:
    u, uw = ball_rule(delta, scheme)
    out = np.empty(radii.size)
    for i, r in enumerate(radii):
        out[i] = float(np.real(pairwise_sum(
            mobius_area_jacobian(complex(r), u) * uw)))
    return out


def _ball_masses(mu: MeasureSpec, delta: float, zs: np.ndarray,
                 scheme: QuadratureScheme, chunk: int = 256) -> np.ndarray:
    """mu(B(z, delta)) for an array of disk centers."""
    zs = np.asarray(zs, dtype=np.complex128)
    rho = math.tanh(delta)
    if isinstance(mu, AtomicMeasure):
        acc = np.zeros(zs.shape)
        for pt, mass in mu.atoms:
            acc += mass * (pseudo_distances(pt.z, zs) < rho)
        return acc
    dens = mu.density
    u, uw = ball_rule(delta, scheme)
    out = np.empty(zs.shape)
    for lo in range(0, zs.size, chunk):
        blk = zs[lo:lo + chunk, None]
        denom = 1.0 - np.conj(blk) * u[None, :]
        w_pts = (blk - u[None, :]) / denom
        jac = ((1.0 - np.abs(blk) ** 2) / np.abs(denom) ** 2) ** 2
        out[lo:lo + chunk] = np.sum(dens(w_pts) * jac * uw[None, :], axis=1)
    return out


def ball_average(mu: MeasureSpec, delta: float, z: BallPoint,
                 scheme: QuadratureScheme = DEFAULT_SCHEME) -> float:
    """mu-hat_delta(z) = mu(B(z, delta)) / v(B(z, delta))."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    z = BallPoint.of(z)
    if z.n == 1:
        mass = float(_ball_masses(mu, delta, np.asarray([z.z]), scheme)[0])
        u, uw = ball_rule(delta, scheme)
        vol = float(np.real(pairwise_sum(mobius_area_jacobian(z.z, u) * uw)))
        return mass / vol
    if not isinstance(mu, AtomicMeasure):
        raise ValueError("only atomic measures are supported for n >= 2")
    from .geometry import bergman_distance
    mass = sum(m for pt, m in mu.atoms if bergman_distance(pt, z) < delta)
    return float(mass / ball_volume(z, delta))


def ball_average_many(mu: MeasureSpec, delta: float, zs: np.ndarray,
                      scheme: QuadratureScheme = DEFAULT_SCHEME) -> np.ndarray:
    """Vectorized averaged density at disk points (n = 1)."""
    zs = np.asarray(zs, dtype=np.complex128)
    masses = _ball_masses(mu, delta, zs, scheme)
    radii = np.abs(zs)
    vols = _ball_volumes_quadrature(np.unique(radii), delta, scheme)
    lookup = dict(zip(np.unique(radii), vols))
    vol_arr = np.asarray([lookup[r] for r in radii])
    return masses / vol_arr


def mu_hat_grid(mu: MeasureSpec, delta: float,
                scheme: QuadratureScheme = DEFAULT_SCHEME) -> np.ndarray:
    """Averaged density on the full quadrature grid, radial-aware."""
    grid = disk_grid(scheme)
    radii, vols = _volume_profile_cache(float(delta), scheme)
    if is_radial(mu):
        prof = _ball_masses(mu, delta, radii.astype(np.complex128), scheme) / vols
        return np.repeat(prof, scheme.angular)
    masses = _ball_masses(mu, delta, grid.z, scheme)
    return masses / np.repeat(vols, scheme.angular)


# ---------------------------------------------------------------------------
# norms

def invariant_lp_norm(f, p: float,
                      scheme: QuadratureScheme = DEFAULT_SCHEME,
                      details: bool = False):
    """L^p norm against the invariant measure K(z,z) dv(z) on the disk.

    ``f`` is a callable on complex nodes or an array of nonnegative node
    values.  Divergence (the invariant measure has infinite mass) is
    detected by the boundary-refinement comparison and reported as inf.
    """
    if p < 1.0:
        raise ValueError("p must be at least 1")
    grid = disk_grid(scheme)
    vals = f(grid.z) if callable(f) else np.asarray(f)
    vals = np.broadcast_to(np.real(vals), grid.z.shape)
    if np.any(vals < -1e-12):
        raise ValueError("invariant norm expects nonnegative values")
    kdiag = (1.0 - np.abs(grid.z) ** 2) ** (-2.0)
    integrand = np.clip(vals, 0.0, None) ** p * kdiag
    flagged = refine_and_flag(radial_panel_sums(integrand, scheme), scheme)
    value = math.inf if flagged.diverged else flagged.value ** (1.0 / p)
    if details:
        return {"value": value, "diverged": flagged.diverged,
                "refinements": (flagged.coarse, flagged.fine)}
    return value


@lru_cache(maxsize=128)
def _lattice_averages(mu: MeasureSpec, lat: Lattice,
                      scheme: QuadratureScheme) -> np.ndarray:
    return ball_average_many(mu, lat.delta, lat.array(), scheme)


def lattice_seq_norm(mu: MeasureSpec, lat: Lattice, p: float,
                     scheme: QuadratureScheme = DEFAULT_SCHEME) -> float:
    """l^p norm of the averaged density sampled on a lattice."""
    if p < 1.0:
        raise ValueError("p must be at least 1")
    vals = _lattice_averages(mu, lat, scheme)
    return float(np.sum(vals ** p) ** (1.0 / p))


# ---------------------------------------------------------------------------
# exponent selectors and the embedding s-norm

def kappa_exponent(p: float, r: float) -> float:
    """Summing-norm growth exponent kappa(p, r).

    Piecewise in (p, r): 2 on p <= 2; then p', r, p as r crosses p' and p.
    The branches agree at the seams.
    """
    if not (p > 1.0 and math.isfinite(p)):
        raise ValueError("p must lie in (1, infinity)")
    if not (r >= 1.0 and math.isfinite(r)):
        raise ValueError("r must lie in [1, infinity)")
    if p <= 2.0:
        return 2.0
    conj = p / (p - 1.0)
    if r <= conj:
        return conj
    if r <= p:
        return float(r)
    return float(p)


def s_exponent(p: float, q: float) -> float:
    """s(p, q) = 2p / (2p - 2q + pq) on [1,2]^2; inf at (p, q) = (1, 2)."""
    if not (1.0 <= p <= 2.0 and 1.0 <= q <= 2.0):
        raise ValueError("p and q must lie in [1, 2]")
    denom = 2.0 * p - 2.0 * q + p * q
    if denom <= 1e-14:
        return math.inf
    return 2.0 * p / denom


def carleson_snorm(mu: MeasureSpec, p: float, q: float, delta: float,
                   scheme: QuadratureScheme = DEFAULT_SCHEME,
                   details: bool = False):
    """|| mu-hat_delta K^(q/2) ||_{L^s}^(1/q) with s = s(p, q).

    The essential sup over the grid replaces the L^s norm when s is
    infinite; divergence of the L^s integral is reported as inf.
    """
    s = s_exponent(p, q)
    grid = disk_grid(scheme)
    mh = mu_hat_grid(mu, delta, scheme)
    factor = (1.0 - np.abs(grid.z) ** 2) ** (-2.0 * (q / 2.0))
    big_f = mh * factor
    if math.isinf(s):
        value = float(np.max(big_f) ** (1.0 / q))
        if details:
            return {"value": value, "diverged": False, "s": s}
        return value
    flagged = refine_and_flag(radial_panel_sums(big_f ** s, scheme), scheme)
    value = math.inf if flagged.diverged \
        else float(flagged.value ** (1.0 / (s * q)))
    if details:
        return {"value": value, "diverged": flagged.diverged, "s": s,
                "refinements": (flagged.coarse, flagged.fine)}
    return value


def carleson_weight_values(mu: MeasureSpec, p: float, q: float, delta: float,
                           scheme: QuadratureScheme = DEFAULT_SCHEME) -> np.ndarray:
    """The pivot weight mu-hat^(2s/p') K^(sq/p' - 1) on the grid nodes.

    Satisfies (w K)^(p'/2) = (mu-hat K^(q/2))^s pointwise, which ties the
    embedding problem back to the Hilbert-space case.
    """
    s = s_exponent(p, q)
    if math.isinf(s):
        raise ValueError("weight construction needs a finite s(p, q)")
    conj = p / (p - 1.0)
    grid = disk_grid(scheme)
    mh = mu_hat_grid(mu, delta, scheme)
    kdiag = (1.0 - np.abs(grid.z) ** 2) ** (-2.0)
    return mh ** (2.0 * s / conj) * kdiag ** (s * q / conj - 1.0)


def weight_measure(mu: MeasureSpec, p: float, q: float, delta: float,
                   r_cells: int = 48) -> GridDensityMeasure:
    """Radial tabulation of the pivot weight as a measure (radial mu only)."""
    if not is_radial(mu):
        raise ValueError("weight tabulation implemented for radial measures")
    s = s_exponent(p, q)
    conj = p / (p - 1.0)
    edges = np.linspace(0.0, 0.999, r_cells + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    scheme = DEFAULT_SCHEME
    mh = ball_average_many(mu, delta, centers.astype(np.complex128), scheme)
    kdiag = (1.0 - centers ** 2) ** (-2.0)
    vals = mh ** (2.0 * s / conj) * kdiag ** (s * q / conj - 1.0)
    return GridDensityMeasure(tuple(edges), (0.0, 2.0 * np.pi),
                              tuple((float(v),) for v in vals))
