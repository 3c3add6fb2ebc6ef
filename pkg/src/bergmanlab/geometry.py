"""Points of the unit ball, Mobius involutions, Bergman distance, lattices.

The Bergman distance is evaluated through the closed Mobius formula
``beta(z, w) = artanh |phi_z(w)|`` rather than by geodesic integration; the
two agree (the integral form is kept as a test oracle) and the closed form
is exact and O(n).

Lattice generation works on the disk (n = 1): a candidate set stratified
uniformly in hyperbolic area is thinned by greedy farthest-point selection,
which guarantees pairwise separation, and a repair pass then inserts any
certification-grid point left uncovered (such a point is at distance at
least delta from every chosen point, so separation survives).  The result
covers the requested region at radius delta while the half-radius balls
stay pairwise disjoint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from ._fastpath import greedy_farthest, pseudo_distances

#: candidate density per unit hyperbolic area (empirically certifies
#: covering for delta >= 0.3)
CANDIDATE_DENSITY = 25.0
CERT_DENSITY_FACTOR = 4.0

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class BallPoint:
    """A point of the unit ball of C^n, |coords| < 1 strictly."""

    coords: tuple[complex, ...]

    def __post_init__(self):
        if len(self.coords) < 1:
            raise ValueError("dimension must be at least 1")
        if self.norm() >= 1.0:
            raise ValueError(f"point must lie strictly inside the ball "
                             f"(|z| = {self.norm()})")

    @staticmethod
    def of(value, n: int | None = None) -> "BallPoint":
        if isinstance(value, BallPoint):
            return value
        if np.isscalar(value):
            return BallPoint((complex(value),))
        return BallPoint(tuple(complex(v) for v in value))

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def z(self) -> complex:
        if self.n != 1:
            raise ValueError("scalar coordinate only defined for n = 1")
        return self.coords[0]

    def vector(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=np.complex128)

    def norm(self) -> float:
        return float(math.sqrt(sum(abs(c) ** 2 for c in self.coords)))


ORIGIN = BallPoint((0j,))


def _check_same_dim(a: BallPoint, b: BallPoint):
    if a.n != b.n:
        raise ValueError(f"dimension mismatch: {a.n} vs {b.n}")


def mobius_map(a: BallPoint, z: BallPoint) -> BallPoint:
    """The involutive automorphism of the ball interchanging ``a`` and 0."""
    a = BallPoint.of(a)
    z = BallPoint.of(z)
    _check_same_dim(a, z)
    av, zv = a.vector(), z.vector()
    a2 = float(np.real(np.vdot(av, av)))
    if a2 == 0.0:
        return BallPoint(tuple(-zv))
    s = math.sqrt(1.0 - a2)
    za = complex(np.sum(zv * np.conj(av)))       # <z, a>
    proj = (za / a2) * av
    out = (av - proj - s * (zv - proj)) / (1.0 - za)
    return BallPoint(tuple(out))


def pseudo_hyperbolic(z: BallPoint, w: BallPoint) -> float:
    """|phi_z(w)|, the pseudo-hyperbolic distance."""
    return mobius_map(BallPoint.of(z), BallPoint.of(w)).norm()


def bergman_distance(z: BallPoint, w: BallPoint) -> float:
    """beta(z, w) = (1/2) log((1 + p)/(1 - p)) with p = |phi_z(w)|."""
    p = pseudo_hyperbolic(z, w)
    return float(math.atanh(p))


def bergman_distances(center: complex, points: np.ndarray) -> np.ndarray:
    """Vectorized n = 1 Bergman distances from one center."""
    return np.arctanh(np.clip(pseudo_distances(complex(center), points),
                              0.0, 1.0 - 1e-16))


def ball_volume(center: BallPoint | complex, delta: float,
                n: int | None = None) -> float:
    """Normalized volume of the Bergman ball B(center, delta), closed form.

    Used as the exact reference for the quadrature route (n = 1) and as the
    volume in dimensions where disk quadrature is unavailable.
    """
    c = BallPoint.of(center, n)
    rho2 = math.tanh(delta) ** 2
    u = c.norm() ** 2
    dim = c.n
    return float(rho2 ** dim * ((1.0 - u) / (1.0 - rho2 * u)) ** (dim + 1))


# ---------------------------------------------------------------------------
# lattices (n = 1)

@dataclass(frozen=True)
class Lattice:
    """A delta-lattice on the disk in the Bergman metric.

    Pairwise distances are at least ``delta``; every point of the region
    ``beta(z, 0) <= region_radius`` lies within ``delta`` of a lattice point
    (certified on a dense grid at construction); the balls of radius
    ``separation * delta`` are pairwise disjoint.
    """

    points: tuple[complex, ...]
    delta: float
    region_radius: float
    multiplicity: int
    separation: float = 0.5

    def __len__(self):
        return len(self.points)

    def array(self) -> np.ndarray:
        return np.asarray(self.points, dtype=np.complex128)

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "regionRadius": self.region_radius,
            "points": [[float(p.real), float(p.imag)] for p in self.points],
            "separation": self.separation,
            "multiplicity": self.multiplicity,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @staticmethod
    def from_json(obj: dict) -> "Lattice":
        pts = tuple(complex(re, im) for re, im in obj["points"])
        return Lattice(points=pts, delta=float(obj["delta"]),
                       region_radius=float(obj["regionRadius"]),
                       multiplicity=int(obj["multiplicity"]),
                       separation=float(obj.get("separation", 0.5)))


def hyperbolic_area(region_radius: float) -> float:
    """Invariant-measure area of beta(z,0) <= R on the disk (= sinh^2 R)."""
    return math.sinh(region_radius) ** 2


def _sunflower(region_radius: float, density: float, offset: float,
               include_origin: bool) -> np.ndarray:
    """Deterministic point set stratified uniformly in hyperbolic area."""
    area = hyperbolic_area(region_radius)
    count = max(32, int(math.ceil(density * area)))
    k = np.arange(count)
    a = area * (k + 0.5) / count
    r = np.sqrt(a / (1.0 + a))
    theta = 2.0 * np.pi * np.mod(k * _GOLDEN + offset, 1.0)
    pts = r * np.exp(1j * theta)
    if include_origin:
        pts = np.concatenate(([0j], pts))
    return pts


def _cert_grid(region_radius: float, density: float) -> np.ndarray:
    pts = _sunflower(region_radius, density, offset=0.31, include_origin=True)
    rim = math.tanh(region_radius)
    m = max(64, int(8 * density ** 0.5 * region_radius))
    ring = rim * np.exp(2j * np.pi * np.arange(m) / m)
    return np.concatenate((pts, ring))


def _tree(points: np.ndarray) -> cKDTree:
    return cKDTree(np.column_stack((points.real, points.imag)))


def _euclidean_ball(center: complex, rho: float) -> tuple[complex, float]:
    """Euclidean center/radius of the Bergman ball B(center, artanh rho)."""
    u = abs(center) ** 2
    denom = 1.0 - rho * rho * u
    return center * (1.0 - rho * rho) / denom, rho * (1.0 - u) / denom


def _covering_counts(lattice_pts: np.ndarray, rho: float,
                     samples: np.ndarray) -> np.ndarray:
    """#{k : beta(sample, a_k) < delta} per sample, via Euclidean disks."""
    tree = _tree(samples)
    cs, rs = zip(*(_euclidean_ball(a, rho) for a in lattice_pts))
    centers = np.column_stack((np.real(cs), np.imag(cs)))
    hits = tree.query_ball_point(centers, np.asarray(rs))
    counts = np.zeros(samples.size, dtype=np.int64)
    for a, idx in zip(lattice_pts, hits):
        if idx:
            idx = np.asarray(idx, dtype=np.int64)
            # tree query is on the open/closed boundary; enforce strict metric
            inside = pseudo_distances(a, samples[idx]) < rho
            counts[idx[inside]] += 1
    return counts


def generate_lattice(delta: float, region_radius: float, n: int = 1,
                     density: float = CANDIDATE_DENSITY) -> Lattice:
    """Greedy farthest-point delta-lattice covering beta(z,0) <= R.

    Deterministic: the candidate layout and the greedy order are part of
    the contract.  Raises if the certification grid cannot confirm the
    covering (candidate grid too coarse for the requested ``delta``).
    """
    if delta <= 0.0 or region_radius <= 0.0:
        raise ValueError("delta and region_radius must be positive")
    if n != 1:
        raise ValueError("lattice generation is implemented for n = 1 only")
    cert_spacing = 2.0 / math.sqrt(CERT_DENSITY_FACTOR * density)
    if delta < cert_spacing:
        raise ValueError(
            f"candidate grid too coarse to certify covering: delta={delta} "
            f"is below the certification resolution {cert_spacing:.3f}; "
            f"raise `density` (currently {density}/unit hyperbolic area)")
    rho = math.tanh(delta)
    cands = _sunflower(region_radius, density, offset=0.0, include_origin=True)
    chosen_idx = greedy_farthest(cands, rho)
    chosen = list(cands[chosen_idx])

    # repair pass: any certification point at distance >= delta from every
    # chosen point can itself be added without violating separation
    cert = _cert_grid(region_radius, CERT_DENSITY_FACTOR * density)
    uncovered = _covering_counts(np.asarray(chosen), rho, cert) == 0
    if np.any(uncovered):
        sub = cert[uncovered]
        mind = np.full(sub.size, np.inf)
        for a in chosen:
            np.minimum(mind, pseudo_distances(a, sub), out=mind)
        guard = 0
        while True:
            k = int(np.argmax(mind))
            if mind[k] < rho:
                break
            chosen.append(complex(sub[k]))
            np.minimum(mind, pseudo_distances(sub[k], sub), out=mind)
            guard += 1
            if guard > sub.size:
                raise RuntimeError("covering repair failed to terminate")

    pts = np.asarray(chosen, dtype=np.complex128)
    counts = _covering_counts(pts, rho, cert)
    if counts.min() < 1:
        raise RuntimeError(
            f"covering certification failed at delta={delta}: "
            f"{int((counts < 1).sum())} uncovered grid points")
    return Lattice(points=tuple(pts.tolist()), delta=float(delta),
                   region_radius=float(region_radius),
                   multiplicity=int(counts.max()))


def covering_multiplicity(lat: Lattice,
                          samples: Iterable[BallPoint | complex]) -> int:
    """Largest number of lattice balls containing any one sample point."""
    arr = np.asarray([BallPoint.of(s).z for s in samples],
                     dtype=np.complex128)
    if arr.size == 0:
        raise ValueError("samples must be nonempty")
    radii = np.abs(arr)
    limit = math.tanh(lat.region_radius) * (1.0 + 1e-12)
    if np.any(radii > limit):
        bad = arr[np.argmax(radii)]
        raise ValueError(f"sample {bad!r} lies outside the certified region "
                         f"(beta > {lat.region_radius})")
    counts = _covering_counts(lat.array(), math.tanh(lat.delta), arr)
    return int(counts.max())
