"""Coifman-Rochberg lattices and Suarez coverings of the polydisc.

One-variable cells are hyperbolic annular sectors ``{a <= beta(0, w) < b,
theta0 <= arg w < theta0 + width}``.  Ring ``j`` spans hyperbolic radii
``[j h, (j + 1) h)`` with ``h = rho / 2`` and is cut into the fewest equal
sectors whose corners stay within hyperbolic distance ``rho`` of the sector
centre.  Polydisc cells are products of one-variable cells.  Enlarged cells
``{z : beta(z, cell) <= e}`` are decided with exact distances to sectors.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

from .config import SAMPLING_MARGIN
from .geometry import PolyPoint, as_array, euclidean_disc, mobius
from .quadrature import QuadratureSpec, annulus_rule, tensor_rule

TWO_PI = 2 * np.pi


class CoveringPropertyError(RuntimeError):
    """A sampled covering property failed; the message names the property."""


# -- one-variable sectors ------------------------------------------------------

@dataclass(frozen=True)
class Sector:
    """Geometry of a one-variable cell, radii measured with ``beta(0, .)``."""

    ring: int
    sector: int
    beta_inner: float
    beta_outer: float
    theta0: float
    width: float

    @property
    def r_inner(self) -> float:
        return float(np.tanh(self.beta_inner))

    @property
    def r_outer(self) -> float:
        return 1.0 if np.isinf(self.beta_outer) else float(np.tanh(self.beta_outer))

    @property
    def full(self) -> bool:
        return self.width >= TWO_PI

    @property
    def center(self) -> complex:
        if self.beta_inner == 0 and self.full:
            return 0j
        m = 0.5 * (self.beta_inner + self.beta_outer)
        return complex(np.tanh(m) * np.exp(1j * (self.theta0 + 0.5 * self.width)))

    @property
    def volume(self) -> float:
        return self.width / TWO_PI * (self.r_outer**2 - self.r_inner**2)

    def to_json(self):
        return {"ring": self.ring, "sector": self.sector, "beta_inner": self.beta_inner,
                "beta_outer": self.beta_outer, "theta0": self.theta0, "width": self.width}


def _angle_offset(w, theta0):
    return np.mod(np.angle(w) - theta0, TWO_PI)


def sector_contains(sec: Sector, w) -> np.ndarray:
    """Half-open membership in the sector."""
    w = np.asarray(w, dtype=complex)
    b = np.arctanh(np.minimum(np.abs(w), 1.0))
    radial = (b >= sec.beta_inner) & (b < sec.beta_outer)
    if sec.full:
        return radial
    count = int(round(TWO_PI / sec.width))
    if np.isclose(count * sec.width, TWO_PI, rtol=0, atol=1e-12) and np.isclose(sec.theta0, sec.sector * sec.width):
        # lattice sector: the same integer index as DiscLattice.locate, so edges are never shared
        k = np.minimum(np.floor(np.mod(np.angle(w), TWO_PI) / (TWO_PI / count)).astype(np.int64), count - 1)
        return radial & (k == sec.sector)
    return radial & (_angle_offset(w, sec.theta0) < sec.width)


def _dist_to_ray_segment(w, psi, lo, hi):
    """beta-distance from ``w`` to ``{tanh(s) e^{i psi} : lo <= s <= hi}``."""
    bw = np.arctanh(np.minimum(np.abs(w), 1.0))
    delta = np.abs(np.angle(np.exp(1j * (np.angle(w) - psi))))
    # foot of the perpendicular, in beta units (tanh(2s) = tanh(2 bw) cos delta)
    foot = 0.5 * np.arctanh(np.clip(np.tanh(2 * bw) * np.cos(delta), 0.0, 1 - 1e-16))
    s = np.clip(foot, lo, hi)
    q = np.tanh(s) * np.exp(1j * psi)
    return np.arctanh(np.minimum(np.abs(mobius(w, q)), 1.0))


def sector_distance(sec: Sector, w) -> np.ndarray:
    """Exact hyperbolic distance ``beta(w, sector)`` (zero inside)."""
    w = np.asarray(w, dtype=complex)
    b = np.arctanh(np.minimum(np.abs(w), 1.0))
    radial = np.maximum(0.0, np.maximum(sec.beta_inner - b, b - sec.beta_outer))
    if sec.full:
        return radial
    inside_angle = _angle_offset(w, sec.theta0) <= sec.width
    d1 = _dist_to_ray_segment(w, sec.theta0, sec.beta_inner, sec.beta_outer)
    d2 = _dist_to_ray_segment(w, sec.theta0 + sec.width, sec.beta_inner, sec.beta_outer)
    return np.where(inside_angle, radial, np.minimum(d1, d2))


SECTOR_CONSTANT = 0.57


def _corner_angle(m: float, b: float, rho: float) -> float:
    """Largest half-width keeping the outer corners within ``rho`` of the centre."""
    # hyperbolic law of cosines in curvature -1 units, written to avoid cancellation:
    # 1 - cos(theta) = (cosh 2rho - cosh 2(b - m)) / (sinh 2m sinh 2b)
    one_minus_c = (np.cosh(2 * rho) - np.cosh(2 * (b - m))) / (np.sinh(2 * m) * np.sinh(2 * b))
    return float(np.pi if one_minus_c >= 2 else 2 * np.arcsin(np.sqrt(one_minus_c / 2)))


def _sector_count(m: float, b: float, rho: float) -> int:
    """Sector count proportional to the ring's hyperbolic circumference over ``rho``.

    ``SECTOR_CONSTANT`` is just above the worst case of the corner condition, so
    the increment loop is a safeguard rather than the rule.
    """
    count = max(2, int(np.ceil(SECTOR_CONSTANT * np.pi * np.sinh(2 * m) / rho)))
    limit = _corner_angle(m, b, rho)
    while np.pi / count > limit:
        count += 1
    return count


class DiscLattice:
    """Coifman-Rochberg lattice on the disc, truncated at ``beta_max``.

    Data is stored per ring; per-cell arrays are built on first use, so very
    deep truncations stay cheap for ring-wise consumers.
    """

    def __init__(self, rho: float, beta_max: float):
        if rho <= 0 or beta_max <= 0:
            raise ValueError("rho and beta_max must be positive")
        self.rho = float(rho)
        self.beta_max = float(beta_max)
        h = self.rho / 2
        self.step = h
        self.n_rings = int(np.ceil(self.beta_max / h - 1e-12))
        self.covered_radius = self.n_rings * h
        counts = [1]
        for j in range(1, self.n_rings):
            m, b = (j + 0.5) * h, (j + 1) * h
            M = _sector_count(m, b, self.rho)
            half = np.pi / M
            # the ball of radius rho/4 about the centre must clear both radial edges
            if np.sinh(self.rho / 2) > np.sinh(2 * m) * np.sin(min(half, np.pi / 2)) + 1e-15:
                raise CoveringPropertyError(f"ring {j}: inner containment impossible with {M} sectors")
            counts.append(M)
        self.sector_counts = np.array(counts, dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.sector_counts)])
        j = np.arange(self.n_rings)
        self.ring_beta_inner = j * h
        self.ring_beta_outer = (j + 1) * h
        self.ring_radius = np.where(j == 0, 0.0, np.tanh((j + 0.5) * h))
        a, b = self.ring_beta_inner, self.ring_beta_outer
        # tanh^2 b - tanh^2 a without cancellation near the circle
        self.ring_mass = np.sinh(b - a) * np.sinh(b + a) / (np.cosh(a) * np.cosh(b)) ** 2
        self.ring_volume = self.ring_mass / self.sector_counts

    def __len__(self):
        return int(self.offsets[-1])

    def ring_of(self, i):
        return np.searchsorted(self.offsets, i, side="right") - 1

    def _cells(self, i):
        i = np.asarray(i, dtype=np.int64)
        ring = self.ring_of(i)
        sector = i - self.offsets[ring]
        width = TWO_PI / self.sector_counts[ring]
        return ring, sector, width

    def sector_at(self, i: int) -> Sector:
        ring, sector, width = self._cells(int(i))
        return Sector(int(ring), int(sector), float(self.ring_beta_inner[ring]),
                      float(self.ring_beta_outer[ring]), float(sector * width), float(width))

    def center_of(self, i) -> np.ndarray:
        ring, sector, width = self._cells(i)
        return np.where(ring == 0, 0j, self.ring_radius[ring] * np.exp(1j * (sector + 0.5) * width))

    @cached_property
    def centers(self) -> np.ndarray:
        return self.center_of(np.arange(len(self)))

    @cached_property
    def volumes(self) -> np.ndarray:
        return np.repeat(self.ring_volume, self.sector_counts)

    def locate(self, w) -> np.ndarray:
        """Index of the cell containing each point, ``-1`` outside the covered region."""
        w = np.asarray(w, dtype=complex)
        b = np.arctanh(np.minimum(np.abs(w), 1.0))
        j = np.floor(b / self.step).astype(np.int64)
        out = np.full(w.shape, -1, dtype=np.int64)
        ok = j < self.n_rings
        jj = j[ok]
        M = self.sector_counts[jj]
        k = np.floor(np.mod(np.angle(w[ok]), TWO_PI) / (TWO_PI / M)).astype(np.int64)
        out[ok] = self.offsets[jj] + np.minimum(k, M - 1)
        return out


# -- polydisc cells -------------------------------------------------------------

@dataclass(frozen=True)
class LatticeCell:
    """Product cell, possibly enlarged to ``{z : beta(z, cell) <= enlargement}``."""

    index: tuple
    center: PolyPoint
    sectors: tuple
    enlargement: float = 0.0

    @property
    def n(self) -> int:
        return len(self.sectors)

    @property
    def base_volume(self) -> float:
        return float(np.prod([s.volume for s in self.sectors]))

    def distance(self, points) -> np.ndarray:
        """``beta(z, base cell)`` with the polydisc max convention."""
        pts = np.asarray(points, dtype=complex).reshape(-1, self.n)
        return np.max(np.stack([sector_distance(s, pts[:, l]) for l, s in enumerate(self.sectors)]), axis=0)

    def contains(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=complex).reshape(-1, self.n)
        if self.enlargement == 0:
            return np.all(np.stack([sector_contains(s, pts[:, l]) for l, s in enumerate(self.sectors)]), axis=0)
        return self.distance(pts) <= self.enlargement

    def enlarged(self, sigma: float) -> "LatticeCell":
        return LatticeCell(self.index, self.center, self.sectors, self.enlargement + sigma)

    def to_json(self):
        return {"index": list(self.index), "center": self.center.to_json(),
                "sectors": [s.to_json() for s in self.sectors],
                "enlargement": self.enlargement, "volume": self.base_volume}


class CRLattice(Sequence):
    """Product Coifman-Rochberg lattice; a sequence of :class:`LatticeCell`."""

    def __init__(self, axis: DiscLattice, n: int):
        if n < 1:
            raise ValueError("n must be at least 1")
        self.axis = axis
        self.n = n
        self.shape = (len(axis),) * n

    @property
    def rho(self) -> float:
        return self.axis.rho

    @property
    def beta_max(self) -> float:
        return self.axis.beta_max

    @property
    def covered_radius(self) -> float:
        return self.axis.covered_radius

    def __len__(self):
        return int(np.prod(self.shape))

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(i)
        idx = np.unravel_index(i, self.shape)
        secs = tuple(self.axis.sector_at(int(k)) for k in idx)
        center = PolyPoint([complex(self.axis.center_of(int(k))) for k in idx])
        return LatticeCell(tuple(int(k) for k in idx), center, secs)

    def centers(self) -> np.ndarray:
        grids = np.meshgrid(*([self.axis.centers] * self.n), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def volumes(self) -> np.ndarray:
        out = np.ones(1)
        for _ in range(self.n):
            out = np.multiply.outer(out, self.axis.volumes).ravel()
        return out

    def locate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=complex).reshape(-1, self.n)
        per_axis = np.stack([self.axis.locate(pts[:, l]) for l in range(self.n)], axis=-1)
        out = np.full(len(pts), -1, dtype=int)
        ok = np.all(per_axis >= 0, axis=-1)
        if ok.any():
            out[ok] = np.ravel_multi_index(tuple(per_axis[ok].T), self.shape)
        return out

    def to_json(self):
        return {"kind": "cr_lattice", "rho": self.rho, "n": self.n, "beta_max": self.beta_max,
                "covered_radius": self.covered_radius, "cells": [c.to_json() for c in self]}


def build_cr_lattice_disc(rho: float, beta_max: float) -> CRLattice:
    """One-variable lattice: cells pinched between ``D(w, rho/4)`` and ``D(w, rho)``."""
    return CRLattice(DiscLattice(rho, beta_max), 1)


def build_cr_lattice_polydisc(rho: float, n: int, beta_max: float) -> CRLattice:
    """Products of one-variable cells, indexed by n-tuples."""
    return CRLattice(DiscLattice(rho, beta_max), n)


def volume_ratio_bounds(rho: float, n: int = 1) -> tuple[float, float]:
    """Bounds on ``v(cell) / prod (1 - |w_l|^2)^2`` implied by the two containments.

    A hyperbolic disc of radius ``r`` about ``w`` has volume
    ``t^2 (1-|w|^2)^2 / (1 - t^2 |w|^2)^2`` with ``t = tanh r``.
    """
    lo = np.tanh(rho / 4) ** 2
    hi = np.sinh(2 * rho) ** 2 / 4
    return float(lo**n), float(hi**n)


def enlarge(cells, sigma: float) -> list:
    """``{z : rho(z, cell) <= tanh(sigma)}`` for each cell."""
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    return [c.enlarged(sigma) for c in cells]


def cell_volume(cell: LatticeCell, quad: Optional[QuadratureSpec] = None) -> float:
    """Normalized volume of a cell.

    Base cells use the closed form for annular sectors; enlarged cells
    integrate their indicator over the bounding annulus axis by axis.
    """
    if cell.enlargement == 0:
        return cell.base_volume
    quad = quad or QuadratureSpec(400, 2048)
    out = 1.0
    for s in cell.sectors:
        lo = max(0.0, s.beta_inner - cell.enlargement)
        hi = s.beta_outer + cell.enlargement
        nodes, weights = annulus_rule(np.tanh(lo), np.tanh(hi), quad)
        out *= float(np.sum(weights * (sector_distance(s, nodes) <= cell.enlargement)))
    return out


def sector_cell(r_inner: float, r_outer: float, theta0: float = 0.0, width: float = TWO_PI) -> LatticeCell:
    """A single one-variable cell given by Euclidean radii (``r_outer = 1`` allowed)."""
    b_in = float(np.arctanh(r_inner))
    b_out = np.inf if r_outer >= 1 else float(np.arctanh(r_outer))
    sec = Sector(0, 0, b_in, b_out, theta0, width)
    return LatticeCell((0,), PolyPoint([sec.center]), (sec,))


# -- Suarez coverings --------------------------------------------------------------

def sample_polydisc(rng, m: int, n: int, beta_max: float, hyperbolic: bool = True) -> np.ndarray:
    """Random points with ``beta(0, z_l) < beta_max`` on every axis.

    ``hyperbolic=True`` draws the radius uniformly in ``beta`` so inner rings are
    sampled as densely as outer ones; otherwise points are area-uniform.
    """
    if hyperbolic:
        b = rng.uniform(0, beta_max, (m, n))
        r = np.tanh(b)
    else:
        R = np.tanh(beta_max)
        r = R * np.sqrt(rng.uniform(0, 1, (m, n)))
    return r * np.exp(1j * rng.uniform(0, TWO_PI, (m, n)))


@dataclass
class Covering:
    """Nested families ``F_{i, j}``, ``i = 0..k+1``, over a truncated region."""

    base: CRLattice
    sigma: float
    k: int
    overlap_bound: int = 0
    diameter_bounds: tuple = ()
    report: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def beta_max(self) -> float:
        return self.base.beta_max

    @property
    def n_levels(self) -> int:
        return self.k + 2

    def level(self, i: int) -> list:
        if not 0 <= i <= self.k + 1:
            raise IndexError(f"level {i} outside 0..{self.k + 1}")
        return enlarge(self.base, i * self.sigma)

    def membership(self, i: int, points) -> np.ndarray:
        """Boolean matrix ``[point, cell]`` for level ``i``."""
        pts = np.asarray(points, dtype=complex).reshape(-1, self.n)
        ax = self.base.axis
        e = i * self.sigma
        per_axis = []
        for l in range(self.n):
            cols = np.empty((len(pts), len(ax)), dtype=bool)
            for c in range(len(ax)):
                sec = ax.sector_at(c)
                cols[:, c] = sector_contains(sec, pts[:, l]) if e == 0 else sector_distance(sec, pts[:, l]) <= e
            per_axis.append(cols)
        out = per_axis[0]
        for cols in per_axis[1:]:
            out = (out[:, :, None] & cols[:, None, :]).reshape(len(pts), -1)
        return out

    def to_json(self):
        return {"kind": "suarez_covering", "sigma": self.sigma, "k": self.k, "n": self.n,
                "beta_max": self.beta_max, "base_rho": self.base.rho,
                "overlap_bound": self.overlap_bound,
                "diameter_bounds": list(self.diameter_bounds),
                "cells": [c.to_json() for c in self.base], "report": self.report}


def _corner_points(lattice: CRLattice, rng, jitter: float = 1e-9) -> np.ndarray:
    ax = lattice.axis
    pts = []
    for c in range(len(ax)):
        s = ax.sector_at(c)
        for b in (s.beta_inner, min(s.beta_outer, ax.covered_radius)):
            for th in (s.theta0, s.theta0 + s.width):
                pts.append(np.tanh(b) * np.exp(1j * th))
    axis_pts = np.asarray(pts) * (1 - jitter * rng.uniform(size=len(pts)))
    axis_pts = axis_pts[np.arctanh(np.abs(axis_pts)) < lattice.beta_max]
    if lattice.n == 1:
        return axis_pts[:, None]
    pick = rng.integers(0, len(axis_pts), (len(axis_pts) * 4, lattice.n))
    return axis_pts[pick]


def check_covering(cov: Covering, points: np.ndarray, margin: float = SAMPLING_MARGIN,
                   rng=None, max_pairs: int = 4000) -> dict:
    """Sample properties (i)-(v) of a Suarez covering; returns violation counts."""
    rng = rng or np.random.default_rng(0)
    pts = np.asarray(points, dtype=complex).reshape(-1, cov.n)
    report = {"samples": len(pts)}
    members = [cov.membership(i, pts) for i in range(cov.k + 2)]
    counts0 = members[0].sum(axis=1)
    report["disjointness"] = int(np.sum(counts0 > 1))
    report["coverage"] = int(np.sum(counts0 < 1))
    report["nesting"] = int(sum(np.sum(members[i] & ~members[i + 1]) for i in range(cov.k + 1)))
    overlap = [int(m.sum(axis=1).max()) for m in members]
    report["max_overlap"] = overlap
    if cov.overlap_bound:
        report["overlap"] = int(sum(np.sum(m.sum(axis=1) > cov.overlap_bound) for m in members))
    t = np.tanh(cov.sigma)
    sep_viol = 0
    diam_viol = 0
    for i in range(cov.k + 1):
        inner, outer = members[i], members[i + 1]
        for c in np.flatnonzero(inner.any(axis=0)):
            xs = pts[inner[:, c]]
            ys = pts[~outer[:, c]]
            if len(xs) > 300:
                xs = xs[rng.choice(len(xs), 300, replace=False)]
            if len(ys) > max_pairs:
                ys = ys[rng.choice(len(ys), max_pairs, replace=False)]
            if len(xs) and len(ys):
                d = np.abs(mobius(xs[:, None, :], ys[None, :, :])).max(axis=-1)
                sep_viol += int(np.sum(d < t - margin))
    for i in range(cov.k + 2):
        bound = cov.diameter_bounds[i]
        m = members[i]
        for c in np.flatnonzero(m.any(axis=0)):
            xs = pts[m[:, c]]
            if len(xs) > 300:
                xs = xs[rng.choice(len(xs), 300, replace=False)]
            d = np.abs(mobius(xs[:, None, :], xs[None, :, :])).max(axis=-1)
            diam_viol += int(np.sum(d > bound + margin))
    report["separation"] = sep_viol
    report["diameter"] = diam_viol
    return report


def overlap_bound(base: CRLattice, reach: float, net_scale: float = 0.25) -> int:
    """Upper bound on how many ``reach``-neighbourhoods of cells share a point.

    Centres of a lattice at scale ``net_scale`` form a ``net_scale``-net of the
    truncated region, so counting cells within ``reach + net_scale`` of every
    net point bounds the count at every point of the region.  Membership in a
    product neighbourhood is decided axis by axis, so the polydisc bound is the
    one-variable bound to the power ``n``.
    """
    ax = base.axis
    net = DiscLattice(net_scale, ax.beta_max)
    pts = net.center_of(np.arange(len(net)))
    counts = np.zeros(len(pts), dtype=np.int64)
    for c in range(len(ax)):
        counts += sector_distance(ax.sector_at(c), pts) <= reach + net_scale
    return int(counts.max()) ** base.n


def build_suarez_covering(sigma: float, k: int, n: int, beta_max: float,
                          samples: int = 4000, seed: int = 0, net_scale: float = 0.25) -> Covering:
    """Nested covering built on a lattice at scale ``(k + 1) sigma``.

    ``F_{0,j}`` are the base cells and ``F_{i,j}`` their closed hyperbolic
    ``i sigma``-neighbourhoods, which coincide with iterating the
    ``tanh(sigma)``-enlargement since ``beta`` is a geodesic metric.  The overlap
    bound comes from :func:`overlap_bound`; the diameter bound of level ``i`` is
    ``tanh(2 (k+1) sigma + 2 i sigma)``.  All properties are sampled before
    returning.
    """
    if sigma < 1 or k < 0 or beta_max <= 0:
        raise ValueError("need sigma >= 1, k >= 0, beta_max > 0")
    base = build_cr_lattice_polydisc((k + 1) * sigma, n, beta_max)
    diam = tuple(float(np.tanh(2 * (k + 1) * sigma + 2 * i * sigma)) for i in range(k + 2))
    cov = Covering(base, float(sigma), int(k), 0, diam)
    cov.overlap_bound = overlap_bound(base, (k + 1) * sigma, net_scale)
    rng = np.random.default_rng(seed)
    check_pts = np.vstack([sample_polydisc(rng, samples, n, beta_max), _corner_points(base, rng)])
    report = check_covering(cov, check_pts, rng=rng)
    cov.report = report
    for prop in ("disjointness", "coverage", "nesting", "overlap", "separation", "diameter"):
        if report.get(prop, 0):
            raise CoveringPropertyError(f"property {prop!r} violated at {report[prop]} sampled points")
    return cov


def dump_json(obj) -> str:
    return json.dumps(obj.to_json(), sort_keys=True, indent=1)
