"""Measures on the polydisc and their Bergman-Carleson norms."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import RadialGrid
from .geometry import PolyPoint, as_array, euclidean_disc, mobius
from .operators import MonomialBasis, operator_norm, toeplitz_measure
from .quadrature import QuadratureSpec, graded_disc_rule, subdisc_rule, tensor_rule
from .symbols import Symbol, constant


class AtomicMeasure:
    """Finite combination ``sum_i c_i delta_{p_i}`` with complex weights."""

    def __init__(self, points, weights):
        pts = np.asarray(points, dtype=complex)
        w = np.asarray(weights, dtype=complex).ravel()
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.shape[0] != w.shape[0]:
            raise ValueError("need one weight per atom")
        if pts.size and np.any(np.abs(pts) >= 1):
            raise ValueError("atoms must lie in the open polydisc")
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        self.points = pts
        self.weights = w
        self.points.flags.writeable = False
        self.weights.flags.writeable = False

    @classmethod
    def empty(cls, n: int) -> "AtomicMeasure":
        return cls(np.zeros((0, n), dtype=complex), np.zeros(0))

    @classmethod
    def dirac(cls, point, weight: complex = 1.0) -> "AtomicMeasure":
        p = as_array(point)
        return cls(p[None, :], [weight])

    @property
    def n(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def __add__(self, other: "AtomicMeasure") -> "AtomicMeasure":
        return AtomicMeasure(np.vstack([self.points, other.points]),
                             np.concatenate([self.weights, other.weights]))

    def scale(self, c: complex) -> "AtomicMeasure":
        return AtomicMeasure(self.points, c * self.weights)

    def restrict(self, mask) -> "AtomicMeasure":
        mask = np.asarray(mask, dtype=bool)
        return AtomicMeasure(self.points[mask], self.weights[mask])

    def total_variation(self) -> "AtomicMeasure":
        return AtomicMeasure(self.points, np.abs(self.weights))

    @property
    def total_variation_norm(self) -> float:
        return float(np.sum(np.abs(self.weights)))

    def jordan(self) -> tuple["AtomicMeasure", ...]:
        """Nonnegative parts with ``mu = mu1 - mu2 + i mu3 - i mu4``."""
        re, im = self.weights.real, self.weights.imag
        return tuple(AtomicMeasure(self.points, part) for part in
                     (np.maximum(re, 0), np.maximum(-re, 0), np.maximum(im, 0), np.maximum(-im, 0)))

    def integrate(self, f) -> complex:
        if len(self) == 0:
            return 0j
        return complex(np.sum(self.weights * np.asarray(f(self.points))))

    def to_json(self):
        return [{"coords": [[float(c.real), float(c.imag)] for c in p],
                 "weight": [float(w.real), float(w.imag)]}
                for p, w in zip(self.points, self.weights)]

    @classmethod
    def from_json(cls, data, n: Optional[int] = None) -> "AtomicMeasure":
        if not data:
            return cls.empty(n or 1)
        pts = [[complex(re, im) for re, im in atom["coords"]] for atom in data]
        ws = [complex(*atom["weight"]) for atom in data]
        return cls(pts, ws)


@dataclass(frozen=True)
class DensityMeasure:
    """``a dv`` for a bounded symbol ``a``."""

    density: Symbol
    quad: Optional[QuadratureSpec] = None

    @property
    def n(self) -> int:
        return self.density.n


def lebesgue(n: int) -> DensityMeasure:
    return DensityMeasure(constant(1.0, n))


@dataclass(frozen=True)
class GridSup:
    """A supremum realized as a maximum over an explicit finite grid."""

    value: float
    at: np.ndarray
    grid: np.ndarray
    values: np.ndarray

    def __float__(self):
        return float(self.value)


# -- symbol averages ---------------------------------------------------------

def _axis_average(f, k: float, zl: complex, quad: Optional[QuadratureSpec]) -> complex:
    """``(k+1) int (1-|xi|^2)^k f(phi_z(xi)) dv(xi)`` on one disc."""
    if quad is None:
        nodes, weights = graded_disc_rule(abs(zl), weight_power=k)
    else:
        nodes, weights = quad.disc_rule()
    vals = np.asarray(f(mobius(zl, nodes)), dtype=complex)
    return complex((k + 1) * np.sum(weights * (1 - np.abs(nodes) ** 2) ** k * vals))


def symbol_average(a: Symbol, k: float, z, quad: Optional[QuadratureSpec] = None) -> complex:
    """``(k+1)^n int prod(1-|xi_l|^2)^k a(phi_z(xi)) dv(xi)`` by quadrature.

    Separable symbols integrate axis by axis on graded rules that resolve
    features near the circle; other symbols use a tensor rule.
    """
    za = as_array(z)
    if a.factors is not None:
        out = 1 + 0j
        for f, zl in zip(a.factors, za):
            out *= _axis_average(f, k, zl, quad)
        return out
    quad = quad or QuadratureSpec(32, 64)
    nodes, weights = quad.polydisc_rule(a.n)
    total = 0j
    chunk = 200000
    for s in range(0, len(weights), chunk):
        xi = nodes[s:s + chunk]
        vals = a(mobius(za, xi))
        dens = np.prod((1 - np.abs(xi) ** 2) ** k, axis=-1)
        total += np.sum(weights[s:s + chunk] * dens * vals)
    return complex((k + 1) ** a.n * total)


def symbol_average_grid(a: Symbol, k: float, points, quad: Optional[QuadratureSpec] = None) -> np.ndarray:
    """:func:`symbol_average` at many points, sharing per-axis work for separable symbols."""
    pts = np.asarray(points, dtype=complex)
    if a.factors is None:
        return np.array([symbol_average(a, k, p, quad) for p in pts])
    out = np.ones(pts.shape[0], dtype=complex)
    for l, f in enumerate(a.factors):
        uniq, inv = np.unique(pts[:, l], return_inverse=True)
        vals = np.array([_axis_average(f, k, u, quad) for u in uniq])
        out *= vals[inv]
    return out


# -- Carleson norms ----------------------------------------------------------

def _grid(grid, n):
    if grid is None:
        grid = RadialGrid()
    if isinstance(grid, RadialGrid):
        return grid.points(n)
    g = np.asarray([as_array(p) for p in grid], dtype=complex)
    if g.size == 0:
        raise ValueError("grid must be nonempty")
    return g.reshape(len(g), -1)


def rkm_integrand(mu: AtomicMeasure, points) -> np.ndarray:
    """``int prod (1-|z_l|^2)^2 / |1 - conj(z_l) w_l|^4 d|mu|(w)`` at each point."""
    pts = np.asarray(points, dtype=complex)
    if len(mu) == 0:
        return np.zeros(len(pts))
    out = np.zeros(len(pts))
    w = np.abs(mu.weights)
    for s in range(0, len(pts), 512):
        z = pts[s:s + 512, None, :]
        ker = np.prod((1 - np.abs(z) ** 2) ** 2 / np.abs(1 - np.conj(z) * mu.points[None]) ** 4, axis=-1)
        out[s:s + 512] = ker @ w
    return out


def rkm_norm(mu, grid=None) -> GridSup:
    """Reproducing-kernel-measure norm, with the sup taken over ``grid``.

    Exact for atomic measures (applied to ``|mu|``); for ``a dv`` the value at
    ``z`` is computed as the average of ``|a| o phi_z``.
    """
    pts = _grid(grid, mu.n)
    if isinstance(mu, DensityMeasure):
        a = mu.density
        absa = Symbol(lambda p: np.abs(a(p)), a.n, a.sup_bound, f"|{a.name}|",
                      None if a.factors is None else tuple(
                          (lambda x, f=f: np.abs(f(x))) for f in a.factors))
        vals = symbol_average_grid(absa, 0, pts, mu.quad).real
    else:
        vals = rkm_integrand(mu, pts)
    i = int(np.argmax(vals))
    return GridSup(float(vals[i]), pts[i], pts, vals)


def disc_mass(mu, center, r: float, quad: Optional[QuadratureSpec] = None) -> float:
    """``|mu|(D(center, r))`` for the product hyperbolic disc of radius ``r``."""
    z = as_array(center)
    t = np.tanh(r)
    if isinstance(mu, DensityMeasure):
        quad = quad or mu.quad or QuadratureSpec(32, 64)
        a = mu.density
        discs = [euclidean_disc(zl, t) for zl in z]
        if a.factors is not None:
            out = 1.0
            for f, (c, R) in zip(a.factors, discs):
                nodes, weights = subdisc_rule(c, R, quad)
                out *= float(np.sum(weights * np.abs(f(nodes))))
            return out
        rules = [subdisc_rule(c, R, quad) for c, R in discs]
        nodes, weights = tensor_rule([r_[0] for r_ in rules], [r_[1] for r_ in rules])
        return float(np.sum(weights * np.abs(a(nodes))))
    if len(mu) == 0:
        return 0.0
    inside = np.all(np.abs(mobius(z[None, :], mu.points)) <= t, axis=-1)
    return float(np.sum(np.abs(mu.weights[inside])))


def geometric_norm(mu, r: float, centers=None, quad: Optional[QuadratureSpec] = None) -> GridSup:
    """``max_z |mu|(D(z, r)) / prod (1-|z_l|^2)^2`` over the given centres."""
    if r <= 0:
        raise ValueError("r must be positive")
    pts = _grid(centers, mu.n)
    vals = np.array([disc_mass(mu, z, r, quad) / np.prod((1 - np.abs(z) ** 2) ** 2) for z in pts])
    i = int(np.argmax(vals))
    return GridSup(float(vals[i]), pts[i], pts, vals)


def carleson_constant(mu, basis: MonomialBasis) -> float:
    """Operator norm of the compressed ``T_mu`` on A^2."""
    return operator_norm(toeplitz_measure(mu, basis))


def pushforward_mu_z(mu: AtomicMeasure, z) -> AtomicMeasure:
    """The measure ``mu_z`` with ``int f d mu_z = int f(phi_z) J dmu``.

    ``J(xi) = prod (1-|z_l|^2)^2 / |1 - conj(z_l) xi_l|^4``; atoms move to
    ``phi_z(p_i)`` and pick up the factor ``J(p_i)``.
    """
    za = as_array(z)
    if len(mu) == 0:
        return AtomicMeasure.empty(za.size)
    if za.shape != (mu.n,):
        raise ValueError("point and measure dimensions differ")
    jac = np.prod((1 - np.abs(za) ** 2) ** 2 / np.abs(1 - np.conj(za) * mu.points) ** 4, axis=-1)
    return AtomicMeasure(mobius(za, mu.points), mu.weights * jac)
