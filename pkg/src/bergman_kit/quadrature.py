"""Quadrature on the disc and the polydisc against normalized area measure.

Radial integration uses Gauss-Legendre in ``s = r**2`` (so ``dv = ds dtheta / 2pi``
per axis), angular integration the periodic trapezoid rule.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi


@lru_cache(maxsize=64)
def _leggauss(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_legendre(order: int, a: float = 0.0, b: float = 1.0):
    """Nodes and weights of the ``order``-point Gauss-Legendre rule on [a, b]."""
    x, w = _leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1), half * w


@dataclass(frozen=True)
class QuadratureSpec:
    """Tensor rule sizes per axis.

    The rule is exact for ``s**j * exp(i m theta)`` with ``j < 2 * radial_nodes``
    and ``|m| < angular_nodes``; basis integrals up to degree D therefore need
    ``radial_nodes >= D + 1`` and ``angular_nodes >= 2 D + 2``.
    """

    radial_nodes: int = 32
    angular_nodes: int = 64

    def __post_init__(self):
        if self.radial_nodes < 1 or self.angular_nodes < 1:
            raise ValueError("quadrature sizes must be positive")

    @classmethod
    def for_degree(cls, degree: int, extra: int = 8) -> "QuadratureSpec":
        return cls(radial_nodes=degree + 1 + extra, angular_nodes=2 * degree + 2 + 2 * extra)

    def disc_rule(self):
        """Nodes (complex, shape (m,)) and weights summing to 1 on the unit disc."""
        return disc_rule(self.radial_nodes, self.angular_nodes)

    def polydisc_rule(self, n: int):
        nodes, weights = self.disc_rule()
        return tensor_rule([nodes] * n, [weights] * n)


@lru_cache(maxsize=32)
def _disc_rule_cached(radial: int, angular: int):
    s, ws = gauss_legendre(radial)
    theta = 2 * np.pi * np.arange(angular) / angular
    r = np.sqrt(s)
    nodes = (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = np.repeat(ws / angular, angular)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights


def disc_rule(radial: int, angular: int):
    return _disc_rule_cached(int(radial), int(angular))


def tensor_rule(node_lists, weight_lists):
    """Tensor product of per-axis rules; nodes come back with shape (m, n)."""
    grids = np.meshgrid(*node_lists, indexing="ij")
    wgrids = np.meshgrid(*weight_lists, indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return nodes, weights


def subdisc_rule(center: complex, radius: float, spec: QuadratureSpec):
    """Rule for ``{|w - center| < radius}``; weights integrate normalized area."""
    nodes, weights = spec.disc_rule()
    return center + radius * nodes, weights * radius**2


def annulus_rule(r_inner: float, r_outer: float, spec: QuadratureSpec):
    """Rule for ``{r_inner <= |w| < r_outer}`` with normalized area weights."""
    s, ws = gauss_legendre(spec.radial_nodes, r_inner**2, r_outer**2)
    m = spec.angular_nodes
    theta = 2 * np.pi * np.arange(m) / m
    nodes = (np.sqrt(s)[:, None] * np.exp(1j * theta)[None, :]).ravel()
    return nodes, np.repeat(ws / m, m)


def graded_disc_rule(peak: float, eps: float = 1e-11, weight_power: float = 0.0,
                     order: int = 16, min_angles: int = 64, max_angles: int = 1 << 15,
                     edge_exponent: float = 0.0):
    """Disc rule for integrands with features of width ``~1 - peak`` at the circle.

    Radially, composite Gauss-Legendre in ``s`` on dyadic panels accumulating at
    ``s = 1``; angularly, each ring gets enough trapezoid points for the
    geometric convergence rate ``(r * peak)**M`` to reach ``eps`` (relaxed by
    the size of ``(1 - s)**weight_power`` when the integrand carries that factor).

    A nonzero ``edge_exponent`` folds ``(1 - |w|^2)**edge_exponent`` into the
    weights, with Gauss-Jacobi on the panel touching the circle so fractional
    and negative exponents keep full accuracy.
    """
    peak = float(min(max(peak, 0.0), 1 - 1e-15))
    return _graded_cached(round(peak, 15), eps, float(weight_power), order, min_angles, max_angles,
                          float(edge_exponent))


@lru_cache(maxsize=16)
def _graded_cached(peak, eps, weight_power, order, min_angles, max_angles, edge_exponent=0.0):
    depth = int(np.ceil(np.log2(1.0 / max(1 - peak * peak, 1e-15)))) + 6
    depth = min(depth, 50)
    edges = np.concatenate([[0.0], 1 - 0.5 ** np.arange(1, depth + 1), [1.0]])
    s_parts, w_parts = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if edge_exponent and b == 1.0:
            x, w = roots_jacobi(order, edge_exponent, 0.0)
            half = 0.5 * (1 - a)
            s, w = a + half * (x + 1), w * half ** (edge_exponent + 1)
        else:
            s, w = gauss_legendre(order, a, b)
            if edge_exponent:
                w = w * (1 - s) ** edge_exponent
        s_parts.append(s)
        w_parts.append(w)
    s = np.concatenate(s_parts)
    ws = np.concatenate(w_parts)
    r = np.sqrt(s)
    nodes, weights = [], []
    for rk, sk, wk in zip(r, s, ws):
        rate = rk * peak
        if rate <= 0:
            m = min_angles
        else:
            local_eps = eps / max((1 - sk) ** weight_power, 1e-300) if weight_power else eps
            if local_eps >= 1:
                m = min_angles
            else:
                m = int(np.ceil(np.log(local_eps) / np.log(rate)))
                m = int(min(max(m, min_angles), max_angles))
        theta = 2 * np.pi * np.arange(m) / m
        nodes.append(rk * np.exp(1j * theta))
        weights.append(np.full(m, wk / m))
    nodes, weights = np.concatenate(nodes), np.concatenate(weights)
    nodes.flags.writeable = False
    weights.flags.writeable = False
    return nodes, weights
