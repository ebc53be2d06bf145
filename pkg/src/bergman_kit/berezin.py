"""Berezin and k-Berezin transforms."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .config import TAIL_TOL, RadialGrid
from .geometry import PolyPoint, as_array, mobius
from .measures import AtomicMeasure, DensityMeasure, GridSup, pushforward_mu_z, symbol_average, symbol_average_grid
from .operators import TruncatedOperator, kernel_coefficients
from .quadrature import QuadratureSpec
from .symbols import Symbol


class TailBoundError(ValueError):
    """The kernel at the requested point is not resolved by the basis."""


def berezin_value(S: TruncatedOperator, z) -> tuple[complex, float]:
    """``c_z^* S c_z`` and the kernel tail; the tail is reported as 0 for exact operators."""
    c, tail = kernel_coefficients(as_array(z), S.basis)
    value = complex(np.vdot(c, S.matrix @ c))
    return value, 0.0 if S.exact else tail


def berezin_operator(S: TruncatedOperator, z, tail_tol: float = TAIL_TOL) -> complex:
    """``B(S)(z) = <S k_z, k_z>`` on A^2 from the truncated kernel.

    Raises :class:`TailBoundError` when the kernel mass outside the basis
    exceeds ``tail_tol``, unless the operator is exactly supported on the basis.
    """
    value, tail = berezin_value(S, z)
    if tail > tail_tol:
        raise TailBoundError(
            f"kernel tail {tail:.3e} at |z|={np.abs(as_array(z)).max():.4f} exceeds {tail_tol:.1e}; "
            f"increase the basis degree (D={S.basis.max_degree}) or move z inward")
    return value


def k_berezin_measure(mu, k: int, z) -> complex:
    """k-Berezin transform of a measure; exact finite sum for atomic measures."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if isinstance(mu, DensityMeasure):
        return k_berezin_symbol(mu.density, k, z, mu.quad)
    za = as_array(z)
    if len(mu) == 0:
        return 0j
    x = 1 - np.abs(za) ** 2
    y = 1 - np.abs(mu.points) ** 2
    ker = np.prod(x ** (2 + k) * y ** k / np.abs(1 - np.conj(mu.points) * za) ** (2 * (2 + k)), axis=-1)
    return complex((k + 1) ** mu.n * np.sum(ker * mu.weights))


def k_berezin_symbol(a: Symbol, k: int, z, quad: Optional[QuadratureSpec] = None) -> complex:
    """``B_k(a)(z) = (k+1)^n int prod(1-|xi_l|^2)^k a(phi_z(xi)) dv(xi)``."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return symbol_average(a, k, z, quad)


def berezin_covariance_check(mu: AtomicMeasure, k: int, z, w) -> tuple[complex, complex, float]:
    """Both sides of ``B_k(mu)(phi_z(w)) = B_k(mu_z)(w)`` and their gap."""
    za, wa = as_array(z), as_array(w)
    lhs = k_berezin_measure(mu, k, mobius(za, wa))
    rhs = k_berezin_measure(pushforward_mu_z(mu, za), k, wa)
    return lhs, rhs, abs(lhs - rhs)


def approx_symbol_error(a: Symbol, k: int, grid=None, quad: Optional[QuadratureSpec] = None) -> GridSup:
    """``max |B_k(a) - a|`` over a finite grid."""
    grid = grid if grid is not None else RadialGrid()
    pts = grid.points(a.n) if isinstance(grid, RadialGrid) else np.asarray(grid, dtype=complex)
    err = np.abs(symbol_average_grid(a, k, pts, quad) - a(pts))
    i = int(np.argmax(err))
    return GridSup(float(err[i]), pts[i], pts, err)


def berezin_any(S: TruncatedOperator, z, tail_tol: float = TAIL_TOL, quad=None) -> tuple[complex, float, str]:
    """Berezin value by the most faithful available route.

    Inside the admissible region (or for exact operators) the truncated kernel
    is used.  Elsewhere a Toeplitz operator is evaluated through its generating
    symbol or measure, using ``B(T_mu) = B_0(mu)``.
    """
    value, tail = berezin_value(S, z)
    if tail <= tail_tol:
        return value, tail, "kernel"
    src = S.source
    if isinstance(src, Symbol):
        return k_berezin_symbol(src, 0, z, quad), 0.0, "symbol"
    if isinstance(src, (AtomicMeasure, DensityMeasure)):
        return k_berezin_measure(src, 0, z), 0.0, "measure"
    raise TailBoundError(f"kernel tail {tail:.3e} exceeds {tail_tol:.1e} and the operator has no generating symbol")


@dataclass(frozen=True)
class BerezinProfile:
    """Berezin transform sampled along ``z = radius * direction``."""

    direction: tuple
    radii: tuple
    values: tuple
    tails: tuple
    routes: tuple = ()

    def __post_init__(self):
        r = np.asarray(self.radii)
        if np.any(np.diff(r) <= 0):
            raise ValueError("radii must be strictly increasing")
        if not np.all(np.isfinite(np.asarray(self.values))):
            raise ValueError("profile values must be finite")

    @property
    def moduli(self) -> np.ndarray:
        return np.abs(np.asarray(self.values))

    def csv_rows(self):
        d = ";".join(f"{np.angle(u):.17g}" for u in self.direction)
        for r, v, t in zip(self.radii, self.values, self.tails):
            yield [d, f"{r:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}", f"{t:.17g}"]


PROFILE_HEADER = ["direction", "radius", "re", "im", "tail_bound"]


def unit_direction(angles) -> tuple:
    return tuple(complex(np.exp(1j * a)) for a in np.atleast_1d(angles))


def decay_profile(S: TruncatedOperator, direction, radii, tail_tol: float = TAIL_TOL,
                  route_symbols: bool = False, quad=None) -> BerezinProfile:
    """Berezin transform of ``S`` along a ray towards the distinguished boundary.

    ``direction`` holds one unimodular complex number per axis.  With
    ``route_symbols`` the evaluation falls back to the generating symbol past
    the admissible radius instead of raising.
    """
    u = np.asarray(direction, dtype=complex)
    if u.shape != (S.basis.n,) or not np.allclose(np.abs(u), 1):
        raise ValueError("direction needs one unimodular entry per axis")
    values, tails, routes = [], [], []
    for r in radii:
        z = r * u
        if route_symbols:
            v, t, route = berezin_any(S, z, tail_tol, quad)
        else:
            v, t = berezin_value(S, z)
            if t > tail_tol:
                berezin_operator(S, z, tail_tol)
            route = "kernel"
        values.append(v)
        tails.append(t)
        routes.append(route)
    return BerezinProfile(tuple(u), tuple(float(r) for r in radii), tuple(values), tuple(tails), tuple(routes))


def profiles_to_csv(profiles: Sequence[BerezinProfile]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_HEADER)
    for p in profiles:
        w.writerows(p.csv_rows())
    return buf.getvalue()
