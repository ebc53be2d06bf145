"""Moebius maps and the pseudohyperbolic / hyperbolic geometry of the polydisc.

All array functions accept points as complex arrays whose last axis indexes the
coordinates, so ``(n,)`` is one point and ``(m, n)`` is a batch of ``m`` points.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import BOUNDARY_EPS


class DimensionError(ValueError):
    pass


@dataclass(frozen=True)
class PolyPoint:
    """A point of the open polydisc."""

    coords: tuple

    def __init__(self, coords):
        arr = np.atleast_1d(np.asarray(coords, dtype=complex))
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError("a PolyPoint needs a flat, non-empty coordinate list")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coordinates must be finite")
        if np.any(np.abs(arr) >= 1 - BOUNDARY_EPS):
            raise ValueError(f"point {arr} is not inside the open polydisc")
        object.__setattr__(self, "coords", tuple(complex(c) for c in arr))

    @property
    def n(self) -> int:
        return len(self.coords)

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coords, dtype=complex)

    def __len__(self):
        return self.n

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]

    @classmethod
    def zero(cls, n: int) -> "PolyPoint":
        return cls([0j] * n)

    def to_json(self):
        return [[c.real, c.imag] for c in self.coords]

    @classmethod
    def from_json(cls, data) -> "PolyPoint":
        return cls([complex(re, im) for re, im in data])


def as_array(z) -> np.ndarray:
    if isinstance(z, PolyPoint):
        return z.array
    return np.asarray(z, dtype=complex)


def _check_dims(z: np.ndarray, w: np.ndarray):
    if z.shape[-1:] != w.shape[-1:]:
        raise DimensionError(f"dimension mismatch: {z.shape[-1:]} vs {w.shape[-1:]}")


def mobius(z, w) -> np.ndarray:
    """Coordinatewise ``phi_z(w) = (z - w) / (1 - conj(z) w)`` on arrays."""
    z = as_array(z)
    w = as_array(w)
    return (z - w) / (1 - np.conj(z) * w)


def mobius_apply(z, w) -> PolyPoint:
    """The involutive automorphism exchanging ``0`` and ``z``, applied to ``w``."""
    za, wa = as_array(z), as_array(w)
    _check_dims(za, wa)
    if za.ndim != 1 or wa.ndim != 1:
        raise ValueError("mobius_apply works on single points; use mobius() for arrays")
    return PolyPoint(mobius(za, wa))


def pseudo_hyperbolic(z, w) -> np.ndarray:
    """Per-axis pseudohyperbolic distance ``|phi_z(w)|`` (broadcasting)."""
    return np.abs(mobius(z, w))


def rho(z, w):
    """Pseudohyperbolic distance on the polydisc: the max over axes."""
    za, wa = as_array(z), as_array(w)
    _check_dims(za, wa)
    out = pseudo_hyperbolic(za, wa).max(axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def beta_from_rho(r):
    return np.arctanh(np.minimum(r, 1.0))


def beta(z, w):
    """Hyperbolic distance ``atanh(rho)``, i.e. half log((1 + rho)/(1 - rho))."""
    out = beta_from_rho(rho(z, w))
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class HyperbolicDisc:
    """Product of one-variable hyperbolic discs ``D(center_l, radius)``."""

    center: PolyPoint
    radius: float

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be nonnegative")

    def contains(self, w) -> np.ndarray:
        wa = as_array(w)
        _check_dims(self.center.array, wa)
        t = np.tanh(self.radius)
        return np.all(pseudo_hyperbolic(self.center.array, wa) <= t, axis=-1)


def euclidean_disc(center: complex, t: float) -> tuple[complex, float]:
    """Euclidean centre and radius of ``{w : |phi_c(w)| <= t}`` in the unit disc."""
    a2 = abs(center) ** 2
    denom = 1 - t * t * a2
    return (1 - t * t) * center / denom, t * (1 - a2) / denom


def euclidean_realization(d: HyperbolicDisc, axis: int) -> tuple[complex, float]:
    if not 0 <= axis < d.center.n:
        raise IndexError(f"axis {axis} out of range for n={d.center.n}")
    return euclidean_disc(d.center.coords[axis], float(np.tanh(d.radius)))
