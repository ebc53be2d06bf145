"""Bounded symbols on the polydisc as evaluable black boxes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np


@dataclass(frozen=True)
class Symbol:
    """A bounded function ``a`` on the polydisc.

    ``func`` maps an ``(m, n)`` complex array to ``m`` values.  When the symbol
    is a product of one-variable functions, ``factors`` holds them (one per
    axis) and integrals factor accordingly.  ``sup_bound`` is the caller's
    claimed bound on ``|a|``; it is metadata and is never verified.
    """

    func: Callable[[np.ndarray], np.ndarray]
    n: int
    sup_bound: Optional[float] = None
    name: str = "symbol"
    factors: Optional[tuple] = None

    def __call__(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        if pts.ndim == 1:
            pts = pts[None, :]
        out = np.asarray(self.func(pts), dtype=complex)
        return np.broadcast_to(out, pts.shape[:1]).copy()

    def conj(self) -> "Symbol":
        factors = None
        if self.factors is not None:
            factors = tuple(_conj_fn(f) for f in self.factors)
        return Symbol(_conj_fn(self.func), self.n, self.sup_bound, f"conj({self.name})", factors)

    def scale(self, c: complex) -> "Symbol":
        factors = None
        if self.factors is not None:
            factors = (lambda x, f=self.factors[0]: c * f(x),) + tuple(self.factors[1:])
        bound = None if self.sup_bound is None else abs(c) * self.sup_bound
        return Symbol(lambda p: c * self.func(p), self.n, bound, f"{c}*{self.name}", factors)

    @classmethod
    def from_factors(cls, factors, name="product", sup_bound=None) -> "Symbol":
        factors = tuple(factors)

        def func(p):
            out = np.ones(p.shape[0], dtype=complex)
            for l, f in enumerate(factors):
                out = out * f(p[:, l])
            return out

        return cls(func, len(factors), sup_bound, name, factors)


def _conj_fn(f):
    return lambda x: np.conj(f(x))


def _one(x):
    return np.ones(np.shape(x), dtype=complex)


def constant(c: complex, n: int) -> Symbol:
    s = Symbol.from_factors([_one] * n, name=f"const({c})", sup_bound=1.0)
    return s.scale(c) if c != 1 else s


def coordinate(axis: int, n: int) -> Symbol:
    """``a(z) = z_axis``."""
    factors = [_one] * n
    factors[axis] = lambda x: np.asarray(x, dtype=complex)
    return Symbol.from_factors(factors, name=f"z{axis + 1}", sup_bound=1.0)


def real_coordinate(axis: int, n: int) -> Symbol:
    factors = [_one] * n
    factors[axis] = lambda x: np.asarray(x, dtype=complex).real.astype(complex)
    return Symbol.from_factors(factors, name=f"Re z{axis + 1}", sup_bound=1.0)


def modulus_squared(axis: int, n: int) -> Symbol:
    factors = [_one] * n
    factors[axis] = lambda x: (np.abs(x) ** 2).astype(complex)
    return Symbol.from_factors(factors, name=f"|z{axis + 1}|^2", sup_bound=1.0)


def boundary_defect(n: int) -> Symbol:
    """``a(z) = prod_l (1 - |z_l|^2)``, vanishing on the boundary."""
    f = lambda x: (1 - np.abs(x) ** 2).astype(complex)  # noqa: E731
    return Symbol.from_factors([f] * n, name="prod(1-|z|^2)", sup_bound=1.0)


def half_polydisc(n: int) -> Symbol:
    """Indicator of ``{Re z_1 > 0}``."""
    factors = [_one] * n
    factors[0] = lambda x: (np.asarray(x).real > 0).astype(complex)
    return Symbol.from_factors(factors, name="1{Re z1>0}", sup_bound=1.0)


REGISTRY = {
    "one": lambda n: constant(1.0, n),
    "z1": lambda n: coordinate(0, n),
    "re_z1": lambda n: real_coordinate(0, n),
    "abs_z1_sq": lambda n: modulus_squared(0, n),
    "defect": boundary_defect,
    "half": half_polydisc,
}


def by_name(name: str, n: int) -> Symbol:
    try:
        return REGISTRY[name](n)
    except KeyError:
        raise KeyError(f"unknown symbol {name!r}; choose from {sorted(REGISTRY)}") from None
