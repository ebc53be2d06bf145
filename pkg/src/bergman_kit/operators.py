"""Operators on A^2 of the polydisc compressed to a monomial basis.

The basis is ``e_alpha(z) = prod_l sqrt(alpha_l + 1) z_l**alpha_l`` with every
``alpha_l <= D``; it is orthonormal for normalized volume measure.  A matrix
entry ``[beta, alpha]`` stores ``<S e_alpha, e_beta>``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Optional

import numpy as np

from .geometry import PolyPoint, as_array, mobius
from .quadrature import QuadratureSpec, gauss_legendre
from .symbols import Symbol, constant

DEFAULT_DEGREE = {1: 12, 2: 6}


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class MonomialBasis:
    n: int
    max_degree: int

    def __post_init__(self):
        if self.n < 1 or self.max_degree < 0:
            raise ValueError("need n >= 1 and max_degree >= 0")

    @classmethod
    def default(cls, n: int) -> "MonomialBasis":
        return cls(n, DEFAULT_DEGREE.get(n, 4))

    @cached_property
    def indices(self) -> np.ndarray:
        idx = itertools.product(range(self.max_degree + 1), repeat=self.n)
        return np.array(list(idx), dtype=int).reshape(-1, self.n)

    @property
    def size(self) -> int:
        return (self.max_degree + 1) ** self.n

    def __len__(self):
        return self.size

    def evaluate(self, points) -> np.ndarray:
        """Matrix ``E[i, alpha] = e_alpha(points[i])`` of shape (m, size)."""
        pts = np.asarray(as_array(points), dtype=complex)
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.shape[-1] != self.n:
            raise ValueError(f"points have dimension {pts.shape[-1]}, basis has {self.n}")
        k = np.arange(self.max_degree + 1)
        out = np.ones((pts.shape[0], self.size), dtype=complex)
        for l in range(self.n):
            powers = np.sqrt(k + 1) * pts[:, l, None] ** k
            out *= powers[:, self.indices[:, l]]
        return out

    def to_json(self):
        return {"n": self.n, "D": self.max_degree}


@dataclass(frozen=True)
class SpaceParams:
    p: float
    n: int = 1

    def __post_init__(self):
        if not 1 < self.p < np.inf:
            raise ValueError("p must lie in (1, inf)")

    @property
    def q(self) -> float:
        return self.p / (self.p - 1)


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    """An operator on A^2 represented on a finite monomial basis.

    ``exact`` marks operators that are genuinely supported on the truncation
    (``S = P S P``), so kernel tails never affect them.  ``source`` optionally
    remembers the symbol or measure a Toeplitz matrix was assembled from.
    """

    basis: MonomialBasis
    matrix: np.ndarray
    exact: bool = False
    source: Optional[Any] = field(default=None, repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (self.basis.size, self.basis.size):
            raise ValueError(f"matrix shape {m.shape} does not match basis size {self.basis.size}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def _check(self, other: "TruncatedOperator"):
        if other.basis != self.basis:
            raise ValueError("operators live on different bases")

    def __add__(self, other):
        self._check(other)
        return TruncatedOperator(self.basis, self.matrix + other.matrix, self.exact and other.exact)

    def __sub__(self, other):
        self._check(other)
        return TruncatedOperator(self.basis, self.matrix - other.matrix, self.exact and other.exact)

    def __mul__(self, c):
        src = self.source.scale(c) if isinstance(self.source, Symbol) else None
        return TruncatedOperator(self.basis, c * self.matrix, self.exact, src)

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._check(other)
        return TruncatedOperator(self.basis, self.matrix @ other.matrix, self.exact and other.exact)

    @property
    def H(self) -> "TruncatedOperator":
        src = self.source.conj() if isinstance(self.source, Symbol) else None
        return TruncatedOperator(self.basis, self.matrix.conj().T, self.exact, src)

    def apply(self, coeffs) -> np.ndarray:
        return self.matrix @ np.asarray(coeffs, dtype=complex)

    def to_json(self):
        rows = [[[float(v.real), float(v.imag)] for v in row] for row in self.matrix]
        return {"basis": self.basis.to_json(), "matrix": rows, "exact": self.exact}

    @classmethod
    def from_json(cls, data) -> "TruncatedOperator":
        basis = MonomialBasis(data["basis"]["n"], data["basis"]["D"])
        m = np.array([[complex(re, im) for re, im in row] for row in data["matrix"]])
        return cls(basis, m, bool(data.get("exact", False)))


def identity(basis: MonomialBasis) -> TruncatedOperator:
    return TruncatedOperator(basis, np.eye(basis.size), source=constant(1.0, basis.n))


def zero(basis: MonomialBasis) -> TruncatedOperator:
    return TruncatedOperator(basis, np.zeros((basis.size, basis.size)), exact=True)


# -- kernels ---------------------------------------------------------------

def kernel_eval(lam, z) -> complex:
    """Bergman kernel ``K_lam(z) = prod 1 / (1 - conj(lam_l) z_l)**2``."""
    lam, z = as_array(lam), as_array(z)
    return np.prod(1.0 / (1 - np.conj(lam) * z) ** 2, axis=-1)


def normalized_kernel_eval(lam, z, params: SpaceParams) -> complex:
    """``k_lam^(p)(z) = prod (1 - |lam_l|^2)**(2/q) / (1 - conj(lam_l) z_l)**2``."""
    lam, z = as_array(lam), as_array(z)
    scale = np.prod((1 - np.abs(lam) ** 2) ** (2 / params.q), axis=-1)
    return scale * kernel_eval(lam, z)


def _axis_tail(x: np.ndarray, degree: int) -> np.ndarray:
    # sum_{k > D} (k+1) x^k (1-x)^2 in closed form
    return (degree + 2) * x ** (degree + 1) - (degree + 1) * x ** (degree + 2)


def kernel_tail(z, basis: MonomialBasis) -> float:
    """Squared A^2 norm of the part of ``k_z^(2)`` outside the basis."""
    x = np.abs(as_array(z)) ** 2
    t = np.clip(_axis_tail(x, basis.max_degree), 0.0, 1.0)
    return float(-np.expm1(np.sum(np.log1p(-np.minimum(t, 1 - 1e-300)))))


def kernel_coefficients(z, basis: MonomialBasis) -> tuple[np.ndarray, float]:
    """Coefficients of ``k_z^(2)`` in the basis and the discarded squared mass."""
    za = as_array(z)
    if za.shape != (basis.n,):
        raise ValueError("point dimension does not match basis")
    k = np.arange(basis.max_degree + 1)
    c = np.ones(basis.size, dtype=complex)
    for l in range(basis.n):
        axis = (1 - abs(za[l]) ** 2) * np.sqrt(k + 1) * np.conj(za[l]) ** k
        c *= axis[basis.indices[:, l]]
    return c, kernel_tail(za, basis)


# -- Toeplitz operators -----------------------------------------------------

def _gram_from_nodes(basis, nodes, weights, values, chunk=20000):
    size = basis.size
    out = np.zeros((size, size), dtype=complex)
    for start in range(0, len(weights), chunk):
        sl = slice(start, start + chunk)
        E = basis.evaluate(nodes[sl])
        out += (E.conj() * (weights[sl] * values[sl])[:, None]).T @ E
    return out


def _axis_rule(spec: QuadratureSpec):
    return spec.disc_rule()


def toeplitz_symbol(a: Symbol, basis: MonomialBasis, quad: Optional[QuadratureSpec] = None) -> TruncatedOperator:
    """Compression of ``T_a``: entries ``int a e_alpha conj(e_beta) dv`` by quadrature."""
    if a.n != basis.n:
        raise ValueError("symbol and basis dimensions differ")
    quad = quad or QuadratureSpec.for_degree(basis.max_degree, extra=16)
    if a.factors is not None:
        one_d = MonomialBasis(1, basis.max_degree)
        nodes, weights = _axis_rule(quad)
        mat = np.ones((1, 1), dtype=complex)
        for f in a.factors:
            vals = np.asarray(f(nodes), dtype=complex)
            if not np.all(np.isfinite(vals)):
                raise ValueError(f"symbol {a.name} is not finite at a quadrature node")
            mat = np.kron(mat, _gram_from_nodes(one_d, nodes[:, None], weights, vals))
    else:
        nodes, weights = quad.polydisc_rule(basis.n)
        vals = a(nodes)
        if not np.all(np.isfinite(vals)):
            raise ValueError(f"symbol {a.name} is not finite at a quadrature node")
        mat = _gram_from_nodes(basis, nodes, weights, vals)
    return TruncatedOperator(basis, mat, source=a)


def toeplitz_measure(mu, basis: MonomialBasis, quad: Optional[QuadratureSpec] = None) -> TruncatedOperator:
    """Compression of ``T_mu``: entries ``sum_i c_i e_alpha(p_i) conj(e_beta(p_i))``.

    Density measures are routed through :func:`toeplitz_symbol`.
    """
    if hasattr(mu, "density"):
        op = toeplitz_symbol(mu.density, basis, quad or getattr(mu, "quad", None))
        return TruncatedOperator(basis, op.matrix, source=mu)
    if mu.n != basis.n:
        raise ValueError("measure and basis dimensions differ")
    if len(mu) == 0:
        return TruncatedOperator(basis, np.zeros((basis.size, basis.size)), exact=True, source=mu)
    mat = _gram_from_nodes(basis, mu.points, np.ones(len(mu)), mu.weights)
    return TruncatedOperator(basis, mat, source=mu)


def rank_one(f, g, basis: Optional[MonomialBasis] = None) -> TruncatedOperator:
    """``f (x) g : h -> <h, g> f`` as the outer product ``f g^*``."""
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    if f.shape != g.shape or f.ndim != 1:
        raise ValueError("rank_one needs two coefficient vectors of equal length")
    if basis is None:
        basis = MonomialBasis(1, len(f) - 1)
    if basis.size != len(f):
        raise ValueError("coefficient vectors do not match the basis")
    return TruncatedOperator(basis, np.outer(f, g.conj()), exact=True)


def unit_vector(basis: MonomialBasis, alpha=None) -> np.ndarray:
    """Coefficient vector of ``e_alpha`` (default: the constant function)."""
    v = np.zeros(basis.size, dtype=complex)
    if alpha is None:
        v[0] = 1.0
    else:
        hit = np.flatnonzero(np.all(basis.indices == np.asarray(alpha), axis=1))
        v[hit[0]] = 1.0
    return v


# -- change-of-variable maps ------------------------------------------------

def j_z_eval(z, w, r: float) -> complex:
    """``J_z^r(w) = prod (1 - |z_l|^2)**r / (1 - w_l conj(z_l))**(2 r)`` (principal branch)."""
    z, w = as_array(z), as_array(w)
    u = 1 - w * np.conj(z)
    return np.prod((1 - np.abs(z) ** 2) ** r * np.exp(-2 * r * np.log(u)), axis=-1)


def b_z_eval(z, w, params: SpaceParams) -> complex:
    """``b_z(w) = prod ((1 - conj(w_l) z_l) / (1 - conj(z_l) w_l))**(2 (1/q - 1/p))``.

    Numerator and denominator are conjugate with arguments in (-pi/2, pi/2), so
    the principal powers combine into ``exp(-2 i e arg(1 - conj(z) w))``.
    """
    z, w = as_array(z), as_array(w)
    e = 2 * (1 / params.q - 1 / params.p)
    u = 1 - np.conj(z) * w
    return np.prod(np.exp(-2j * e * np.angle(u)), axis=-1)


def lambda_p(xi, z, params: SpaceParams) -> complex:
    """Unimodular factor with ``(1-|xi|^2)^(2/p) J_z^(2/p)(xi) = (1-|phi_z(xi)|^2)^(2/p) lambda``."""
    xi, z = as_array(xi), as_array(z)
    u = 1 - xi * np.conj(z)
    return np.prod(np.exp(-(4 / params.p) * 1j * np.angle(u)), axis=-1)


def u_z_matrix(z, basis: MonomialBasis, quad: Optional[QuadratureSpec] = None):
    """Compression of ``U_z f = (f o phi_z) J_z`` on A^2.

    Returns the operator and, per column, the squared norm of ``U_z e_alpha``
    lost to truncation (``1 - ||column||^2``; ``U_z`` is an isometry).
    """
    za = as_array(z)
    quad = quad or QuadratureSpec(radial_nodes=basis.max_degree + 48,
                                  angular_nodes=4 * basis.max_degree + 128)
    one_d = MonomialBasis(1, basis.max_degree)
    nodes, weights = quad.disc_rule()
    mat = np.ones((1, 1), dtype=complex)
    for l in range(basis.n):
        zl = za[l]
        E = one_d.evaluate(nodes[:, None])
        Ephi = one_d.evaluate(mobius(zl, nodes)[:, None])
        jac = (1 - abs(zl) ** 2) / (1 - nodes * np.conj(zl)) ** 2
        axis = (E.conj() * weights[:, None]).T @ (Ephi * jac[:, None])
        mat = np.kron(mat, axis)
    op = TruncatedOperator(basis, mat)
    tails = 1 - np.sum(np.abs(mat) ** 2, axis=0)
    return op, tails


# -- norms ------------------------------------------------------------------

def operator_norm(S, tol: float = 1e-10, max_iter: Optional[int] = None, seed: int = 0) -> float:
    """Largest singular value of ``S`` from Lanczos on ``S^* S``.

    The Krylov space of power iterates is orthonormalized in full, so tight
    clusters of top singular values do not stall the iteration.  It stops when
    the Ritz residual ``beta_j |s_j|`` of the top Ritz pair drops below
    ``tol * theta`` or the Krylov space becomes invariant.
    """
    M = S.matrix if isinstance(S, TruncatedOperator) else np.asarray(S, dtype=complex)
    if M.size == 0:
        return 0.0
    A = M.conj().T @ M
    dim = A.shape[0]
    max_iter = max_iter or dim
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    Q = np.zeros((dim, min(max_iter, dim) + 1), dtype=complex)
    Q[:, 0] = v / np.linalg.norm(v)
    alphas, betas = [], []
    theta, resid = 0.0, np.inf
    for j in range(min(max_iter, dim)):
        w = A @ Q[:, j]
        for _ in range(2):
            w -= Q[:, : j + 1] @ (Q[:, : j + 1].conj().T @ w)
        alphas.append(float(np.vdot(Q[:, j], A @ Q[:, j]).real))
        b = float(np.linalg.norm(w))
        T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        evals, evecs = np.linalg.eigh(T)
        theta = float(evals[-1])
        resid = b * abs(evecs[-1, -1])
        scale = max(theta, np.finfo(float).tiny)
        if theta <= 0.0 and b <= np.finfo(float).eps * np.sqrt(np.trace(A).real + 1.0):
            return 0.0
        if resid <= tol * scale or b <= np.finfo(float).eps * scale:
            return float(np.sqrt(max(theta, 0.0)))
        betas.append(b)
        Q[:, j + 1] = w / b
    if resid <= 1e3 * tol * max(theta, np.finfo(float).tiny):
        return float(np.sqrt(max(theta, 0.0)))
    raise ConvergenceError(f"Lanczos did not converge: residual {resid:.3e}, estimate {np.sqrt(max(theta, 0)):.12g}")
