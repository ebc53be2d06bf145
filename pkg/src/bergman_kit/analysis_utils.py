"""Growth integrals, the Schur test and a sampled kernel-tail inequality."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import hyp2f1

from .covering import build_suarez_covering, sample_polydisc
from .measures import AtomicMeasure
from .operators import MonomialBasis, operator_norm, toeplitz_measure
from .quadrature import QuadratureSpec, graded_disc_rule


#: Default discretizations for the Schur test; the kernel matrix is dense.
SCHUR_QUAD = {1: QuadratureSpec(24, 48), 2: QuadratureSpec(6, 10)}


class DivergenceError(ValueError):
    """An integral in a requested bound does not converge."""


def growth_integral(s: float, t: float, z: complex, quad: Optional[QuadratureSpec] = None,
                    method: str = "hypergeometric") -> float:
    """``F_{s,t}(z) = int_D (1-|w|^2)^t |1 - conj(w) z|^{-s} dv(w)``.

    Expanding ``|1 - conj(w) z|^{-s}`` in powers of ``|w z|^2`` and integrating
    radially gives ``2F1(s/2, s/2; t+2; |z|^2) / (t+1)``, the default.
    ``method="quadrature"`` integrates numerically, on ``quad`` when given and
    otherwise on a rule graded towards the circle.
    """
    if t <= -1:
        raise DivergenceError(f"t = {t} <= -1: the weight (1-|w|^2)^t is not integrable")
    z = complex(z)
    if abs(z) >= 1:
        raise ValueError("z must lie in the open disc")
    if method == "hypergeometric":
        return float(hyp2f1(s / 2, s / 2, t + 2, abs(z) ** 2) / (t + 1))
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    if quad is None:
        # the weight (1-|w|^2)^t is folded into the rule
        nodes, weights = graded_disc_rule(abs(z), eps=1e-13, edge_exponent=t)
        vals = np.abs(1 - np.conj(nodes) * z) ** (-s)
    else:
        nodes, weights = quad.disc_rule()
        vals = (1 - np.abs(nodes) ** 2) ** t * np.abs(1 - np.conj(nodes) * z) ** (-s)
    return float(np.sum(weights * vals))


def boundary_exponent(s: float, t: float, moduli=(0.9, 0.95, 0.99, 0.995, 0.999), **kw) -> float:
    """Least-squares slope of ``log F_{s,t}`` against ``log(1 - |z|^2)``."""
    x = np.log(1 - np.asarray(moduli) ** 2)
    y = np.log([growth_integral(s, t, m, **kw) for m in moduli])
    return float(np.polyfit(x, y, 1)[0])


# -- Schur test ---------------------------------------------------------------------

@dataclass(frozen=True)
class KernelSpec:
    """Nonnegative kernel on the polydisc.

    ``kind="bergman"``: ``prod (1-|w_l|^2)^t / |1 - conj(z_l) w_l|^s``.
    ``kind="tech"``: the same with ``s = 2`` and ``t = -1/p``; ``sigma`` and
    ``gamma`` are the separation and decay parameters of the tail inequality.
    ``kind="zero"``: identically zero.  ``scale`` multiplies the kernel.
    """

    kind: str = "bergman"
    s: float = 2.0
    t: float = 0.0
    p: float = 2.0
    sigma: float = 1.0
    gamma: float = 0.2
    n: int = 1
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in ("bergman", "tech", "zero"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if self.scale < 0:
            raise ValueError("kernel scale must be nonnegative")

    @property
    def exponents(self) -> tuple[float, float]:
        if self.kind == "tech":
            return 2.0, -1.0 / self.p
        return self.s, self.t

    def check_tech_range(self):
        """The decay parameter must satisfy ``0 < gamma < min(1/(2p), (p-1)/p)``."""
        hi = min(1 / (2 * self.p), (self.p - 1) / self.p)
        if not (self.p > 1 and 0 < self.gamma < hi):
            raise ValueError(f"gamma = {self.gamma} outside (0, {hi:.6g}) for p = {self.p}")
        if self.sigma < 1:
            raise ValueError("sigma must be at least 1")

    def __call__(self, z, w) -> np.ndarray:
        """Matrix ``K(z_i, w_j)`` for point arrays of shape ``(m, n)``."""
        z = np.asarray(z, dtype=complex).reshape(-1, self.n)
        w = np.asarray(w, dtype=complex).reshape(-1, self.n)
        if self.kind == "zero":
            return np.zeros((len(z), len(w)))
        s, t = self.exponents
        out = np.full((len(z), len(w)), self.scale)
        for l in range(self.n):
            out = out * (1 - np.abs(w[:, l]) ** 2)[None, :] ** t
            out = out * np.abs(1 - np.conj(z[:, l])[:, None] * w[None, :, l]) ** (-s)
        return out


def _h(points, exponent):
    return np.prod((1 - np.abs(points) ** 2) ** exponent, axis=-1)


@dataclass(frozen=True)
class SchurResult:
    C_p: float
    C_q: float
    bound: float
    empirical_norm: float


def schur_bound(kernel: KernelSpec, h_exponent: float, p: float,
                quad: Optional[QuadratureSpec] = None, test_grid=None,
                trials: int = 32, seed: int = 0) -> SchurResult:
    """Schur constants, the resulting bound and a lower estimate of the norm.

    The integral operator is discretized on the tensor rule ``quad``.  Both Schur
    integrals are evaluated at every node (and at ``test_grid`` points, using the
    same rule), so the bound ``C_q^{1/q} C_p^{1/p}`` is rigorous for the
    discretized operator on ``L^p`` of the node weights.  The empirical norm is
    the best ratio ``||T f||_p / ||f||_p`` over random and power-iterated test
    functions, hence never above the true discrete norm.
    """
    if p <= 1:
        raise ValueError("p must exceed 1")
    q = p / (p - 1)
    n = kernel.n
    if kernel.kind != "zero":
        s, t = kernel.exponents
        # one-variable radial integrability of the weights seen by each integral
        if t + q * h_exponent <= -1:
            raise DivergenceError(f"C_q integral diverges: weight exponent t + q*h = {t + q * h_exponent} <= -1")
        if p * h_exponent <= -1:
            raise DivergenceError(f"C_p integral diverges: weight exponent p*h = {p * h_exponent} <= -1")
    quad = quad or SCHUR_QUAD.get(n, QuadratureSpec(4, 8))
    nodes, weights = quad.polydisc_rule(n)
    K = kernel(nodes, nodes)
    if kernel.kind == "zero" or not np.any(K):
        return SchurResult(0.0, 0.0, 0.0, 0.0)
    hq = _h(nodes, q * h_exponent)
    hp = _h(nodes, p * h_exponent)
    cq = (K @ (weights * hq)) / hq
    cp = ((weights * hp) @ K) / hp
    if test_grid is not None:
        grid = np.asarray(test_grid, dtype=complex).reshape(-1, n)
        cq = np.concatenate([cq, (kernel(grid, nodes) @ (weights * hq)) / _h(grid, q * h_exponent)])
        cp = np.concatenate([cp, ((weights * hp) @ kernel(nodes, grid)) / _h(grid, p * h_exponent)])
    if not (np.all(np.isfinite(cq)) and np.all(np.isfinite(cp))):
        raise DivergenceError("Schur integrals are not finite on the grid")
    C_q, C_p = float(cq.max()), float(cp.max())
    bound = C_q ** (1 / q) * C_p ** (1 / p)

    def lp(f):
        return np.sum(weights * np.abs(f) ** p) ** (1 / p)

    def apply(f):
        return K @ (weights * f)

    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(trials):
        f = np.abs(rng.standard_normal(len(weights)))
        best = max(best, lp(apply(f)) / lp(f))
    # nonlinear power iteration for the p -> p norm of a positive kernel
    f = np.ones(len(weights))
    for _ in range(200):
        g = apply(f)
        ratio = lp(g) / lp(f)
        best = max(best, ratio)
        dual = (weights * np.abs(g) ** (p - 1)) @ K
        f_new = np.abs(dual) ** (q - 1)
        f_new /= lp(f_new)
        if np.allclose(f_new, f, rtol=1e-12, atol=0):
            break
        f = f_new
    best = max(best, lp(apply(f)) / lp(f))
    if p == 2:
        W = np.sqrt(weights)
        best = max(best, operator_norm(W[:, None] * K * W[None, :]))
    return SchurResult(C_p, C_q, bound, float(best))


# -- separated kernel tails ------------------------------------------------------------

def tech1_ratio(sigma: float, p: float, gamma: float, mu: AtomicMeasure, samples=2000,
                beta_max: float = 3.0, seed: int = 0, basis: Optional[MonomialBasis] = None) -> float:
    """Largest sampled ratio of a separated kernel sum to its predicted decay.

    ``F_j`` are level-0 cells of a Suarez covering at ``(sigma, k=0)`` and
    ``K_j`` the complements of the level-1 cells, so ``rho(F_j, K_j) >= tanh sigma``.
    For sample points ``z`` the left side is
    ``sum_j 1_{F_j}(z) int 1_{K_j}(w) prod (1-|w_l|^2)^{-1/p} / |1 - conj(z_l) w_l|^2 d|mu|(w)``
    and the right side ``||T_mu|| (1 - delta^2)^gamma prod (1-|z_l|^2)^{-1/p}``
    with ``delta = tanh(sigma / 2)``; ``||T_mu||`` is taken on the truncation.
    """
    spec = KernelSpec("tech", p=p, sigma=sigma, gamma=gamma, n=mu.n if len(mu) else 1)
    spec.check_tech_range()
    if len(mu) == 0:
        return 0.0
    n = mu.n
    cov = build_suarez_covering(sigma, 0, n, beta_max, samples=1000, seed=seed)
    rng = np.random.default_rng(seed)
    pts = sample_polydisc(rng, samples, n, beta_max) if np.isscalar(samples) else \
        np.asarray(samples, dtype=complex).reshape(-1, n)
    cell = cov.base.locate(pts)
    pts, cell = pts[cell >= 0], cell[cell >= 0]
    near = cov.membership(1, mu.points)  # atoms inside each level-1 cell
    weights = np.abs(mu.weights)
    Kmat = spec(pts, mu.points) * weights[None, :]
    far = ~near[:, cell].T  # [sample, atom]: atom in K_j for the sample's cell j
    lhs = np.sum(Kmat * far, axis=1)
    basis = basis or MonomialBasis.default(n)
    norm = operator_norm(toeplitz_measure(mu.total_variation(), basis))
    delta = np.tanh(sigma / 2)
    rhs = norm * (1 - delta**2) ** gamma * _h(pts, -1.0 / p)
    return float(np.max(lhs / rhs))
