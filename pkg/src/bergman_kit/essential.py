"""Atomic decomposition, approximate identity, essential-norm estimators, verdicts.

All norms here are A^2 -> L^2 norms on the truncation.  Multipliers by
indicators become Gram matrices ``G_E[beta, alpha] = int_E e_alpha conj(e_beta) dv``,
and ``||1_E S|| = sqrt(lambda_max(S^* G_E S))``.  Every Gram used below has a
closed form (annuli, sectors, Euclidean subdiscs) and is checked against
quadrature in the tests.
"""

from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass, field
from math import comb
from typing import Optional, Sequence

import numpy as np

from .berezin import TailBoundError, berezin_any, unit_direction
from .config import TAIL_TOL, VerdictThresholds
from .covering import Covering, DiscLattice, Sector, build_cr_lattice_polydisc
from .geometry import as_array, euclidean_disc, mobius
from .measures import AtomicMeasure
from .operators import MonomialBasis, TruncatedOperator, kernel_coefficients, operator_norm
from .quadrature import QuadratureSpec, subdisc_rule

#: Atom count above which ``mu_rho`` refuses to materialize the measure.
MAX_ATOMS = 2_000_000
#: Relative singular-value cut used when orthonormalizing kernel spans.
SPAN_RCOND = 1e-12


class CoverageError(RuntimeError):
    """The truncation radius visibly changes a result; raise ``beta_max``."""


def _kron_all(mats):
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def _gram_norm(S: np.ndarray, G: np.ndarray) -> float:
    """``||G^{1/2} S||`` for a Hermitian positive semidefinite ``G``."""
    H = S.conj().T @ G @ S
    return float(np.sqrt(max(np.linalg.eigvalsh(0.5 * (H + H.conj().T))[-1], 0.0)))


# -- closed-form Grams -------------------------------------------------------------

def annulus_gram_diag(r: float, basis: MonomialBasis) -> np.ndarray:
    """Diagonal of the Gram of monomials on the complement of ``r D^n``."""
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    return 1 - np.prod(r ** (2 * (basis.indices + 1.0)), axis=1)


def sector_gram(sec: Sector, degree: int) -> np.ndarray:
    """One-variable Gram over an annular sector."""
    k = np.arange(degree + 1)
    A, B = np.meshgrid(k, k)  # column alpha, row beta
    p = A + B + 2
    r1, r2 = sec.r_inner, sec.r_outer
    radial = (r2**p - r1**p) / p
    m = A - B
    if sec.full:
        angular = np.where(m == 0, 2.0, 0.0)
    else:
        safe = np.where(m == 0, 1, m)
        t0, t1 = sec.theta0, sec.theta0 + sec.width
        angular = np.where(m == 0, sec.width / np.pi,
                           (np.exp(1j * m * t1) - np.exp(1j * m * t0)) / (1j * np.pi * safe))
    return np.sqrt((A + 1) * (B + 1)) * radial * angular


def subdisc_gram(center: complex, radius: float, degree: int) -> np.ndarray:
    """One-variable Gram over the Euclidean disc ``|w - c| < R``.

    Expanding ``(c + R u)^alpha`` binomially leaves only matched powers of ``u``:
    ``G[b, a] = sqrt((a+1)(b+1)) R^2 sum_i C(a,i) C(b,i) c^{a-i} conj(c)^{b-i} R^{2i} / (i+1)``.
    """
    D = degree
    G = np.zeros((D + 1, D + 1), dtype=complex)
    cpow = center ** np.arange(D + 1)
    R2 = radius**2
    for a in range(D + 1):
        for b in range(D + 1):
            s = sum(comb(a, i) * comb(b, i) * cpow[a - i] * np.conj(cpow[b - i]) * R2**i / (i + 1)
                    for i in range(min(a, b) + 1))
            G[b, a] = np.sqrt((a + 1) * (b + 1)) * R2 * s
    return G


def box_gram(z, r: float, basis: MonomialBasis) -> np.ndarray:
    """Gram over the hyperbolic box ``D(z, r)``, one Euclidean disc per axis."""
    t = np.tanh(r)
    mats = []
    for zl in as_array(z):
        c, R = euclidean_disc(complex(zl), t)
        mats.append(subdisc_gram(c, R, basis.max_degree))
    return _kron_all(mats)


def box_gram_quadrature(z, r: float, basis: MonomialBasis, quad: QuadratureSpec) -> np.ndarray:
    """Quadrature counterpart of :func:`box_gram`, used as a cross-check."""
    t = np.tanh(r)
    one_d = MonomialBasis(1, basis.max_degree)
    mats = []
    for zl in as_array(z):
        c, R = euclidean_disc(complex(zl), t)
        nodes, weights = subdisc_rule(c, R, quad)
        E = one_d.evaluate(nodes[:, None])
        mats.append((E.conj() * weights[:, None]).T @ E)
    return _kron_all(mats)


# -- atomic decomposition ------------------------------------------------------------

def mu_rho(rho: float, n: int, beta_max: float) -> AtomicMeasure:
    """Point masses at lattice centres weighted by cell volumes."""
    lat = build_cr_lattice_polydisc(rho, n, beta_max)
    if len(lat) > MAX_ATOMS:
        raise CoverageError(f"{len(lat)} atoms exceed {MAX_ATOMS}; use lattice_toeplitz for ring-wise sums")
    return AtomicMeasure(lat.centers(), lat.volumes())


def axis_lattice_toeplitz(axis: DiscLattice, degree: int) -> np.ndarray:
    """One-variable ``T_{mu_rho}`` summed ring by ring in closed form.

    A ring holds ``M`` equal atoms at angles ``(s + 1/2) 2 pi / M``, so its
    contribution to entry ``[beta, alpha]`` vanishes unless ``M`` divides
    ``alpha - beta``; the cost is independent of the number of sectors.
    """
    k = np.arange(degree + 1)
    A, B = np.meshgrid(k, k)
    m = A - B
    root = np.sqrt((A + 1) * (B + 1))
    T = np.zeros((degree + 1, degree + 1), dtype=complex)
    T[0, 0] = axis.ring_volume[0]
    for j in range(1, axis.n_rings):
        M = int(axis.sector_counts[j])
        hit = m % M == 0
        if not hit.any():
            continue
        phase = np.where(hit, M * np.exp(1j * np.pi * m / M), 0)
        T += axis.ring_volume[j] * root * axis.ring_radius[j] ** (A + B) * phase
    return T


def lattice_toeplitz(rho: float, basis: MonomialBasis, beta_max: float) -> TruncatedOperator:
    """Compressed ``T_{mu_rho}``; product lattices give Kronecker products."""
    axis = DiscLattice(rho, beta_max)
    one = axis_lattice_toeplitz(axis, basis.max_degree)
    return TruncatedOperator(basis, _kron_all([one] * basis.n))


def approx_identity_error(rho: float, basis: MonomialBasis, beta_max: float = 12.0,
                          check_margin: float = 2.0) -> float:
    """``||T_{mu_rho} - I||`` on the truncation.

    The value is recomputed with ``beta_max + check_margin``; a relative change
    above 10% means the uncovered region matters and raises :class:`CoverageError`.
    """
    I = np.eye(basis.size)
    err = operator_norm(lattice_toeplitz(rho, basis, beta_max).matrix - I)
    deeper = operator_norm(lattice_toeplitz(rho, basis, beta_max + check_margin).matrix - I)
    if abs(err - deeper) > 0.1 * err:
        raise CoverageError(f"error moves from {err:.3e} to {deeper:.3e} when beta_max grows; increase beta_max")
    return err


def identity_scale(basis: MonomialBasis, ladder=(1.0, 0.5, 0.25, 0.125), target: float = 0.25,
                   beta_max: float = 12.0) -> float:
    """Largest ``rho`` on the ladder with ``||T_{mu_rho} - I|| < target``."""
    for rho in sorted(ladder, reverse=True):
        if approx_identity_error(rho, basis, beta_max) < target:
            return rho
    raise CoverageError(f"no rho in {ladder} brings T_mu within {target} of I")


# -- estimators ----------------------------------------------------------------------

@dataclass
class EstimatorReport:
    kind: str
    parameters: dict
    value: float
    trend: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("a", "b", "c"):
            raise ValueError(f"unknown estimator kind {self.kind!r}")
        vals = [v for _, v in self.trend] + [self.value]
        if any(v < 0 for v in vals):
            raise ValueError("estimator values must be nonnegative")
        params = np.array([p for p, _ in self.trend], dtype=float)
        if len(params) > 1 and not (np.all(np.diff(params) > 0) or np.all(np.diff(params) < 0)):
            raise ValueError("trend parameters must be strictly monotone")

    def to_json(self):
        return asdict(self)


def estimator_c(S: TruncatedOperator, r: float) -> float:
    """``||1_{(r D^n)^c} S||`` with the exact diagonal annulus Gram."""
    g = annulus_gram_diag(r, S.basis)
    return operator_norm(np.sqrt(g)[:, None] * S.matrix)


def estimator_b(S: TruncatedOperator, r: float, centers, quad: Optional[QuadratureSpec] = None) -> float:
    """Max over ``centers`` of ``||1_{D(z, r)} S||``.

    Grams are exact by default; passing ``quad`` switches to quadrature Grams.
    """
    best = 0.0
    for z in centers:
        G = box_gram(z, r, S.basis) if quad is None else box_gram_quadrature(z, r, S.basis, quad)
        best = max(best, _gram_norm(S.matrix, G))
    return best


def _axis_atoms_near(axis: DiscLattice, zl: complex, r: float) -> np.ndarray:
    """Centres of one-variable cells with ``beta(center, zl) <= r``."""
    b0 = float(np.arctanh(abs(zl)))
    out = []
    for j in range(axis.n_rings):
        m = 0.0 if j == 0 else (j + 0.5) * axis.step
        if abs(m - b0) > r:
            continue
        if j == 0:
            cand = np.array([0j])
        else:
            M = int(axis.sector_counts[j])
            # angular window from the hyperbolic law of cosines; widened by one sector
            if b0 == 0:
                half = np.pi
            else:
                c = (np.cosh(2 * m) * np.cosh(2 * b0) - np.cosh(2 * r)) / (np.sinh(2 * m) * np.sinh(2 * b0))
                half = np.pi if c <= -1 else float(np.arccos(min(c, 1.0)))
            width = 2 * np.pi / M
            if half >= np.pi or 2 * half / width + 3 >= M:
                s = np.arange(M)
            else:
                mid = np.angle(zl) / width - 0.5
                s = np.mod(np.arange(int(np.floor(mid - half / width)) - 1,
                                     int(np.ceil(mid + half / width)) + 2), M)
            cand = axis.ring_radius[j] * np.exp(1j * (s + 0.5) * width)
        keep = np.arctanh(np.minimum(np.abs(mobius(zl, cand)), 1.0)) <= r
        out.append(cand[keep])
    return np.concatenate(out) if out else np.zeros(0, complex)


def atoms_in_box(rho: float, z, r: float, beta_max: Optional[float] = None) -> np.ndarray:
    """Atoms of ``mu_rho`` inside ``D(z, r)``, enumerated ring by ring."""
    za = as_array(z)
    if beta_max is None:
        beta_max = float(np.arctanh(np.abs(za).max())) + r + rho
    axis = DiscLattice(rho, beta_max)
    per_axis = [_axis_atoms_near(axis, complex(zl), r) for zl in za]
    mesh = np.meshgrid(*per_axis, indexing="ij")
    return np.stack([g.ravel() for g in mesh], axis=-1)


def estimator_a(S: TruncatedOperator, r: float, z, rho: float) -> float:
    """``sup ||S f||`` over unit ``f`` in the span of kernels at atoms in ``D(z, r)``.

    The span is orthonormalized by an SVD that drops directions below
    ``SPAN_RCOND`` relative to the largest singular value.
    """
    atoms = atoms_in_box(rho, z, r)
    if len(atoms) == 0:
        raise ValueError(f"no lattice atoms of scale {rho} inside D(z, {r})")
    K = np.stack([kernel_coefficients(w, S.basis)[0] for w in atoms], axis=1)
    U, s, _ = np.linalg.svd(K, full_matrices=False)
    Q = U[:, s > SPAN_RCOND * s[0]]
    return operator_norm(S.matrix @ Q)


def estimator_trend(kind: str, S: TruncatedOperator, ladder: Sequence[float], **params) -> EstimatorReport:
    """Evaluate one estimator along a ladder; the last rung is the reported value.

    ``c``: ladder of ``r``.  ``b``: ladder of centre moduli along ``direction``
    at hyperbolic radius ``radius``.  ``a``: same, with lattice scale ``rho``.
    """
    trend = []
    for p in ladder:
        if kind == "c":
            v = estimator_c(S, p)
        else:
            u = np.asarray(params.get("direction", np.ones(S.basis.n)), dtype=complex)
            z = p * u
            if kind == "b":
                v = estimator_b(S, params.get("radius", 1.0), [z])
            else:
                v = estimator_a(S, params.get("radius", 1.0), z, params["rho"])
        trend.append((float(p), float(v)))
    clean = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in params.items()}
    clean["degree"] = S.basis.max_degree
    if "direction" in clean:
        clean["direction"] = [[complex(c).real, complex(c).imag] for c in clean["direction"]]
    return EstimatorReport(kind, clean, trend[-1][1], trend)


# -- segmented approximation ------------------------------------------------------------

def segmented_error(S: TruncatedOperator, mu: AtomicMeasure, cov: Covering,
                    basis: Optional[MonomialBasis] = None) -> float:
    """``||S T_mu - sum_j 1_{F_j} S T_{1_{G_j} mu}||`` as an A^2 -> L^2 norm.

    ``F_j`` are the level-0 cells and ``G_j`` the level ``k+1`` cells.  The
    region beyond the truncation is one more cell whose ``G`` is its own
    ``(k+1) sigma`` neighbourhood.  Because the ``F_j`` are disjoint the error
    operator ``sum_j 1_{F_j} S T_{1_{G_j^c} mu}`` has squared norm
    ``lambda_max(sum_j A_j^* G_{F_j} A_j)``.
    """
    basis = basis or S.basis
    if basis.n != cov.n or S.basis != basis:
        raise ValueError("operator, basis and covering dimensions differ")
    size = basis.size
    if len(mu) == 0:
        return 0.0
    E = basis.evaluate(mu.points)
    w = mu.weights

    def toeplitz_on(mask):
        Em = E[mask]
        return (Em.conj() * w[mask][:, None]).T @ Em

    T_all = toeplitz_on(np.ones(len(mu), dtype=bool))
    inside = cov.membership(cov.k + 1, mu.points)
    D = basis.max_degree
    axis_grams = [sector_gram(cov.base.axis.sector_at(c), D) for c in range(len(cov.base.axis))]
    H = np.zeros((size, size), dtype=complex)
    covered = np.zeros((size, size), dtype=complex)
    for j, cell in enumerate(cov.base):
        G_F = _kron_all([axis_grams[i] for i in cell.index])
        covered += G_F
        A = S.matrix @ (T_all - toeplitz_on(inside[:, j]))
        H += A.conj().T @ G_F @ A
    # region beyond the truncation radius and its neighbourhood
    G_rem = np.eye(size) - covered
    reach = cov.base.covered_radius - (cov.k + 1) * cov.sigma
    depth = np.arctanh(np.abs(mu.points)).max(axis=1)
    A = S.matrix @ (T_all - toeplitz_on(depth >= reach))
    H += A.conj().T @ G_rem @ A
    lam = np.linalg.eigvalsh(0.5 * (H + H.conj().T))[-1]
    return float(np.sqrt(max(lam, 0.0)))


# -- compactness verdict -----------------------------------------------------------------

def _directions(n: int, count: int):
    """Diagonal rays ``(e^{i t}, ..., e^{i t})`` towards the distinguished boundary."""
    thetas = 2 * np.pi * np.arange(count) / count
    return [unit_direction([t] * n) for t in thetas]


def compactness_verdict(S: TruncatedOperator, thresholds: VerdictThresholds = VerdictThresholds(),
                        tail_tol: float = TAIL_TOL, quad: Optional[QuadratureSpec] = None) -> dict:
    """Label the boundary behaviour of the Berezin transform of ``S``.

    ``|B(S)|`` at the outermost radius, maximized over directions, is compared
    with ``||S||``: at most ``vanishing * ||S||`` gives ``vanishing``, at least
    ``non_vanishing * ||S||`` gives ``non-vanishing``, anything else is
    ``inconclusive``.  Berezin values past the admissible radius come from the
    generating symbol or measure; operators without one stop at the last
    admissible radius, which is reported.  Membership in the Toeplitz algebra is
    assumed, never decided.
    """
    n = S.basis.n
    norm = operator_norm(S)
    profiles = []
    outer = []
    for u in _directions(n, thresholds.directions):
        rows = []
        for r in thresholds.radii:
            try:
                v, tail, route = berezin_any(S, r * np.asarray(u), tail_tol, quad)
            except TailBoundError:
                break
            rows.append({"radius": float(r), "re": v.real, "im": v.imag, "tail": tail, "route": route})
        profiles.append({"direction": [float(np.angle(c)) for c in u], "rows": rows})
        if rows:
            outer.append((rows[-1]["radius"], abs(complex(rows[-1]["re"], rows[-1]["im"]))))
    reached = min(r for r, _ in outer)
    boundary = max(v for r, v in outer if r == reached)
    if norm == 0 or boundary <= thresholds.vanishing * norm:
        label = "vanishing"
    elif boundary >= thresholds.non_vanishing * norm:
        label = "non-vanishing"
    else:
        label = "inconclusive"
    c_trend = estimator_trend("c", S, thresholds.r_ladder)
    b_trend = estimator_trend("b", S, thresholds.r_ladder, radius=thresholds.b_radius)
    return {
        "label": label,
        "operator_norm": norm,
        "boundary_berezin": boundary,
        "outermost_radius": reached,
        "thresholds": asdict(thresholds),
        "toeplitz_algebra_membership": "assumed",
        "profiles": profiles,
        "estimator_c": c_trend.to_json(),
        "estimator_b": b_trend.to_json(),
    }


def verdict_csv(report: dict) -> str:
    """Flat trend table of a verdict report."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "parameter", "value"])
    for prof in report["profiles"]:
        d = ";".join(f"{a:.17g}" for a in prof["direction"])
        for row in prof["rows"]:
            w.writerow([f"berezin[{d}]", f"{row['radius']:.17g}",
                        f"{abs(complex(row['re'], row['im'])):.17g}"])
    for key in ("estimator_c", "estimator_b"):
        for p, v in report[key]["trend"]:
            w.writerow([key, f"{p:.17g}", f"{v:.17g}"])
    return buf.getvalue()
