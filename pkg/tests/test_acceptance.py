"""Exit criteria for the package, one test per criterion.

Each test prints a single ``[PASS]`` / ``[FAIL]`` line with the measured values
and then asserts.  Run with ``pytest -m acceptance -s`` to see only these lines.
"""

import json
from pathlib import Path

import numpy as np
import pytest

from bergman_kit.analysis_utils import KernelSpec, boundary_exponent, growth_integral, schur_bound
from bergman_kit.berezin import (approx_symbol_error, berezin_covariance_check, berezin_operator, k_berezin_measure,
                                 k_berezin_symbol)
from bergman_kit.cli import main
from bergman_kit.config import RadialGrid
from bergman_kit.covering import build_cr_lattice_polydisc, build_suarez_covering, sample_polydisc
from bergman_kit.essential import approx_identity_error, compactness_verdict, estimator_c, mu_rho, segmented_error
from bergman_kit.geometry import beta, mobius
from bergman_kit.measures import AtomicMeasure, DensityMeasure, carleson_constant, geometric_norm, lebesgue, rkm_norm
from bergman_kit.operators import (MonomialBasis, identity, kernel_tail, rank_one, toeplitz_symbol, unit_vector)
from bergman_kit.symbols import by_name

from conftest import random_disc

pytestmark = pytest.mark.acceptance

ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture
def verdict_line(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {detail}")
        return ok
    return emit


def test_c01_moebius_identities(verdict_line):
    rng = np.random.default_rng(1)
    worst = 0.0
    for n in (1, 2):
        z, w, xi = (random_disc(rng, (1000, n), 0.99) for _ in range(3))
        inv = np.abs(mobius(z, mobius(z, w)) - w).max()
        lhs = 1 - np.abs(mobius(z, w)) ** 2
        rhs = (1 - np.abs(z) ** 2) * (1 - np.abs(w) ** 2) / np.abs(1 - np.conj(z) * w) ** 2
        first = np.abs(lhs - rhs).max()
        lhs = 1 - np.conj(mobius(z, w)) * mobius(z, xi)
        rhs = (1 - np.abs(z) ** 2) * (1 - np.conj(w) * xi) / ((1 - np.conj(z) * xi) * (1 - np.conj(w) * z))
        second = (np.abs(lhs - rhs) / np.maximum(1, np.abs(rhs))).max()
        worst = max(worst, inv, first, second)
    ok = worst <= 1e-12
    verdict_line(1, ok, f"max identity/involution defect {worst:.2e} (tol 1e-12) over 1000 triples, n=1,2")
    assert ok


def test_c02_coverings(verdict_line):
    rng = np.random.default_rng(2)
    bad = {}
    for rho in (0.5, 1.0):
        lat = build_cr_lattice_polydisc(rho, 1, 3.0)
        pts = sample_polydisc(rng, 10000, 1, 3.0)
        hits = np.stack([c.contains(pts) for c in lat], axis=1).sum(axis=1)
        idx = lat.locate(pts)
        outer = int(np.sum(beta(pts, lat.centers()[idx]) > rho + 1e-6))
        bad[f"CR rho={rho}"] = int(np.sum(hits != 1)) + outer
    for sigma in (1.0, 2.0):
        for k in (0, 2):
            cov = build_suarez_covering(sigma, k, 1, 3.0, samples=10000, seed=int(10 * sigma + k))
            rep = cov.report
            bad[f"Suarez s={sigma:g} k={k}"] = sum(rep[p] for p in ("disjointness", "coverage", "nesting",
                                                                  "overlap", "separation", "diameter"))
    total = sum(bad.values())
    verdict_line(2, total == 0, f"violations {bad} at margin 1e-6 on 1e4 samples each")
    assert total == 0


def test_c03_carleson_norms(verdict_line):
    exact = rkm_norm(lebesgue(1))
    dev = float(np.abs(exact.values - 1).max())
    grid = RadialGrid(moduli=(0.0, 0.3, 0.6, 0.9), angles=8)
    basis = MonomialBasis(1, 12)
    battery = {"dv": lebesgue(1), "comb": mu_rho(1.0, 1, 3.0), "half": DensityMeasure(by_name("half", 1))}
    factors, homog = {}, 0.0
    for name, mu in battery.items():
        vals = np.array([rkm_norm(mu, grid).value, geometric_norm(mu, 1.0, grid).value, carleson_constant(mu, basis)])
        factors[name] = round(float(vals.max() / vals.min()), 3)
        mu3 = mu.scale(3.0) if isinstance(mu, AtomicMeasure) else DensityMeasure(mu.density.scale(3.0))
        vals3 = np.array([rkm_norm(mu3, grid).value, geometric_norm(mu3, 1.0, grid).value,
                          carleson_constant(mu3, basis)])
        homog = max(homog, float(np.abs(vals3 / (3 * vals) - 1).max()))
    ok = dev <= 1e-8 and max(factors.values()) <= 20 and homog <= 1e-9
    verdict_line(3, ok, f"|rkm(dv)-1| = {dev:.1e}; norm-spread factors {factors} (<= 20); "
                        f"homogeneity defect {homog:.1e}")
    assert ok


def test_c04_berezin_exactness(verdict_line):
    basis = MonomialBasis(1, 30)
    rng = np.random.default_rng(4)
    zs = random_disc(rng, (200, 1), 0.5)
    id_err = max(abs(berezin_operator(identity(basis), z) - 1) for z in zs)
    r1 = 0.0
    for n, D in ((1, 12), (2, 6)):
        b = MonomialBasis(n, D)
        e0 = unit_vector(b)
        P = rank_one(e0, e0, b)
        for z in random_disc(rng, (200, n), 0.999):
            r1 = max(r1, abs(berezin_operator(P, z) - np.prod((1 - np.abs(z) ** 2) ** 2)))
    pts = RadialGrid().points(1)
    pts = pts[[kernel_tail(p, basis) <= 1e-8 for p in pts]]
    toep = 0.0
    for name in ("z1", "re_z1", "defect", "abs_z1_sq"):
        a = by_name(name, 1)
        T = toeplitz_symbol(a, basis)
        toep = max(toep, max(abs(berezin_operator(T, z) - k_berezin_symbol(a, 0, z)) for z in pts))
    ok = id_err <= 1e-9 and r1 <= 1e-10 and toep <= 1e-6
    verdict_line(4, ok, f"|B(I)-1| = {id_err:.1e} (1e-9, |z|<=0.5, D=30); |B(1x1)-prod| = {r1:.1e} (1e-10); "
                        f"|B(T_a)-B0(a)| = {toep:.1e} (1e-6) on {len(pts)} admissible grid points")
    assert ok


def test_c05_k_berezin(verdict_line):
    norm_err = 0.0
    for n in (1, 2):
        pts = RadialGrid(angles=4).points(n)
        for k in (0, 1, 4, 16):
            for z in pts:
                norm_err = max(norm_err, abs(k_berezin_measure(lebesgue(n), k, z) - 1))
    rng = np.random.default_rng(5)
    cov_err, dom_bad = 0.0, 0
    for i in range(100):
        n = 1 + i % 2
        mu = AtomicMeasure(random_disc(rng, (5, n), 0.95), rng.standard_normal(5) + 1j * rng.standard_normal(5))
        z, w = random_disc(rng, (2, n), 0.95)
        k = int(rng.integers(0, 8))
        lhs, _, gap = berezin_covariance_check(mu, k, z, w)
        cov_err = max(cov_err, gap / max(1.0, abs(lhs)))
        tv = mu.total_variation()
        for x in random_disc(rng, (10, n), 0.999):
            if abs(k_berezin_measure(mu, k, x)) > (k + 1) ** n * k_berezin_measure(tv, 0, x).real * (1 + 1e-12):
                dom_bad += 1
    ok = norm_err <= 1e-8 and cov_err <= 1e-11 and dom_bad == 0
    verdict_line(5, ok, f"|B_k(dv)-1| = {norm_err:.1e} (1e-8); covariance gap {cov_err:.1e} (1e-11) on 100 "
                        f"instances; domination violations {dom_bad}")
    assert ok


def test_c06_bk_approximation(verdict_line):
    seqs = {}
    for name in ("defect", "re_z1"):
        seqs[name] = [approx_symbol_error(by_name(name, 1), k).value for k in (1, 8, 32)]
    ok = all(s[0] > s[1] > s[2] for s in seqs.values())
    detail = "; ".join(f"{n}: " + ", ".join(f"{v:.3e}" for v in s) for n, s in seqs.items())
    verdict_line(6, ok, f"sup-grid errors at k=1,8,32 -> {detail} (strictly decreasing)")
    assert ok


def test_c07_approximate_identity(verdict_line):
    basis = MonomialBasis(1, 12)
    errs = [approx_identity_error(r, basis) for r in (0.5, 0.25, 0.125)]
    ratios = [errs[1] / errs[0], errs[2] / errs[1]]
    ok = errs[0] > errs[1] > errs[2] and all(0.2 < q < 0.9 for q in ratios)
    verdict_line(7, ok, "errors " + ", ".join(f"{e:.4e}" for e in errs) + " at rho=0.5,0.25,0.125; halving ratios "
                 + ", ".join(f"{q:.3f}" for q in ratios) + " (need each in (0.2, 0.9))")
    assert ok


def test_c08_segmented(verdict_line):
    basis = MonomialBasis(1, 12)
    S = toeplitz_symbol(by_name("abs_z1_sq", 1), basis)
    mu = mu_rho(0.5, 1, 3.0)
    errs = [segmented_error(S, mu, build_suarez_covering(s, 0, 1, 3.0, samples=2000)) for s in (1.0, 2.0, 3.0)]
    ok = errs[0] > errs[1] > errs[2]
    verdict_line(8, ok, "segmented errors at sigma=1,2,3: " + ", ".join(f"{e:.4f}" for e in errs)
                 + " (strictly decreasing)")
    assert ok


def _battery(basis):
    e0 = unit_vector(basis)
    return {"1x1": rank_one(e0, e0, basis), "T_defect": toeplitz_symbol(by_name("defect", 1), basis),
            "I": identity(basis), "T_z1": toeplitz_symbol(by_name("z1", 1), basis)}


def test_c09a_verdict_labels(verdict_line):
    expected = {"1x1": "vanishing", "T_defect": "vanishing", "I": "non-vanishing", "T_z1": "non-vanishing"}
    got = {k: compactness_verdict(S)["label"] for k, S in _battery(MonomialBasis(1, 12)).items()}
    ok = got == expected
    verdict_line("9a", ok, f"verdict labels {got}")
    assert ok


def test_c09b_estimator_c_separation(verdict_line):
    ops = _battery(MonomialBasis(1, 12))
    c_id = estimator_c(ops["I"], 0.95)
    c_r1 = estimator_c(ops["1x1"], 0.95)
    ok = c_id > 0.9 and c_r1 < 0.1
    verdict_line("9b", ok, f"estimator_c(r=0.95, D=12): I -> {c_id:.4f} (need > 0.9), 1x1 -> {c_r1:.4f} "
                           f"(need < 0.1)")
    assert ok


def test_c10_growth_and_schur(verdict_line):
    growth = max(abs(growth_integral(4, 0, r * np.exp(0.3j)) * (1 - r * r) ** 2 - 1)
                 for r in np.linspace(0, 0.9, 10))
    slope = boundary_exponent(4, 0)
    cases = [
        (KernelSpec("bergman", s=2.0), -0.25, 2.0),
        (KernelSpec("bergman", s=2.0, t=0.5), -0.25, 2.0),
        (KernelSpec("bergman", s=2.0), -0.2, 3.0),
        (KernelSpec("bergman", s=2.0), -0.2, 1.5),
        (KernelSpec("tech", p=3.0), -2 / 9, 3.0),
        (KernelSpec("tech", p=4.0), -3 / 16, 4.0),
        (KernelSpec("bergman", s=2.0, n=2), -0.25, 2.0),
    ]
    worst = 0.0
    for kern, h, p in cases:
        res = schur_bound(kern, h, p)
        worst = max(worst, res.empirical_norm / res.bound)
    ok = growth <= 1e-8 and abs(slope + 2) <= 0.05 and worst <= 1.05
    verdict_line(10, ok, f"|F_40 (1-|z|^2)^2 - 1| = {growth:.1e} (1e-8); slope {slope:.4f} (-2 +- 0.05); "
                         f"max empirical/bound over {len(cases)} Schur cases {worst:.3f} (<= 1.05)")
    assert ok


def test_c11_determinism(verdict_line, tmp_path):
    configs = sorted((ROOT / "scripts" / "configs").glob("*.json"))
    codes, differ = {}, []
    for cfg in configs:
        for run in ("a", "b"):
            codes[(cfg.stem, run)] = main([cfg.stem, "--config", str(cfg), "--out", str(tmp_path / run),
                                           "--seed", "0"])
        for ext in ("csv", "json"):
            a = (tmp_path / "a" / f"{cfg.stem}.{ext}").read_bytes()
            b = (tmp_path / "b" / f"{cfg.stem}.{ext}").read_bytes()
            if a != b:
                differ.append(f"{cfg.stem}.{ext}")
    failed = sorted({k for (k, _), c in codes.items() if c != 0})
    ok = not failed and not differ
    verdict_line(11, ok, f"{len(configs)} experiments run twice; nonzero exits {failed}; differing files {differ}")
    assert ok
