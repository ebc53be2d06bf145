"""Command-line experiment runner.

    bergman-kit <experiment> --config <path> [--out <dir>] [--seed <int>]

Each run writes ``<experiment>.csv`` and ``<experiment>.json`` into the output
directory.  Both embed the library version and the validated config, numbers
are printed with 17 significant digits and nothing time-dependent is written,
so a fixed config and seed reproduce the files byte for byte.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .analysis_utils import tech1_ratio
from .berezin import approx_symbol_error, decay_profile, unit_direction
from .config import RadialGrid, VerdictThresholds
from .covering import (build_cr_lattice_polydisc, build_suarez_covering, check_covering,
                       sample_polydisc, volume_ratio_bounds)
from .essential import (approx_identity_error, compactness_verdict, estimator_trend, identity_scale,
                        mu_rho, segmented_error)
from .geometry import mobius
from .measures import carleson_constant, geometric_norm, lebesgue, rkm_norm
from .operators import (DEFAULT_DEGREE, MonomialBasis, TruncatedOperator, identity, rank_one,
                        toeplitz_symbol, unit_vector, zero)
from .quadrature import QuadratureSpec
from .symbols import REGISTRY, by_name

EXPERIMENTS = ("lattice", "carleson", "berezin-profile", "approx-identity", "bk-approx",
               "segmented", "estimators", "verdict")
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class ConfigError(ValueError):
    pass


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    if isinstance(x, complex):
        return f"{x.real:.17g}{x.imag:+.17g}j"
    return str(x)


def _monotone(name: str, ladder, decreasing_ok: bool = True):
    arr = np.asarray(ladder, dtype=float)
    if arr.size == 0:
        raise ConfigError(f"{name} must be nonempty")
    if arr.size > 1:
        d = np.diff(arr)
        if not (np.all(d > 0) or (decreasing_ok and np.all(d < 0))):
            raise ConfigError(f"{name} must be strictly monotone, got {list(ladder)}")


@dataclass
class ExperimentConfig:
    experiment: str
    n: int = 1
    degree: Optional[int] = None
    radial_nodes: int = 32
    angular_nodes: int = 64
    radii: list = field(default_factory=lambda: [0.0, 0.3, 0.6, 0.9, 0.99, 0.999])
    angles: int = 8
    rho_ladder: list = field(default_factory=lambda: [0.5, 0.25, 0.125])
    sigma_ladder: list = field(default_factory=lambda: [1.0, 2.0, 3.0])
    k_list: list = field(default_factory=lambda: [0])
    r_ladder: list = field(default_factory=lambda: [0.5, 0.7, 0.9, 0.95])
    bk_list: list = field(default_factory=lambda: [1, 8, 32])
    symbols: list = field(default_factory=lambda: ["defect", "re_z1"])
    operator: dict = field(default_factory=lambda: {"kind": "rank_one"})
    measure_rho: float = 0.5
    beta_max: float = 3.0
    samples: int = 10000
    seed: int = 0
    out: str = "."
    thresholds: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys {unknown}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' key")
        try:
            cfg = cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        cfg.validate()
        return cfg

    def validate(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; choose from {list(EXPERIMENTS)}")
        if self.n not in (1, 2):
            raise ConfigError("n must be 1 or 2")
        if self.degree is not None and not (isinstance(self.degree, int) and self.degree >= 0):
            raise ConfigError("degree must be a nonnegative integer")
        for name in ("radii", "rho_ladder", "sigma_ladder", "k_list", "r_ladder", "bk_list"):
            _monotone(name, getattr(self, name))
        if self.radii and not all(0 <= r < 1 for r in self.radii):
            raise ConfigError("radii must lie in [0, 1)")
        if not all(0 < r < 1 for r in self.r_ladder):
            raise ConfigError("r_ladder must lie in (0, 1)")
        if not all(r > 0 for r in self.rho_ladder) or self.measure_rho <= 0:
            raise ConfigError("lattice scales must be positive")
        if not all(s >= 1 for s in self.sigma_ladder):
            raise ConfigError("sigma_ladder entries must be at least 1")
        if not all(isinstance(k, int) and k >= 0 for k in self.k_list + self.bk_list):
            raise ConfigError("k_list and bk_list need nonnegative integers")
        if not self.symbols or any(s not in REGISTRY for s in self.symbols):
            raise ConfigError(f"symbols must be a nonempty subset of {sorted(REGISTRY)}")
        if self.beta_max <= 0 or self.samples <= 0 or self.angles <= 0:
            raise ConfigError("beta_max, samples and angles must be positive")
        if self.radial_nodes <= 0 or self.angular_nodes <= 0:
            raise ConfigError("quadrature sizes must be positive")
        if not isinstance(self.seed, int):
            raise ConfigError("seed must be an integer")
        kind = self.operator.get("kind") if isinstance(self.operator, dict) else None
        if kind not in ("identity", "zero", "rank_one", "toeplitz"):
            raise ConfigError("operator.kind must be identity, zero, rank_one or toeplitz")
        if kind == "toeplitz" and self.operator.get("symbol") not in REGISTRY:
            raise ConfigError(f"operator.symbol must be one of {sorted(REGISTRY)}")
        try:
            self.verdict_thresholds()
        except TypeError as exc:
            raise ConfigError(f"thresholds: {exc}") from None

    @property
    def basis(self) -> MonomialBasis:
        return MonomialBasis(self.n, self.degree if self.degree is not None else DEFAULT_DEGREE[self.n])

    @property
    def quad(self) -> QuadratureSpec:
        return QuadratureSpec(self.radial_nodes, self.angular_nodes)

    def verdict_thresholds(self) -> VerdictThresholds:
        kw = {k: tuple(v) if isinstance(v, list) else v for k, v in self.thresholds.items()}
        return VerdictThresholds(**kw)


def build_operator(spec: dict, basis: MonomialBasis) -> TruncatedOperator:
    kind = spec["kind"]
    if kind == "identity":
        return identity(basis)
    if kind == "zero":
        return zero(basis)
    if kind == "rank_one":
        e0 = unit_vector(basis)
        return rank_one(e0, e0, basis)
    return toeplitz_symbol(by_name(spec["symbol"], basis.n), basis)


def battery(basis: MonomialBasis) -> dict:
    """The four reference operators: two compact, two not."""
    n = basis.n
    e0 = unit_vector(basis)
    return {
        "identity": identity(basis),
        "rank_one": rank_one(e0, e0, basis),
        "toeplitz_defect": toeplitz_symbol(by_name("defect", n), basis),
        "toeplitz_z1": toeplitz_symbol(by_name("z1", n), basis),
    }


# -- experiments ------------------------------------------------------------------------

def run_lattice(cfg: ExperimentConfig):
    rng = np.random.default_rng(cfg.seed)
    rows, details = [], []
    for rho in cfg.rho_ladder:
        lat = build_cr_lattice_polydisc(rho, cfg.n, cfg.beta_max)
        pts = sample_polydisc(rng, cfg.samples, cfg.n, cfg.beta_max)
        cell = lat.locate(pts)
        centers = lat.centers()
        ok = cell >= 0
        dist = np.arctanh(np.abs(mobius(pts[ok], centers[cell[ok]])).max(axis=-1))
        hits = np.bincount(cell[ok], minlength=len(lat)) if len(lat) <= 10**6 else None
        vol = lat.volumes()
        ratio = vol / np.prod((1 - np.abs(centers) ** 2) ** 2, axis=-1)
        lo, hi = volume_ratio_bounds(rho, cfg.n)
        row = {"family": "cr", "scale": rho, "k": "", "cells": len(lat), "uncovered": int((~ok).sum()),
               "max_beta_to_center": float(dist.max()), "containment_violations": int((dist > rho).sum()),
               "volume_ratio_min": float(ratio.min()), "volume_ratio_max": float(ratio.max()),
               "ratio_bounds_ok": bool(lo <= ratio.min() and ratio.max() <= hi),
               "overlap_bound": 1, "violations": int((~ok).sum() + (dist > rho).sum())}
        rows.append(row)
        details.append({"rho": rho, "covered_radius": lat.covered_radius,
                        "sector_counts": lat.axis.sector_counts.tolist(),
                        "occupied_cells": None if hits is None else int((hits > 0).sum())})
    for sigma in cfg.sigma_ladder:
        for k in cfg.k_list:
            cov = build_suarez_covering(sigma, k, cfg.n, cfg.beta_max, samples=min(cfg.samples, 4000),
                                        seed=cfg.seed)
            pts = sample_polydisc(rng, cfg.samples, cfg.n, cfg.beta_max)
            rep = check_covering(cov, pts, rng=rng)
            viol = sum(rep.get(p, 0) for p in ("disjointness", "coverage", "nesting", "overlap",
                                                 "separation", "diameter"))
            rows.append({"family": "suarez", "scale": sigma, "k": k, "cells": len(cov.base), "uncovered": rep["coverage"],
                         "max_beta_to_center": "", "containment_violations": "",
                         "volume_ratio_min": "", "volume_ratio_max": "", "ratio_bounds_ok": "",
                         "overlap_bound": cov.overlap_bound, "violations": viol})
            details.append({"sigma": sigma, "k": k, "report": rep,
                            "diameter_bounds": list(cov.diameter_bounds)})
    return rows, {"details": details}


def run_carleson(cfg: ExperimentConfig):
    basis = cfg.basis
    grid = RadialGrid(tuple(cfg.radii), cfg.angles).points(cfg.n)
    centers = RadialGrid(tuple(r for r in cfg.radii if r <= 0.9), cfg.angles).points(cfg.n)
    measures = {"volume": lebesgue(cfg.n)}
    for rho in cfg.rho_ladder:
        mu = mu_rho(rho, cfg.n, cfg.beta_max)
        measures[f"mu_rho={_fmt(rho)}"] = mu
        measures[f"2*mu_rho={_fmt(rho)}"] = mu.scale(2.0)
    rows = []
    for name, mu in measures.items():
        rkm = rkm_norm(mu, grid).value
        geo = geometric_norm(mu, 1.0, centers, cfg.quad).value
        car = carleson_constant(mu, basis)
        vals = [rkm, geo, car]
        rows.append({"measure": name, "rkm": rkm, "geometric": geo, "toeplitz_norm": car,
                     "max_ratio": max(vals) / min(vals)})
    return rows, {}


def run_berezin_profile(cfg: ExperimentConfig):
    S = build_operator(cfg.operator, cfg.basis)
    rows = []
    for i in range(cfg.angles):
        theta = 2 * np.pi * i / cfg.angles
        prof = decay_profile(S, unit_direction([theta] * cfg.n), cfg.radii, route_symbols=True)
        for r, v, t, route in zip(prof.radii, prof.values, prof.tails, prof.routes):
            rows.append({"direction": theta, "radius": r, "re": v.real, "im": v.imag,
                         "abs": abs(v), "tail_bound": t, "route": route})
    return rows, {}


def run_approx_identity(cfg: ExperimentConfig):
    basis = cfg.basis
    rows, prev = [], None
    for rho in cfg.rho_ladder:
        err = approx_identity_error(rho, basis, max(cfg.beta_max, 12.0))
        rows.append({"rho": rho, "error": err, "ratio_to_previous": "" if prev is None else err / prev})
        prev = err
    return rows, {}


def run_bk_approx(cfg: ExperimentConfig):
    grid = RadialGrid(tuple(cfg.radii), cfg.angles)
    rows = []
    for name in cfg.symbols:
        a = by_name(name, cfg.n)
        for k in cfg.bk_list:
            err = approx_symbol_error(a, k, grid)
            rows.append({"symbol": name, "k": k, "sup_error": err.value,
                         "at": ";".join(_fmt(complex(c)) for c in err.at)})
    return rows, {}


def run_segmented(cfg: ExperimentConfig):
    basis = cfg.basis
    spec = cfg.operator if cfg.operator.get("kind") == "toeplitz" else {"kind": "toeplitz", "symbol": "abs_z1_sq"}
    S = build_operator(spec, basis)
    mu = mu_rho(cfg.measure_rho, cfg.n, cfg.beta_max)
    rows = []
    for k in cfg.k_list:
        for sigma in cfg.sigma_ladder:
            cov = build_suarez_covering(sigma, k, cfg.n, cfg.beta_max, samples=min(cfg.samples, 4000),
                                        seed=cfg.seed)
            err = segmented_error(S, mu, cov, basis)
            tech = tech1_ratio(sigma, 2.0, 0.2, mu, samples=min(cfg.samples, 4000),
                               beta_max=cfg.beta_max, seed=cfg.seed)
            rows.append({"k": k, "sigma": sigma, "cells": len(cov.base), "overlap_bound": cov.overlap_bound,
                         "segmented_error": err, "tail_ratio": tech})
    return rows, {"operator": spec, "measure_rho": cfg.measure_rho}


def run_estimators(cfg: ExperimentConfig):
    basis = cfg.basis
    rho = identity_scale(basis)
    rows, reports = [], {}
    for name, S in battery(basis).items():
        reps = [estimator_trend("c", S, cfg.r_ladder),
                estimator_trend("b", S, cfg.r_ladder, radius=1.0),
                estimator_trend("a", S, cfg.r_ladder, radius=1.0, rho=rho)]
        reports[name] = [r.to_json() for r in reps]
        for rep in reps:
            for p, v in rep.trend:
                rows.append({"operator": name, "estimator": rep.kind, "parameter": p, "value": v})
    return rows, {"identity_scale_rho": rho, "reports": reports}


def run_verdict(cfg: ExperimentConfig):
    S = build_operator(cfg.operator, cfg.basis)
    report = compactness_verdict(S, cfg.verdict_thresholds())
    rows = []
    for prof in report["profiles"]:
        for row in prof["rows"]:
            rows.append({"section": "berezin", "direction": prof["direction"][0], "parameter": row["radius"],
                         "value": abs(complex(row["re"], row["im"])), "route": row["route"]})
    for key in ("estimator_c", "estimator_b"):
        for p, v in report[key]["trend"]:
            rows.append({"section": key, "direction": "", "parameter": p, "value": v, "route": ""})
    rows.append({"section": "label", "direction": "", "parameter": report["outermost_radius"],
                 "value": report["label"], "route": ""})
    return rows, {"report": report}


RUNNERS = {
    "lattice": run_lattice,
    "carleson": run_carleson,
    "berezin-profile": run_berezin_profile,
    "approx-identity": run_approx_identity,
    "bk-approx": run_bk_approx,
    "segmented": run_segmented,
    "estimators": run_estimators,
    "verdict": run_verdict,
}


# -- output -------------------------------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(_fmt(x))
    if isinstance(x, complex):
        return [float(_fmt(x.real)), float(_fmt(x.imag))]
    return x


def render_csv(rows: list, cfg: ExperimentConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# bergman-kit {__version__}\n")
    buf.write("# config: " + json.dumps(_jsonable(asdict(cfg)), sort_keys=True) + "\n")
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})
    return buf.getvalue()


def render_json(rows: list, extra: dict, cfg: ExperimentConfig) -> str:
    doc = {"version": __version__, "experiment": cfg.experiment, "config": asdict(cfg),
           "rows": rows, **extra}
    return json.dumps(_jsonable(doc), sort_keys=True, indent=1) + "\n"


def run(cfg: ExperimentConfig, out_dir: Optional[Path] = None) -> tuple[Path, Path]:
    out_dir = Path(out_dir or cfg.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows, extra = RUNNERS[cfg.experiment](cfg)
    csv_path = out_dir / f"{cfg.experiment}.csv"
    json_path = out_dir / f"{cfg.experiment}.json"
    csv_path.write_text(render_csv(rows, cfg))
    json_path.write_text(render_json(rows, extra, cfg))
    return csv_path, json_path


def _fail(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": kind, "message": message, "exit_code": code}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bergman-kit", description=__doc__.splitlines()[0])
    parser.add_argument("experiment")
    parser.add_argument("--config", required=True, type=Path)
    parser.add_argument("--out", type=Path, default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--version", action="version", version=f"bergman-kit {__version__}")
    args = parser.parse_args(argv)
    if args.experiment not in EXPERIMENTS:
        return _fail(EXIT_CONFIG, "ConfigError", f"unknown experiment {args.experiment!r}; choose from {list(EXPERIMENTS)}")
    try:
        data = json.loads(args.config.read_text())
        if isinstance(data, dict):
            data.setdefault("experiment", args.experiment)
            if data["experiment"] != args.experiment:
                raise ConfigError(f"config is for {data['experiment']!r}, not {args.experiment!r}")
            if args.seed is not None:
                data["seed"] = args.seed
        cfg = ExperimentConfig.from_dict(data)
    except (OSError, json.JSONDecodeError, ConfigError) as exc:
        return _fail(EXIT_CONFIG, type(exc).__name__, str(exc))
    try:
        csv_path, json_path = run(cfg, args.out)
    except Exception as exc:  # any module failure is a numeric failure for the caller
        return _fail(EXIT_NUMERIC, type(exc).__name__, str(exc))
    print(f"wrote {csv_path} and {json_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
