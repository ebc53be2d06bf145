import json
import subprocess
import sys
from pathlib import Path

import pytest

from bergman_kit import __version__
from bergman_kit.cli import EXIT_CONFIG, EXIT_NUMERIC, ConfigError, ExperimentConfig, main, run

CONFIGS = Path(__file__).resolve().parents[1] / "scripts" / "configs"


def _write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return p


def test_verdict_rank_one_is_vanishing(tmp_path):
    cfg = _write(tmp_path, {"experiment": "verdict", "operator": {"kind": "rank_one"}})
    assert main(["verdict", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "verdict.json").read_text())
    assert report["report"]["label"] == "vanishing"
    assert report["report"]["toeplitz_algebra_membership"] == "assumed"


def test_outputs_embed_version_and_config(tmp_path):
    cfg = _write(tmp_path, {"experiment": "bk-approx", "bk_list": [1, 8], "symbols": ["defect"]})
    assert main(["bk-approx", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "bk-approx.csv").read_text().splitlines()
    assert lines[0] == f"# bergman-kit {__version__}"
    assert lines[1].startswith("# config: ")
    assert json.loads(lines[1][len("# config: "):])["bk_list"] == [1, 8]
    doc = json.loads((tmp_path / "bk-approx.json").read_text())
    assert doc["version"] == __version__ and doc["config"]["symbols"] == ["defect"]


def test_approx_identity_column_decreases(tmp_path):
    cfg = _write(tmp_path, {"experiment": "approx-identity"})
    assert main(["approx-identity", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    doc = json.loads((tmp_path / "approx-identity.json").read_text())
    errs = [row["error"] for row in doc["rows"]]
    assert errs[0] > errs[1] > errs[2]


@pytest.mark.parametrize("bad", [
    {"experiment": "approx-identity", "rho_ladder": []},
    {"experiment": "segmented", "sigma_ladder": [1.0, 3.0, 2.0]},
    {"experiment": "segmented", "sigma_ladder": [0.5]},
    {"experiment": "verdict", "operator": {"kind": "toeplitz", "symbol": "nope"}},
    {"experiment": "verdict", "colour": "blue"},
    {"experiment": "verdict", "thresholds": {"bogus": 1}},
    {"experiment": "verdict", "n": 3},
])
def test_invalid_configs_exit_2(tmp_path, bad, capsys):
    cfg = _write(tmp_path, bad)
    assert main([bad["experiment"], "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_CONFIG
    err = json.loads(capsys.readouterr().err)
    assert err["exit_code"] == EXIT_CONFIG and err["message"]


def test_unknown_experiment_and_missing_file(tmp_path, capsys):
    cfg = _write(tmp_path, {})
    assert main(["nope", "--config", str(cfg)]) == EXIT_CONFIG
    assert main(["verdict", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    other = _write(tmp_path, {"experiment": "lattice"})
    assert main(["verdict", "--config", str(other)]) == EXIT_CONFIG


def test_numeric_failure_exit_3(tmp_path, capsys):
    # a lattice this deep cannot be materialized as atoms
    cfg = _write(tmp_path, {"experiment": "segmented", "measure_rho": 0.05, "beta_max": 12.0})
    assert main(["segmented", "--config", str(cfg), "--out", str(tmp_path)]) == EXIT_NUMERIC
    assert json.loads(capsys.readouterr().err)["exit_code"] == EXIT_NUMERIC


def test_from_dict_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict([])
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"n": 1})
    cfg = ExperimentConfig.from_dict({"experiment": "carleson", "n": 2})
    assert cfg.basis.max_degree == 6


def test_seed_override_changes_config_echo(tmp_path):
    cfg = _write(tmp_path, {"experiment": "verdict"})
    assert main(["verdict", "--config", str(cfg), "--out", str(tmp_path), "--seed", "5"]) == 0
    assert json.loads((tmp_path / "verdict.json").read_text())["config"]["seed"] == 5


def test_reruns_are_byte_identical(tmp_path):
    cfg = ExperimentConfig.from_dict({"experiment": "berezin-profile", "operator": {"kind": "toeplitz", "symbol": "defect"},
                                      "angles": 2})
    a = run(cfg, tmp_path / "a")
    b = run(cfg, tmp_path / "b")
    for x, y in zip(a, b):
        assert x.read_bytes() == y.read_bytes()


def test_every_shipped_config_validates():
    names = sorted(p.stem for p in CONFIGS.glob("*.json"))
    assert names == sorted(["lattice", "carleson", "berezin-profile", "approx-identity", "bk-approx",
                            "segmented", "estimators", "verdict"])
    for p in CONFIGS.glob("*.json"):
        ExperimentConfig.from_dict(json.loads(p.read_text()))


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "bergman_kit.cli", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and __version__ in out.stdout
