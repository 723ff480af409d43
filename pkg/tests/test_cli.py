import json
import os

import numpy as np
import pytest

from semilat.cli import main
from semilat.config import load_config, parse_config
from semilat.errors import ConfigError
from semilat.runner import bundle_json, run_experiment

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def cfg_path(name):
    return os.path.join(CONFIG_DIR, name)


def test_parse_rejects_unknown_keys(tmp_path):
    doc = {"model": {"name": "ho1d"}, "e0": [0.5], "h_grid": [0.1],
           "bogus": 1}
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_parse_rejects_increasing_h_grid():
    doc = {"model": {"name": "ho1d"}, "e0": [0.5], "h_grid": [0.05, 0.1]}
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_parse_requires_mc_seed():
    doc = {"model": {"name": "ho1d"}, "e0": [0.5], "h_grid": [0.1],
           "mc": {"n_samples": 1000}}
    with pytest.raises(ConfigError):
        parse_config(doc)


def test_parse_defaults():
    doc = {"model": {"name": "ho1d"}, "e0": [0.5], "h_grid": [0.1]}
    cfg = parse_config(doc)
    assert cfg.backend == "exact"
    assert cfg.tolerances["tol_flow"] == 1e-11
    assert cfg.formats == ["json"]


def test_bundled_configs_parse():
    for name in ("ho1d.cfg", "ho2d_HL.cfg", "ho2d_k1.cfg",
                 "aniso_irrational.cfg", "central_quartic.cfg"):
        cfg = load_config(cfg_path(name))
        assert cfg.h_grid


def test_config_echo_roundtrip():
    cfg = load_config(cfg_path("ho1d.cfg"))
    again = parse_config(cfg.raw)
    assert again.digest() == cfg.digest()


def test_run_ho1d_end_to_end(tmp_path):
    rc = main(["run", cfg_path("ho1d.cfg"), "--out", str(tmp_path),
               "--format", "both"])
    assert rc == 0
    bundle = json.load(open(tmp_path / "bundle.json"))
    assert bundle["schema_version"] == 1
    assert bundle["scaling"]["exact"] is True
    # lattice is h(n + 1/2): check a few emitted match pairs at h = 0.1
    entry = [e for e in bundle["per_h"] if abs(e["h"] - 0.1) < 1e-12][0]
    assert entry["match"]["n_unmatched_spectrum"] == 0
    for pair in entry["match"]["pairs"]:
        val = pair["point"][0]
        assert abs(val / 0.1 - 0.5 - round(val / 0.1 - 0.5)) < 1e-9


def test_csv_row_counts(tmp_path):
    main(["run", cfg_path("ho1d.cfg"), "--out", str(tmp_path),
          "--format", "both"])
    bundle = json.load(open(tmp_path / "bundle.json"))
    n_pairs = sum(len(e["match"]["pairs"]) for e in bundle["per_h"])
    with open(tmp_path / "matches.csv") as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) - 1 == n_pairs
    with open(tmp_path / "scaling.csv") as fh:
        rows = fh.read().strip().splitlines()
    assert len(rows) - 1 == len(bundle["per_h"])


def test_determinism_byte_identical():
    cfg = load_config(cfg_path("ho1d.cfg"))
    b1 = run_experiment(cfg, seed=7)
    b2 = run_experiment(cfg, seed=7)
    assert bundle_json(b1, drop_timestamp=True) == \
        bundle_json(b2, drop_timestamp=True)


def test_validate_verb_ok(capsys):
    rc = main(["validate", cfg_path("ho1d.cfg")])
    assert rc == 0
    assert "hypotheses: ok" in capsys.readouterr().out


def test_aniso_run_aborts_with_h2(capsys):
    rc = main(["run", cfg_path("aniso_irrational.cfg"), "--out", "/tmp/x"])
    assert rc == 1
    err = capsys.readouterr().err
    assert "H2" in err


def test_spectrum_verb(capsys):
    rc = main(["spectrum", cfg_path("ho1d.cfg")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "joint eigenvalues" in out


def test_invariants_verb(capsys):
    rc = main(["invariants", cfg_path("ho1d.cfg")])
    assert rc == 0
    out = capsys.readouterr().out
    assert "period basis" in out
    assert "mu=2" in out


def test_seventeen_digit_floats(tmp_path):
    main(["run", cfg_path("ho1d.cfg"), "--out", str(tmp_path)])
    text = open(tmp_path / "bundle.json").read()
    # pi-derived action must be printed to full precision
    assert "3.141592653589" in text
