import json

import numpy as np
import pytest

from qcurv.cli import main
from qcurv.geometry import make_dimension
from qcurv.pipeline import (
    EXIT_GATE,
    EXIT_HYPOTHESIS,
    EXIT_NOT_FOUND,
    EXIT_OK,
    ConfigError,
    RunConfig,
    axisym_frame,
    build_backend,
    build_f,
    cmd_check,
    cmd_constants,
    cmd_solve,
    load_config,
    recheck,
)


# --- configuration ---------------------------------------------------------


def test_defaults_fill_in():
    cfg = RunConfig()
    assert cfg.L == 160 and cfg.tolerances["gate_residual"] == 1e-3
    assert RunConfig(backend="full", n=5).L == 4


@pytest.mark.parametrize("raw", [
    {"n": 4},
    {"backend": "fem"},
    {"t0": 0.5},
    {"bogus": 1},
    {"tolerances": {"solvr": 1e-9}},
    {"f": {"preset": "axis", "terms": []}},
    {"f": {"eps": 0.1}},
    {"f": {"preset": "nope"}},
])
def test_invalid_configs_rejected(raw):
    with pytest.raises(ConfigError):
        RunConfig.from_dict(raw)


def test_partial_tables_merge_with_defaults():
    cfg = RunConfig.from_dict({"tolerances": {"solver": 1e-9}})
    assert cfg.tolerances["solver"] == 1e-9 and cfg.tolerances["zero"] == 1e-8


def test_toml_and_json_agree(tmp_path):
    (tmp_path / "c.toml").write_text('n = 5\nt0 = 6.0\n[f]\npreset = "kw"\neps = 0.02\n')
    (tmp_path / "c.json").write_text(json.dumps({"n": 5, "t0": 6.0, "f": {"preset": "kw", "eps": 0.02}}))
    a, b = load_config(tmp_path / "c.toml"), load_config(tmp_path / "c.json")
    assert a.to_dict() == b.to_dict() and a.hash == b.hash


def test_overrides():
    cfg = RunConfig().with_overrides(eps=0.01, backend="full", n=5, seed=None)
    assert cfg.f["eps"] == 0.01 and cfg.backend == "full" and cfg.L == 4 and cfg.seed == 0


def test_hash_excludes_output_location():
    assert RunConfig(out="a").hash == RunConfig(out="b").hash
    assert RunConfig(seed=1).hash != RunConfig(seed=2).hash


def test_axisym_frame_moves_axis_last():
    cfg = RunConfig(f={"preset": "kw", "eps": 0.05, "axis": 1})
    dim = make_dimension(6)
    f, swap = axisym_frame(build_f(cfg, dim), build_backend(cfg, dim))
    assert swap == (1, 6) and f.axis() == 6
    with pytest.raises(ConfigError):
        axisym_frame(build_f(RunConfig(f={"preset": "quadratic"}), dim), build_backend(cfg, dim))


def test_polynomial_terms_config():
    cfg = RunConfig(f={"terms": [[[0] * 7, 24.0], [[0] * 6 + [2], 0.5]]})
    f = build_f(cfg, make_dimension(6))
    assert np.isclose(f(np.eye(7)[6][None])[0], 24.5)


# --- constants and check ---------------------------------------------------


def test_constants_rows():
    rows = cmd_constants([5, 6])
    assert all(r["identities_pass"] for r in rows)
    assert rows[1]["d_n"] == 24.0 and rows[0]["two_sharp"] == 10.0


def test_check_default_passes():
    rep = cmd_check(RunConfig())
    assert rep.passed and rep.h2_alpha == 2.0 and rep.degree in (-1, 1)


def test_check_constant_fails_h3():
    rep = cmd_check(RunConfig(f={"preset": "constant"}))
    assert rep.h1_pass and not rep.h2_pass and not rep.h3_pass
    assert any("constant" in w for w in rep.warnings)


def test_check_large_eps_fails_h1():
    rep = cmd_check(RunConfig(f={"preset": "axis", "eps": 0.5}))
    assert not rep.h1_pass


# --- solve, recheck and determinism ----------------------------------------


@pytest.fixture(scope="module")
def solved(tmp_path_factory):
    out = tmp_path_factory.mktemp("solve")
    cert = cmd_solve(RunConfig(out=str(out)))
    return out, cert


def test_solve_default_certifies(solved):
    out, cert = solved
    assert cert.passed and cert.exit_code == EXIT_OK
    for name in ("certificate.json", "hypothesis.json", "field.csv"):
        assert (out / name).exists()
    data = json.loads((out / "certificate.json").read_text())
    assert data["status"] == "pass" and data["min_u"] > 0
    assert data["provenance"]["config"]["tolerances"]["gate_lambda"] == 1e-6


def test_recheck_consistent(solved):
    out, _ = solved
    code, rep = recheck(out / "certificate.json")
    assert code == EXIT_OK and rep["consistent"]


def test_recheck_detects_tampering(solved, tmp_path):
    out, _ = solved
    data = json.loads((out / "certificate.json").read_text())
    data["field"]["coeffs"][3] += 1e-2
    (tmp_path / "c.json").write_text(json.dumps(data))
    code, rep = recheck(tmp_path / "c.json")
    assert code == EXIT_GATE and not rep["consistent"]


def test_repeat_run_is_byte_identical(solved):
    out, _ = solved
    before = {p.name: p.read_bytes() for p in out.iterdir()}
    cmd_solve(RunConfig(out=str(out)))
    after = {p.name: p.read_bytes() for p in out.iterdir()}
    assert before == after


def test_constant_f_needs_force(tmp_path):
    cfg = RunConfig(f={"preset": "constant", "value": 30.0}, out=str(tmp_path))
    cert = cmd_solve(cfg)
    assert cert.exit_code == EXIT_HYPOTHESIS
    cert = cmd_solve(cfg, force=True)
    assert cert.passed
    assert np.allclose(cert.field.nodal, (24.0 / 30.0) ** 0.25, rtol=1e-10)


def test_affine_f_is_not_found(tmp_path):
    cert = cmd_solve(RunConfig(f={"preset": "kw", "eps": 0.05}, out=str(tmp_path)), force=True)
    assert cert.exit_code == EXIT_NOT_FOUND and not cert.passed
    assert (tmp_path / "certificate.json").exists()


# --- command line ----------------------------------------------------------


def test_cli_constants(capsys):
    assert main(["constants", "5", "6", "8"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("pass") == 3


def test_cli_bad_config(tmp_path, capsys):
    (tmp_path / "c.toml").write_text("nonsense = 1\n")
    assert main(["check", "--config", str(tmp_path / "c.toml")]) == 1
    assert "unknown" in capsys.readouterr().err


def test_cli_check_and_probe(tmp_path, capsys):
    assert main(["check", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "hypothesis.json").exists()
    assert main(["probe", "gmap", "--out", str(tmp_path)]) == EXIT_OK
    assert (tmp_path / "probe_gmap.json").exists() and (tmp_path / "gmap.csv").exists()


def test_cli_solve_and_recheck(solved, capsys):
    out, _ = solved
    assert main(["recheck", str(out / "certificate.json")]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["pass"] is True
