import json

import pytest
import yaml

from kptools.cli import ConfigError, main, validate_config


def write_cfg(tmp_path, data, name="run.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return str(p)


def test_defaults_validate():
    cfg = validate_config({})
    assert cfg["grid"]["Nx"] == 64 and cfg["solver"]["T"] == 0.25


@pytest.mark.parametrize("raw,path", [
    ({"grid": {"Nx": 63}}, "grid.Nx"),
    ({"grid": {"Ly": -1.0}}, "grid.Ly"),
    ({"solver": {"nonlinearity": "cubic"}}, "solver.nonlinearity"),
    ({"solver": {"M": 4}}, "solver.M"),
    ({"ensemble": {"grid_sizes": [64, 96]}}, "ensemble.grid_sizes"),
    ({"scaling": {"rhos": [0.5, 0.3]}}, "scaling.rhos[1]"),
    ({"output": {"formats": ["csv", "xlsx"]}}, "output.formats"),
    ({"grid": {"Nz": 4}}, "grid.Nz"),
    ({"sweep": {"kernel": {"k": [3, 0]}}}, "sweep.kernel.k"),
])
def test_validation_names_field(raw, path):
    with pytest.raises(ConfigError) as exc:
        validate_config(raw)
    assert exc.value.path == path
    assert str(exc.value).startswith(path)


def test_odd_grid_exit_code(tmp_path, capsys):
    code = main(["solve", "--config", write_cfg(tmp_path, {"grid": {"Nx": 63}}), "--out", str(tmp_path)])
    assert code == 2
    assert "grid.Nx" in capsys.readouterr().err


def test_grid_flag_is_validated(tmp_path, capsys):
    assert main(["solve", "--grid", "64by64", "--out", str(tmp_path)]) == 2
    assert main(["solve", "--grid", "65x64", "--out", str(tmp_path)]) == 2
    assert "grid.Nx" in capsys.readouterr().err


def test_unknown_estimate_lists_catalog(tmp_path, capsys):
    cfg = write_cfg(tmp_path, {"sweep": {"estimates": ["nope"]}})
    assert main(["check-estimates", "--config", cfg, "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "nope" in err and "smoothing-plus" in err and "weight-commutator-1d" in err


def test_missing_config_file(tmp_path, capsys):
    assert main(["solve", "--config", str(tmp_path / "absent.yaml")]) == 2


def test_usage_error_exit_code():
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 2


def test_linear_solve_is_one_iteration(tmp_path):
    res = {}
    for M in (64, 128):
        cfg = write_cfg(tmp_path, {"solver": {"beta": 0.0, "M": M}, "grid": {"Nx": 32, "Ny": 32}}, f"m{M}.yaml")
        out = tmp_path / str(M)
        assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
        rep = json.loads((out / "solve" / "contraction.json").read_text())
        assert rep["contraction"]["iterations"] == 1
        assert rep["picard_vs_reference"] < 1e-12
        res[M] = rep["residual_relative"]
    # what is left is the centred time difference, second order in dt
    assert res[64] / res[128] == pytest.approx(4.0, rel=0.05)


def test_default_solve(tmp_path):
    assert main(["solve", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "solve" / "contraction.json").read_text())
    assert rep["contraction"]["converged"]
    assert all(r < 1 for r in rep["contraction"]["ratios"])
    for name in ("residual.csv", "conservation.csv", "trajectory.csv", "trajectory.spec", "index.json"):
        assert (tmp_path / "solve" / name).exists()


def test_divergence_exit_code(tmp_path):
    cfg = write_cfg(tmp_path, {"initial": {"z0": 5000.0}, "solver": {"T": 1.0, "M": 64, "max_iter": 10}})
    assert main(["solve", "--config", cfg, "--out", str(tmp_path)]) == 3
    rep = json.loads((tmp_path / "solve" / "contraction.json").read_text())
    assert rep["diverged"]


def test_scaling_command(tmp_path):
    assert main(["scaling", "--out", str(tmp_path)]) == 0
    fits = json.loads((tmp_path / "scaling" / "scaling.json").read_text())["fits"]
    assert fits["Dx^1"]["slope"] == pytest.approx(1.5, abs=1e-10)


def test_estimates_and_report(tmp_path):
    cfg = write_cfg(tmp_path, {"ensemble": {"samples": 2},
                               "sweep": {"estimates": ["maximal-x-low", "frac-leibniz-1d"]}})
    out = tmp_path / "o"
    assert main(["check-estimates", "--config", cfg, "--out", str(out)]) == 0
    first = (out / "estimates" / "summary.json").read_bytes()
    assert main(["check-estimates", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "estimates" / "summary.json").read_bytes() == first
    assert main(["report", "--out", str(out)]) == 0
    rep = json.loads((out / "report.json").read_text())
    assert rep["all_pass"] and rep["runs"]["estimates"]["estimates"]["maximal-x-low"]


def test_report_without_runs(tmp_path):
    assert main(["report", str(tmp_path)]) == 2


def test_kernel_sweep_small_window(tmp_path):
    cfg = write_cfg(tmp_path, {"sweep": {"kernel": {"k": [0, 1], "j": [0, 0], "t_samples": 3}}})
    code = main(["kernel-sweep", "--config", cfg, "--out", str(tmp_path)])
    summ = json.loads((tmp_path / "kernels" / "kernel_summary.json").read_text())
    assert summ["blocks"] == 2 and summ["resolved_blocks"] == 2
    assert code == (0 if summ["pass"] else 1)
    rows = (tmp_path / "kernels" / "kernel_sweep.csv").read_text().strip().splitlines()
    assert len(rows) == 1 + 2 * 3
