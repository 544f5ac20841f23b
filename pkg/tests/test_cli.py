"""Command-line surface."""

import pytest
from click.testing import CliRunner

from sber_outage.core.app import cli

CONFIG = """
mode = FD
q_chains = 8
m_tx = 4
phi_td_db = -74
phi_ur_db = -85
r_d = 2
r_sbs = 1
"""


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "link.cfg"
    path.write_text(CONFIG, encoding="utf-8")
    return path


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert "0.3.0" in result.output


def test_eval_closed_form(runner, config_file):
    result = runner.invoke(cli, ["eval", "--config", str(config_file)])
    assert result.exit_code == 0, result.output
    assert "p_out_d:" in result.output
    assert "method: closed-form/fd-d-exact" in result.output


def test_eval_alpha_variant(runner, config_file):
    args = ["eval", "--config", str(config_file), "--alpha-variant", "paper"]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    assert runner.invoke(cli, [*args[:3], "--alpha-variant", "conserving"]).exit_code == 0


def test_eval_monte_carlo(runner, config_file):
    args = ["eval", "--config", str(config_file), "--method", "mc", "--samples", "2e4", "--no-cache"]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    assert "method: monte-carlo" in result.output
    assert "ci_d:" in result.output


def test_eval_monte_carlo_is_deterministic(runner, config_file):
    args = ["eval", "--config", str(config_file), "--method", "mc", "--samples", "2e4", "--seed", "7", "--no-cache"]
    first = runner.invoke(cli, args)
    second = runner.invoke(cli, args)
    assert first.exit_code == second.exit_code == 0
    assert first.output == second.output


def test_invalid_split_names_the_constraint(runner, tmp_path):
    path = tmp_path / "split.cfg"
    path.write_text("mode = FD\nq_chains = 8\nm_tx = 4\nn_rx = 5\n", encoding="utf-8")
    result = runner.invoke(cli, ["eval", "--config", str(path)])
    assert result.exit_code == 2
    assert "fd-split" in result.output


def test_invalid_config_exits_with_2(runner, tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("mode = FD\nq_chains = 8\ntau = 0.5\n", encoding="utf-8")
    result = runner.invoke(cli, ["eval", "--config", str(path)])
    assert result.exit_code == 2
    assert "error:" in result.output


def test_samples_must_be_a_positive_integer(runner, config_file):
    result = runner.invoke(cli, ["eval", "--config", str(config_file), "--method", "mc", "--samples", "1.5"])
    assert result.exit_code == 2


def test_optimize_p1(runner, config_file, tmp_path):
    out = tmp_path / "split.csv"
    result = runner.invoke(cli, ["optimize", "p1", "--config", str(config_file), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "m_opt:" in result.output
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "m_tx,n_rx,p_out_d,p_out_sbs,minmax,feasible"
    assert len(lines) == 1 + 5


def test_optimize_p2(runner, config_file):
    args = ["optimize", "p2", "--config", str(config_file), "--delta", "0.9", "--q-max", "8"]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    assert "feasible:" in result.output


def test_sweep_file(runner, tmp_path):
    sweep = tmp_path / "scan.txt"
    sweep.write_text(CONFIG + "axis1 = m_tx: 2:6:2\n", encoding="utf-8")
    out = tmp_path / "scan.csv"
    result = runner.invoke(cli, ["sweep", str(sweep), "--out", str(out), "--set", "r_sbs=2"])
    assert result.exit_code == 0, result.output
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("m_tx,p_out_d,p_out_sbs")
    assert len(lines) == 4


def test_sweep_override_needs_equals(runner, tmp_path):
    sweep = tmp_path / "scan.txt"
    sweep.write_text(CONFIG + "axis1 = m_tx: 2, 4\n", encoding="utf-8")
    result = runner.invoke(cli, ["sweep", str(sweep), "--set", "r_sbs"])
    assert result.exit_code == 2


def test_fit_gpd(runner, tmp_path):
    hist = tmp_path / "hist.csv"
    result = runner.invoke(cli, ["fit-gpd", "--m", "4", "--samples", "2e4", "--hist", str(hist)])
    assert result.exit_code == 0, result.output
    assert "ks_distance:" in result.output
    assert hist.read_text(encoding="utf-8").startswith("bin_left,bin_right,density,gpd_pdf")


def test_gl_check(runner, tmp_path):
    out = tmp_path / "gl.csv"
    result = runner.invoke(cli, ["gl-check", "--setup", "1", "--orders", "10,20", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert "relative change decreasing (exp):" in result.output
    assert len(out.read_text(encoding="utf-8").splitlines()) == 1 + 4


def test_gl_check_bad_orders(runner):
    result = runner.invoke(cli, ["gl-check", "--orders", "ten"])
    assert result.exit_code == 2


def test_presets_list(runner):
    result = runner.invoke(cli, ["presets", "list"])
    assert result.exit_code == 0
    assert "split-curve" in result.output
    assert "requires r_d" in result.output


def test_preset_missing_required_key(runner, tmp_path):
    result = runner.invoke(cli, ["presets", "run", "split-curve", "--out", str(tmp_path / "x.csv")])
    assert result.exit_code == 2
    assert "missing-key" in result.output


def test_unknown_preset(runner):
    result = runner.invoke(cli, ["presets", "run", "no-such-preset"])
    assert result.exit_code == 2
    assert "unknown-key" in result.output


def test_preset_gl_convergence(runner, tmp_path):
    out = tmp_path / "gl.csv"
    args = ["presets", "run", "gl-convergence", "--set", "orders=10,20", "--set", "setups=2", "--out", str(out)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    assert str(out) in result.output


def test_preset_by_number(runner, tmp_path):
    out = tmp_path / "gl.csv"
    args = ["presets", "run", "fig13", "--set", "orders=10", "--set", "setups=1", "--out", str(out)]
    result = runner.invoke(cli, args)
    assert result.exit_code == 0, result.output
    assert len(out.read_text(encoding="utf-8").splitlines()) == 1 + 2
    listing = runner.invoke(cli, ["presets", "list"]).output
    assert "split-curve (fig6)" in listing
