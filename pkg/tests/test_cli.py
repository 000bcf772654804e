import textwrap

import pytest

from confoundsim.cli import EXIT_CONFIG, EXIT_OK, main
from confoundsim.panel import read_panel_csv


@pytest.fixture
def config(tmp_path):
    p = tmp_path / "run.toml"
    p.write_text(textwrap.dedent("""
        seed = 5
        iters = 2
        methods = ["twfe", "ar"]
        [grid]
        bias_type = "linear"
        prior_control = ["level", "trend"]
        bias_size = ["small", "large"]
    """))
    return p


def test_gen_baseline(tmp_path, capsys):
    out = tmp_path / "b.csv"
    assert main(["gen-baseline", "--seed", "4", "--out", str(out)]) == EXIT_OK
    panel = read_panel_csv(out)
    assert panel.shape == (49, 18)
    assert "49 units" in capsys.readouterr().out


def test_validate_config(config, capsys):
    assert main(["validate-config", "--config", str(config), "--scenario-filter", "*-level-*"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "2 scenario(s)" in out and "linear-trend" not in out


def test_run_resume_figures(config, tmp_path):
    out = tmp_path / "res"
    assert main(["run", "--config", str(config), "--out", str(out)]) == EXIT_OK
    first = (out / "results.csv").read_bytes()
    assert len(first.decode().splitlines()) == 1 + 4 * 2
    assert len(list(out.glob("figure_*.json"))) == 5
    assert main(["resume", "--config", str(config), "--out", str(out), "--workers", "2"]) == EXIT_OK
    assert (out / "results.csv").read_bytes() == first
    figs = tmp_path / "figs"
    assert main(["figures", "--results", str(out), "--out", str(figs)]) == EXIT_OK
    for p in out.glob("figure_*.json"):
        assert (figs / p.name).read_bytes() == p.read_bytes()


def test_config_errors(tmp_path, capsys):
    bad = tmp_path / "bad.toml"
    bad.write_text("[[scenario]]\nbias_size = \"huge\"\n")
    assert main(["run", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    bad.write_text("seed = 1\nbogus = 2\n")
    assert main(["validate-config", "--config", str(bad)]) == EXIT_CONFIG
    assert "line 2" in capsys.readouterr().err
    assert main(["validate-config", "--config", str(tmp_path / "missing.toml")]) == EXIT_CONFIG


def test_resume_without_checkpoints(config, tmp_path):
    assert main(["resume", "--config", str(config), "--out", str(tmp_path / "nothing")]) == EXIT_CONFIG


def test_bad_flags(config):
    assert main(["run", "--config", str(config), "--iters", "0"]) == EXIT_CONFIG
    with pytest.raises(SystemExit):
        main(["explode"])
