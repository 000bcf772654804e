import textwrap

import pytest

from confoundsim.config import parse_config, parse_config_text, serialize_config
from confoundsim.errors import InconsistentScenario, ParseError, UnknownKey


def cfg(text):
    return textwrap.dedent(text).lstrip()


def test_minimal_config(tmp_path):
    (tmp_path / "b.csv").write_text("unit,year,outcome_rate,unemployment,population\n")
    p = tmp_path / "run.toml"
    p.write_text(cfg("""
        [baseline]
        path = "b.csv"

        [[scenario]]
        bias_size = "small"
    """))
    m = parse_config(p)
    (sc,) = m.scenarios
    assert m.baseline_path == str(tmp_path / "b.csv")
    assert sc.scenario_id == "linear-level-small-null"
    assert sc.iters == 200 and sc.methods == ("twfe", "ar", "ascm", "csa")
    assert m.master_seed == 894539 and m.workers == 1


def test_unknown_bias_size():
    with pytest.raises(InconsistentScenario):
        parse_config_text(cfg("""
            [[scenario]]
            bias_size = "huge"
        """))


def test_unknown_key_reports_line():
    with pytest.raises(UnknownKey) as exc:
        parse_config_text(cfg("""
            seed = 3
            [grid]
            bias_type = ["linear"]
            strength = 2
        """))
    assert exc.value.line == 4 and exc.value.key == "strength"


def test_malformed_toml():
    with pytest.raises(ParseError) as exc:
        parse_config_text("seed = 3\niters = = 4\n")
    assert exc.value.line == 2


def test_twelve_scenario_null_grid():
    m = parse_config_text(cfg("""
        [grid]
        bias_type = ["linear", "nonlinear"]
        prior_control = ["trend", "level"]
        bias_size = ["small", "medium", "large"]
        effect_direction = "null"
    """))
    assert len(m.scenarios) == 12
    assert sum(len(s.methods) for s in m.scenarios) == 48


def test_coefficient_overrides():
    m = parse_config_text(cfg("""
        [grid]
        bias_type = "linear"
        prior_control = "level"
        bias_size = ["small", "large"]

        [coefficients.linear.level.small]
        b2 = 0.08

        [[scenario]]
        effect_direction = "nonnull"
        coefficients = { b0 = -4.5 }
    """))
    small, large, none = m.scenarios
    assert small.coefficients.b2 == 0.08 and small.coefficients.b0 == -3.9
    assert large.coefficients.b2 == 0.1
    assert none.coefficients.b0 == -4.5 and none.alpha == -0.92


def test_round_trip_fixed_point():
    m = parse_config_text(cfg("""
        seed = 11
        iters = 7
        methods = ["twfe", "csa"]
        [baseline.params]
        n_units = 20
        [grid]
        prior_control = "trend"
        effect_direction = ["null", "nonnull"]
    """))
    text = serialize_config(m)
    again = parse_config_text(text)
    assert again == m
    assert serialize_config(again) == text
