import pytest

from models import AharonovBohmConfig, ConfigError, TwoSlitConfig
from utils.config_file import (apply_overrides, build_scenario_config, load_scenario_config,
                               parse_key_values)


def _two_slit_values(**changes) -> dict[str, str]:
    values = {"name": "two_slit", "hbar": "1", "mass": "1", "seed": "1",
              "n_trajectories": "10", "dt": "0.01", "t_final": "1", "record_every": "1",
              "grid_nx": "16", "grid_ny": "16", "slit_half_separation": "5",
              "sigma0": "0.5", "k_forward": "5"}
    values.update(changes)
    return {k: v for k, v in values.items() if v is not None}


def test_parse_key_values_skips_comments_and_blanks():
    text = "# header\n\nhbar = 1   # trailing\n  mass=2\n"
    assert parse_key_values(text) == {"hbar": "1", "mass": "2"}


@pytest.mark.parametrize("text, key", [("hbar = 1\nhbar = 2\n", "hbar"), ("sigma0 =\n", "sigma0")])
def test_parse_key_values_rejects_bad_keys(text, key):
    with pytest.raises(ConfigError) as info:
        parse_key_values(text)
    assert info.value.key == key
    assert key in info.value.detail


def test_parse_key_values_needs_equals_sign():
    with pytest.raises(ConfigError, match="key = value"):
        parse_key_values("just words\n")


def test_overrides_replace_file_values():
    merged = apply_overrides({"seed": "1", "dt": "0.1"}, ["seed=7", " dt = 0.2 "])
    assert merged == {"seed": "7", "dt": "0.2"}
    with pytest.raises(ConfigError):
        apply_overrides({}, ["seed"])


def test_build_two_slit_config():
    config = build_scenario_config(_two_slit_values())
    assert isinstance(config, TwoSlitConfig)
    assert config.sigma0 == 0.5


def test_missing_key_is_named():
    with pytest.raises(ConfigError) as info:
        build_scenario_config(_two_slit_values(sigma0=None))
    assert info.value.key == "sigma0"
    assert "sigma0" in str(info.value)
    assert info.value.exit_code == 2


def test_unknown_key_is_named():
    with pytest.raises(ConfigError) as info:
        build_scenario_config(_two_slit_values(colour="blue"))
    assert info.value.key == "colour"


def test_out_of_range_value_is_named():
    with pytest.raises(ConfigError) as info:
        build_scenario_config(_two_slit_values(sigma0="-1"))
    assert info.value.key == "sigma0"


def test_unknown_scenario_name():
    with pytest.raises(ConfigError) as info:
        build_scenario_config(_two_slit_values(name="three_slit"))
    assert info.value.key == "name"


def test_classical_limit_step_must_resolve_decay(config_dir):
    with pytest.raises(ConfigError, match="decay_time"):
        load_scenario_config(config_dir / "classical_limit.cfg", ["dt=0.001"])


def test_reference_configs_load(config_dir):
    for path in sorted(config_dir.glob("*.cfg")):
        config = load_scenario_config(path)
        assert config.name == path.stem


def test_override_applies_after_file(config_dir):
    config = load_scenario_config(config_dir / "aharonov_bohm.cfg", ["flux_phase=0.5"])
    assert isinstance(config, AharonovBohmConfig)
    assert config.flux_phase == 0.5


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_scenario_config(tmp_path / "nope.cfg")
