"""
Tests for config module.
"""

import json

import pytest
from rmps_lab.config import ConfigError, ExperimentConfig, parse_config, serialize_config


class TestExperimentConfig:
    """Tests for validation."""

    def test_defaults(self):
        """Unset optional fields take their defaults."""
        cfg = ExperimentConfig("local-obs", d=2, n=4, D=2)
        assert cfg.samples == 1000
        assert cfg.seed == 0
        assert cfg.observable == "pauli-z"
        assert cfg.boundary == "periodic"

    def test_selftest_needs_nothing(self):
        """selftest validates without any dimensions."""
        assert ExperimentConfig("selftest").d is None

    def test_missing_dimension(self):
        """A missing dimension names the field."""
        with pytest.raises(ConfigError) as info:
            ExperimentConfig("local-obs", d=2, n=4)
        assert info.value.field == "D"

    @pytest.mark.parametrize("kind,field", [("extensivity", "k"), ("max-entropy", "l"),
                                            ("norm-concentration", "epsilon")])
    def test_kind_requirements(self, kind, field):
        """Each kind demands its own extra parameter."""
        with pytest.raises(ConfigError) as info:
            ExperimentConfig(kind, d=2, n=4, D=2)
        assert info.value.field == field

    @pytest.mark.parametrize("field,value", [("d", 1), ("n", 0), ("D", 0), ("k", 1), ("l", 0),
                                             ("samples", 1), ("seed", -1), ("seed", 2 ** 64),
                                             ("epsilon", 1.0), ("boundary", "twisted"),
                                             ("workers", 0), ("sweep", (4, 0))])
    def test_out_of_range(self, field, value):
        """Out-of-range values name the offending field."""
        with pytest.raises(ConfigError) as info:
            ExperimentConfig("exact", **{"d": 2, "n": 4, "D": 2, field: value})
        assert info.value.field == field

    def test_unknown_kind(self):
        """Unknown kinds are rejected."""
        with pytest.raises(ConfigError, match="kind"):
            ExperimentConfig("entanglement", d=2, n=4, D=2)

    def test_config_error_is_value_error(self):
        """ConfigError can be caught as ValueError."""
        assert issubclass(ConfigError, ValueError)


class TestParseConfig:
    """Tests for layering defaults, files and flags."""

    def test_overrides_only(self):
        """Overrides alone are enough; the output dir defaults."""
        cfg = parse_config(overrides={"kind": "max-entropy", "d": 2, "n": 4, "D": 2, "l": 1})
        assert cfg.l == 1
        assert cfg.output_dir == "rmps-out"

    def test_toml_file(self, tmp_path):
        """TOML files load, with arrays becoming tuples."""
        path = tmp_path / "run.toml"
        path.write_text('kind = "extensivity"\nd = 2\nn = 8\nD = 4\nk = 4\nsamples = 50\n'
                        'sweep = [4, 8]\n')
        cfg = parse_config(path)
        assert (cfg.kind, cfg.n, cfg.k, cfg.samples) == ("extensivity", 8, 4, 50)
        assert cfg.sweep == (4, 8)

    def test_json_file(self, tmp_path):
        """JSON files load too."""
        path = tmp_path / "run.json"
        path.write_text(json.dumps({"kind": "exact", "d": 2, "n": 3, "D": 2}))
        assert parse_config(path).n == 3

    def test_flags_override_file(self, tmp_path):
        """Non-None overrides replace file values; None leaves them."""
        path = tmp_path / "run.toml"
        path.write_text('kind = "local-obs"\nd = 2\nn = 4\nD = 2\nseed = 3\n')
        cfg = parse_config(path, {"seed": 9, "n": None})
        assert cfg.seed == 9
        assert cfg.n == 4

    def test_sweep_string(self):
        """A comma-separated sweep string is split into integers."""
        cfg = parse_config(overrides={"kind": "local-obs", "d": 2, "n": 4, "D": 2,
                                      "sweep": "4,8, 12"})
        assert cfg.sweep == (4, 8, 12)

    def test_unknown_key(self, tmp_path):
        """Unknown keys in a file name the key."""
        path = tmp_path / "run.toml"
        path.write_text('kind = "exact"\nd = 2\nn = 4\nD = 2\nbond = 3\n')
        with pytest.raises(ConfigError) as info:
            parse_config(path)
        assert info.value.field == "bond"

    def test_missing_kind(self):
        """A config without a kind is rejected."""
        with pytest.raises(ConfigError, match="kind"):
            parse_config(overrides={"d": 2})

    def test_missing_file(self, tmp_path):
        """A missing file is a ConfigError."""
        with pytest.raises(ConfigError, match="does not exist"):
            parse_config(tmp_path / "absent.toml")

    def test_malformed_file(self, tmp_path):
        """Unparseable TOML is a ConfigError."""
        path = tmp_path / "run.toml"
        path.write_text("kind = \n")
        with pytest.raises(ConfigError, match="cannot parse"):
            parse_config(path)

    def test_non_integer(self):
        """Fractional integer fields are rejected."""
        with pytest.raises(ConfigError) as info:
            parse_config(overrides={"kind": "exact", "d": 2, "n": 2.5, "D": 2})
        assert info.value.field == "n"


class TestSerializeConfig:
    """Tests for writing configs back out."""
    def test_reads_back(self, tmp_path):
        """A serialized config parses back to an equal config."""
        cfg = ExperimentConfig("extensivity", d=2, n=8, D=4, k=4, samples=50, seed=7,
                               sweep=(4, 8), output_dir="out dir")
        path = tmp_path / "config.toml"
        path.write_text(serialize_config(cfg))
        assert parse_config(path) == cfg

    def test_large_seed(self, tmp_path):
        """Seeds above the signed TOML range are stored as strings and read back."""
        cfg = ExperimentConfig("norm-concentration", d=2, n=4, D=2, epsilon=0.25,
                               seed=2 ** 64 - 1)
        path = tmp_path / "config.toml"
        path.write_text(serialize_config(cfg))
        assert parse_config(path).seed == 2 ** 64 - 1
        assert parse_config(path).epsilon == 0.25
