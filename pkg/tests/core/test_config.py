"""
Tests for configuration management
"""

import pytest

from fishstream.core.config import Config
from fishstream.core.exceptions import ConfigError


class TestConfig:
    """Test configuration management"""

    def test_default_config(self, temp_config_dir):
        """Test default configuration values"""
        config = Config(temp_config_dir / "config.yaml")

        assert config.get("app.log_level") == "INFO"
        assert config.get("stream.auto_reset") is True
        assert config.get("retention.n_heads") == 4
        assert config.get("decoder.absent_threshold") == 0.99

    def test_missing_file_writes_defaults(self, temp_config_dir):
        """Loading a missing file creates it"""
        path = temp_config_dir / "config.yaml"
        Config(path)
        assert path.exists()

    def test_config_get_set(self, temp_config_dir):
        """Test getting and setting configuration values"""
        config = Config(temp_config_dir / "config.yaml")

        config.set("test.value", "hello")
        assert config.get("test.value") == "hello"

        config.set("nested.deep.value", 42)
        assert config.get("nested.deep.value") == 42
        assert config.get("nested.missing", "fallback") == "fallback"

    def test_config_persistence(self, temp_config_dir):
        """Test configuration persistence"""
        config_path = temp_config_dir / "config.yaml"

        config1 = Config(config_path)
        config1.set("train.epochs", 3)
        config1.save()

        config2 = Config(config_path)
        assert config2.get("train.epochs") == 3

    def test_config_defaults_override(self, temp_config_dir):
        """Test that user config overrides defaults"""
        config = Config(temp_config_dir / "config.yaml")

        config.set("train.lr", 5e-4)
        assert config.get("train.lr") == 5e-4
        # sibling defaults survive
        assert config.get("train.batch") == 8

    def test_section_merges_defaults(self, temp_config_dir):
        """section() returns a merged copy"""
        config = Config(temp_config_dir / "config.yaml")
        config.set("stream.quiet_horizon_seconds", 30.0)

        section = config.section("stream")
        assert section["quiet_horizon_seconds"] == 30.0
        assert section["merge_window_seconds"] == 1.0

        section["auto_reset"] = False
        assert config.get("stream.auto_reset") is True

    def test_standard_preset(self, temp_config_dir):
        """The standard preset widens the model"""
        path = temp_config_dir / "config.yaml"
        path.write_text("model:\n  preset: standard\n")
        config = Config(path)

        assert config.get("embedder.embed_dim") == 64
        assert config.get("retention.n_blocks") == 4

    def test_unknown_preset(self, temp_config_dir):
        """Unknown presets are rejected"""
        path = temp_config_dir / "config.yaml"
        path.write_text("model:\n  preset: huge\n")
        with pytest.raises(ConfigError):
            Config(path)

    def test_malformed_yaml(self, temp_config_dir):
        """Unparseable files raise ConfigError"""
        path = temp_config_dir / "config.yaml"
        path.write_text("app: [unclosed\n")
        with pytest.raises(ConfigError):
            Config(path)

    def test_non_mapping_top_level(self, temp_config_dir):
        """A YAML list at the top level is rejected"""
        path = temp_config_dir / "config.yaml"
        path.write_text("- a\n- b\n")
        with pytest.raises(ConfigError):
            Config(path)
