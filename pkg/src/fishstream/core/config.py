"""Configuration management for fishstream
"""

import copy
from pathlib import Path
from typing import Any

import yaml

from .exceptions import ConfigError

DEFAULTS: dict[str, Any] = {
    "app": {
        "log_level": "INFO",
        "log_dir": str(Path.home() / ".fishstream" / "logs"),
        "console_logging": False,
        "seed": 0,
    },
    "model": {
        "preset": "toy",
    },
    "embedder": {
        "n_layers": 3,
        "branch_kernel_sizes": [[3, 5, 7], [3, 5, 7], [3, 5, 7]],
        "channels_per_branch": 8,
        "embed_dim": 32,
        "stride_per_layer": [2, 2, 1],
        "antisymmetric": True,
        "ewm_alpha": None,
        "input_gain": 0.01,
        "norm_eps": 1e-6,
    },
    "retention": {
        "n_blocks": 2,
        "n_heads": 4,
        "ffn_hidden": 64,
        "gammas": None,
        "rope_base": 10000.0,
        "norm_eps": 1e-6,
    },
    "decoder": {
        "bank_seconds": 30.0,
        "pick_kernel": 5,
        "pick_channels": None,
        "head_hidden": None,
        "absent_threshold": 0.99,
    },
    "train": {
        "focus_before": 200,
        "focus_after": 3000,
        "full_focus": False,
        "sea_weight": 0.01,
        "quake_tail_seconds": 10.0,
        "crop_max_shift": 2000,
        "crop_length": 6000,
        "pad_mode": "noise",
        "lr": 1e-3,
        "lr_schedule": "constant",
        "batch": 8,
        "epochs": 10,
        "seed": 0,
        "w_pick": 1.0,
        "w_loc": 0.05,
        "w_mag": 1.0,
        "feeder_queue": 16,
        "progress": True,
    },
    "synthetic": {
        "n_records": 2000,
        "sample_rate_hz": 100.0,
        "length": 6000,
        "noise_ar_coeff": 0.9,
        "noise_scale": 1.0,
        "p_freq_hz": 8.0,
        "s_freq_hz": 4.0,
        "amp_mag_slope": 0.5,
        "p_to_s_amplitude": 0.4,
        "ps_velocity_km_s": 8.0,
        "min_gap_s": 1.0,
        "max_gap_s": 12.0,
        "magnitude_range": [2.0, 6.0],
        "p_index_range": [500, 2500],
        "noise_fraction": 0.1,
        "p_duration_s": 0.8,
        "coda_base_s": 2.0,
        "coda_mag_slope": 0.3,
        "azimuth_gain": 1.0,
        "val_fraction": 0.2,
    },
    "stream": {
        "quiet_horizon_seconds": 60.0,
        "auto_reset": True,
        "report_seconds_after_p": 20.0,
        "merge_window_seconds": 1.0,
    },
    "eval": {
        "tolerance_seconds": 0.5,
        "p_window": [-2, 70],
        "s_window": [-2, 9],
        "offline_seconds": 30.0,
        "bootstrap": 1000,
        "powerlaw_eps_km": 1e-3,
    },
}

PRESETS: dict[str, dict[str, Any]] = {
    "toy": {
        "embedder": {"embed_dim": 32},
        "retention": {"n_blocks": 2, "n_heads": 4, "ffn_hidden": 64},
    },
    "standard": {
        "embedder": {"embed_dim": 64},
        "retention": {"n_blocks": 4, "n_heads": 4, "ffn_hidden": 128},
    },
}


class Config:
    """Central configuration manager"""

    def __init__(self, config_path: Path | None = None, persist: bool = True):
        self.config_path = config_path or Path.home() / ".fishstream" / "config.yaml"
        self.persist = persist
        self._config: dict[str, Any] = {}
        self._defaults = copy.deepcopy(DEFAULTS)
        self.load()

    def load(self):
        """Load configuration from file"""
        try:
            if self.config_path.exists():
                with open(self.config_path) as f:
                    self._config = yaml.safe_load(f) or {}
                if not isinstance(self._config, dict):
                    raise ConfigError(f"Top level of {self.config_path} must be a mapping")
            else:
                self._config = {}
                if self.persist:
                    self.save()  # Create default config
        except ConfigError:
            raise
        except Exception as e:
            raise ConfigError(f"Failed to load config: {e}")

        preset = self.get("model.preset", "toy")
        if preset not in PRESETS:
            raise ConfigError(f"Unknown model preset: {preset}")
        self._deep_merge(self._defaults, copy.deepcopy(PRESETS[preset]))

    def save(self):
        """Save configuration to file"""
        try:
            self.config_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.config_path, "w") as f:
                yaml.dump(self.get_all(), f, default_flow_style=False)
        except Exception as e:
            raise ConfigError(f"Failed to save config: {e}")

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by key (dot notation supported)"""
        keys = key.split(".")
        value = self._config

        # Try user config first
        found = True
        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                found = False
                break

        if found:
            return value

        # Fall back to defaults
        value = self._defaults
        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default
        return value

    def set(self, key: str, value: Any):
        """Set configuration value by key (dot notation supported)"""
        keys = key.split(".")
        config = self._config

        for k in keys[:-1]:
            if k not in config:
                config[k] = {}
            config = config[k]

        config[keys[-1]] = value

    def section(self, name: str) -> dict[str, Any]:
        """Get one top-level section with defaults merged"""
        return copy.deepcopy(self.get_all().get(name, {}))

    def get_all(self) -> dict[str, Any]:
        """Get complete configuration with defaults merged"""
        result = copy.deepcopy(self._defaults)
        self._deep_merge(result, copy.deepcopy(self._config))
        return result

    def _deep_merge(self, base: dict, overlay: dict):
        """Recursively merge two dictionaries"""
        for key, value in overlay.items():
            if key in base and isinstance(base[key], dict) and isinstance(value, dict):
                self._deep_merge(base[key], value)
            else:
                base[key] = value
