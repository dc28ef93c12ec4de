"""
Pytest configuration and fixtures
"""

import numpy as np
import pytest

from fishstream.core.config import Config
from fishstream.core.events import EventBus
from fishstream.core.logger import Logger
from fishstream.model import DecoderConfig, EmbedderConfig, FishNetwork, ModelConfig, RetentionConfig
from fishstream.training import SyntheticParams


@pytest.fixture
def temp_config_dir(tmp_path):
    """Temporary configuration directory"""
    config_dir = tmp_path / ".fishstream"
    config_dir.mkdir()
    return config_dir


@pytest.fixture
def mock_config(temp_config_dir):
    """Configuration backed by a temp file, logging into the temp dir"""
    config = Config(temp_config_dir / "config.yaml")
    config.set("app.log_dir", str(temp_config_dir / "logs"))
    return config


@pytest.fixture
def mock_event_bus():
    """Event bus for testing"""
    return EventBus()


@pytest.fixture
def mock_logger(mock_config):
    """Logger writing to the temp log dir"""
    return Logger(mock_config)


@pytest.fixture
def rng():
    """Deterministic numpy generator"""
    return np.random.default_rng(1234)


def make_tiny_config(**decoder) -> ModelConfig:
    """F = 4, D = 8, one retention block, 25-step bank"""
    embedder = EmbedderConfig(
        n_layers=2,
        branch_kernel_sizes=[[3, 5, 7], [3, 5, 7]],
        channels_per_branch=2,
        embed_dim=8,
        stride_per_layer=[2, 2],
    )
    retention = RetentionConfig(n_blocks=1, model_dim=8, n_heads=2, ffn_hidden=16)
    dec = DecoderConfig(**{"bank_seconds": 1.0, "pick_kernel": 3, "pick_channels": [8, 4, 4], **decoder})
    return ModelConfig(embedder, retention, dec)


@pytest.fixture
def tiny_config():
    """Small model configuration for fast tests"""
    return make_tiny_config()


@pytest.fixture
def tiny_network(tiny_config):
    """Randomly initialized small network"""
    return FishNetwork(tiny_config, seed=7)


@pytest.fixture
def short_synthetic():
    """Synthetic generator settings for 12 s records"""
    return SyntheticParams(
        length=1200,
        p_index_range=(200, 400),
        min_gap_s=1.0,
        max_gap_s=4.0,
        noise_fraction=0.0,
    )


@pytest.fixture
def tiny_config_factory():
    """Builds small configurations with decoder overrides"""
    return make_tiny_config
