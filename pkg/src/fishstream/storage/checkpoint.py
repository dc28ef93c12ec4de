"""FSHM checkpoints: b"FSHM", u32 LE header length, JSON header, float32 LE blob.

The header carries the model configuration, free-form training metadata and
a manifest of (name, shape, offset, nbytes) entries that tile the blob in
order. Serialization is canonical, so load followed by save reproduces the
file byte for byte.
"""

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from ..core.exceptions import CheckpointError, ConfigError
from ..model import FishNetwork, ModelConfig, ParameterSet, init_params

MAGIC = b"FSHM"
FORMAT_VERSION = 1
_PREFIX = len(MAGIC) + 4


def _canonical(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


@dataclass
class Checkpoint:
    model_config: ModelConfig
    arrays: dict[str, np.ndarray]  # name -> float32, in blob order
    metadata: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_network(cls, network: FishNetwork, metadata: dict[str, Any] | None = None) -> "Checkpoint":
        arrays = {name: t.data.astype(np.float32) for name, t in network.params.items()}
        return cls(network.cfg, arrays, dict(metadata or {}))

    def to_network(self) -> FishNetwork:
        params: ParameterSet = init_params(self.model_config, seed=0)
        params.load_arrays(self.arrays)
        return FishNetwork(self.model_config, params)

    def to_bytes(self) -> bytes:
        manifest, offset = [], 0
        for name, array in self.arrays.items():
            nbytes = int(array.size) * 4
            manifest.append({"name": name, "shape": list(array.shape), "offset": offset, "nbytes": nbytes})
            offset += nbytes
        header = _canonical(
            {
                "format_version": FORMAT_VERSION,
                "model": self.model_config.to_dict(),
                "metadata": self.metadata,
                "tensors": manifest,
            }
        )
        blob = b"".join(np.ascontiguousarray(a, dtype="<f4").tobytes() for a in self.arrays.values())
        return MAGIC + struct.pack("<I", len(header)) + header + blob

    @classmethod
    def from_bytes(cls, data: bytes) -> "Checkpoint":
        if data[: len(MAGIC)] != MAGIC:
            raise CheckpointError("not a checkpoint: missing FSHM magic")
        if len(data) < _PREFIX:
            raise CheckpointError("checkpoint truncated inside the header length")
        (header_len,) = struct.unpack_from("<I", data, len(MAGIC))
        if len(data) < _PREFIX + header_len:
            raise CheckpointError(f"checkpoint header of {header_len} bytes runs past end of file")
        try:
            header = json.loads(data[_PREFIX : _PREFIX + header_len].decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as e:
            raise CheckpointError(f"checkpoint header is not valid JSON: {e}") from e

        version = header.get("format_version")
        if version != FORMAT_VERSION:
            raise CheckpointError(f"unsupported checkpoint format_version {version}")
        try:
            model_config = ModelConfig.from_dict(header["model"])
        except (KeyError, ConfigError) as e:
            raise CheckpointError(f"checkpoint model configuration is invalid: {e}") from e

        blob = memoryview(data)[_PREFIX + header_len :]
        arrays: dict[str, np.ndarray] = {}
        expected_offset = 0
        for entry in header.get("tensors", []):
            name = entry.get("name", "?")
            shape = tuple(entry.get("shape", ()))
            count = int(np.prod(shape)) if shape else 1
            if entry.get("offset") != expected_offset or entry.get("nbytes") != count * 4:
                raise CheckpointError(f"tensor {name}: manifest entry does not tile the weight blob")
            if expected_offset + count * 4 > len(blob):
                raise CheckpointError(f"tensor {name}: blob ends at {len(blob)} bytes, tensor needs {expected_offset + count * 4}")
            arrays[name] = (
                np.frombuffer(blob, dtype="<f4", count=count, offset=expected_offset).reshape(shape).astype(np.float32)
            )
            expected_offset += count * 4
        if expected_offset != len(blob):
            raise CheckpointError(f"weight blob is {len(blob)} bytes, manifest covers {expected_offset}")

        return cls(model_config, arrays, header.get("metadata", {}))

    def save(self, path: str | Path):
        path = Path(path)
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_bytes(self.to_bytes())
        except OSError as e:
            raise CheckpointError(f"Cannot write checkpoint {path}: {e}") from e

    @classmethod
    def load(cls, path: str | Path) -> "Checkpoint":
        try:
            data = Path(path).read_bytes()
        except OSError as e:
            raise CheckpointError(f"Cannot read checkpoint {path}: {e}") from e
        return cls.from_bytes(data)


def save_checkpoint(path: str | Path, network: FishNetwork, metadata: dict[str, Any] | None = None) -> Checkpoint:
    ckpt = Checkpoint.from_network(network, metadata)
    ckpt.save(path)
    return ckpt


def load_network(path: str | Path) -> FishNetwork:
    """Rebuild the network stored in a checkpoint; names and shapes are checked"""
    ckpt = Checkpoint.load(path)
    try:
        return ckpt.to_network()
    except CheckpointError as e:
        raise CheckpointError(f"{path}: {e}") from e
