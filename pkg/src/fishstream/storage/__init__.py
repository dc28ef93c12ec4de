from .checkpoint import Checkpoint, load_network, save_checkpoint
from .dataset import Dataset, DatasetEntry, RecordSplit, load_dataset, write_dataset
from .waveform import WaveformRecord, decode_waveform, encode_waveform, read_waveform, write_waveform

__all__ = [
    "Checkpoint",
    "Dataset",
    "DatasetEntry",
    "RecordSplit",
    "WaveformRecord",
    "decode_waveform",
    "encode_waveform",
    "load_dataset",
    "load_network",
    "read_waveform",
    "save_checkpoint",
    "write_dataset",
    "write_waveform",
]
