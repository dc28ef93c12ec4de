"""Version information for fishstream
"""

__version__ = "0.1.0"
__version_info__ = (0, 1, 0)

MAJOR = 0
MINOR = 1
PATCH = 0

VERSION_STRING = "0.1.0"

RELEASE_NOTES = """
fishstream v0.1.0 - first release

- Multi-scale wave embedder with bitwise-identical streaming path
- Retention encoder with parallel and recurrent modes
- Memory-bank pick decoder, location and magnitude heads
- FSH1 waveform files, FSHM checkpoints, synthetic dataset generator
- Sea-mode training with background crop feeder
- Streaming sessions with auto-reset, replay, stdin streaming and latency bench
- Evaluation: pick scores, P/S-aligned error curves, power-law fit
"""
