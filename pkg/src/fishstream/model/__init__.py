from .config import SAMPLE_RATE_HZ, DecoderConfig, EmbedderConfig, ModelConfig, RetentionConfig, decay_schedule
from .decoder import (
    IncrementalPickHead,
    MemoryBank,
    Phase,
    PickAggregator,
    PickEvent,
    StepOutput,
    aggregate_picks,
    decode_pick,
    encode_pick,
    encode_pick_targets,
    loc_head,
    mag_head,
    pick_head,
    pick_sequence,
)
from .embedder import (
    EwmFilter,
    InputConditioner,
    StreamingEmbedder,
    WaveEmbedding,
    antisymmetrize,
    embed,
    ewm_decompose,
    msf_forward,
    prepare_input,
)
from .network import FishNetwork, NetworkOutput, init_params
from .params import Initializer, ParameterSet
from .retention import (
    EncoderOutput,
    RetentionState,
    block_forward,
    encoder_forward,
    encoder_parallel,
    encoder_step,
    msr_forward,
    retention_parallel,
    retention_recurrent_step,
    rope_apply,
)

__all__ = [
    "SAMPLE_RATE_HZ",
    "DecoderConfig",
    "EmbedderConfig",
    "EncoderOutput",
    "EwmFilter",
    "FishNetwork",
    "IncrementalPickHead",
    "Initializer",
    "InputConditioner",
    "MemoryBank",
    "ModelConfig",
    "NetworkOutput",
    "ParameterSet",
    "Phase",
    "PickAggregator",
    "PickEvent",
    "RetentionConfig",
    "RetentionState",
    "StepOutput",
    "StreamingEmbedder",
    "WaveEmbedding",
    "aggregate_picks",
    "antisymmetrize",
    "block_forward",
    "decay_schedule",
    "decode_pick",
    "embed",
    "encode_pick",
    "encode_pick_targets",
    "encoder_forward",
    "encoder_parallel",
    "encoder_step",
    "ewm_decompose",
    "init_params",
    "loc_head",
    "mag_head",
    "msf_forward",
    "pick_head",
    "pick_sequence",
    "prepare_input",
    "retention_parallel",
    "retention_recurrent_step",
    "rope_apply",
]
