"""Link-level simulator for OFDM with hybrid number and index modulation."""

from .channel import (
    ChannelRealization,
    NoiseSpec,
    apply_channel,
    calibrate_noise,
    draw_channel,
    make_pdp,
    subblock_channel_covariance,
)
from .codebook import (
    Codebook,
    CodebookEntry,
    ConfigurationError,
    FrameConfig,
    IllegalPatternError,
    build_table1_codebook,
    generate_generic_codebook,
    validate_codebook,
)
from .detectors import (
    SubblockDecision,
    count_operations,
    detect_decoupled_ml,
    detect_llr,
    detect_optimal_ml,
    detect_psape,
)
from .modem import (
    ConstellationAlphabet,
    assemble_and_modulate,
    build_baseline_block,
    build_subblock,
    receive_front_end,
    split_bits,
    transmit_block,
)

__version__ = "0.1.0"
