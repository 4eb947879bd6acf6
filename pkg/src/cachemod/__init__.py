"""Cache-aided modulation for heterogeneous coded caching over AWGN broadcast.

Builds decentralized-placement delivery plans under two padding schemes,
maps the XOR multicast blocks onto set-partitioning-labeled PSK/QAM
constellations, and evaluates per-user symbol error rates both in closed
form and by seeded Monte Carlo.
"""

from .analysis import (
    SchemeComparison,
    SerReport,
    SnrProfile,
    analytic_report,
    block_error_table,
    compare_schemes,
    q_function,
    symbol_error_bound,
    user_metrics,
)
from .caching import (
    PROPOSED,
    SCHEMES,
    ZERO_PADDING,
    CacheProfile,
    DeliveryPlan,
    DemandVector,
    Library,
    MulticastBlockSpec,
    PlacementRealization,
    SubfileMap,
    build_delivery_plan,
    decode_block,
    encode_block,
    expected_subfile_lengths,
    known_bit_mask,
    quantize_expected_map,
    realized_subfile_map,
    sample_placement,
)
from .errors import ConfigurationError, UselessBlockError
from .mc import (
    CampaignConfig,
    CellEstimate,
    EndToEndResult,
    awgn_channel,
    end_to_end_noiseless,
    estimate_cell_ser,
    run_campaign,
)
from .modem import (
    Constellation,
    KnownMask,
    build_constellation,
    build_psk,
    build_qam,
    demodulate,
    empty_mask,
    min_distance,
    modulate,
    subconstellation,
)

__all__ = [
    "CacheProfile",
    "CampaignConfig",
    "CellEstimate",
    "ConfigurationError",
    "Constellation",
    "DeliveryPlan",
    "DemandVector",
    "EndToEndResult",
    "KnownMask",
    "Library",
    "MulticastBlockSpec",
    "PROPOSED",
    "PlacementRealization",
    "SCHEMES",
    "SchemeComparison",
    "SerReport",
    "SnrProfile",
    "SubfileMap",
    "UselessBlockError",
    "ZERO_PADDING",
    "analytic_report",
    "awgn_channel",
    "block_error_table",
    "build_constellation",
    "build_delivery_plan",
    "build_psk",
    "build_qam",
    "compare_schemes",
    "decode_block",
    "demodulate",
    "empty_mask",
    "encode_block",
    "end_to_end_noiseless",
    "estimate_cell_ser",
    "expected_subfile_lengths",
    "known_bit_mask",
    "min_distance",
    "modulate",
    "q_function",
    "quantize_expected_map",
    "realized_subfile_map",
    "run_campaign",
    "sample_placement",
    "subconstellation",
    "symbol_error_bound",
    "user_metrics",
]

__version__ = "0.1.0"
