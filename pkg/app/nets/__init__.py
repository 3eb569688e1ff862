from .forward import (
    MCPrediction,
    ShrinkNet,
    build_network,
    forward_deterministic,
    forward_noisy,
    forward_with_masks,
    predict_mc,
)
from .heatmap import export_heatmaps, posterior_moment_map
from .network import MaskSet, NetworkConfig, NoiseStructure, WeightSet

__all__ = [
    "MCPrediction",
    "MaskSet",
    "NetworkConfig",
    "NoiseStructure",
    "ShrinkNet",
    "WeightSet",
    "build_network",
    "export_heatmaps",
    "forward_deterministic",
    "forward_noisy",
    "forward_with_masks",
    "posterior_moment_map",
    "predict_mc",
]
