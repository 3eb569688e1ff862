import logging
from pathlib import Path
from typing import Dict, List, Optional, Protocol, Sequence, Tuple

import numpy as np
import pandas as pd

from ..errors import ConfigurationError
from .network import NetworkConfig

logger = logging.getLogger(__name__)


class HasSecondMoments(Protocol):
    def second_moments(self) -> Tuple[np.ndarray, ...]:
        ...


def posterior_moment_map(
    config: NetworkConfig, state: HasSecondMoments, layers: Optional[Sequence[int]] = None
) -> Dict[int, np.ndarray]:
    """Per-weight μ² + σ² (w² for point weights), bias rows dropped.

    Defaults to the hidden-to-hidden matrices W_2..W_L.
    """
    layers = list(layers) if layers is not None else config.hidden_to_hidden()
    if not layers:
        raise ConfigurationError("the network has no hidden-to-hidden layer")
    moments = state.second_moments()
    grids = {}
    for l in layers:
        if not 1 <= l <= config.num_layers:
            raise ConfigurationError(f"layer {l} does not exist")
        grids[l] = np.array(moments[l - 1][: config.widths[l - 1]], dtype=np.float64)
    return grids


def export_heatmaps(grids: Dict[int, np.ndarray], directory: Path) -> List[Path]:
    """Write one headerless CSV per layer, rows in weight-row order."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for l, grid in sorted(grids.items()):
        path = directory / f"layer_{l}.csv"
        pd.DataFrame(grid).to_csv(path, header=False, index=False, float_format="%.17g")
        paths.append(path)
        logger.info(f"📊 Wrote heat-map grid for layer {l} to {path}")
    return paths
