"""
Published UCI regression numbers, echoed next to produced results in JSON
reports. Each entry is (mean, standard error) over 20 splits; RMSE is in
original target units and log-likelihood is the mean per test point.
"""

from typing import Dict, Optional, Tuple

Reported = Tuple[float, float]

DATASETS = ("boston", "concrete", "energy", "kin8nm", "power", "wine", "yacht")

# one hidden layer of 50 units, lower-bound dropout training
LOWER_BOUND_DROPOUT_RMSE: Dict[str, Reported] = {
    "boston": (2.80, 0.19),
    "concrete": (4.81, 0.14),
    "energy": (1.09, 0.05),
    "kin8nm": (0.09, 0.00),
    "power": (4.00, 0.04),
    "wine": (0.61, 0.01),
    "yacht": (0.72, 0.06),
}

LOWER_BOUND_DROPOUT_LL: Dict[str, Reported] = {
    "boston": (-2.39, 0.05),
    "concrete": (-2.94, 0.02),
    "energy": (-1.72, 0.02),
    "kin8nm": (0.97, 0.01),
    "power": (-2.79, 0.01),
    "wine": (-0.92, 0.01),
    "yacht": (-1.38, 0.01),
}

# two hidden layers
TWO_LAYER_DROPOUT_RMSE: Dict[str, Reported] = {
    "boston": (2.80, 0.13),
    "concrete": (4.50, 0.18),
    "energy": (0.47, 0.01),
    "kin8nm": (0.08, 0.00),
    "power": (3.63, 0.04),
    "wine": (0.60, 0.01),
    "yacht": (0.66, 0.06),
}

PROBABILISTIC_BACKPROP_RMSE: Dict[str, Reported] = {
    "boston": (2.795, 0.16),
    "concrete": (5.241, 0.12),
    "energy": (0.903, 0.05),
    "kin8nm": (0.071, 0.00),
    "power": (4.028, 0.03),
    "wine": (0.643, 0.01),
    "yacht": (0.848, 0.05),
}

DEEP_GP_RMSE: Dict[str, Reported] = {
    "boston": (2.38, 0.12),
    "concrete": (4.64, 0.11),
    "energy": (0.57, 0.02),
    "kin8nm": (0.05, 0.00),
    "power": (3.60, 0.03),
    "wine": (0.50, 0.01),
    "yacht": (0.98, 0.09),
}

# Target numbers for this library's own models, used by the acceptance bands.
MC_OBJECTIVE_RMSE: Dict[str, Dict[str, Reported]] = {
    "IW": {
        "boston": (2.450, 0.25), "concrete": (4.052, 0.29), "energy": (0.972, 0.06), "kin8nm": (0.082, 0.00),
        "power": (3.094, 0.08), "wine": (0.667, 0.02), "yacht": (0.577, 0.16),
    },
    "TA": {
        "boston": (2.369, 0.22), "concrete": (3.935, 0.35), "energy": (0.828, 0.05), "kin8nm": (0.076, 0.00),
        "power": (3.286, 0.08), "wine": (0.559, 0.03), "yacht": (0.612, 0.14),
    },
}

EM_RMSE: Dict[str, Dict[str, Reported]] = {
    "ARD": {
        "boston": (2.158, 0.20), "concrete": (3.805, 0.28), "energy": (0.852, 0.01), "kin8nm": (0.066, 0.01),
        "power": (3.486, 0.10), "wine": (0.561, 0.03), "yacht": (0.691, 0.12),
    },
    "ADD": {
        "boston": (2.343, 0.31), "concrete": (4.084, 0.34), "energy": (0.867, 0.11), "kin8nm": (0.064, 0.00),
        "power": (3.290, 0.06), "wine": (0.555, 0.01), "yacht": (0.657, 0.14),
    },
    "ARD-ADD": {
        "boston": (2.367, 0.18), "concrete": (3.761, 0.23), "energy": (0.853, 0.08), "kin8nm": (0.064, 0.00),
        "power": (3.236, 0.07), "wine": (0.538, 0.03), "yacht": (0.604, 0.16),
    },
}


def dataset_key(name: Optional[str]) -> Optional[str]:
    """Match a file name such as 'Boston.csv' or 'energy_efficiency' to a table key."""
    if not name:
        return None
    lowered = name.lower()
    for key in DATASETS:
        if key in lowered:
            return key
    return None


def baselines_for(name: Optional[str]) -> Dict[str, Dict[str, float]]:
    """Every published number for one dataset, keyed by source; empty when unknown."""
    key = dataset_key(name)
    if key is None:
        return {}
    tables = {
        "lower_bound_dropout_rmse": LOWER_BOUND_DROPOUT_RMSE,
        "lower_bound_dropout_log_likelihood": LOWER_BOUND_DROPOUT_LL,
        "two_layer_dropout_rmse": TWO_LAYER_DROPOUT_RMSE,
        "probabilistic_backprop_rmse": PROBABILISTIC_BACKPROP_RMSE,
        "deep_gp_rmse": DEEP_GP_RMSE,
    }
    for kind, table in MC_OBJECTIVE_RMSE.items():
        tables[f"{kind.lower()}_multiplicative_noise_rmse"] = table
    for kind, table in EM_RMSE.items():
        tables[f"{kind.lower()}_em_rmse"] = table
    return {source: {"mean": table[key][0], "se": table[key][1]} for source, table in tables.items()}
