"""Spectral and energy efficiency of uplink D2D-underlaid massive-MIMO networks.

Exact stochastic-geometry expressions for the cellular and D2D tiers under
open-loop (CUE) and interference-threshold (D2D) power control, together
with an independent Monte Carlo simulator used to validate them.
"""

from .params import SystemParams, dbm_to_watts, default_params, noise_power, watts_to_dbm

__version__ = "0.1.0"

__all__ = [
    "SystemParams",
    "dbm_to_watts",
    "default_params",
    "noise_power",
    "watts_to_dbm",
    "__version__",
]
