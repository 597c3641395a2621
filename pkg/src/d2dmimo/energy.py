"""Energy efficiency: SE per unit of average consumed power (bits/J/Hz).

Consumed power is the static circuit power ``p_f`` plus the mean transmit
power divided by the amplifier efficiency ``zeta``. Multiply by the
bandwidth to get bits/J.
"""

from __future__ import annotations

from .params import SystemParams
from .power import avg_cue_power, mean_d2d_power
from .spectral import SpectralEfficiency, cue_se, d2d_se


def cue_total_power(p: SystemParams) -> float:
    return p.p_f + avg_cue_power(p) / p.zeta


def d2d_total_power(p: SystemParams) -> float:
    return p.p_f + mean_d2d_power(p) / p.zeta


def cue_ee(p: SystemParams, se: SpectralEfficiency | None = None) -> float:
    se = se or cue_se(p)
    return se.value / cue_total_power(p)


def d2d_ee(p: SystemParams, se: SpectralEfficiency | None = None) -> float:
    if p.i_th == 0:
        return 0.0
    se = se or d2d_se(p)
    return se.value / d2d_total_power(p)
