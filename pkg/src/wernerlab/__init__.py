"""Werner states, single-copy local filtering, and quantumness certification.

Core entry points:

* :mod:`wernerlab.states` — Werner constructors (three equivalent routes),
  maximally entangled vectors, noisy surrogates.
* :mod:`wernerlab.filterops` — qubit projections and general local filters.
* :mod:`wernerlab.certify` — PPT, 1-distillability, separable ball,
  fully-entangled fraction, CHSH, dense coding.
* :mod:`wernerlab.extend` — symmetric (quasi/bosonic) extension SDPs.
* :mod:`wernerlab.steer` — steering robustness, Bell correlations,
  nonlocal content.
* :mod:`wernerlab.tomo` — coincidence simulation and MLE reconstruction.
* :mod:`wernerlab.solver` — the conic (LP/SDP) workhorse behind it all.
"""

__version__ = "0.1.0"

from .qmat import DensityMatrix
from .states import NoiseSpec, WernerParams, noisy_surrogate, werner, werner_all_v, werner_from_qubit_mixture
from .filterops import FilterOperator, apply_filter, filtered_weight, qubit_projection, rotated_filtered_state

__all__ = [
    "DensityMatrix",
    "FilterOperator",
    "NoiseSpec",
    "WernerParams",
    "apply_filter",
    "filtered_weight",
    "noisy_surrogate",
    "qubit_projection",
    "rotated_filtered_state",
    "werner",
    "werner_all_v",
    "werner_from_qubit_mixture",
]
