"""Dissipative two-level dimer dynamics and non-Markovianity benchmarks.

Propagates a two-level (dimer) system coupled to a Drude-Lorentz bath
with two perturbative non-Markovian master equations (time-convolution
TC2 and time-local TL2) and the numerically-exact hierarchical equations
of motion, then scores the approximations through system-ancilla
concurrence and the entanglement-based non-Markovianity measure.
"""

from .bath import (
    ExponentialSeries,
    SpectralDensity,
    choose_matsubara_count,
    correlation_quadrature,
    dephasing_exponent,
    matsubara_decompose,
    series_eval,
    spectral_density_at,
)
from .heom import build_hierarchy, convergence_scan, propagate_heom
from .measures import (
    NmReport,
    bell_state_projector,
    concurrence,
    concurrence_series,
    non_markovianity,
    propagate_choi,
)
from .model import (
    DensityMatrix2,
    ExcitonBasis,
    ModelParams,
    build_exciton_basis,
    exciton_plus_state,
    thermal_quantum,
)
from .scenarios import Scenario, load_scenarios, preset
from .tc2 import (
    assemble_tc2_system,
    propagate_tc2,
    propagate_tc2_history_oracle,
)
from .tl2 import propagate_tl2, tl2_coefficient
from .trajectory import ExtendedTrajectory, Trajectory
from .units import wavenumber_to_angular

__all__ = [
    "DensityMatrix2",
    "ExcitonBasis",
    "ExponentialSeries",
    "ExtendedTrajectory",
    "ModelParams",
    "NmReport",
    "Scenario",
    "SpectralDensity",
    "Trajectory",
    "assemble_tc2_system",
    "bell_state_projector",
    "build_exciton_basis",
    "build_hierarchy",
    "choose_matsubara_count",
    "concurrence",
    "concurrence_series",
    "convergence_scan",
    "correlation_quadrature",
    "dephasing_exponent",
    "exciton_plus_state",
    "load_scenarios",
    "matsubara_decompose",
    "non_markovianity",
    "preset",
    "propagate_choi",
    "propagate_heom",
    "propagate_tc2",
    "propagate_tc2_history_oracle",
    "propagate_tl2",
    "series_eval",
    "spectral_density_at",
    "thermal_quantum",
    "tl2_coefficient",
    "wavenumber_to_angular",
]

__version__ = "0.1.0"
