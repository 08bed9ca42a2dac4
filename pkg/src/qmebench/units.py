"""Physical constants and unit conversions.

All model inputs are spectroscopic (energies in cm^-1, temperatures in K,
times in fs).  Internally every energy is converted once, at the boundary,
to an angular frequency in rad/fs with hbar = 1, so the propagation kernels
never carry hbar factors.
"""

import numpy as np

#: Speed of light in cm/fs (exact, SI definition).
SPEED_OF_LIGHT_CM_FS = 2.99792458e-5

#: Boltzmann constant in cm^-1/K, i.e. k_B/(h c) (CODATA, exact SI constants).
BOLTZMANN_CM1_K = 0.695034800

_TWO_PI_C = 2.0 * np.pi * SPEED_OF_LIGHT_CM_FS


def wavenumber_to_angular(value_wavenumber):
    """Convert a wavenumber (cm^-1) to an angular frequency (rad/fs).

    Linear and sign-preserving; accepts scalars or arrays.
    """
    return _TWO_PI_C * np.asarray(value_wavenumber) if np.ndim(value_wavenumber) else _TWO_PI_C * value_wavenumber


def angular_to_wavenumber(value_angular):
    """Inverse of :func:`wavenumber_to_angular`."""
    return value_angular / _TWO_PI_C


def thermal_energy_angular(temperature):
    """k_B T as an angular frequency (rad/fs) for a temperature in kelvin.

    Raises ``ValueError`` for non-positive temperatures.
    """
    if temperature <= 0:
        raise ValueError(f"temperature must be positive, got {temperature}")
    return wavenumber_to_angular(BOLTZMANN_CM1_K * temperature)
