"""Time-sampled density-matrix trajectories on a uniform grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Trajectory:
    """System trajectory: 2x2 complex states on a uniform time grid (fs)."""

    times: np.ndarray
    states: np.ndarray  # (n_times, 2, 2) complex

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=complex)
        if states.shape != (times.size, 2, 2):
            raise ValueError(
                f"states shape {states.shape} does not match {times.size} grid points"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def population_plus(self) -> np.ndarray:
        """rho_{++}(t), real part of the |chi_+> population."""
        return self.states[:, 0, 0].real

    def coherence_abs(self) -> np.ndarray:
        """|rho_{-+}(t)|, magnitude of the exciton coherence."""
        return np.abs(self.states[:, 1, 0])

    def trace(self) -> np.ndarray:
        return np.einsum("tii->t", self.states)

    def hermiticity_defect(self) -> float:
        """Max-abs deviation from Hermiticity over the whole trajectory."""
        return float(np.max(np.abs(self.states - self.states.conj().transpose(0, 2, 1))))


@dataclass(frozen=True)
class ExtendedTrajectory:
    """System x ancilla trajectory: 4x4 states ordered (system (x) ancilla)."""

    times: np.ndarray
    states: np.ndarray  # (n_times, 4, 4) complex

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        states = np.asarray(self.states, dtype=complex)
        if states.shape != (times.size, 4, 4):
            raise ValueError(
                f"states shape {states.shape} does not match {times.size} grid points"
            )
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "states", states)

    def trace(self) -> np.ndarray:
        return np.einsum("tii->t", self.states)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.states - self.states.conj().transpose(0, 2, 1))))
