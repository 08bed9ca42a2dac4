"""Two-level dimer model: parameters, exciton basis and density matrices.

The system Hamiltonian is ``(omega0/2) sigma_z + J sigma_x`` in the site
basis ``{|1>, |-1>}``.  All dynamics modules work in the exciton eigenbasis
``{|chi_+>, |chi_->}``, where the Hamiltonian is ``diag(+Omega/2, -Omega/2)``
and the bath couples through ``A = V^T sigma_z V`` (V the eigenvector
matrix).  Index 0 refers to ``|chi_+>`` and index 1 to ``|chi_->``
throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .units import thermal_energy_angular, wavenumber_to_angular

SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]])
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]])

#: Tolerance for the t_final/dt integer-grid check.
GRID_TOL = 1e-9


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters of the dimer + bath, in spectroscopic units.

    Parameters
    ----------
    omega0 : float
        Level spacing in cm^-1 (>= 0).
    j_coupling : float
        Tunneling matrix element J in cm^-1.
    lam : float
        Bath reorganization energy in cm^-1 (>= 0).
    gamma : float
        Bath cutoff frequency in cm^-1 (> 0).
    temperature : float
        Bath temperature in K (> 0).
    t_final : float
        Propagation horizon in fs (> 0).
    dt : float
        Output grid step in fs (> 0); t_final/dt must be an integer
        within a 1e-9 rounding tolerance.
    """

    omega0: float
    j_coupling: float
    lam: float
    gamma: float
    temperature: float
    t_final: float = 1000.0
    dt: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.omega0) or self.omega0 < 0:
            raise ValueError(f"omega0 must be >= 0, got {self.omega0}")
        if not np.isfinite(self.j_coupling):
            raise ValueError(f"j_coupling must be finite, got {self.j_coupling}")
        if not np.isfinite(self.lam) or self.lam < 0:
            raise ValueError(f"lam must be >= 0, got {self.lam}")
        if not np.isfinite(self.gamma) or self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if not np.isfinite(self.temperature) or self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        if not np.isfinite(self.t_final) or self.t_final <= 0:
            raise ValueError(f"t_final must be > 0, got {self.t_final}")
        if not np.isfinite(self.dt) or self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        ratio = self.t_final / self.dt
        if abs(ratio - round(ratio)) > GRID_TOL * max(1.0, ratio):
            raise ValueError(
                f"t_final/dt = {ratio} is not an integer number of grid steps"
            )

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    def time_grid(self) -> np.ndarray:
        """Uniform output grid {0, dt, ..., t_final} in fs."""
        return np.linspace(0.0, self.t_final, self.n_steps + 1)


def thermal_quantum(params: ModelParams):
    """Return the evaluator ``omega -> hbar*omega/(2 k_B T)``.

    The argument is an angular frequency in rad/fs; the result is
    dimensionless.  Rejects non-positive temperatures.
    """
    kt = thermal_energy_angular(params.temperature)
    return lambda omega: omega / (2.0 * kt)


@dataclass(frozen=True)
class ExcitonBasis:
    """Eigen-decomposition of the dimer Hamiltonian.

    Attributes
    ----------
    big_omega : float
        Exciton splitting Omega in rad/fs.
    eigvecs : (2, 2) ndarray
        Real orthogonal matrix whose columns are |chi_+>, |chi_-> in the
        site basis.
    a_matrix : (2, 2) ndarray
        Matrix elements <mu| sigma_z |nu> in the exciton basis (real,
        symmetric).
    trans_freq : (2, 2) ndarray
        Transition frequencies omega_{mu,nu} = E_mu - E_nu in rad/fs
        (antisymmetric; trans_freq[0, 1] = +Omega).
    """

    big_omega: float
    eigvecs: np.ndarray
    a_matrix: np.ndarray
    trans_freq: np.ndarray

    def hamiltonian(self) -> np.ndarray:
        """System Hamiltonian in its own eigenbasis, diag(+Omega/2, -Omega/2)."""
        return np.diag([0.5 * self.big_omega, -0.5 * self.big_omega])


def build_exciton_basis(params: ModelParams) -> ExcitonBasis:
    """Diagonalize ``(omega0/2) sigma_z + J sigma_x`` and fix the gauge.

    Columns are ordered (+, -) by descending eigenvalue.  The sign of each
    eigenvector is chosen so that its first nonzero component is positive;
    this makes A_{+,-} >= 0 for J >= 0 and reduces to the identity matrix
    for J = 0.  The fully degenerate case omega0 = J = 0 returns identity
    eigenvectors with Omega = 0 by convention.
    """
    w0 = wavenumber_to_angular(params.omega0)
    j = wavenumber_to_angular(params.j_coupling)
    big_omega = np.hypot(w0, 2.0 * j)

    if big_omega == 0.0:
        eigvecs = np.eye(2)
    else:
        h_site = 0.5 * w0 * SIGMA_Z + j * SIGMA_X
        _, vecs = np.linalg.eigh(h_site)
        eigvecs = vecs[:, ::-1].copy()  # eigh sorts ascending; want (+, -)
        for col in range(2):
            v = eigvecs[:, col]
            lead = v[0] if v[0] != 0.0 else v[1]
            if lead < 0.0:
                eigvecs[:, col] = -v

    a_matrix = eigvecs.T @ SIGMA_Z @ eigvecs
    trans_freq = np.array([[0.0, big_omega], [-big_omega, 0.0]])
    return ExcitonBasis(
        big_omega=big_omega,
        eigvecs=eigvecs,
        a_matrix=a_matrix,
        trans_freq=trans_freq,
    )


@dataclass(frozen=True)
class DensityMatrix2:
    """A 2x2 complex matrix in the exciton basis.

    Physical states are validated (Hermitian, unit trace, eigenvalues in
    [-tol, 1+tol]).  Non-Hermitian matrices are permitted only when flagged
    as Choi-basis inputs via :meth:`choi_basis`.
    """

    entries: np.ndarray
    choi_input: bool = field(default=False)

    HERM_TOL = 1e-8
    TRACE_TOL = 1e-8
    EIG_TOL = 1e-8

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (2, 2):
            raise ValueError(f"expected a 2x2 matrix, got shape {entries.shape}")
        object.__setattr__(self, "entries", entries)
        if not self.choi_input:
            validate_physical_state(entries, self.HERM_TOL, self.TRACE_TOL, self.EIG_TOL)

    @classmethod
    def physical(cls, entries) -> "DensityMatrix2":
        return cls(entries=np.asarray(entries, dtype=complex))

    @classmethod
    def choi_basis(cls, entries) -> "DensityMatrix2":
        return cls(entries=np.asarray(entries, dtype=complex), choi_input=True)


def validate_physical_state(rho, herm_tol=1e-8, trace_tol=1e-8, eig_tol=1e-8):
    """Raise ``ValueError`` if ``rho`` is not a physical density matrix."""
    rho = np.asarray(rho, dtype=complex)
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValueError(f"state is not Hermitian (max deviation {herm:.3e})")
    tr = rho.trace()
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"state trace {tr} differs from 1 beyond {trace_tol}")
    eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
    if eigs.min() < -eig_tol or eigs.max() > 1.0 + eig_tol:
        raise ValueError(f"state eigenvalues {eigs} outside [0, 1] beyond {eig_tol}")


def exciton_plus_state() -> DensityMatrix2:
    """|chi_+><chi_+| as a density matrix in the exciton basis."""
    return DensityMatrix2.physical(np.diag([1.0, 0.0]))


def coerce_initial_state(rho0, choi_input=False) -> tuple[np.ndarray, bool]:
    """Normalize a propagator initial state to (2x2 array, choi flag)."""
    if isinstance(rho0, DensityMatrix2):
        return rho0.entries, rho0.choi_input
    entries = np.asarray(rho0, dtype=complex)
    if entries.shape != (2, 2):
        raise ValueError(f"expected a 2x2 initial state, got shape {entries.shape}")
    if not choi_input:
        validate_physical_state(entries)
    return entries, choi_input
