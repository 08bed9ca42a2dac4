"""Second-order time-local (time-convolutionless) master equation.

The memory integrals collapse into closed-form time-dependent coefficients

    eta(w_a, t) = int_0^t G(s) e^{i w_a s} ds
                = sum_m c_m (1 - e^{-(nu_m - i w_a) t}) / (nu_m - i w_a),

which assemble into the 2x2 matrix Lambda(t) with
Lambda_{nu,mu}(t) = A_{nu,mu} * eta(w_{mu,nu}, t), and the generator

    dx/dt = -i [H, x] - [A, Lambda(t) x - x Lambda(t)^dagger].

Element by element this reproduces the four signed coefficient sums of the
time-local equation with the phases e^{i w_{nu,alpha} s}, e^{i w_{mu,nu} s},
e^{i w_{beta,mu} s} attached exactly as in the time-nonlocal kernels'
time-local limit.  As t -> infinity the coefficients plateau at
c_m / (nu_m - i w_a) and the generator becomes the stationary non-secular
Redfield-like generator.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import solve_ivp

from .bath import ExponentialSeries, default_series
from .model import ExcitonBasis, ModelParams, build_exciton_basis, coerce_initial_state
from .tc2 import ATOL, RTOL, PropagationError
from .trajectory import Trajectory


def _one_minus_exp_over(z):
    """(1 - exp(-z))/z for complex scalar z, stable near z = 0."""
    if abs(z) < 1e-6:
        return 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0
    if z.imag == 0.0:
        return -np.expm1(-z.real) / z
    return (1.0 - np.exp(-z)) / z


def tl2_coefficient(series: ExponentialSeries, omega_a: float, t: float) -> complex:
    """eta(omega_a, t) = int_0^t G(s) e^{i omega_a s} ds in rad/fs.

    The degenerate denominator nu_m = i*omega_a is handled by its limit
    c_m * t.
    """
    if t < 0:
        raise ValueError("tl2_coefficient requires t >= 0")
    total = 0.0 + 0.0j
    for c, nu in series.terms:
        z = (nu - 1j * omega_a) * t
        total += c * t * _one_minus_exp_over(complex(z))
    return total


def tl2_lambda_matrix(basis: ExcitonBasis, series: ExponentialSeries, t: float) -> np.ndarray:
    """Lambda(t): A weighted elementwise by the running kernel integrals."""
    w = basis.trans_freq
    lam = np.empty((2, 2), dtype=complex)
    for i in range(2):
        for j in range(2):
            # element (i, j) carries the phase e^{-i w_{i,j} s} = e^{+i w_{j,i} s}
            lam[i, j] = basis.a_matrix[i, j] * tl2_coefficient(series, w[j, i], t)
    return lam


def tl2_generator(basis: ExcitonBasis, series: ExponentialSeries, t: float) -> np.ndarray:
    """Instantaneous generator as a 4x4 matrix on row-major vec(x)."""
    h = basis.hamiltonian()
    a = basis.a_matrix
    eye = np.eye(2)
    lam = tl2_lambda_matrix(basis, series, t)
    left = lam  # acts as Lambda x
    gen = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    comm_a_left = np.kron(a, eye) - np.kron(eye, a.T)
    # [A, Lambda x - x Lambda^dagger] as superoperator
    inner = np.kron(left, eye) - np.kron(eye, lam.conj())
    gen = gen - comm_a_left @ inner
    return gen


def propagate_tl2(
    params: ModelParams,
    rho0,
    *,
    choi_input: bool = False,
    series: ExponentialSeries | None = None,
    n_matsubara: int | None = None,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> Trajectory:
    """Propagate rho0 under the time-local generator on the uniform grid."""
    rho, _ = coerce_initial_state(rho0, choi_input)
    if series is None:
        series = default_series(params.lam, params.gamma, params.temperature, n_matsubara)
    return propagate_tl2_batch(params, rho[None], series=series, rtol=rtol, atol=atol)[0]


def propagate_tl2_batch(
    params: ModelParams,
    rhos,
    *,
    series: ExponentialSeries | None = None,
    n_matsubara: int | None = None,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> list[Trajectory]:
    """Propagate a batch of initial matrices sharing one adaptive solve."""
    rhos = np.asarray(rhos, dtype=complex).reshape(-1, 2, 2)
    batch = rhos.shape[0]
    if series is None:
        series = default_series(params.lam, params.gamma, params.temperature, n_matsubara)
    basis = build_exciton_basis(params)
    h = basis.hamiltonian()
    a = basis.a_matrix

    def rhs(t, y):
        x = y.reshape(batch, 2, 2)
        lam = tl2_lambda_matrix(basis, series, t)
        mixed = lam @ x - x @ lam.conj().T
        dx = -1j * (h @ x - x @ h) - (a @ mixed - mixed @ a)
        return dx.ravel()

    grid = params.time_grid()
    sol = solve_ivp(
        rhs,
        (0.0, params.t_final),
        rhos.ravel(),
        method="DOP853",
        t_eval=grid,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise PropagationError(f"TL2 integration failed: {sol.message}",
                               sol.t[-1] if sol.t.size else 0.0)
    states = sol.y.T.reshape(-1, batch, 2, 2)
    return [Trajectory(times=grid, states=states[:, b]) for b in range(batch)]
