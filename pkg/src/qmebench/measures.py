"""System-ancilla entanglement benchmarks.

A propagator's full action is encoded by evolving the four exciton-basis
matrix units |j><k| and assembling the extended state

    rho_sys,anc(t) = sum_jk (1/2) E_t(|j><k|) (x) |j><k|,

which starts from the maximally entangled projector and stays there under
purely unitary dynamics (identity process on the ancilla).  Entanglement
is quantified by the Wootters concurrence; its sampled total variation
minus the net drop gives the non-Markovianity value (equivalently twice
the summed concurrence revivals above the noise threshold).

The perturbative propagators are not completely positive, so their
extended states can develop genuinely negative eigenvalues at strong
coupling; the concurrence formula remains well defined (eigenvalues are
clipped at zero before the square root).  The standalone
:func:`concurrence` enforces physicality at a strict default tolerance,
while the trajectory pipeline accepts ``positivity_tol=None`` to skip the
positivity gate for those states.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .heom import propagate_heom, propagate_heom_batch
from .model import ModelParams
from .tc2 import propagate_tc2, propagate_tc2_batch
from .tl2 import propagate_tl2, propagate_tl2_batch
from .trajectory import ExtendedTrajectory, Trajectory

_SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SPIN_FLIP = np.kron(_SIGMA_Y, _SIGMA_Y).real  # sigma_y (x) sigma_y, real 4x4

#: Default noise floor separating integrator noise from genuine revivals.
DEFAULT_RISE_THRESHOLD = 1e-9

METHOD_NAMES = ("tc2", "tl2", "heom")


def bell_state_projector() -> np.ndarray:
    """|Psi><Psi| with Psi = (|chi+ chi+> + |chi- chi->)/sqrt(2)."""
    psi = np.zeros(4)
    psi[0] = psi[3] = 1.0 / np.sqrt(2.0)
    return np.outer(psi, psi).astype(complex)


def resolve_propagator(method, *, heom_depth=None, **kwargs):
    """Return ``f(params, rho0) -> Trajectory`` for a method name or callable."""
    if callable(method):
        return method
    if method == "tc2":
        return lambda params, rho0: propagate_tc2(params, rho0, choi_input=True, **kwargs)
    if method == "tl2":
        return lambda params, rho0: propagate_tl2(params, rho0, choi_input=True, **kwargs)
    if method == "heom":
        if heom_depth is None:
            raise ValueError("heom propagation requires heom_depth")
        return lambda params, rho0: propagate_heom(
            params, rho0, heom_depth, choi_input=True, **kwargs
        )
    raise ValueError(f"unknown method {method!r}; expected one of {METHOD_NAMES}")


_BATCH_PROPAGATORS = {
    "tc2": propagate_tc2_batch,
    "tl2": propagate_tl2_batch,
}


def propagate_choi(method, params: ModelParams, *, heom_depth=None,
                   batch: bool = True, **kwargs) -> ExtendedTrajectory:
    """Evolve the maximally entangled system-ancilla state through a method.

    The four basis matrices |j><k| are propagated through the chosen
    method (valid non-Hermitian inputs by linearity) and the extended
    state is assembled with the ancilla untouched.  By default the four
    columns share a single adaptive solve, which also keeps the assembled
    states Hermitian to roundoff because dagger-related columns then see
    identical step sequences; ``batch=False`` runs four independent
    propagations instead.
    """
    if method in ("tc2", "tl2"):
        # Cheap systems: one tolerance notch keeps the dagger-paired
        # columns consistent to roundoff through oscillatory regimes.
        kwargs.setdefault("rtol", 1e-10)
        kwargs.setdefault("atol", 1e-13)
    units = np.zeros((4, 2, 2), dtype=complex)
    pairs = [(0, 0), (0, 1), (1, 0), (1, 1)]
    for idx, (j, k) in enumerate(pairs):
        units[idx, j, k] = 1.0

    if batch and (callable(method) is False) and method in (*_BATCH_PROPAGATORS, "heom"):
        if method == "heom":
            if heom_depth is None:
                raise ValueError("heom propagation requires heom_depth")
            kwargs.setdefault("use_sparse", True)
            trajectories = propagate_heom_batch(params, units, heom_depth, **kwargs)
        else:
            trajectories = _BATCH_PROPAGATORS[method](params, units, **kwargs)
    else:
        propagate = resolve_propagator(method, heom_depth=heom_depth, **kwargs)
        trajectories = [propagate(params, unit.copy()) for unit in units]

    times = trajectories[0].times
    n_t = times.size
    states = np.zeros((n_t, 4, 4), dtype=complex)
    for (j, k), traj in zip(pairs, trajectories):
        ejk = np.zeros((2, 2), dtype=complex)
        ejk[j, k] = 1.0
        # kron over the trailing axes for every time sample
        states += 0.5 * np.einsum("tab,cd->tacbd", traj.states, ejk).reshape(n_t, 4, 4)
    return ExtendedTrajectory(times=times, states=states)


def concurrence(
    rho4,
    *,
    herm_tol: float = 1e-8,
    trace_tol: float = 1e-8,
    positivity_tol: float | None = 1e-8,
) -> float:
    """Wootters concurrence of a two-qubit state.

    C = max(0, l1 - l2 - l3 - l4) with l_i the decreasing square roots of
    the eigenvalues of rho (sy(x)sy) rho* (sy(x)sy); eigenvalues are
    clipped at zero before the square root, and complex conjugation is
    taken in the computational (exciton (x) exciton) basis.

    ``positivity_tol=None`` skips the positivity gate (needed for states
    produced by non-completely-positive propagators).
    """
    rho = np.asarray(rho4, dtype=complex)
    if rho.shape != (4, 4):
        raise ValueError(f"expected a 4x4 state, got shape {rho.shape}")
    herm = np.max(np.abs(rho - rho.conj().T))
    if herm > herm_tol:
        raise ValueError(f"state is not Hermitian (max deviation {herm:.3e})")
    tr = rho.trace()
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"state trace {tr} differs from 1 beyond {trace_tol}")
    if positivity_tol is not None:
        eigs = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        if eigs.min() < -positivity_tol:
            raise ValueError(
                f"state has eigenvalue {eigs.min():.3e} below -{positivity_tol}"
            )
    r_matrix = rho @ SPIN_FLIP @ rho.conj() @ SPIN_FLIP
    eigs = np.linalg.eigvals(r_matrix).real
    roots = np.sqrt(np.clip(eigs, 0.0, None))
    roots.sort()
    return float(max(0.0, roots[3] - roots[2] - roots[1] - roots[0]))


def concurrence_series(traj: ExtendedTrajectory, *, positivity_tol=None) -> np.ndarray:
    """Concurrence at every sample of an extended trajectory."""
    return np.array(
        [concurrence(state, positivity_tol=positivity_tol) for state in traj.states]
    )


@dataclass(frozen=True)
class NmReport:
    """Concurrence series statistics and the non-Markovianity value.

    ``nm_value`` is twice the summed concurrence rises above the noise
    threshold; it equals total_variation - net_drop up to twice the
    sub-threshold rise mass (exactly, for threshold zero).
    """

    concurrence: np.ndarray
    total_variation: float
    net_drop: float
    nm_value: float
    rise_threshold: float
    max_revival: float


def non_markovianity(traj_or_series, rise_threshold: float = DEFAULT_RISE_THRESHOLD,
                     *, positivity_tol=None) -> NmReport:
    """Discrete total-variation non-Markovianity of the concurrence.

    Accepts an :class:`ExtendedTrajectory` (concurrence computed per
    sample) or a precomputed concurrence series.  Increments smaller in
    magnitude than ``rise_threshold`` are treated as monotone and do not
    contribute to rises.
    """
    if rise_threshold < 0:
        raise ValueError("rise_threshold must be >= 0")
    if isinstance(traj_or_series, ExtendedTrajectory):
        series = concurrence_series(traj_or_series, positivity_tol=positivity_tol)
    else:
        series = np.asarray(traj_or_series, dtype=float)
    if series.ndim != 1 or series.size < 2:
        raise ValueError("need a concurrence series with at least two samples")

    increments = np.diff(series)
    rises = increments[increments >= max(rise_threshold, 1e-300)]
    nm_value = 2.0 * float(rises.sum()) if rises.size else 0.0
    total_variation = float(np.abs(increments).sum())
    net_drop = float(series[0] - series[-1])

    max_revival = 0.0
    run = 0.0
    run_has_rise = False
    for inc in increments:
        if inc > 0:
            run += inc
            run_has_rise = run_has_rise or inc >= rise_threshold
        else:
            if run_has_rise:
                max_revival = max(max_revival, run)
            run = 0.0
            run_has_rise = False
    if run_has_rise:
        max_revival = max(max_revival, run)

    return NmReport(
        concurrence=series,
        total_variation=total_variation,
        net_drop=net_drop,
        nm_value=nm_value,
        rise_threshold=rise_threshold,
        max_revival=float(max_revival),
    )
