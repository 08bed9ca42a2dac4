"""Hierarchical equations of motion for the Drude-Lorentz bath.

Numerically-exact baseline propagator.  Auxiliary density operators (ADOs)
are labelled by occupation vectors n = (n_0, ..., n_K), one slot per
exponential term of the bath series; the root (all zeros) is the system
state.  Scaled ADOs are used for numerical stability:

    d rho_n/dt = -i [H, rho_n] - (sum_m n_m nu_m) rho_n
                 - i sum_m sqrt((n_m + 1) |c_m|) [A, rho_{n + e_m}]
                 - i sum_m sqrt(n_m / |c_m|) (c_m A rho_{n - e_m}
                                              - c_m^* rho_{n - e_m} A)

with A the exciton-basis coupling operator (sigma_z transformed by the
eigenvectors) and H = diag(+Omega/2, -Omega/2).  At the truncation depth a
Markovian closure replaces each missing deeper ADO by its quasi-stationary
value, adding

    -(n_m + 1) [A, c_m A rho_n - c_m^* rho_n A] / (sum_m n_m nu_m + nu_m)

to the boundary ADOs.  ADO storage is dense (2x2 blocks) with explicit
raising/lowering coupling lists; an equivalent sparse-matrix generator can
be assembled behind the ``use_sparse`` flag for long sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp

from .bath import ExponentialSeries, default_series
from .model import ModelParams, build_exciton_basis, coerce_initial_state
from .tc2 import ATOL, RTOL, PropagationError
from .trajectory import Trajectory

#: Refuse to build hierarchies with more ADOs than this.
MAX_ADOS = 1_000_000


@dataclass(frozen=True)
class Hierarchy:
    """Index set with depth <= max_depth and its raising/lowering couplings.

    ``plus_idx[i, m]`` / ``minus_idx[i, m]`` give the position of the ADO
    reached by raising/lowering term m from ADO i, or -1 when outside the
    index set.  Closed under the +-1 moves by construction.
    """

    indices: np.ndarray  # (n_ados, n_terms) int
    plus_idx: np.ndarray
    minus_idx: np.ndarray
    max_depth: int

    @property
    def n_ados(self) -> int:
        return self.indices.shape[0]

    @property
    def n_terms(self) -> int:
        return self.indices.shape[1]

    def depths(self) -> np.ndarray:
        return self.indices.sum(axis=1)


def build_hierarchy(series: ExponentialSeries, max_depth: int) -> Hierarchy:
    """Enumerate all occupation vectors with total depth <= max_depth."""
    if max_depth < 1:
        raise ValueError(f"max_depth must be >= 1, got {max_depth}")
    n_terms = len(series)
    count = comb(max_depth + n_terms, n_terms)
    if count > MAX_ADOS:
        raise ValueError(
            f"hierarchy would contain {count} ADOs (cap {MAX_ADOS}); "
            "reduce max_depth or the number of bath terms"
        )
    if n_terms == 0:
        return Hierarchy(
            indices=np.zeros((1, 0), dtype=int),
            plus_idx=np.zeros((1, 0), dtype=int),
            minus_idx=np.zeros((1, 0), dtype=int),
            max_depth=max_depth,
        )

    indices = []

    def extend(prefix, remaining):
        if len(prefix) == n_terms:
            indices.append(tuple(prefix))
            return
        for n in range(remaining + 1):
            extend(prefix + [n], remaining - n)

    extend([], max_depth)
    indices.sort()
    index_arr = np.array(indices, dtype=int)
    position = {idx: i for i, idx in enumerate(indices)}

    plus_idx = np.full((len(indices), n_terms), -1, dtype=int)
    minus_idx = np.full((len(indices), n_terms), -1, dtype=int)
    for i, idx in enumerate(indices):
        for m in range(n_terms):
            raised = list(idx)
            raised[m] += 1
            plus_idx[i, m] = position.get(tuple(raised), -1)
            if idx[m] > 0:
                lowered = list(idx)
                lowered[m] -= 1
                minus_idx[i, m] = position[tuple(lowered)]
    return Hierarchy(indices=index_arr, plus_idx=plus_idx, minus_idx=minus_idx,
                     max_depth=max_depth)


class _HeomGenerator:
    """Precomputed coupling data for the HEOM right-hand side."""

    def __init__(self, basis, series, hierarchy, use_terminator, tail_weight=0.0):
        self.h = basis.hamiltonian()
        self.a = basis.a_matrix
        self.hierarchy = hierarchy
        self.c = series.coefficients()
        self.nu = series.rates()
        self.tail_weight = tail_weight
        n = hierarchy.indices
        self.rates = (n * self.nu[None, :].real).sum(axis=1)
        abs_c = np.abs(self.c)
        with np.errstate(divide="ignore", invalid="ignore"):
            self.s_plus = np.sqrt((n + 1) * abs_c[None, :])
            s_minus = np.sqrt(np.where(n > 0, n, 0) / np.where(abs_c > 0, abs_c, 1.0))
        self.s_minus = s_minus
        self.use_terminator = use_terminator
        # Terminator prefactors for boundary ADOs: (n_m+1)/(rate + nu_m)
        # wherever the raised index falls outside the set.
        boundary = hierarchy.plus_idx < 0
        denom = self.rates[:, None] + self.nu[None, :].real
        self.term_coeff = np.where(boundary, (n + 1) / denom, 0.0)

    def rhs_dense(self, t, y):
        hier = self.hierarchy
        st = y.reshape(hier.n_ados, 2, 2)
        h, a = self.h, self.a
        out = -1j * (h @ st - st @ h) - self.rates[:, None, None] * st
        if self.tail_weight:
            comm = a @ st - st @ a
            out -= self.tail_weight * (a @ comm - comm @ a)
        for m in range(hier.n_terms):
            c_m = self.c[m]
            up = hier.plus_idx[:, m]
            sel = up >= 0
            if np.any(sel):
                su = st[up[sel]]
                out[sel] += (-1j * self.s_plus[sel, m])[:, None, None] * (a @ su - su @ a)
            down = hier.minus_idx[:, m]
            sel = down >= 0
            if np.any(sel):
                sd = st[down[sel]]
                out[sel] += (-1j * self.s_minus[sel, m])[:, None, None] * (
                    c_m * (a @ sd) - np.conj(c_m) * (sd @ a)
                )
            if self.use_terminator:
                coeff = self.term_coeff[:, m]
                sel = coeff > 0
                if np.any(sel):
                    sb = st[sel]
                    inner = c_m * (a @ sb) - np.conj(c_m) * (sb @ a)
                    out[sel] -= coeff[sel, None, None] * (a @ inner - inner @ a)
        return out.ravel()

    def assemble_sparse(self) -> sparse.csr_matrix:
        """Equivalent generator as a sparse matrix on the stacked vec states."""
        hier = self.hierarchy
        eye = np.eye(2)
        l_h = np.kron(self.h, eye)
        r_h = np.kron(eye, self.h.T)
        l_a = np.kron(self.a, eye)
        r_a = np.kron(eye, self.a.T)
        comm_a = l_a - r_a
        blocks = {}

        def add(i, j, block):
            key = (i, j)
            blocks[key] = blocks.get(key, 0) + block

        tail_block = -self.tail_weight * (comm_a @ comm_a)
        for i in range(hier.n_ados):
            add(i, i, -1j * (l_h - r_h) - self.rates[i] * np.eye(4) + tail_block)
            for m in range(hier.n_terms):
                c_m = self.c[m]
                mix = c_m * l_a - np.conj(c_m) * r_a
                j = hier.plus_idx[i, m]
                if j >= 0:
                    add(i, j, -1j * self.s_plus[i, m] * comm_a)
                elif self.use_terminator and self.term_coeff[i, m] > 0:
                    add(i, i, -self.term_coeff[i, m] * (comm_a @ mix))
                j = hier.minus_idx[i, m]
                if j >= 0:
                    add(i, j, -1j * self.s_minus[i, m] * mix)

        rows, cols, vals = [], [], []
        for (i, j), block in blocks.items():
            for bi in range(4):
                for bj in range(4):
                    v = block[bi, bj]
                    if v != 0:
                        rows.append(4 * i + bi)
                        cols.append(4 * j + bj)
                        vals.append(v)
        n = 4 * hier.n_ados
        return sparse.csr_matrix(
            (np.array(vals, dtype=complex), (rows, cols)), shape=(n, n)
        )


def propagate_heom(
    params: ModelParams,
    rho0,
    max_depth: int,
    *,
    choi_input: bool = False,
    n_matsubara: int | None = None,
    series: ExponentialSeries | None = None,
    use_terminator: bool = True,
    matsubara_correction: bool = True,
    use_sparse: bool = False,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> Trajectory:
    """Propagate the root ADO on the uniform grid.

    The bath series defaults to the residual-certified decomposition; HEOM
    sweeps normally pass an explicit (scan-certified) ``n_matsubara``.
    With ``matsubara_correction`` the delta-correlated residue of the
    truncated Matsubara tail is folded in as a double-commutator term on
    every ADO, so modest K values track the untruncated bath.
    """
    rho, _ = coerce_initial_state(rho0, choi_input)
    return propagate_heom_batch(
        params,
        rho[None],
        max_depth,
        n_matsubara=n_matsubara,
        series=series,
        use_terminator=use_terminator,
        matsubara_correction=matsubara_correction,
        use_sparse=use_sparse,
        rtol=rtol,
        atol=atol,
    )[0]


def propagate_heom_batch(
    params: ModelParams,
    rhos,
    max_depth: int,
    *,
    n_matsubara: int | None = None,
    series: ExponentialSeries | None = None,
    use_terminator: bool = True,
    matsubara_correction: bool = True,
    use_sparse: bool = False,
    rtol: float = RTOL,
    atol: float = ATOL,
) -> list[Trajectory]:
    """Propagate a batch of root-ADO initial matrices in one solve."""
    rhos = np.asarray(rhos, dtype=complex).reshape(-1, 2, 2)
    batch = rhos.shape[0]
    if series is None:
        series = default_series(params.lam, params.gamma, params.temperature, n_matsubara)
    basis = build_exciton_basis(params)
    hierarchy = build_hierarchy(series, max_depth)
    tail = 0.0
    if matsubara_correction and params.lam > 0:
        from .bath import SpectralDensity, matsubara_tail_weight

        sd = SpectralDensity(lam=params.lam, gamma=params.gamma)
        tail = matsubara_tail_weight(sd, params.temperature, series.n_matsubara)
    gen = _HeomGenerator(basis, series, hierarchy, use_terminator, tail_weight=tail)

    n_flat = 4 * hierarchy.n_ados
    y0 = np.zeros((n_flat, batch), dtype=complex)
    y0[:4] = rhos.reshape(batch, 4).T
    if use_sparse or batch > 1:
        matrix = gen.assemble_sparse()
        if batch == 1:
            rhs = lambda t, y: matrix @ y
        else:
            rhs = lambda t, y: (matrix @ y.reshape(n_flat, batch)).ravel()
    else:
        rhs = gen.rhs_dense
    grid = params.time_grid()
    sol = solve_ivp(
        rhs,
        (0.0, params.t_final),
        y0.ravel() if batch > 1 else y0[:, 0],
        method="DOP853",
        t_eval=grid,
        rtol=rtol,
        atol=atol,
    )
    if not sol.success:
        raise PropagationError(f"HEOM integration failed: {sol.message}",
                               sol.t[-1] if sol.t.size else 0.0)
    if batch == 1:
        return [Trajectory(times=grid, states=sol.y[:4].T.reshape(-1, 2, 2))]
    full = sol.y.T.reshape(-1, n_flat, batch)
    return [
        Trajectory(times=grid, states=full[:, :4, b].reshape(-1, 2, 2))
        for b in range(batch)
    ]


@dataclass(frozen=True)
class ConvergenceRow:
    kind: str  # "depth" or "matsubara"
    depth: int
    n_matsubara: int
    max_abs_delta: float


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[ConvergenceRow, ...]
    converged: bool
    threshold: float

    def to_csv(self, path, metadata=None):
        lines = [f"# {k}: {v}" for k, v in (metadata or {}).items()]
        lines.append(f"# converged: {self.converged}")
        lines.append(f"# threshold: {self.threshold}")
        lines.append("kind,depth,matsubara_k,max_abs_delta")
        for row in self.rows:
            lines.append(
                f"{row.kind},{row.depth},{row.n_matsubara},{row.max_abs_delta:.17g}"
            )
        with open(path, "w") as handle:
            handle.write("\n".join(lines) + "\n")


def convergence_scan(
    params: ModelParams,
    rho0,
    depths,
    matsubara_counts,
    *,
    threshold: float = 5e-4,
    use_sparse: bool = True,
) -> ConvergenceReport:
    """Grid the (depth, K) settings and measure rho_++ trajectory shifts.

    Depth increments are compared at the largest K, K increments at the
    largest depth; converged when the final increment of each kind moves
    rho_++ by less than ``threshold`` anywhere on the horizon.
    """
    depths = sorted(depths)
    counts = sorted(matsubara_counts)
    if not depths or not counts:
        raise ValueError("depths and matsubara_counts must be non-empty")

    def run(depth, k):
        return propagate_heom(
            params, rho0, depth, n_matsubara=k, use_sparse=use_sparse
        ).population_plus()

    rows = []
    deep_k = counts[-1]
    pops = {d: run(d, deep_k) for d in depths}
    for lo, hi in zip(depths[:-1], depths[1:]):
        delta = float(np.max(np.abs(pops[hi] - pops[lo])))
        rows.append(ConvergenceRow("depth", hi, deep_k, delta))
    deep_d = depths[-1]
    pops_k = {k: (pops[deep_d] if k == deep_k else run(deep_d, k)) for k in counts}
    for lo, hi in zip(counts[:-1], counts[1:]):
        delta = float(np.max(np.abs(pops_k[hi] - pops_k[lo])))
        rows.append(ConvergenceRow("matsubara", deep_d, hi, delta))

    depth_rows = [r for r in rows if r.kind == "depth"]
    mats_rows = [r for r in rows if r.kind == "matsubara"]
    depth_ok = not depth_rows or depth_rows[-1].max_abs_delta < threshold
    mats_ok = not mats_rows or mats_rows[-1].max_abs_delta < threshold
    converged = bool(depth_ok and mats_ok)
    return ConvergenceReport(rows=tuple(rows), converged=converged, threshold=threshold)
