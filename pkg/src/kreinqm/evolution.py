"""
Exact propagation psi(t) = exp(-i H t / hbar) psi(0) and the quantities that
are (or are not) conserved along the way.

Two norms are tracked per step: the indefinite Krein norm <psi, J psi> of the
parity-weighted product, and the ordinary Dirac norm.  The first is constant
whenever H is J-Hermitian, the second only when H is also real.  The
continuity residual dw/dt + dj/dx is evaluated for the parity density
w(x, t) = conj(psi(x, t)) psi(-x, t) by central differences.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .krein import (Boundary, DimensionError, Grid, HermiticityCheck, Involution,
                    OperatorMatrix, PhysicalConstants, StateVector, krein_adjoint)

log = logging.getLogger(__name__)

__all__ = [
    "Propagator", "EvolutionTrace", "ContinuityTrace", "MAX_EIGVEC_CONDITION",
    "propagator", "check_krein_unitarity", "check_hilbert_unitarity",
    "krein_unitarity_rate", "evolve", "continuity_residual", "continuity_source",
    "gaussian_state",
]

MAX_EIGVEC_CONDITION = 1e8


@dataclass(frozen=True, eq=False)
class Propagator:
    matrix: OperatorMatrix
    hamiltonian: OperatorMatrix
    time: float
    method: str

    def __matmul__(self, other):
        if isinstance(other, Propagator):
            return self.matrix @ other.matrix
        return self.matrix @ other


@dataclass(frozen=True, eq=False)
class EvolutionTrace:
    times: np.ndarray
    krein_norms: np.ndarray
    dirac_norms: np.ndarray
    snapshots: np.ndarray | None = None

    def __post_init__(self):
        n = self.times.size
        if self.krein_norms.size != n or self.dirac_norms.size != n:
            raise ValueError("trace arrays differ in length")
        if self.snapshots is not None and self.snapshots.shape[0] != n:
            raise ValueError("snapshot count differs from number of times")

    @staticmethod
    def _drift(values: np.ndarray) -> tuple[float, float]:
        absolute = float(np.max(np.abs(values - values[0])))
        ref = abs(values[0])
        return absolute, (absolute / ref if ref > 0 else float("inf") if absolute else 0.0)

    @property
    def krein_drift(self) -> float:
        return self._drift(self.krein_norms)[0]

    @property
    def dirac_drift(self) -> float:
        return self._drift(self.dirac_norms)[0]

    def drift_summary(self) -> dict[str, float]:
        """Absolute and relative drifts, plus the Krein drift measured against
        the running Dirac norm (the scale of its floating-point error)."""
        ka, kr = self._drift(self.krein_norms)
        da, dr = self._drift(self.dirac_norms)
        scaled = float(np.max(np.abs(self.krein_norms - self.krein_norms[0]) / self.dirac_norms))
        return {"krein_drift_abs": ka, "krein_drift_rel": kr,
                "dirac_drift_abs": da, "dirac_drift_rel": dr,
                "krein_drift_per_dirac": scaled}


@dataclass(frozen=True, eq=False)
class ContinuityTrace:
    """Density, current and residual on the nodes where all differences exist.

    ``w`` covers every snapshot and node; ``j`` every snapshot on
    ``current_nodes``; ``residual`` and ``source`` the time levels
    ``residual_times`` (indices into the snapshots) on ``residual_nodes``.
    """

    w: np.ndarray
    j: np.ndarray
    residual: np.ndarray
    source: np.ndarray
    current_nodes: np.ndarray
    residual_nodes: np.ndarray
    residual_times: np.ndarray
    max_residual: float

    def max_residual_per_step(self, n_steps: int) -> np.ndarray:
        """Max |residual| per snapshot, NaN where no central time difference exists."""
        out = np.full(n_steps, np.nan)
        if self.residual.size:
            out[self.residual_times] = np.max(np.abs(self.residual), axis=1)
        return out


def propagator(H: OperatorMatrix, t: float,
               constants: PhysicalConstants = PhysicalConstants()) -> Propagator:
    """exp(-i H t / hbar).

    Uses the eigendecomposition when its eigenvector matrix has condition
    number below ``MAX_EIGVEC_CONDITION`` and scaling-and-squaring otherwise.
    """
    if not np.isfinite(t):
        raise ValueError("t must be finite")
    grid = H.grid
    if t == 0:
        return Propagator(OperatorMatrix.identity(grid), H, 0.0, "identity")
    a = H.entries
    z = -1j * t / constants.hbar
    if np.array_equal(a, a.conj().T):
        w, V = scipy.linalg.eigh(a)
        U = (V * np.exp(z * w)) @ V.conj().T
        return Propagator(OperatorMatrix(U, grid), H, float(t), "eigh")
    w, V = scipy.linalg.eig(a)
    cond = np.linalg.cond(V)
    if np.isfinite(cond) and cond < MAX_EIGVEC_CONDITION:
        U = scipy.linalg.solve(V.T, (V * np.exp(z * w)).T).T
        return Propagator(OperatorMatrix(U, grid), H, float(t), "eig")
    log.info("eigenvector condition %.2e too large, falling back to expm", cond)
    return Propagator(OperatorMatrix(scipy.linalg.expm(z * a), grid), H, float(t), "expm")


def check_krein_unitarity(U: Propagator, J: Involution, tol: float = 1e-8) -> HermiticityCheck:
    """max |U* U - I| with U* the Krein adjoint."""
    M = U.matrix
    prod = krein_adjoint(M, J).entries @ M.entries
    res = float(np.max(np.abs(prod - np.eye(M.dim))))
    return HermiticityCheck(res <= tol, res, tol)


def check_hilbert_unitarity(U: Propagator, tol: float = 1e-8) -> HermiticityCheck:
    """max |U^dagger U - I| under the Dirac product."""
    M = U.matrix.entries
    res = float(np.max(np.abs(M.conj().T @ M - np.eye(M.shape[0]))))
    return HermiticityCheck(res <= tol, res, tol)


def krein_unitarity_rate(H: OperatorMatrix, J: Involution,
                         constants: PhysicalConstants = PhysicalConstants()) -> float:
    """max |(i/hbar)(H* - H)|, the t-derivative of U*(t) U(t) at t = 0."""
    return float(np.max(np.abs((1j / constants.hbar) * (krein_adjoint(H, J).entries - H.entries))))


def gaussian_state(grid: Grid, center: float = 0.0, width: float = 1.0,
                   momentum: float = 0.0) -> StateVector:
    """Dirac-normalized exp(-(x - c)^2 / (2 w^2)) exp(i k x)."""
    if width <= 0:
        raise ValueError("width must be positive")
    x = grid.nodes
    amp = np.exp(-((x - center) ** 2) / (2.0 * width**2) + 1j * momentum * x)
    return StateVector(grid, amp).normalized()


def evolve(psi0: StateVector, H: OperatorMatrix, t_final: float, n_steps: int, J: Involution,
           constants: PhysicalConstants = PhysicalConstants(),
           keep_snapshots: bool = True) -> EvolutionTrace:
    """Step ``psi0`` with the exact one-step propagator U(t_final / n_steps).

    A zero ``t_final`` yields a single-row trace.  Raises ``FloatingPointError``
    if the state overflows, which happens when H amplifies some component
    faster than double precision can follow.
    """
    if psi0.grid.n_points != H.dim:
        raise DimensionError("initial state and Hamiltonian sizes differ")
    if int(n_steps) < 1:
        raise ValueError("n_steps must be >= 1")
    if t_final < 0:
        raise ValueError("t_final must be non-negative")
    n_steps = 1 if t_final == 0 else int(n_steps)
    n_rows = 1 if t_final == 0 else n_steps + 1
    dt = t_final / n_steps
    U = propagator(H, dt, constants).matrix.entries
    h = psi0.grid.spacing

    psi = psi0.amplitudes.copy()
    snaps = np.empty((n_rows, psi.size), dtype=complex) if keep_snapshots else None
    krein = np.empty(n_rows)
    dirac = np.empty(n_rows)
    for k in range(n_rows):
        if k:
            with np.errstate(over="ignore", invalid="ignore"):
                psi = U @ psi
            if not np.all(np.isfinite(psi)):
                raise FloatingPointError(
                    f"state overflowed at t = {k * dt:g}; the propagator amplifies "
                    "some component beyond double precision range")
        krein[k] = (h * np.vdot(psi, J.apply(psi))).real
        dirac[k] = h * np.vdot(psi, psi).real
        if snaps is not None:
            snaps[k] = psi
    times = dt * np.arange(n_rows)
    return EvolutionTrace(times, krein, dirac, snaps)


def _snapshot_array(snapshots, grid: Grid) -> np.ndarray:
    if isinstance(snapshots, np.ndarray):
        P = np.asarray(snapshots, dtype=complex)
    else:
        P = np.array([s.amplitudes if isinstance(s, StateVector) else s for s in snapshots],
                     dtype=complex)
    if P.ndim != 2 or P.shape[1] != grid.n_points:
        raise DimensionError("snapshots must be an (n_times, n_points) array")
    if P.shape[0] < 3:
        raise ValueError("continuity residual needs at least 3 consecutive snapshots")
    return P


def _ddx(f: np.ndarray, h: float, periodic: bool) -> np.ndarray:
    if periodic:
        return (np.roll(f, -1, axis=-1) - np.roll(f, 1, axis=-1)) / (2.0 * h)
    return (f[..., 2:] - f[..., :-2]) / (2.0 * h)


def continuity_residual(snapshots, grid: Grid, dt: float, potential: np.ndarray,
                        constants: PhysicalConstants = PhysicalConstants()) -> ContinuityTrace:
    """dw/dt + dj/dx with w = conj(psi) J psi and
    j = (i hbar / 2m) (d conj(psi)/dx * J psi - d(J psi)/dx * conj(psi)).

    For a PT-symmetric potential the residual is pure discretization error,
    O(h^2 + dt^2); otherwise it tends to the source term, which is returned
    alongside it.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    P = _snapshot_array(snapshots, grid)
    if np.asarray(potential).shape != (grid.n_points,):
        raise DimensionError("potential samples do not match the grid")
    h = grid.spacing
    periodic = grid.boundary is Boundary.PERIODIC
    n = grid.n_points
    Q = P[:, grid.parity_indices]  # psi(-x, t)
    coef = 1j * constants.hbar / (2.0 * constants.mass)

    w = P.conj() * Q
    if periodic:
        cur_nodes = np.arange(n)
        res_nodes = np.arange(n)
        j = coef * (_ddx(P.conj(), h, True) * Q - _ddx(Q, h, True) * P.conj())
        djdx = _ddx(j, h, True)
    else:
        if n < 5:
            raise ValueError("need at least 5 nodes for the interior current divergence")
        cur_nodes = np.arange(1, n - 1)
        res_nodes = np.arange(2, n - 2)
        j = coef * (_ddx(P.conj(), h, False) * Q[:, 1:-1] - _ddx(Q, h, False) * P.conj()[:, 1:-1])
        djdx = _ddx(j, h, False)
    dwdt = (w[2:] - w[:-2]) / (2.0 * dt)
    residual = dwdt[:, res_nodes] + djdx[1:-1]
    times = np.arange(1, P.shape[0] - 1)
    source = continuity_source(P, grid, potential, constants)
    return ContinuityTrace(w, j, residual, source, cur_nodes, res_nodes, times,
                           float(np.max(np.abs(residual))))


def continuity_source(snapshots, grid: Grid, potential: np.ndarray,
                      constants: PhysicalConstants = PhysicalConstants()) -> np.ndarray:
    """(i/hbar)(conj(V(x)) - V(-x)) conj(psi(x)) psi(-x) on the residual's layout."""
    P = _snapshot_array(snapshots, grid)
    v = np.asarray(potential, dtype=complex)
    par = grid.parity_indices
    s = (1j / constants.hbar) * (v.conj() - v[par]) * P.conj() * P[:, par]
    if grid.boundary is Boundary.PERIODIC:
        return s[1:-1]
    return s[1:-1, 2:-2]
