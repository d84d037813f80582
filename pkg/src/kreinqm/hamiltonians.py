"""
Finite-difference Hamiltonians H = T + V on parity-exact grids.

The kinetic term is a symmetric central-difference Laplacian, so it commutes
with the parity permutation exactly.  Potentials include the family
x^2 (ix)^eps, evaluated on the principal branch so that V(-x) == conj(V(x))
holds bit for bit on a mirrored grid.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, NamedTuple

import numpy as np

from .krein import (Boundary, Grid, Involution, OperatorMatrix, PhysicalConstants,
                    is_j_hermitian)

log = logging.getLogger(__name__)

__all__ = [
    "PotentialKind", "PotentialSpec", "HamiltonianSpec", "PotentialCheck",
    "VALIDATED_EPSILON_RANGE", "laplacian_weights", "build_kinetic",
    "build_momentum", "build_position", "sample_potential",
    "is_pt_symmetric_potential", "is_real_potential", "build_hamiltonian",
]

# the real-line discretization is trusted for these exponents only
VALIDATED_EPSILON_RANGE = (0.0, 2.0)


class PotentialKind(str, enum.Enum):
    ZERO = "zero"
    HARMONIC = "harmonic"
    BENDER_FAMILY = "bender_family"
    IMAGINARY_CUBIC = "monomial_imaginary_cubic"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PotentialSpec:
    """Which potential to sample.

    ``custom`` takes either a callable ``function(x) -> V`` or fixed
    ``samples`` (one per grid node).
    """

    kind: PotentialKind = PotentialKind.ZERO
    omega: float = 1.0
    epsilon: float = 0.0
    function: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)
    samples: tuple | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "kind", PotentialKind(self.kind))
        if self.epsilon < 0:
            raise ValueError(f"epsilon must be non-negative, got {self.epsilon}")
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.kind is PotentialKind.CUSTOM:
            if (self.function is None) == (self.samples is None):
                raise ValueError("custom potentials need exactly one of function or samples")
            if self.samples is not None:
                s = np.asarray(self.samples, dtype=complex)
                if not np.all(np.isfinite(s)):
                    raise ValueError("custom potential samples must be finite")
                object.__setattr__(self, "samples", tuple(s.tolist()))

    @classmethod
    def harmonic(cls, omega: float = 1.0) -> "PotentialSpec":
        return cls(PotentialKind.HARMONIC, omega=omega)

    @classmethod
    def bender(cls, epsilon: float) -> "PotentialSpec":
        return cls(PotentialKind.BENDER_FAMILY, epsilon=epsilon)

    @classmethod
    def imaginary_cubic(cls) -> "PotentialSpec":
        return cls(PotentialKind.IMAGINARY_CUBIC)

    @classmethod
    def custom(cls, function=None, samples=None, label: str = "custom") -> "PotentialSpec":
        return cls(PotentialKind.CUSTOM, function=function, samples=samples, label=label)

    @property
    def outside_validated_range(self) -> bool:
        lo, hi = VALIDATED_EPSILON_RANGE
        return self.kind is PotentialKind.BENDER_FAMILY and not lo <= self.epsilon < hi


@dataclass(frozen=True)
class HamiltonianSpec:
    grid: Grid
    constants: PhysicalConstants = PhysicalConstants()
    potential: PotentialSpec = PotentialSpec()
    stencil_order: int = 2


class PotentialCheck(NamedTuple):
    passed: bool
    residual: float
    tolerance: float


@lru_cache(maxsize=None)
def laplacian_weights(order: int) -> tuple[float, ...]:
    """Central second-derivative weights at offsets 0, 1, ..., order/2 (unit spacing)."""
    if order < 2 or order % 2:
        raise ValueError(f"stencil order must be a positive even integer, got {order}")
    p = order // 2
    offs = np.arange(-p, p + 1)
    # Taylor-moment system: sum_j w_j j^k = 2 * [k == 2]
    A = np.vander(offs, 2 * p + 1, increasing=True).T.astype(float)
    b = np.zeros(2 * p + 1)
    b[2] = 2.0
    w = np.linalg.solve(A, b)
    return tuple(float(v) for v in w[p:])


def _banded(grid: Grid, weights: tuple[float, ...], antisymmetric: bool = False) -> np.ndarray:
    n = grid.n_points
    M = np.zeros((n, n))
    rows = np.arange(n)
    for offset, w in enumerate(weights):
        if w == 0.0:
            continue
        for sign in ((1,) if offset == 0 else (1, -1)):
            coeff = -w if (antisymmetric and sign < 0) else w
            cols = rows + sign * offset
            if grid.boundary is Boundary.PERIODIC:
                M[rows, cols % n] += coeff
            else:
                keep = (cols >= 0) & (cols < n)
                M[rows[keep], cols[keep]] += coeff
    return M


def build_kinetic(grid: Grid, constants: PhysicalConstants = PhysicalConstants(),
                  order: int = 2) -> OperatorMatrix:
    """-(hbar^2 / 2m) d^2/dx^2 as a central-difference matrix.

    Dirichlet rows drop neighbours outside the grid, periodic rows wrap.
    ``order`` selects the stencil accuracy (2 gives the classic 3-point
    Laplacian).
    """
    h = grid.spacing
    lap = _banded(grid, laplacian_weights(order)) / h**2
    return OperatorMatrix(-(constants.hbar**2 / (2.0 * constants.mass)) * lap, grid)


def build_momentum(grid: Grid, constants: PhysicalConstants = PhysicalConstants()) -> OperatorMatrix:
    """-i hbar d/dx with the 2-point central difference."""
    d1 = _banded(grid, (0.0, 0.5), antisymmetric=True) / grid.spacing
    return OperatorMatrix(-1j * constants.hbar * d1, grid)


def build_position(grid: Grid) -> OperatorMatrix:
    return OperatorMatrix(np.diag(grid.nodes), grid)


_INTEGER_PHASES = (1.0 + 0.0j, 1.0j, -1.0 + 0.0j, -1.0j)


def _bender_samples(x: np.ndarray, eps: float) -> np.ndarray:
    # (ix)^eps on the principal branch: phase e^{+-i pi eps/2} by sign of x
    mag = x**2 * np.abs(x) ** eps
    if float(eps).is_integer():
        phase = _INTEGER_PHASES[int(eps) % 4]
    else:
        phase = np.exp(0.5j * np.pi * eps)
    v = np.where(x > 0, mag * phase, mag * np.conj(phase))
    v[x == 0] = 0.0
    return v.astype(complex)


def sample_potential(spec: PotentialSpec, grid: Grid,
                     constants: PhysicalConstants = PhysicalConstants()) -> np.ndarray:
    """Potential values at the grid nodes as a complex array."""
    x = grid.nodes
    kind = spec.kind
    if kind is PotentialKind.ZERO:
        v = np.zeros(x.size, dtype=complex)
    elif kind is PotentialKind.HARMONIC:
        v = (0.5 * constants.mass * spec.omega**2 * x**2).astype(complex)
    elif kind is PotentialKind.BENDER_FAMILY:
        if spec.outside_validated_range:
            log.warning("epsilon=%g is outside the validated range [0, 2)", spec.epsilon)
        v = _bender_samples(x, spec.epsilon)
    elif kind is PotentialKind.IMAGINARY_CUBIC:
        v = _bender_samples(x, 1.0)
    else:
        if spec.samples is not None:
            v = np.asarray(spec.samples, dtype=complex)
            if v.shape != x.shape:
                raise ValueError(f"custom potential has {v.size} samples, grid has {x.size} nodes")
        else:
            v = np.asarray(spec.function(x), dtype=complex) * np.ones(x.size)
        if not np.all(np.isfinite(v)):
            raise ValueError("custom potential produced non-finite values")
    v.setflags(write=False)
    return v


def is_pt_symmetric_potential(samples: np.ndarray, grid: Grid,
                              tol: float | None = None) -> PotentialCheck:
    """Hermitian-function test max_k |V(x_k) - conj(V(-x_k))| <= tol.

    ``tol`` defaults to 1e-14 * max|V| (exact zero for bender-family samples).
    """
    v = np.asarray(samples, dtype=complex)
    if v.shape != (grid.n_points,):
        raise ValueError("samples do not match the grid")
    scale = float(np.max(np.abs(v), initial=0.0))
    tol = 1e-14 * max(scale, np.finfo(float).tiny) if tol is None else tol
    res = float(np.max(np.abs(v - np.conj(v[grid.parity_indices])), initial=0.0))
    return PotentialCheck(res <= tol, res, tol)


def is_real_potential(samples: np.ndarray, tol: float | None = None) -> PotentialCheck:
    v = np.asarray(samples, dtype=complex)
    scale = float(np.max(np.abs(v), initial=0.0))
    tol = 1e-14 * max(scale, np.finfo(float).tiny) if tol is None else tol
    res = float(np.max(np.abs(v.imag), initial=0.0))
    return PotentialCheck(res <= tol, res, tol)


def build_hamiltonian(spec: HamiltonianSpec) -> OperatorMatrix:
    """T + diag(V) for the given spec."""
    T = build_kinetic(spec.grid, spec.constants, spec.stencil_order)
    v = sample_potential(spec.potential, spec.grid, spec.constants)
    H = OperatorMatrix(T.entries + np.diag(v), spec.grid)
    if log.isEnabledFor(logging.DEBUG):
        J = Involution.parity(spec.grid)
        log.debug("built H (n=%d): PT residual %.3e, J-Hermitian residual %.3e",
                  spec.grid.n_points, is_pt_symmetric_potential(v, spec.grid).residual,
                  is_j_hermitian(H, J).residual)
    return H
