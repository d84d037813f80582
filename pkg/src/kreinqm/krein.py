"""
Indefinite (Krein) inner products on symmetric 1-D grids.

The state space is C^N sampled on a grid whose nodes are mirror images of each
other under x -> -x.  The parity permutation J (J psi(x) = psi(-x)) turns the
ordinary Dirac bracket into the indefinite product

    <phi, psi> = <phi| J |psi> = h * sum(conj(phi) * J psi)

under which even states have positive and odd states negative squared norm.
Adjoints, Hermiticity tests and the even/odd split are all taken relative to
that product.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = [
    "DimensionError", "Boundary", "Grid", "PhysicalConstants", "StateVector",
    "OperatorMatrix", "InvolutionKind", "Involution", "DecompositionResult",
    "HermiticityCheck", "AxiomResiduals", "dirac_inner", "krein_inner",
    "krein_inner_swapped", "j_inner", "krein_adjoint", "default_tolerance",
    "is_j_hermitian", "is_krein_skew_hermitian", "adjoint_axiom_residuals",
    "j_product_adjoint_identity", "dirac_j_product_identity", "even_odd_decompose",
    "gram_matrix",
]


class DimensionError(ValueError):
    """Raised when operands live on different grids or have mismatched sizes."""


class Boundary(str, enum.Enum):
    DIRICHLET = "dirichlet"
    PERIODIC = "periodic"


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Grid:
    """Uniform grid on [-L, L] whose node set is closed under x -> -x.

    Dirichlet grids have an odd number of nodes including both walls, so
    ``x[n-1-k] == -x[k]`` bit for bit.  Periodic grids have an even number of
    nodes on [-L, L) and the mirror of node k is node ``(n - k) % n``.
    """

    n_points: int
    half_width: float
    boundary: Boundary = Boundary.DIRICHLET
    nodes: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        boundary = Boundary(self.boundary)
        object.__setattr__(self, "boundary", boundary)
        n, L = int(self.n_points), float(self.half_width)
        object.__setattr__(self, "n_points", n)
        object.__setattr__(self, "half_width", L)
        if not (L > 0 and np.isfinite(L)):
            raise ValueError(f"half_width must be positive and finite, got {L}")
        if boundary is Boundary.DIRICHLET:
            if n < 3 or n % 2 == 0:
                raise ValueError(f"dirichlet grids need an odd n_points >= 3, got {n}")
        elif n < 2 or n % 2:
            raise ValueError(f"periodic grids need an even n_points >= 2, got {n}")

        # build one half and mirror it so that parity is exact in floating point
        h = self.spacing
        x = np.empty(n)
        if boundary is Boundary.DIRICHLET:
            mid = n // 2
            k = np.arange(mid)
            x[:mid] = -L + k * h
            x[mid] = 0.0
            x[mid + 1:] = -x[:mid][::-1]
        else:
            mid = n // 2
            x[0] = -L
            k = np.arange(1, mid)
            x[1:mid] = -L + k * h
            x[mid] = 0.0
            x[mid + 1:] = -x[1:mid][::-1]
        object.__setattr__(self, "nodes", _frozen(x))

    @property
    def spacing(self) -> float:
        if self.boundary is Boundary.DIRICHLET:
            return 2.0 * self.half_width / (self.n_points - 1)
        return 2.0 * self.half_width / self.n_points

    @property
    def parity_indices(self) -> np.ndarray:
        """Index map k -> mirror(k) of the parity permutation."""
        k = np.arange(self.n_points)
        if self.boundary is Boundary.DIRICHLET:
            return self.n_points - 1 - k
        return (self.n_points - k) % self.n_points

    @classmethod
    def index_grid(cls, n: int) -> "Grid":
        """Grid with unit spacing, for testing bare n x n matrices."""
        if n % 2:
            return cls(n, (n - 1) / 2.0, Boundary.DIRICHLET)
        return cls(n, n / 2.0, Boundary.PERIODIC)

    def same_as(self, other: "Grid") -> bool:
        return (self.n_points == other.n_points and self.half_width == other.half_width
                and self.boundary is other.boundary)


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.mass > 0):
            raise ValueError("hbar and mass must be positive")


@dataclass(frozen=True, eq=False)
class StateVector:
    grid: Grid
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.array(self.amplitudes, dtype=complex)
        if amp.shape != (self.grid.n_points,):
            raise DimensionError(
                f"state has shape {amp.shape}, grid has {self.grid.n_points} nodes")
        if not np.all(np.isfinite(amp)):
            raise ValueError("state amplitudes must be finite")
        object.__setattr__(self, "amplitudes", _frozen(amp))

    @classmethod
    def from_function(cls, grid: Grid, func) -> "StateVector":
        return cls(grid, func(grid.nodes))

    def normalized(self) -> "StateVector":
        norm = np.sqrt(dirac_inner(self, self).real)
        if norm == 0:
            raise ValueError("cannot normalize the zero state")
        return StateVector(self.grid, self.amplitudes / norm)

    def __add__(self, other: "StateVector") -> "StateVector":
        _check_grids(self.grid, other.grid)
        return StateVector(self.grid, self.amplitudes + other.amplitudes)

    def __sub__(self, other: "StateVector") -> "StateVector":
        _check_grids(self.grid, other.grid)
        return StateVector(self.grid, self.amplitudes - other.amplitudes)

    def __mul__(self, scalar) -> "StateVector":
        return StateVector(self.grid, scalar * self.amplitudes)

    __rmul__ = __mul__


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """Dense complex matrix acting on states of ``grid``."""

    entries: np.ndarray
    grid: Grid

    def __post_init__(self):
        a = np.array(self.entries, dtype=complex)
        n = self.grid.n_points
        if a.shape != (n, n):
            raise DimensionError(f"operator has shape {a.shape}, expected {(n, n)}")
        if not np.all(np.isfinite(a)):
            raise ValueError("operator entries must be finite")
        object.__setattr__(self, "entries", _frozen(a))

    @classmethod
    def from_array(cls, entries, grid: Grid | None = None) -> "OperatorMatrix":
        entries = np.asarray(entries)
        return cls(entries, grid if grid is not None else Grid.index_grid(entries.shape[0]))

    @classmethod
    def identity(cls, grid: Grid) -> "OperatorMatrix":
        return cls(np.eye(grid.n_points), grid)

    @property
    def dim(self) -> int:
        return self.grid.n_points

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.entries))) if self.entries.size else 0.0

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, self.grid)

    def apply(self, psi: StateVector) -> StateVector:
        _check_grids(self.grid, psi.grid)
        return StateVector(self.grid, self.entries @ psi.amplitudes)

    def __matmul__(self, other):
        if isinstance(other, StateVector):
            return self.apply(other)
        _check_grids(self.grid, other.grid)
        return OperatorMatrix(self.entries @ other.entries, self.grid)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_grids(self.grid, other.grid)
        return OperatorMatrix(self.entries + other.entries, self.grid)

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_grids(self.grid, other.grid)
        return OperatorMatrix(self.entries - other.entries, self.grid)

    def __mul__(self, scalar) -> "OperatorMatrix":
        return OperatorMatrix(scalar * self.entries, self.grid)

    __rmul__ = __mul__


class InvolutionKind(str, enum.Enum):
    PARITY = "parity"
    BLOCK_SIGNATURE = "block_signature"
    IDENTITY = "identity"


@dataclass(frozen=True, eq=False)
class Involution:
    """Signed permutation J with J @ J == I.

    Stored as ``(perm, signs)`` so that ``(J psi)[k] = signs[k] * psi[perm[k]]``;
    applying J never touches floating point beyond sign flips.
    """

    perm: np.ndarray
    signs: np.ndarray
    kind: InvolutionKind

    def __post_init__(self):
        perm = np.array(self.perm, dtype=np.intp)
        signs = np.array(self.signs, dtype=np.int8)
        n = perm.size
        if perm.shape != (n,) or signs.shape != (n,):
            raise DimensionError("perm and signs must be 1-D of equal length")
        if sorted(perm.tolist()) != list(range(n)):
            raise ValueError("perm is not a permutation")
        if not np.all(np.abs(signs) == 1):
            raise ValueError("signs must be +-1")
        # J^2 = I  <=>  perm is an involution and signs agree on each orbit
        if not (np.array_equal(perm[perm], np.arange(n))
                and np.array_equal(signs * signs[perm], np.ones(n, dtype=np.int8))):
            raise ValueError("J @ J != I; not an involution")
        object.__setattr__(self, "perm", _frozen(perm))
        object.__setattr__(self, "signs", _frozen(signs))
        object.__setattr__(self, "kind", InvolutionKind(self.kind))

    @classmethod
    def parity(cls, grid: Grid) -> "Involution":
        return cls(grid.parity_indices, np.ones(grid.n_points), InvolutionKind.PARITY)

    @classmethod
    def block_signature(cls, n_plus: int, n_minus: int) -> "Involution":
        n = n_plus + n_minus
        signs = np.r_[np.ones(n_plus), -np.ones(n_minus)]
        return cls(np.arange(n), signs, InvolutionKind.BLOCK_SIGNATURE)

    @classmethod
    def identity(cls, n: int) -> "Involution":
        return cls(np.arange(n), np.ones(n), InvolutionKind.IDENTITY)

    @property
    def dim(self) -> int:
        return self.perm.size

    @property
    def matrix(self) -> np.ndarray:
        m = np.zeros((self.dim, self.dim), dtype=np.int64)
        m[np.arange(self.dim), self.perm] = self.signs
        return m

    def apply(self, values: np.ndarray) -> np.ndarray:
        """J applied to a vector (or to the rows of a matrix)."""
        return self.signs.reshape((-1,) + (1,) * (values.ndim - 1)) * values[self.perm]

    def conjugate(self, entries: np.ndarray) -> np.ndarray:
        """J @ entries @ J computed by index shuffling only."""
        s = self.signs.astype(float)
        return s[:, None] * entries[np.ix_(self.perm, self.perm)] * s[None, :]

    def left(self, entries: np.ndarray) -> np.ndarray:
        """J @ entries."""
        return self.signs.astype(float)[:, None] * entries[self.perm]

    def __call__(self, psi: StateVector) -> StateVector:
        _check_dim(self, psi.grid.n_points)
        return StateVector(psi.grid, self.apply(psi.amplitudes))


@dataclass(frozen=True)
class DecompositionResult:
    even_part: StateVector
    odd_part: StateVector


class HermiticityCheck(NamedTuple):
    passed: bool
    residual: float
    tolerance: float


class AxiomResiduals(NamedTuple):
    additivity: float
    conjugate_homogeneity: float
    product_reversal: float
    involution: float
    inverse: float | None
    condition_number: float
    singular: bool

    def max(self) -> float:
        vals = [self.additivity, self.conjugate_homogeneity, self.product_reversal,
                self.involution]
        if self.inverse is not None:
            vals.append(self.inverse)
        return max(vals)


def _check_grids(a: Grid, b: Grid) -> None:
    if a is not b and not a.same_as(b):
        raise DimensionError("operands live on different grids")


def _check_dim(J: Involution, n: int) -> None:
    if J.dim != n:
        raise DimensionError(f"involution has dimension {J.dim}, operand has {n}")


def dirac_inner(phi: StateVector, psi: StateVector) -> complex:
    """h * sum(conj(phi) * psi); every node carries the same weight."""
    _check_grids(phi.grid, psi.grid)
    return complex(phi.grid.spacing * np.vdot(phi.amplitudes, psi.amplitudes))


def krein_inner(phi: StateVector, psi: StateVector, J: Involution) -> complex:
    """<phi, psi> = <phi|J|psi>, indefinite and conjugate-linear in ``phi``."""
    _check_grids(phi.grid, psi.grid)
    _check_dim(J, psi.grid.n_points)
    return complex(phi.grid.spacing * np.vdot(phi.amplitudes, J.apply(psi.amplitudes)))


def krein_inner_swapped(phi: StateVector, psi: StateVector, J: Involution) -> complex:
    """Same product written as <J phi|psi> (J moved onto the bra)."""
    _check_grids(phi.grid, psi.grid)
    _check_dim(J, psi.grid.n_points)
    return complex(phi.grid.spacing * np.vdot(J.apply(phi.amplitudes), psi.amplitudes))


def j_inner(phi: StateVector, psi: StateVector, J: Involution) -> complex:
    """Positive-definite product <phi, J psi>; equal to the Dirac bracket."""
    return krein_inner(phi, J(psi), J)


def krein_adjoint(A: OperatorMatrix, J: Involution) -> OperatorMatrix:
    """A* = J A^dagger J, the adjoint with respect to :func:`krein_inner`."""
    _check_dim(J, A.dim)
    return OperatorMatrix(J.conjugate(A.entries.conj().T), A.grid)


def default_tolerance(A: OperatorMatrix) -> float:
    return 1e-10 * max(A.scale, np.finfo(float).tiny)


def is_j_hermitian(A: OperatorMatrix, J: Involution, tol: float | None = None) -> HermiticityCheck:
    """Max-norm of A - A*; ``tol`` defaults to 1e-10 * max|A_ij|."""
    tol = default_tolerance(A) if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    res = float(np.max(np.abs(A.entries - krein_adjoint(A, J).entries), initial=0.0))
    return HermiticityCheck(res <= tol, res, tol)


def is_krein_skew_hermitian(A: OperatorMatrix, J: Involution,
                            tol: float | None = None) -> HermiticityCheck:
    tol = default_tolerance(A) if tol is None else tol
    if tol <= 0:
        raise ValueError("tol must be positive")
    res = float(np.max(np.abs(A.entries + krein_adjoint(A, J).entries), initial=0.0))
    return HermiticityCheck(res <= tol, res, tol)


def _rel(x: np.ndarray, y: np.ndarray) -> float:
    # residuals are relative to the larger operand, floored at 1
    scale = max(1.0, float(np.max(np.abs(x))), float(np.max(np.abs(y))))
    return float(np.max(np.abs(x - y))) / scale


def adjoint_axiom_residuals(A: OperatorMatrix, B: OperatorMatrix, lam: complex,
                            J: Involution, singular_cond: float = 1e12) -> AxiomResiduals:
    """Residuals of the five adjoint rules, each relative to max(1, max|entry|).

    The inverse rule is skipped (``inverse=None``, ``singular=True``) when the
    condition number of ``A`` exceeds ``singular_cond``.
    """
    _check_grids(A.grid, B.grid)

    def adj(M):
        return krein_adjoint(M, J).entries

    a = A.entries
    As, Bs = adj(A), adj(B)
    r1 = _rel(adj(A + B), As + Bs)
    r2 = _rel(adj(lam * A), np.conj(lam) * As)
    r3 = _rel(adj(A @ B), Bs @ As)
    r4 = _rel(adj(OperatorMatrix(As, A.grid)), a)
    with np.errstate(all="ignore"):
        cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > singular_cond:
        return AxiomResiduals(r1, r2, r3, r4, None, cond, True)
    inv_a = OperatorMatrix(np.linalg.inv(a), A.grid)
    r5 = _rel(adj(inv_a), np.linalg.inv(As))
    return AxiomResiduals(r1, r2, r3, r4, r5, cond, False)


def j_product_adjoint_identity(A: OperatorMatrix, J: Involution) -> float:
    """Max-norm residual of (JA)* - J A*, both adjoints in the Krein product.

    Since (JA)* = A* J, this is zero exactly when A* commutes with J (for
    example T, or any real even potential) and generally nonzero otherwise.
    """
    _check_dim(J, A.dim)
    JA = OperatorMatrix(J.left(A.entries), A.grid)
    lhs = krein_adjoint(JA, J).entries
    rhs = J.left(krein_adjoint(A, J).entries)
    return float(np.max(np.abs(lhs - rhs)))


def dirac_j_product_identity(A: OperatorMatrix, J: Involution) -> float:
    """Max-norm residual of (JA)^dagger - J A*.

    With the Krein adjoint on both sides, (JA)* = A* J, which equals J A*
    only when A* commutes with J.  Taking the left-hand adjoint in the
    positive-definite J-product (the Dirac adjoint) gives an identity that
    holds for every A.
    """
    _check_dim(J, A.dim)
    lhs = J.left(A.entries).conj().T
    rhs = J.left(krein_adjoint(A, J).entries)
    return float(np.max(np.abs(lhs - rhs)))


def even_odd_decompose(psi: StateVector, J: Involution) -> DecompositionResult:
    """Split ``psi`` into (psi + J psi)/2 and (psi - J psi)/2."""
    if J.kind is not InvolutionKind.PARITY:
        raise ValueError("even/odd decomposition needs the parity involution")
    _check_dim(J, psi.grid.n_points)
    a = psi.amplitudes
    Ja = J.apply(a)
    return DecompositionResult(StateVector(psi.grid, 0.5 * (a + Ja)),
                               StateVector(psi.grid, 0.5 * (a - Ja)))


def gram_matrix(states: list[StateVector], J: Involution) -> np.ndarray:
    """Matrix of krein_inner(states[i], states[j])."""
    if not states:
        return np.zeros((0, 0), dtype=complex)
    grid = states[0].grid
    V = np.column_stack([s.amplitudes for s in states])
    return grid.spacing * V.conj().T @ J.apply(V)
