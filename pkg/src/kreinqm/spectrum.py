"""
Eigendecomposition of (possibly non-Hermitian) Hamiltonians and classification
of eigenpairs by the sign of their Krein norm.

For a J-Hermitian matrix, an eigenvector whose eigenvalue has a nonzero
imaginary part must have vanishing Krein norm, and non-real eigenvalues come
in conjugate pairs.  :func:`classify_spectrum` records both facts per pair;
:func:`verify_reality_theorem` turns them into a verdict.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .krein import (Involution, OperatorMatrix, StateVector, dirac_inner, is_j_hermitian,
                    krein_inner)

log = logging.getLogger(__name__)

__all__ = [
    "PreconditionError", "EigenClass", "RawSpectrum", "EigenPair", "SpectrumReport",
    "eigendecompose", "classify_spectrum", "verify_reality_theorem",
    "DEFAULT_NULL_TOL", "DEFAULT_REALITY_TOL", "RESIDUAL_TOL", "DEGENERACY_TOL",
]

DEFAULT_NULL_TOL = 1e-8
DEFAULT_REALITY_TOL = 1e-6
RESIDUAL_TOL = 1e-10
DEGENERACY_TOL = 1e-9


class PreconditionError(ValueError):
    """Raised when an operation's input contract does not hold."""


class EigenClass(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NULL = "null"
    UNRESOLVED = "unresolved"


@dataclass(frozen=True, eq=False)
class RawSpectrum:
    """Unclassified eigenpairs; column k of ``vectors`` belongs to ``values[k]``.

    ``residuals`` are relative (|Hv - lam v| / (|lam| |v|)), ``residual_norms``
    absolute Dirac norms of Hv - lam v for the normalized v, and
    ``conditions`` the eigenvalue condition numbers |x||y| / |y^H x|.
    """

    hamiltonian: OperatorMatrix
    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    residual_norms: np.ndarray
    conditions: np.ndarray
    converged: np.ndarray

    def __len__(self):
        return self.values.size


@dataclass(frozen=True, eq=False)
class EigenPair:
    eigenvalue: complex
    eigenvector: StateVector
    krein_norm: float
    krein_norm_imag: float
    classification: EigenClass
    residual: float
    condition: float
    imag_uncertainty: float
    index: int


@dataclass(eq=False)
class SpectrumReport:
    pairs: list[EigenPair]
    null_tol: float
    reality_tol: float
    j_hermitian: bool
    j_hermitian_residual: float
    conjugate_pairs: list[tuple[int, int, float]] = field(default_factory=list)
    unpaired: list[int] = field(default_factory=list)
    degenerate_groups: list[list[int]] = field(default_factory=list)
    theorem_violations: list[str] = field(default_factory=list)

    def count(self, cls: EigenClass) -> int:
        return sum(p.classification is cls for p in self.pairs)

    @property
    def counts(self) -> dict[str, int]:
        return {c.value: self.count(c) for c in EigenClass}

    @property
    def eigenvalues(self) -> np.ndarray:
        return np.array([p.eigenvalue for p in self.pairs])

    @property
    def max_imag_non_null(self) -> float:
        """Largest |Im lam| over pairs with a definite (positive or negative) Krein norm."""
        ims = [abs(p.eigenvalue.imag) for p in self.pairs
               if p.classification in (EigenClass.POSITIVE, EigenClass.NEGATIVE)]
        return max(ims, default=0.0)

    def lowest(self, k: int, by: str = "real") -> list[EigenPair]:
        """First ``k`` pairs ordered by real part (``by='real'``) or modulus."""
        if by == "real":
            return self.pairs[:k]
        if by == "abs":
            return sorted(self.pairs, key=lambda p: (abs(p.eigenvalue), p.index))[:k]
        raise ValueError(f"unknown ordering {by!r}")


def _fix_phase(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    if v[k] == 0:
        return v
    return v * (abs(v[k]) / v[k])


def eigendecompose(H: OperatorMatrix) -> RawSpectrum:
    """All eigenpairs of ``H`` with per-pair residuals and condition numbers.

    Exactly Hermitian input goes through the symmetric solver; everything else
    through the general complex one.  Eigenvectors come back Dirac-normalized
    on the grid with their largest component real and positive.  Pairs whose
    relative residual exceeds ``RESIDUAL_TOL`` are flagged, never dropped.
    """
    a = H.entries
    if np.array_equal(a, a.conj().T):
        w, V = scipy.linalg.eigh(a)
        w = w.astype(complex)
        cond = np.ones(w.size)
    else:
        w, Vl, V = scipy.linalg.eig(a, left=True, right=True)
        overlap = np.abs(np.sum(Vl.conj() * V, axis=0))
        scale = np.linalg.norm(Vl, axis=0) * np.linalg.norm(V, axis=0)
        with np.errstate(divide="ignore"):
            cond = np.where(overlap > 0, scale / overlap, np.inf)
    h = H.grid.spacing
    V = V / np.sqrt(h * np.sum(np.abs(V) ** 2, axis=0))
    V = np.column_stack([_fix_phase(V[:, k]) for k in range(V.shape[1])])

    hnorm = float(np.linalg.norm(a, 1))
    R = a @ V - V * w
    rnorm = np.sqrt(h * np.sum(np.abs(R) ** 2, axis=0))
    # |Hv - lam v| / (|lam| |v|), with ||H||_1 standing in for |lam| near zero
    floor = np.finfo(float).eps * hnorm
    denom = np.where(np.abs(w) > floor, np.abs(w), hnorm if hnorm > 0 else 1.0)
    rel = rnorm / denom
    converged = rel <= RESIDUAL_TOL
    if not np.all(converged):
        log.warning("%d eigenpairs exceed residual %.0e", int(np.sum(~converged)), RESIDUAL_TOL)
    for arr in (w, V, rel, rnorm, cond, converged):
        arr.setflags(write=False)
    return RawSpectrum(H, w, V, rel, rnorm, cond, converged)


def _pair_conjugates(values: np.ndarray, idx: list[int], base_tol: np.ndarray,
                     uncertainty: np.ndarray) -> tuple[list, list]:
    # greedy nearest match of lam_i with conj(lam_j): candidate pairs are taken
    # in order of distance (ties by index), each within base_tol plus both
    # eigenvalues' uncertainties.  Closest-first keeps a loose, uncertain
    # eigenvalue from claiming a partner that has a much better match.
    idx = np.asarray(idx, dtype=int)
    if idx.size == 0:
        return [], []
    z = values[idx]
    d = np.abs(z[None, :] - np.conj(z)[:, None])
    allowed = (np.maximum(base_tol[idx][:, None], base_tol[idx][None, :])
               + uncertainty[idx][:, None] + uncertainty[idx][None, :])
    a, b = np.nonzero(np.triu(d <= allowed, k=1))
    order = np.lexsort((b, a, d[a, b]))
    taken = np.zeros(idx.size, dtype=bool)
    pairs = []
    for k in order:
        i, j = a[k], b[k]
        if not (taken[i] or taken[j]):
            taken[i] = taken[j] = True
            pairs.append((int(idx[i]), int(idx[j]), float(d[i, j])))
    pairs.sort()
    unpaired = [int(i) for i in idx[~taken]]
    return pairs, unpaired


def classify_spectrum(raw: RawSpectrum, J: Involution,
                      null_tol: float = DEFAULT_NULL_TOL,
                      reality_tol: float = DEFAULT_REALITY_TOL) -> SpectrumReport:
    """Attach Krein norms and classes to every eigenpair.

    The Krein norm is krein_inner(v, v) / dirac_inner(v, v).  Pairs are sorted
    by (Re lam, Im lam).

    Each pair also carries an uncertainty for Im lam: the first-order bound
    condition * |Hv - lam v|.  For a J-Hermitian matrix the computed pair obeys
    |Im lam| * |krein_norm| <= |Hv - lam v| exactly, so a pair with a definite
    Krein norm whose imaginary part is below that uncertainty is ``unresolved``
    rather than a counterexample.  Theorem violations are pairs whose nonzero
    imaginary part is resolved and whose Krein norm is definite, and resolved
    complex eigenvalues without a conjugate partner.
    """
    H = raw.hamiltonian
    herm = is_j_hermitian(H, J)
    order = sorted(range(len(raw)), key=lambda k: (raw.values[k].real, raw.values[k].imag, k))

    pairs = []
    for pos, k in enumerate(order):
        lam = complex(raw.values[k])
        v = StateVector(H.grid, raw.vectors[:, k])
        kn = krein_inner(v, v, J) / dirac_inner(v, v).real
        delta = float(raw.conditions[k] * raw.residual_norms[k])
        if not raw.converged[k] or abs(kn.imag) > null_tol:
            cls = EigenClass.UNRESOLVED
        elif abs(kn.real) <= null_tol:
            cls = EigenClass.NULL
        elif reality_tol < abs(lam.imag) <= delta:
            cls = EigenClass.UNRESOLVED
        else:
            cls = EigenClass.POSITIVE if kn.real > 0 else EigenClass.NEGATIVE
        pairs.append(EigenPair(lam, v, float(kn.real), float(kn.imag), cls,
                               float(raw.residuals[k]), float(raw.conditions[k]), delta, pos))

    values = np.array([p.eigenvalue for p in pairs])
    complex_idx = [p.index for p in pairs if abs(p.eigenvalue.imag) > reality_tol]
    base = reality_tol * np.maximum(1.0, np.abs(values))
    delta = np.array([p.imag_uncertainty for p in pairs])
    conj_pairs, unpaired = _pair_conjugates(values, complex_idx, base, delta)

    groups, current = [], [0] if pairs else []
    for a, b in zip(range(len(pairs)), range(1, len(pairs))):
        if abs(values[b] - values[a]) < DEGENERACY_TOL:
            current.append(b)
        else:
            if len(current) > 1:
                groups.append(current)
            current = [b]
    if len(current) > 1:
        groups.append(current)

    violations = []
    for p in pairs:
        if (abs(p.eigenvalue.imag) > reality_tol
                and p.classification in (EigenClass.POSITIVE, EigenClass.NEGATIVE)):
            violations.append(
                f"pair {p.index}: Im lambda = {p.eigenvalue.imag:.3e} (uncertainty "
                f"{p.imag_uncertainty:.1e}) but Krein norm {p.krein_norm:.3e}")
    if herm.passed:
        for i in unpaired:
            p = pairs[i]
            if abs(p.eigenvalue.imag) > p.imag_uncertainty:
                violations.append(
                    f"pair {i}: complex eigenvalue {p.eigenvalue:.6g} has no conjugate partner")

    return SpectrumReport(pairs, null_tol, reality_tol, herm.passed, herm.residual,
                          conj_pairs, unpaired, groups, violations)


def verify_reality_theorem(report: SpectrumReport) -> tuple[bool, list[str]]:
    """Check that definite-norm pairs are real and resolved complex pairs are
    null and conjugate-paired.

    Refuses (``PreconditionError``) for reports of non-J-Hermitian matrices,
    to which the statement does not apply.  Unresolved pairs are not counted.
    """
    if not report.j_hermitian:
        raise PreconditionError(
            f"matrix is not J-Hermitian (residual {report.j_hermitian_residual:.3e}); "
            "the reality theorem does not apply")
    violations = []
    for p in report.pairs:
        im = abs(p.eigenvalue.imag)
        definite = p.classification in (EigenClass.POSITIVE, EigenClass.NEGATIVE)
        if definite and im > report.reality_tol:
            violations.append(f"pair {p.index}: definite Krein norm with Im lambda = {im:.3e}")
    for i in report.unpaired:
        p = report.pairs[i]
        if abs(p.eigenvalue.imag) > p.imag_uncertainty:
            violations.append(f"pair {i}: complex eigenvalue without conjugate partner")
    return not violations, violations
