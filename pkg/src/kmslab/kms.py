"""Inequality characterization of thermal equilibrium states.

A state omega at inverse temperature beta with generator delta(A) = i[K, A]
(K = H + mu*N) is in equilibrium iff for every observable A

    -i*beta*omega(A* delta(A)) = i*beta*omega(delta(A*) A)
                               >= omega(A*A) * log( omega(A*A) / omega(AA*) )

with the boundary conventions u*log(u/v) = 0 for u = 0 and = +infinity for
u > 0, v = 0. ``kms_gap`` evaluates left side minus right side; Gibbs states
give a nonnegative gap, and matrix units between energy eigenvectors give
equality. The module also provides the free-gas occupation sandwich that a
norm-b perturbation of the generator allows, and its b -> 0 limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .fock import (
    FockOperator,
    GibbsEnsemble,
    as_matrix,
    expectation,
    number_operator,
    operator_norm,
    require_hermitian,
)

__all__ = [
    "KmsGapReport",
    "FermiDiracSandwich",
    "WitnessResult",
    "derivation",
    "kms_gap",
    "kms_gap_matrices",
    "kms_violation_witness",
    "eigen_matrix_units",
    "fermi_dirac_sandwich",
    "sandwich_limit_check",
]

GAP_TOL = 1e-8           # absolute gap tolerance for normalized observables
BOUNDARY_CLAMP = 1e-14   # below this, u and v fall into the boundary conventions
FORM_AGREEMENT_TOL = 1e-9

CASE_REGULAR = "regular"
CASE_U_ZERO = "u_zero"
CASE_V_ZERO_U_POSITIVE = "v_zero_u_positive"


@dataclass(frozen=True)
class KmsGapReport:
    """Evaluation of the equilibrium inequality for one observable.

    All quantities refer to the observable rescaled to operator norm 1.
    ``gap = lhs - rhs``; ``violation`` is set when the gap is below -tol, when
    the right side is infinite (u > 0, v = 0), or when the two left-side forms
    fail to agree (a non-stationary state).
    """

    lhs: float
    lhs_alt: float
    u: float
    v: float
    rhs: float
    gap: float
    convention_case: str
    violation: bool

    @property
    def form_mismatch(self) -> float:
        return abs(self.lhs - self.lhs_alt)


@dataclass(frozen=True)
class WitnessResult:
    index: int
    report: KmsGapReport


@dataclass(frozen=True)
class FermiDiracSandwich:
    """Two-sided occupation bounds for a momentum-p0 mode at chemical potential mu.

    A perturbation of norm b widens the exact Fermi-Dirac occupation
    1/(1 + exp(p0^2 + mu)) into [w_lower, w_upper]; b = 0 collapses the
    sandwich onto the exact value.
    """

    p0: float
    mu: float
    b: float
    w_lower: float
    w_upper: float

    @property
    def width(self) -> float:
        return self.w_upper - self.w_lower


def derivation(hamiltonian: FockOperator, mu: float, op: FockOperator) -> FockOperator:
    """delta(A) = i[H + mu*N, A], the generator of the Heisenberg dynamics."""
    require_hermitian(hamiltonian.matrix, what="hamiltonian")
    if op.mode_count != hamiltonian.mode_count:
        raise ValueError("operator and hamiltonian act on different mode counts")
    k = hamiltonian.matrix
    if mu != 0.0:
        k = k + mu * number_operator(hamiltonian.mode_count).matrix
    a = op.matrix
    return FockOperator(1j * (k @ a - a @ k), op.mode_count)


def _boundary_rhs(u: float, v: float) -> tuple[float, str]:
    """u*log(u/v) with the boundary conventions; clamped near zero."""
    if u <= BOUNDARY_CLAMP:
        return 0.0, CASE_U_ZERO
    if v <= BOUNDARY_CLAMP:
        return math.inf, CASE_V_ZERO_U_POSITIVE
    return u * math.log(u / v), CASE_REGULAR


def kms_gap_matrices(rho, generator, beta: float, op, *, tol: float = GAP_TOL) -> KmsGapReport:
    """Gap evaluation from plain matrices (state, full generator K, observable).

    The observable is rescaled to operator norm 1 before anything else so that
    the absolute tolerance is meaningful.
    """
    if not np.isfinite(beta):
        raise ValueError("beta must be finite; the ground state (beta = infinity)"
                         " is outside the inequality's scope")
    r = as_matrix(rho)
    k = require_hermitian(as_matrix(generator), what="generator")
    a = as_matrix(op)
    scale = operator_norm(a)
    if scale == 0.0:
        raise ValueError("observable must be nonzero")
    a = a / scale
    adag = a.conj().T

    delta_a = 1j * (k @ a - a @ k)
    delta_adag = 1j * (k @ adag - adag @ k)

    lhs_c = -1j * beta * expectation(r, adag @ delta_a)
    lhs_alt_c = 1j * beta * expectation(r, delta_adag @ a)
    lhs, lhs_alt = lhs_c.real, lhs_alt_c.real

    u = expectation(r, adag @ a).real
    v = expectation(r, a @ adag).real
    rhs, case = _boundary_rhs(u, v)

    gap = lhs - rhs  # -inf when rhs is +inf
    mismatch = abs(lhs_c - lhs_alt_c) + abs(lhs_c.imag)
    violation = (case == CASE_V_ZERO_U_POSITIVE) or (gap < -tol) or (mismatch > FORM_AGREEMENT_TOL)
    return KmsGapReport(lhs, lhs_alt, u, v, rhs, gap, case, violation)


def kms_gap(ensemble: GibbsEnsemble, op: FockOperator, *, tol: float = GAP_TOL) -> KmsGapReport:
    """Gap evaluation for a Gibbs ensemble; nonnegative up to tol by construction."""
    report = kms_gap_matrices(ensemble.rho.matrix, ensemble.generator(), ensemble.beta, op, tol=tol)
    if report.form_mismatch > FORM_AGREEMENT_TOL:
        raise AssertionError(
            f"the two left-side forms disagree by {report.form_mismatch:.3e} on a Gibbs state"
        )
    return report


def kms_violation_witness(
    rho,
    hamiltonian,
    candidates: Sequence,
    beta: float,
    mu: float = 0.0,
    *,
    tol: float = GAP_TOL,
) -> Optional[WitnessResult]:
    """First candidate observable exposing rho as non-equilibrium, if any.

    For rho = Gibbs(H, beta, mu) this returns None over any candidate set.
    """
    k = as_matrix(hamiltonian)
    if mu != 0.0:
        modes = int(round(np.log2(k.shape[0])))
        k = k + mu * number_operator(modes).matrix
    for i, cand in enumerate(candidates):
        report = kms_gap_matrices(rho, k, beta, cand, tol=tol)
        if report.violation:
            return WitnessResult(i, report)
    return None


def eigen_matrix_units(generator, *, pairs: Optional[Sequence[tuple[int, int]]] = None):
    """Matrix units |m><n| between eigenvectors of a Hermitian generator.

    These are the eigenoperators of delta = i[K, .]; on the Gibbs state of K
    they turn the equilibrium inequality into an equality. Returns a list of
    (E_m - E_n, unit matrix) sorted by the given pairs, all pairs by default.
    """
    k = require_hermitian(as_matrix(generator), what="generator")
    evals, vecs = np.linalg.eigh(k)
    n = evals.size
    if pairs is None:
        pairs = [(m, j) for m in range(n) for j in range(n) if m != j]
    out = []
    for m, j in pairs:
        unit = np.outer(vecs[:, m], vecs[:, j].conj())
        out.append((float(evals[m] - evals[j]), unit))
    return out


def _logistic(x: float) -> float:
    # 1/(1+e^x) without overflow for large |x|
    if x >= 0.0:
        return math.exp(-x) / (1.0 + math.exp(-x))
    return 1.0 / (1.0 + math.exp(x))


def fermi_dirac_sandwich(p0: float, mu: float, b: float) -> FermiDiracSandwich:
    """Occupation window [1/(1+e^{p0^2+mu+b}), 1/(1+e^{p0^2+mu-b})]."""
    if b < 0.0:
        raise ValueError("perturbation norm bound b must be nonnegative")
    x = p0 * p0 + mu
    return FermiDiracSandwich(float(p0), float(mu), float(b),
                              _logistic(x + b), _logistic(x - b))


def sandwich_limit_check(p0: float, mu: float, b_sequence: Sequence[float]) -> float:
    """Common limit of the sandwich as the perturbation bounds decrease to zero.

    Verifies that the window widths shrink monotonically along the sequence;
    raises on a non-monotone sequence. Returns 1/(1 + exp(p0^2 + mu)).
    """
    b_seq = [float(b) for b in b_sequence]
    if not b_seq:
        raise ValueError("empty sequence of perturbation bounds")
    if any(b < 0.0 for b in b_seq):
        raise ValueError("perturbation bounds must be nonnegative")
    if any(b2 > b1 for b1, b2 in zip(b_seq, b_seq[1:])):
        raise ValueError("perturbation bounds must be non-increasing")
    widths = [fermi_dirac_sandwich(p0, mu, b).width for b in b_seq]
    for w1, w2 in zip(widths, widths[1:]):
        if w2 > w1 + 1e-15:
            raise AssertionError("sandwich widths failed to shrink monotonically")
    return _logistic(p0 * p0 + mu)
