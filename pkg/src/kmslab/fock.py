"""Finite-mode fermionic Fock-space engine.

Dense matrix representation of the canonical anticommutation relations on M
modes (Hilbert-space dimension 2**M), plus Gibbs states, expectation values
and reduced density matrices. All other modules consume this one.

Conventions
-----------
* Mode j lives on tensor factor j of a chain of M two-level factors; the
  occupation basis |n_0 n_1 ... n_{M-1}> is ordered with n_0 as the most
  significant bit.
* The smeared annihilator a(f) = sum_j f_j a_j is LINEAR in f. Much of the
  literature uses the antilinear convention instead; every formula in this
  package assumes linearity.
* Signs come from the ordered-string construction: a_j carries a diagonal
  parity factor on every mode left of j and a lowering factor at j. Any
  representation satisfying the anticommutation relations would serve; the
  tests pin the relations, not this particular construction.
* Dense matrices throughout; M <= 12 (dimension 4096) is the supported
  envelope.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import tensor

__all__ = [
    "FockOperator",
    "GibbsEnsemble",
    "annihilator",
    "creator",
    "smeared_annihilator",
    "number_operator",
    "gibbs_state",
    "thermal_density_matrix",
    "expectation",
    "partial_trace",
    "commutator",
    "anticommutator",
    "operator_norm",
    "require_hermitian",
]

MAX_MODES = 12

_LOWER = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)  # |0><1|
_PARITY = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_EYE2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class FockOperator:
    """Operator on the 2**mode_count dimensional fermionic Fock space.

    Treated as immutable after construction; safe to share across threads.
    """

    matrix: np.ndarray
    mode_count: int

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        dim = 2**self.mode_count
        if m.shape != (dim, dim):
            raise ValueError(
                f"matrix of shape {m.shape} does not act on {self.mode_count} modes"
                f" (expected {(dim, dim)})"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return 2**self.mode_count

    def dag(self) -> "FockOperator":
        return FockOperator(self.matrix.conj().T, self.mode_count)

    def norm(self) -> float:
        """Operator (spectral) norm."""
        return operator_norm(self.matrix)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return bool(np.max(np.abs(self.matrix - self.matrix.conj().T)) <= tol)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def _wrap(self, m: np.ndarray) -> "FockOperator":
        return FockOperator(m, self.mode_count)

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, FockOperator):
            if other.mode_count != self.mode_count:
                raise ValueError(
                    f"mode counts differ: {self.mode_count} vs {other.mode_count}"
                )
            return other.matrix
        return np.asarray(other, dtype=complex)

    def __add__(self, other):
        return self._wrap(self.matrix + self._coerce(other))

    def __sub__(self, other):
        return self._wrap(self.matrix - self._coerce(other))

    def __neg__(self):
        return self._wrap(-self.matrix)

    def __mul__(self, scalar):
        return self._wrap(self.matrix * complex(scalar))

    __rmul__ = __mul__

    def __matmul__(self, other):
        return self._wrap(self.matrix @ self._coerce(other))

    def __rmatmul__(self, other):
        return self._wrap(self._coerce(other) @ self.matrix)


@dataclass(frozen=True)
class GibbsEnsemble:
    """Hamiltonian, inverse temperature, chemical potential and Gibbs state.

    The chemical potential enters by adding mu*N to the Hamiltonian, so the
    single-mode occupation at energy eps is 1/(1 + exp(beta*(eps + mu))).
    """

    hamiltonian: FockOperator
    beta: float
    mu: float
    rho: FockOperator

    @property
    def mode_count(self) -> int:
        return self.hamiltonian.mode_count

    def generator(self) -> np.ndarray:
        """Matrix of H + mu*N, the full generator of the dynamics."""
        m = self.hamiltonian.matrix
        if self.mu != 0.0:
            m = m + self.mu * number_operator(self.mode_count).matrix
        return m


def as_matrix(op) -> np.ndarray:
    """Coerce a FockOperator or array-like to a complex square ndarray."""
    if isinstance(op, FockOperator):
        return op.matrix
    m = np.asarray(op, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return m


def require_hermitian(m: np.ndarray, tol: float = 1e-10, what: str = "matrix") -> np.ndarray:
    m = np.asarray(m, dtype=complex)
    defect = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if defect > tol:
        raise ValueError(f"{what} is not Hermitian (defect {defect:.3e} > {tol:.1e})")
    return m


def operator_norm(m) -> float:
    return float(np.linalg.norm(as_matrix(m), 2))


@lru_cache(maxsize=None)
def _annihilator_matrix(j: int, modes: int) -> np.ndarray:
    mats = [_PARITY] * j + [_LOWER] + [_EYE2] * (modes - j - 1)
    out = tensor.kron_chain(mats)
    out.setflags(write=False)
    return out


def _check_mode_count(modes: int) -> int:
    modes = int(modes)
    if not 1 <= modes <= MAX_MODES:
        raise ValueError(f"mode count {modes} outside supported range 1..{MAX_MODES}")
    return modes


def annihilator(j: int, modes: int) -> FockOperator:
    """Annihilation operator a_j on ``modes`` fermionic modes."""
    modes = _check_mode_count(modes)
    if not 0 <= j < modes:
        raise ValueError(f"mode index {j} out of range for {modes} modes")
    return FockOperator(_annihilator_matrix(j, modes), modes)


def creator(j: int, modes: int) -> FockOperator:
    """Creation operator a_j^dagger."""
    return annihilator(j, modes).dag()


def smeared_annihilator(f, modes: int | None = None) -> FockOperator:
    """a(f) = sum_j f_j a_j, linear in the mode amplitudes f.

    The operator norm of a(f) equals the Euclidean norm of f.
    """
    f = np.asarray(f, dtype=complex)
    if f.ndim != 1:
        raise ValueError("mode vector must be one-dimensional")
    if modes is None:
        modes = f.size
    if f.size != modes:
        raise ValueError(f"mode vector of length {f.size} does not match {modes} modes")
    modes = _check_mode_count(modes)
    out = np.zeros((2**modes, 2**modes), dtype=complex)
    for j, coeff in enumerate(f):
        if coeff != 0.0:
            out += coeff * _annihilator_matrix(j, modes)
    return FockOperator(out, modes)


@lru_cache(maxsize=None)
def _number_matrix(modes: int) -> np.ndarray:
    out = np.zeros((2**modes, 2**modes), dtype=complex)
    for j in range(modes):
        a = _annihilator_matrix(j, modes)
        out += a.conj().T @ a
    out.setflags(write=False)
    return out


def number_operator(modes: int) -> FockOperator:
    """Total number operator N = sum_j a_j^dagger a_j; spectrum {0, .., M}."""
    modes = _check_mode_count(modes)
    return FockOperator(_number_matrix(modes), modes)


def thermal_density_matrix(generator: np.ndarray, beta: float) -> np.ndarray:
    """exp(-beta*K)/Tr exp(-beta*K) via eigendecomposition of Hermitian K.

    The eigenvalue route stays stable for beta up to ~50 where direct matrix
    exponentials of -beta*K would lose accuracy.
    """
    if not np.isfinite(beta) or beta < 0.0:
        raise ValueError(f"inverse temperature must be finite and >= 0, got {beta}")
    k = require_hermitian(generator, what="generator")
    evals, vecs = np.linalg.eigh(k)
    weights = np.exp(-beta * (evals - evals.min()))
    weights /= weights.sum()
    return (vecs * weights) @ vecs.conj().T


def gibbs_state(hamiltonian: FockOperator, beta: float, mu: float = 0.0) -> GibbsEnsemble:
    """Gibbs ensemble for H + mu*N at inverse temperature beta.

    beta = 0 yields the tracial state rho = 1/2**M regardless of H.
    """
    if not isinstance(hamiltonian, FockOperator):
        raise TypeError("hamiltonian must be a FockOperator; see thermal_density_matrix"
                        " for plain matrices")
    require_hermitian(hamiltonian.matrix, what="hamiltonian")
    modes = hamiltonian.mode_count
    k = hamiltonian.matrix
    if mu != 0.0:
        k = k + mu * _number_matrix(modes)
    rho = thermal_density_matrix(k, beta)
    return GibbsEnsemble(hamiltonian, float(beta), float(mu), FockOperator(rho, modes))


def expectation(rho, op) -> complex:
    """Tr(rho @ op); real within roundoff for Hermitian op and valid rho."""
    r = as_matrix(rho)
    m = as_matrix(op)
    if r.shape != m.shape:
        raise ValueError(f"dimension mismatch: state {r.shape} vs operator {m.shape}")
    return complex(np.einsum("ij,ji->", r, m))


def partial_trace(rho, keep, mode_count: int | None = None) -> FockOperator:
    """Reduce a Fock-space density matrix to the modes listed in ``keep``."""
    if isinstance(rho, FockOperator):
        mode_count = rho.mode_count
        r = rho.matrix
    else:
        r = np.asarray(rho, dtype=complex)
        if mode_count is None:
            mode_count = int(round(np.log2(r.shape[0])))
    keep = sorted(set(int(k) for k in keep))
    if not keep or keep[0] < 0 or keep[-1] >= mode_count:
        raise ValueError(f"keep={keep} is not a valid subset of 0..{mode_count - 1}")
    reduced = tensor.partial_trace(r, [2] * mode_count, keep)
    return FockOperator(reduced, len(keep))


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    return a @ b + b @ a
