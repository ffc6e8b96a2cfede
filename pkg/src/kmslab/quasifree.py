"""Quasifree states, pinching, relative entropy and trace-class certificates.

A one-particle symbol R (Hermitian, 0 <= R <= 1) determines a quasifree state
that factorizes over the eigenmodes of R: mode n is occupied with probability
rho_n. Its entropy is the binary-entropy sum over eigenvalues. Pinching any
state onto the occupation projectors of a symbol's eigenbasis preserves the
diagonal and never decreases entropy, and the entropy increase equals the
relative entropy between the state and its pinched version. Sorted symbol
eigenvalues decaying like c*n^{-(1+eps)} certify a finite-entropy local
density matrix.

Entropies are in natural log throughout.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, asdict
from itertools import product
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import expit, xlogy

from .fock import FockOperator, as_matrix, require_hermitian, smeared_annihilator

__all__ = [
    "QuasifreeSymbol",
    "TraceClassCertificate",
    "von_neumann_entropy",
    "quasifree_density_matrix",
    "binary_entropy_sum",
    "occupation_projectors",
    "pinch",
    "relative_entropy",
    "entropy_dominance_check",
    "trace_class_certificate",
    "fermi_dirac_symbol",
    "save_symbol",
    "load_symbol",
]

EIGENVALUE_SLACK = 1e-12
LOG_FLOOR = 1e-300


@dataclass(frozen=True)
class QuasifreeSymbol:
    """One-particle density operator R with eigenvalues in [0, 1]."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = require_hermitian(np.asarray(self.matrix, dtype=complex), tol=1e-10,
                              what="symbol")
        evals = np.linalg.eigvalsh(m)
        if evals.min() < -EIGENVALUE_SLACK or evals.max() > 1.0 + EIGENVALUE_SLACK:
            raise ValueError(
                f"symbol eigenvalues [{evals.min():.3e}, {evals.max():.3e}] "
                "outside [0, 1]"
            )
        object.__setattr__(self, "matrix", m)

    @property
    def mode_count(self) -> int:
        return self.matrix.shape[0]

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        evals, vecs = np.linalg.eigh(self.matrix)
        return np.clip(evals, 0.0, 1.0), vecs

    def sorted_eigenvalues(self) -> np.ndarray:
        evals, _ = self.eigensystem()
        return np.sort(evals)[::-1]


@dataclass(frozen=True)
class TraceClassCertificate:
    """Verdict on rho_n < c * n^{-(1+epsilon)} for the sorted eigenvalues (n >= 1)."""

    c: float
    epsilon: float
    passed: bool
    worst_n: int
    worst_ratio: float          # max_n rho_n * n^{1+epsilon} / c
    entropy_bound: float | None  # binary-entropy sum, reported on pass

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TraceClassCertificate":
        return cls(**json.loads(text))


def von_neumann_entropy(rho) -> float:
    """-Tr rho log rho in nats; eigenvalues clamped to [1e-300, 1] before the log."""
    evals = np.linalg.eigvalsh(as_matrix(rho))
    evals = np.clip(evals.real, 0.0, 1.0)
    return float(-xlogy(evals, np.maximum(evals, LOG_FLOOR)).sum())


def quasifree_density_matrix(symbol: QuasifreeSymbol) -> FockOperator:
    """Fock-space density matrix of the quasifree state with the given symbol.

    In the eigenbasis {f_n} of R the state is the product over modes of
    diag(1 - rho_n, rho_n). Two-point function: Tr(rho a*(f) a(g)) = <f|R|g>.
    With the linear smearing convention a(f) = sum f_j a_j, the expectation
    omega(a*(f) a(g)) is antilinear in f, so R sits between <f| and |g>; the
    diagonal omega(a*(f) a(f)) = <f|R|f> is convention-independent.
    """
    rho_n, vecs = symbol.eigensystem()
    modes = symbol.mode_count
    dim = 2**modes
    out = np.eye(dim, dtype=complex)
    eye = np.eye(dim)
    for n in range(modes):
        b = smeared_annihilator(vecs[:, n], modes)
        num = (b.dag() @ b).matrix
        out = out @ ((1.0 - rho_n[n]) * (eye - num) + rho_n[n] * num)
    return FockOperator(out, modes)


def binary_entropy_sum(symbol: QuasifreeSymbol) -> float:
    """-sum_n [rho_n log rho_n + (1-rho_n) log(1-rho_n)], with 0 log 0 = 0.

    Equals the spectral entropy of quasifree_density_matrix(symbol).
    """
    rho_n = symbol.sorted_eigenvalues()
    return float(-(xlogy(rho_n, np.maximum(rho_n, LOG_FLOOR))
                   + xlogy(1.0 - rho_n, np.maximum(1.0 - rho_n, LOG_FLOOR))).sum())


def occupation_projectors(symbol: QuasifreeSymbol) -> list[np.ndarray]:
    """Minimal projectors of the maximal abelian algebra of the symbol's eigenmodes.

    One rank-one projector per occupation pattern: the product over modes of
    either the mode's number operator or its complement.
    """
    rho_n, vecs = symbol.eigensystem()
    modes = symbol.mode_count
    dim = 2**modes
    eye = np.eye(dim)
    nums = []
    for n in range(modes):
        b = smeared_annihilator(vecs[:, n], modes)
        nums.append((b.dag() @ b).matrix)
    projectors = []
    for pattern in product((0, 1), repeat=modes):
        p = np.eye(dim, dtype=complex)
        for n, occupied in enumerate(pattern):
            p = p @ (nums[n] if occupied else eye - nums[n])
        projectors.append(p)
    return projectors


def pinch(rho, symbol: QuasifreeSymbol) -> np.ndarray:
    """sum_P P rho P over the occupation projectors of the symbol's eigenbasis.

    Trace-preserving, positivity-preserving, diagonal-preserving in the
    occupation configuration basis.
    """
    r = as_matrix(rho)
    out = np.zeros_like(r)
    for p in occupation_projectors(symbol):
        out += p @ r @ p
    return out


def relative_entropy(rho, sigma, *, support_tol: float = 1e-12) -> float:
    """Tr rho (log rho - log sigma); +inf when rho leaks out of sigma's support."""
    r = require_hermitian(as_matrix(rho), tol=1e-10, what="rho")
    s = require_hermitian(as_matrix(sigma), tol=1e-10, what="sigma")
    if r.shape != s.shape:
        raise ValueError("dimension mismatch between the two states")
    r_evals = np.clip(np.linalg.eigvalsh(r).real, 0.0, None)
    s_evals, s_vecs = np.linalg.eigh(s)
    s_evals = np.clip(s_evals.real, 0.0, None)
    rho_in_s_basis = np.real(np.einsum("ij,jk,ki->i", s_vecs.conj().T, r, s_vecs))
    rho_in_s_basis = np.clip(rho_in_s_basis, 0.0, None)
    leak = rho_in_s_basis[s_evals <= support_tol].sum()
    if leak > support_tol:
        return math.inf
    tr_r_log_r = float(xlogy(r_evals, np.maximum(r_evals, LOG_FLOOR)).sum())
    good = s_evals > support_tol
    tr_r_log_s = float((rho_in_s_basis[good] * np.log(s_evals[good])).sum())
    return tr_r_log_r - tr_r_log_s


def entropy_dominance_check(rho, symbol: QuasifreeSymbol,
                            *, tol: float = 1e-9) -> tuple[float, float, bool]:
    """(S(rho), S(pinch(rho)), dominance flag); pinching never lowers entropy.

    The entropy increase S(pinched) - S(rho) equals the relative entropy of
    rho with respect to its pinched version because pinching preserves the
    configuration diagonal.
    """
    s_rho = von_neumann_entropy(rho)
    s_pinched = von_neumann_entropy(pinch(rho, symbol))
    return s_rho, s_pinched, s_rho <= s_pinched + tol


def trace_class_certificate(symbol: QuasifreeSymbol, c: float, epsilon: float
                            ) -> TraceClassCertificate:
    """Check rho_n < c n^{-(1+epsilon)} over the sorted eigenvalues (1-based)."""
    if c <= 0.0 or epsilon <= 0.0:
        raise ValueError("certificate needs c > 0 and epsilon > 0")
    rho_n = symbol.sorted_eigenvalues()
    n = np.arange(1, rho_n.size + 1, dtype=float)
    ratios = rho_n * n ** (1.0 + epsilon) / c
    worst = int(np.argmax(ratios))
    passed = bool(ratios[worst] < 1.0)
    return TraceClassCertificate(
        c=float(c),
        epsilon=float(epsilon),
        passed=passed,
        worst_n=worst + 1,
        worst_ratio=float(ratios[worst]),
        entropy_bound=binary_entropy_sum(symbol) if passed else None,
    )


def fermi_dirac_symbol(dispersion: Sequence[float], beta: float, mu: float = 0.0
                       ) -> QuasifreeSymbol:
    """Diagonal symbol with occupations 1/(1 + exp(beta*(eps_k + mu)))."""
    if beta < 0.0:
        raise ValueError("beta must be nonnegative")
    eps = np.asarray(dispersion, dtype=float)
    occ = expit(-beta * (eps + mu))
    return QuasifreeSymbol(np.diag(occ).astype(complex))


def save_symbol(path, symbol: QuasifreeSymbol) -> None:
    """Text format: first line M, then M rows of real/imag pairs (row-major)."""
    m = symbol.matrix
    lines = [str(m.shape[0])]
    for row in m:
        lines.append(" ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_symbol(path) -> QuasifreeSymbol:
    text = Path(path).read_text(encoding="ascii").split()
    if not text:
        raise ValueError(f"empty symbol file {path}")
    size = int(text[0])
    numbers = np.asarray([float(t) for t in text[1:]])
    if numbers.size != 2 * size * size:
        raise ValueError(
            f"symbol file {path} holds {numbers.size} numbers, expected {2 * size * size}"
        )
    pairs = numbers.reshape(size, size, 2)
    return QuasifreeSymbol(pairs[..., 0] + 1j * pairs[..., 1])
