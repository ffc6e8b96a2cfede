"""Nearest-neighbor chain of truncated infinite-level sites.

Each site carries levels |0>, .., |d-1> with bare energy equal to the level
index; neighbors interact through a four-index coupling tensor h[k,l,r,m]
entering once as |k><r|_n (x) |l><m|_{n+1} and once in the mirrored order
|l><m|_{n-1} (x) |k><r|_n, with periodic boundary conditions. The level-k
growth norms s_k = sum_{l,r,m} |h[k,l,r,m]| control whether the thermal
occupation of high levels is dominated by the generic occupation bound; this
module measures both sides of that comparison on exact Gibbs states.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import tensor
from .decay import DecayQuery, occupation_bound
from .fock import require_hermitian, thermal_density_matrix
from .quasifree import von_neumann_entropy
from .tables import write_csv

__all__ = [
    "CouplingTensor",
    "ToyChainSpec",
    "CouplingConditionReport",
    "LocalDerivativeReport",
    "OccupationProfile",
    "WindowEntropyReport",
    "exponential_coupling",
    "build_hamiltonian",
    "local_derivative",
    "coupling_condition",
    "occupation_profile",
    "local_entropy_report",
    "truncation_drift",
    "load_chain_spec",
    "write_occupation_profile_csv",
]

DEFAULT_MEMORY_ENVELOPE = 4096
HERMITICITY_TOL = 1e-12


@dataclass(frozen=True)
class CouplingTensor:
    """Four-index neighbor coupling h[k, l, r, m] on d local levels.

    The induced two-site operator sum_klrm h[k,l,r,m] |k><r| (x) |l><m| must be
    Hermitian, which pins h[k,l,r,m] = conj(h[r,m,k,l]).
    """

    h: np.ndarray

    def __post_init__(self) -> None:
        h = np.asarray(self.h, dtype=complex)
        if h.ndim != 4 or len(set(h.shape)) != 1:
            raise ValueError(f"coupling tensor must be d^4, got shape {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ValueError("coupling tensor has non-finite entries")
        defect = np.max(np.abs(h - np.conj(np.transpose(h, (2, 3, 0, 1)))))
        if defect > HERMITICITY_TOL:
            raise ValueError(
                f"coupling violates h[k,l,r,m] = conj(h[r,m,k,l]) by {defect:.3e}"
            )
        object.__setattr__(self, "h", h)

    @property
    def local_dim(self) -> int:
        return self.h.shape[0]

    def growth_norms(self) -> np.ndarray:
        """s_k = sum_{l,r,m} |h[k,l,r,m]| for each level k."""
        return np.abs(self.h).sum(axis=(1, 2, 3))

    def pair_operator(self) -> np.ndarray:
        """The two-site matrix sum h[k,l,r,m] |k><r| (x) |l><m|, i.e. T[(k,l),(r,m)]."""
        d = self.local_dim
        return np.transpose(self.h, (0, 1, 2, 3)).reshape(d * d, d * d)

    def mirrored_pair_operator(self) -> np.ndarray:
        """sum h[k,l,r,m] |l><m| (x) |k><r|, the reversed neighbor ordering."""
        d = self.local_dim
        return np.transpose(self.h, (1, 0, 3, 2)).reshape(d * d, d * d)

    @classmethod
    def from_entries(cls, local_dim: int, entries: Mapping[tuple[int, int, int, int], complex]):
        h = np.zeros((local_dim,) * 4, dtype=complex)
        for idx, val in entries.items():
            h[idx] = val
        return cls(h)


def exponential_coupling(local_dim: int, strength: float, rate: float = 1.0) -> CouplingTensor:
    """h[k,l,r,m] = strength * exp(-rate*(k+l+r+m)); Hermitian since real-symmetric."""
    k = np.arange(local_dim)
    e = np.exp(-rate * k)
    return CouplingTensor(strength * np.einsum("k,l,r,m->klrm", e, e, e, e))


@dataclass(frozen=True)
class ToyChainSpec:
    n_sites: int
    local_dim: int
    coupling: CouplingTensor
    beta: float
    memory_envelope: int = DEFAULT_MEMORY_ENVELOPE

    def __post_init__(self) -> None:
        if self.n_sites < 2:
            raise ValueError("need at least two sites for nearest-neighbor terms")
        if self.local_dim < 1:
            raise ValueError("local dimension must be positive")
        if self.coupling.local_dim != self.local_dim:
            raise ValueError("coupling tensor dimension does not match local_dim")
        if self.beta <= 0.0 or not np.isfinite(self.beta):
            raise ValueError("beta must be positive and finite")
        if self.local_dim**self.n_sites > self.memory_envelope:
            raise ValueError(
                f"total dimension {self.local_dim**self.n_sites} exceeds the "
                f"memory envelope {self.memory_envelope}"
            )

    @property
    def dims(self) -> list[int]:
        return [self.local_dim] * self.n_sites

    @property
    def total_dim(self) -> int:
        return self.local_dim**self.n_sites


@dataclass(frozen=True)
class CouplingConditionReport:
    """Growth-condition data: s_k < c * max(k,1)^alpha for all k iff c > c_star.

    Level 0 is regularized with max(k, 1) since alpha <= 0 would otherwise
    make the comparison singular; the condition targets large k anyway.
    The shift norms collect the |0><0|-at-the-probed-site portions of the two
    neighbor orderings, which displace the bare level energy rather than mix
    levels; ``offdiagonal_norms[k]`` is what remains of s_k after removing the
    level-preserving r = k terms.
    """

    alpha: float
    c_star: float
    growth_norms: np.ndarray
    shift_right: float          # sum_lm |h[0,l,0,m]|
    shift_left: float           # sum_lm |h[0,l,m,0]| from the mirrored ordering
    diagonal_norms: np.ndarray  # per level: sum_lm |h[k,l,k,m]|
    offdiagonal_norms: np.ndarray

    @property
    def shift(self) -> float:
        return self.shift_right + self.shift_left


@dataclass(frozen=True)
class LocalDerivativeReport:
    """i[H, |k><0|_0] split into its analytic per-term contributions."""

    commutator: np.ndarray
    diagonal_term: np.ndarray
    left_term: np.ndarray
    right_term: np.ndarray

    @property
    def residual(self) -> float:
        s = self.diagonal_term + self.left_term + self.right_term
        return float(np.max(np.abs(s - self.commutator)))


@dataclass(frozen=True)
class OccupationProfile:
    levels: np.ndarray
    occupations: np.ndarray        # translation-averaged omega(|k><k|_site)
    tail_sums: np.ndarray          # sum_{j>k} occupations[j]
    bounds: list[DecayQuery]
    shift: float
    h_levels: np.ndarray
    translation_spread: float      # max over sites/levels of |occ_site - occ_mean|

    def satisfied(self) -> bool:
        """Measured occupation below every non-vacuous bound."""
        return all(
            q.vacuous or occ <= q.w_bound + 1e-12
            for occ, q in zip(self.occupations, self.bounds)
        )


@dataclass(frozen=True)
class WindowEntropyReport:
    window_sizes: list[int]
    entropies: list[float]
    subadditivity_checks: list[tuple[int, int, float]]  # (|A|, |B|, S_A + S_B - S_AB)

    def subadditive(self, tol: float = 1e-9) -> bool:
        return all(slack >= -tol for *_, slack in self.subadditivity_checks)


def _site_energy_matrix(d: int) -> np.ndarray:
    return np.diag(np.arange(d, dtype=float)).astype(complex)


def build_hamiltonian(spec: ToyChainSpec) -> np.ndarray:
    """Full chain Hamiltonian with periodic boundary conditions.

    For every bond (n, n+1 mod N) both printed neighbor orderings of the
    coupling enter, so with N = 2 the single pair of sites picks up the
    interaction twice (once per ordered bond), as the periodic sum dictates.
    """
    d, n = spec.local_dim, spec.n_sites
    dims = spec.dims
    total = spec.total_dim
    ham = np.zeros((total, total), dtype=complex)
    energy = _site_energy_matrix(d)
    for site in range(n):
        ham += tensor.embed_factors({site: energy}, dims)
    bond = spec.coupling.pair_operator() + spec.coupling.mirrored_pair_operator()
    for site in range(n):
        ham += tensor.embed_pair(bond, site, (site + 1) % n, dims)
    require_hermitian(ham, tol=1e-12, what="chain hamiltonian")
    return ham


def _matrix_unit(d: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((d, d), dtype=complex)
    m[i, j] = 1.0
    return m


def local_derivative(spec: ToyChainSpec, k: int) -> LocalDerivativeReport:
    """Split i[H, |k><0|_0 (x) 1] into bare-energy, left-bond and right-bond parts.

    The three analytic terms are assembled from the coupling tensor alone
    (explicit index sums); the report's residual compares their sum against
    the brute-force commutator with the full Hamiltonian.
    """
    d, n = spec.local_dim, spec.n_sites
    if not 0 <= k < d:
        raise ValueError(f"level {k} out of range for local dimension {d}")
    dims = spec.dims
    h = spec.coupling.h
    a_local = _matrix_unit(d, k, 0)
    a_full = tensor.embed_factors({0: a_local}, dims)

    ham = build_hamiltonian(spec)
    comm = 1j * (ham @ a_full - a_full @ ham)

    diag_term = 1j * float(k) * a_full

    # right bond (0, 1): both orderings of the coupling, commuted with |k><0|_0
    right2 = np.zeros((d * d, d * d), dtype=complex)

    def acc(mat, site0_pair, site1_pair, coeff):
        # add coeff * |a><b|_0 (x) |c><e|_1 to the two-site block
        a_, b_ = site0_pair
        c_, e_ = site1_pair
        mat[a_ * d + c_, b_ * d + e_] += coeff

    for kp in range(d):
        for lp in range(d):
            for mp in range(d):
                acc(right2, (kp, 0), (lp, mp), 1j * h[kp, lp, k, mp])
    for lp in range(d):
        for rp in range(d):
            for mp in range(d):
                acc(right2, (k, rp), (lp, mp), -1j * h[0, lp, rp, mp])
    for kp in range(d):
        for lp in range(d):
            for rp in range(d):
                acc(right2, (lp, 0), (kp, rp), 1j * h[kp, lp, rp, k])
    for kp in range(d):
        for rp in range(d):
            for mp in range(d):
                acc(right2, (k, mp), (kp, rp), -1j * h[kp, 0, rp, mp])
    right_term = tensor.embed_pair(right2, 0, 1 % n, dims) if n > 1 else right2

    # left bond (n-1, 0)
    left2 = np.zeros((d * d, d * d), dtype=complex)

    def accl(mat, site_prev_pair, site0_pair, coeff):
        a_, b_ = site_prev_pair
        c_, e_ = site0_pair
        mat[a_ * d + c_, b_ * d + e_] += coeff

    for kp in range(d):
        for lp in range(d):
            for rp in range(d):
                accl(left2, (kp, rp), (lp, 0), 1j * h[kp, lp, rp, k])
    for kp in range(d):
        for rp in range(d):
            for mp in range(d):
                accl(left2, (kp, rp), (k, mp), -1j * h[kp, 0, rp, mp])
    for kp in range(d):
        for lp in range(d):
            for mp in range(d):
                accl(left2, (lp, mp), (kp, 0), 1j * h[kp, lp, k, mp])
    for lp in range(d):
        for rp in range(d):
            for mp in range(d):
                accl(left2, (lp, mp), (k, rp), -1j * h[0, lp, rp, mp])
    left_term = tensor.embed_pair(left2, n - 1, 0, dims)

    return LocalDerivativeReport(comm, diag_term, left_term, right_term)


def coupling_condition(coupling: CouplingTensor, alpha: float) -> CouplingConditionReport:
    """Minimal c with s_k < c * max(k,1)^alpha, plus the shift/off-diagonal split."""
    if alpha > 0.0:
        raise ValueError("growth exponent alpha must be <= 0")
    h = coupling.h
    d = coupling.local_dim
    s = coupling.growth_norms()
    k_reg = np.maximum(np.arange(d), 1).astype(float)
    c_star = float(np.max(s / k_reg**alpha)) if d else 0.0
    shift_right = float(np.abs(h[0, :, 0, :]).sum())
    shift_left = float(np.abs(h[0, :, :, 0]).sum())
    diag = np.array([np.abs(h[k, :, k, :]).sum() for k in range(d)])
    return CouplingConditionReport(
        alpha=float(alpha),
        c_star=c_star,
        growth_norms=s,
        shift_right=shift_right,
        shift_left=shift_left,
        diagonal_norms=diag,
        offdiagonal_norms=s - diag,
    )


def _site_occupations(rho: np.ndarray, spec: ToyChainSpec) -> np.ndarray:
    """occ[site, k] = omega(|k><k|_site) from the diagonal of each reduced state."""
    occ = np.empty((spec.n_sites, spec.local_dim))
    for site in range(spec.n_sites):
        reduced = tensor.partial_trace(rho, spec.dims, [site])
        occ[site] = np.real(np.diag(reduced))
    return occ


def occupation_profile(spec: ToyChainSpec) -> OccupationProfile:
    """Thermal level occupations against the generic occupation bound.

    The bound for level k uses lambda = beta*k, a level-independent shift from
    the level-preserving coupling terms, and a level-k perturbation norm from
    the level-mixing terms; both neighbor orderings contribute once each,
    which over-counts rather than under-counts, keeping the bound valid.
    """
    ham = build_hamiltonian(spec)
    rho = thermal_density_matrix(ham, spec.beta)
    occ = _site_occupations(rho, spec)
    mean = occ.mean(axis=0)
    spread = float(np.max(np.abs(occ - mean)))

    cond = coupling_condition(spec.coupling, alpha=0.0)
    d = spec.local_dim
    beta = spec.beta
    bounds = []
    h_levels = np.empty(d)
    for k in range(d):
        # level-preserving pieces act as an energy shift, level-mixing as the
        # perturbation; r = k terms of the mixing sums are level-preserving too
        shift_k = cond.shift + 2.0 * cond.diagonal_norms[k]
        h_k = 2.0 * cond.offdiagonal_norms[k]
        h_levels[k] = h_k
        bounds.append(occupation_bound(beta * k, beta * h_k, beta * shift_k))
    tails = np.array([mean[k + 1:].sum() for k in range(d)])
    return OccupationProfile(
        levels=np.arange(d),
        occupations=mean,
        tail_sums=tails,
        bounds=bounds,
        shift=cond.shift,
        h_levels=h_levels,
        translation_spread=spread,
    )


def write_occupation_profile_csv(path, profile: OccupationProfile) -> None:
    rows = []
    for k, occ, tail, q in zip(profile.levels, profile.occupations,
                               profile.tail_sums, profile.bounds):
        rows.append([int(k), float(occ), float(tail), q.w_bound, int(q.vacuous)])
    write_csv(path, ["level", "occupation", "tail_sum", "w_bound", "vacuous_flag"], rows)


def local_entropy_report(spec: ToyChainSpec, window_sizes: Sequence[int]) -> WindowEntropyReport:
    """Entropies of contiguous windows, with subadditivity on adjacent splits."""
    sizes = [int(w) for w in window_sizes]
    if any(w < 1 or w > spec.n_sites for w in sizes):
        raise ValueError("window sizes must lie in 1..n_sites")
    ham = build_hamiltonian(spec)
    rho = thermal_density_matrix(ham, spec.beta)

    def window_entropy(start: int, size: int) -> float:
        keep = [(start + j) % spec.n_sites for j in range(size)]
        reduced = tensor.partial_trace(rho, spec.dims, keep)
        return von_neumann_entropy(reduced)

    entropies = [window_entropy(0, w) for w in sizes]
    checks = []
    for w in sizes:
        for split in range(1, w):
            s_ab = window_entropy(0, w)
            s_a = window_entropy(0, split)
            s_b = window_entropy(split, w - split)
            checks.append((split, w - split, s_a + s_b - s_ab))
    return WindowEntropyReport(sizes, entropies, checks)


def truncation_drift(spec: ToyChainSpec) -> float:
    """Max occupation change when the local truncation grows from d to d+1.

    The coupling tensor is zero-padded on the new level; the drift makes the
    truncation error of the reported occupations visible.
    """
    d = spec.local_dim
    padded = np.zeros((d + 1,) * 4, dtype=complex)
    padded[:d, :d, :d, :d] = spec.coupling.h
    bigger = ToyChainSpec(
        n_sites=spec.n_sites,
        local_dim=d + 1,
        coupling=CouplingTensor(padded),
        beta=spec.beta,
        memory_envelope=max(spec.memory_envelope, (d + 1) ** spec.n_sites),
    )
    small = occupation_profile(spec).occupations
    large = occupation_profile(bigger).occupations[:d]
    return float(np.max(np.abs(small - large)))


def load_chain_spec(path) -> ToyChainSpec:
    """Read a chain specification from a key = value sectioned text file.

    Expected layout::

        [chain]
        n_sites = 3
        local_dim = 4
        beta = 1.0

        [coupling]
        preset = exponential     ; optional: exponential(strength, rate)
        strength = 0.02
        rate = 1.0
        0,0,1,1 = 0.05           ; or explicit index-value entries k,l,r,m = value

    Explicit entries must come in Hermitian pairs (validated on load).
    """
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ValueError(f"cannot read chain spec from {path}")
    if "chain" not in parser:
        raise ValueError("missing [chain] section")
    chain = parser["chain"]
    allowed = {"n_sites", "local_dim", "beta", "memory_envelope"}
    unknown = set(chain) - allowed
    if unknown:
        raise ValueError(f"unknown [chain] keys: {sorted(unknown)}")
    n_sites = chain.getint("n_sites")
    local_dim = chain.getint("local_dim")
    beta = chain.getfloat("beta")
    envelope = chain.getint("memory_envelope", fallback=DEFAULT_MEMORY_ENVELOPE)

    coupling = CouplingTensor(np.zeros((local_dim,) * 4, dtype=complex))
    if "coupling" in parser:
        section = parser["coupling"]
        if "preset" in section:
            preset = section.get("preset").strip()
            if preset != "exponential":
                raise ValueError(f"unknown coupling preset {preset!r}")
            extras = set(section) - {"preset", "strength", "rate"}
            if extras:
                raise ValueError(f"unexpected [coupling] keys with preset: {sorted(extras)}")
            coupling = exponential_coupling(
                local_dim,
                section.getfloat("strength", fallback=0.0),
                section.getfloat("rate", fallback=1.0),
            )
        else:
            entries = {}
            for key, raw in section.items():
                parts = [p.strip() for p in key.split(",")]
                if len(parts) != 4:
                    raise ValueError(f"coupling key {key!r} is not of the form k,l,r,m")
                idx = tuple(int(p) for p in parts)
                if any(not 0 <= i < local_dim for i in idx):
                    raise ValueError(f"coupling index {idx} out of range for d={local_dim}")
                entries[idx] = complex(raw.replace(" ", ""))
            coupling = CouplingTensor.from_entries(local_dim, entries)
    return ToyChainSpec(n_sites, local_dim, coupling, beta, envelope)
