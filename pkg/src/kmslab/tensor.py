"""Tensor-product bookkeeping for chains of finite-dimensional factors.

Basis convention: a product space with local dimensions ``dims = (d_0, ..,
d_{N-1})`` is enumerated in mixed radix with site 0 as the most significant
digit, matching a left-to-right ``numpy.kron`` chain.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np


def kron_chain(mats: Sequence[np.ndarray]) -> np.ndarray:
    """Kronecker product of a sequence of matrices, site 0 leftmost."""
    out = np.asarray(mats[0])
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def embed_factors(factors: Mapping[int, np.ndarray], dims: Sequence[int]) -> np.ndarray:
    """Embed per-site matrices into the full product space, identity elsewhere."""
    mats = []
    for site, d in enumerate(dims):
        if site in factors:
            m = np.asarray(factors[site])
            if m.shape != (d, d):
                raise ValueError(f"factor at site {site} has shape {m.shape}, expected {(d, d)}")
            mats.append(m)
        else:
            mats.append(np.eye(d))
    return kron_chain(mats)


def basis_permutation(dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Map basis indices of the reordered factorization back to natural site order.

    ``perm[i]`` is the natural-order basis index of the i-th basis vector of
    the space factorized in the site sequence ``order``.
    """
    dims = list(dims)
    n = len(dims)
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of all sites")
    total = int(np.prod(dims))
    idx = np.arange(total)
    digits = {}
    for pos in reversed(range(n)):  # last factor varies fastest
        site = order[pos]
        digits[site] = idx % dims[site]
        idx = idx // dims[site]
    nat = np.zeros(total, dtype=np.int64)
    for site in range(n):
        nat = nat * dims[site] + digits[site]
    return nat


def embed_pair(op2: np.ndarray, a: int, b: int, dims: Sequence[int]) -> np.ndarray:
    """Embed a two-site operator acting on the ordered pair of sites (a, b).

    ``op2`` is a (d_a*d_b, d_a*d_b) matrix in the basis |x_a x_b> with x_a the
    most significant digit. Sites a and b need not be adjacent.
    """
    dims = list(dims)
    n = len(dims)
    if a == b:
        raise ValueError("sites must be distinct")
    da, db = dims[a], dims[b]
    if op2.shape != (da * db, da * db):
        raise ValueError(f"pair operator has shape {op2.shape}, expected {(da * db, da * db)}")
    rest = [i for i in range(n) if i not in (a, b)]
    d_rest = int(np.prod([dims[i] for i in rest])) if rest else 1
    big = np.kron(op2, np.eye(d_rest))
    perm = basis_permutation(dims, [a, b] + rest)
    out = np.empty_like(big)
    out[np.ix_(perm, perm)] = big
    return out


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out all factors not listed in ``keep`` (returned in site order)."""
    dims = list(dims)
    n = len(dims)
    keep = sorted(set(int(k) for k in keep))
    if keep and (keep[0] < 0 or keep[-1] >= n):
        raise ValueError(f"keep={keep} out of range for {n} factors")
    if not keep:
        raise ValueError("must keep at least one factor")
    traced = [i for i in range(n) if i not in keep]
    total = int(np.prod(dims))
    if rho.shape != (total, total):
        raise ValueError(f"state has shape {rho.shape}, expected {(total, total)}")
    t = rho.reshape(dims + dims)
    axes = keep + traced + [n + k for k in keep] + [n + j for j in traced]
    t = np.transpose(t, axes)
    dk = int(np.prod([dims[k] for k in keep]))
    dt = total // dk
    t = t.reshape(dk, dt, dk, dt)
    return np.einsum("abcb->ac", t)
