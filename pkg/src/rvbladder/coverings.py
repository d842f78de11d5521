"""Brute-force dimer/hole coverings and the exact doped RVB state built from them.

Everything here scales exponentially and is meant as ground truth for small
ladders (up to about seven rungs).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .lattice import LadderSpec, site
from .statevec import HOLE, DensityMatrix, SparseState, encode, inner, reduce

__all__ = [
    "Covering",
    "enumerate_coverings",
    "count_coverings",
    "covering_state",
    "build_rvb_state",
    "oracle_rho_red",
    "oracle_norm",
    "block_sites",
    "format_covering",
    "export_coverings",
]

SQRT_HALF = np.sqrt(0.5)


@dataclass(frozen=True)
class Covering:
    dimers: tuple[tuple[int, int], ...]
    holes: tuple[int, ...]

    @property
    def k(self) -> int:
        return len(self.dimers)


def _check_k(spec: LadderSpec, k: int):
    if not 0 <= k <= spec.rungs:
        raise ValueError(f"k={k} outside 0..{spec.rungs}")


def enumerate_coverings(spec: LadderSpec, k: int) -> list[Covering]:
    """All placements of ``k`` vertex-disjoint nearest-neighbour dimers.

    Sites are visited in index order; each is either a hole or paired with a
    higher-indexed free neighbour, so every matching is produced exactly once.
    """
    _check_k(spec, k)
    n = spec.n_sites
    nbrs = [[j for j in spec.neighbors(i) if j > i] for i in range(n)]
    used = [False] * n
    out: list[Covering] = []
    dimers: list[tuple[int, int]] = []

    def rec(i: int, holes_left: int):
        while i < n and used[i]:
            i += 1
        if i == n:
            if len(dimers) == k:
                holes = tuple(s for s in range(n) if s not in {x for d in dimers for x in d})
                out.append(Covering(tuple(sorted(dimers)), holes))
            return
        if holes_left > 0:
            used[i] = True
            rec(i + 1, holes_left - 1)
            used[i] = False
        if len(dimers) < k:
            for j in nbrs[i]:
                if not used[j]:
                    used[i] = used[j] = True
                    dimers.append((i, j))
                    rec(i + 1, holes_left)
                    dimers.pop()
                    used[i] = used[j] = False

    rec(0, n - 2 * k)
    out.sort(key=lambda c: c.dimers)
    return out


def count_coverings(spec: LadderSpec, k: int) -> int:
    return len(enumerate_coverings(spec, k))


def covering_state(spec: LadderSpec, covering: Covering) -> SparseState:
    """Product of singlets (A site in the first slot) and hole kets."""
    n = spec.n_sites
    k = covering.k
    bits = (np.arange(2**k)[:, None] >> np.arange(k)[None, :]) & 1
    digits = np.full((2**k, n), HOLE, dtype=np.int64)
    sign = np.ones(2**k)
    for col, (u, v) in enumerate(covering.dimers):
        a, b = (u, v) if spec.is_a_site(u) else (v, u)
        digits[:, a] = bits[:, col]
        digits[:, b] = 1 - bits[:, col]
        sign *= np.where(bits[:, col] == 0, 1.0, -1.0)
    return SparseState(n, encode(digits), sign * SQRT_HALF**k)


def build_rvb_state(spec: LadderSpec, k: int) -> SparseState:
    """Unnormalized equal-weight superposition of all k-dimer coverings."""
    if spec.sublattice is None:
        raise ValueError("RVB states need a bipartite ladder")
    covs = enumerate_coverings(spec, k)
    parts = [covering_state(spec, c) for c in covs]
    codes = np.concatenate([p.codes for p in parts])
    amps = np.concatenate([p.amps for p in parts])
    return SparseState(spec.n_sites, codes, amps)


def oracle_norm(spec: LadderSpec, k: int) -> float:
    psi = build_rvb_state(spec, k)
    return inner(psi, psi)


def block_sites(spec: LadderSpec, rung_pair: Sequence[int]) -> list[int]:
    """Sites of two adjacent rungs in block order (top, bottom of each rung)."""
    r1, r2 = (int(r) for r in rung_pair)
    n = spec.rungs
    adjacent = r2 == r1 + 1 and 0 <= r1 and r2 < n
    if spec.periodic:
        adjacent = adjacent or (r1 == n - 1 and r2 == 0)
    if not adjacent:
        raise ValueError(f"rungs {rung_pair} are not an adjacent pair on this ladder")
    return [site(r1, 0), site(r1, 1), site(r2, 0), site(r2, 1)]


def oracle_rho_red(spec: LadderSpec, k: int, rung_pair: Sequence[int] | None = None) -> DensityMatrix:
    """Exact 4-site reduced state of the RVB state; defaults to the last two rungs."""
    if rung_pair is None:
        rung_pair = (spec.rungs - 2, spec.rungs - 1)
    keep = block_sites(spec, rung_pair)
    _check_k(spec, k)
    return reduce(_oracle_state(spec, k), keep)


@lru_cache(maxsize=64)
def _oracle_state_cached(rungs: int, boundary: str, k: int) -> SparseState:
    from .lattice import build_ladder

    return build_rvb_state(build_ladder(rungs, boundary), k)


def _oracle_state(spec: LadderSpec, k: int) -> SparseState:
    return _oracle_state_cached(spec.rungs, spec.boundary.value, k)


def format_covering(c: Covering) -> str:
    dimers = " ".join(f"{a}-{b}" for a, b in c.dimers)
    holes = " ".join(str(h) for h in c.holes)
    return f"{dimers} | {holes}".strip()


def export_coverings(spec: LadderSpec, k: int, fh=None) -> str:
    """One covering per line: sorted dimer edges, ``|``, then hole sites."""
    text = "".join(format_covering(c) + "\n" for c in enumerate_coverings(spec, k))
    if fh is not None:
        fh.write(text)
    return text
