"""Exact diagonalization of the t-J ladder in fixed (n_up, n_down) sectors.

H = -t sum_<ij>,s (c+_is c_js + h.c.) + J sum_<ij> S_i . S_j, acting on the
no-double-occupancy space.  Fermion signs come from a Jordan-Wigner string
along a site ordering (rung-major by default): a hop between i and j picks up
(-1)^(electrons strictly between them in that ordering).
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb

import numpy as np

from .lattice import LadderSpec
from .statevec import DOWN, HOLE, UP, SparseState, encode

__all__ = [
    "MAX_SITES",
    "TJParams",
    "SectorBasis",
    "GroundState",
    "LanczosError",
    "sector_basis",
    "apply_hamiltonian",
    "dense_hamiltonian",
    "lanczos_ground_state",
    "ground_state_at_density",
    "electron_counts",
]

log = logging.getLogger(__name__)

MAX_SITES = 14


class LanczosError(RuntimeError):
    pass


@dataclass(frozen=True)
class TJParams:
    """Hopping ``t`` and exchange ``J``.

    ``fermionic=False`` drops the Jordan-Wigner string and hops holes as plain
    qutrit levels; kept as a diagnostic for sign effects on periodic ladders.
    """

    t: float = 1.0
    J: float = 0.66
    fermionic: bool = True

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError(f"hopping t must be positive, got {self.t}")
        if not self.J >= 0:
            raise ValueError(f"exchange J must be non-negative, got {self.J}")


@dataclass(frozen=True, eq=False)
class SectorBasis:
    """Occupation strings with exactly ``n_up`` up and ``n_down`` down spins, lexicographic."""

    spec: LadderSpec
    n_up: int
    n_down: int
    codes: np.ndarray
    digits: np.ndarray
    jw_order: tuple[int, ...]

    @property
    def dim(self) -> int:
        return int(self.codes.size)

    @property
    def states(self) -> list[str]:
        return ["".join(map(str, row)) for row in self.digits]

    def index(self, codes) -> np.ndarray:
        """Positions of ``codes`` in the basis (-1 where absent)."""
        codes = np.asarray(codes, dtype=np.int64)
        pos = np.searchsorted(self.codes, codes)
        pos = np.minimum(pos, self.dim - 1)
        return np.where(self.codes[pos] == codes, pos, -1)

    def to_state(self, vector: np.ndarray) -> SparseState:
        return SparseState(self.spec.n_sites, self.codes, np.asarray(vector, dtype=float))

    def from_state(self, state: SparseState) -> np.ndarray:
        idx = self.index(state.codes)
        if np.any(idx < 0):
            raise ValueError("state has weight outside this sector")
        v = np.zeros(self.dim)
        v[idx] = state.amps
        return v


def sector_basis(spec: LadderSpec, n_up: int, n_down: int, jw_order=None) -> SectorBasis:
    """Enumerate the (n_up, n_down) block of the projected Hilbert space.

    ``jw_order`` lists the sites in Jordan-Wigner order; defaults to 0..2N-1.
    """
    n = spec.n_sites
    if n_up < 0 or n_down < 0 or n_up + n_down > n:
        raise ValueError(f"cannot place {n_up} up and {n_down} down electrons on {n} sites")
    rows = []
    for ups in itertools.combinations(range(n), n_up):
        free = [s for s in range(n) if s not in ups]
        for downs in itertools.combinations(free, n_down):
            row = [HOLE] * n
            for s in ups:
                row[s] = UP
            for s in downs:
                row[s] = DOWN
            rows.append(row)
    digits = np.array(rows, dtype=np.int8).reshape(len(rows), n)
    codes = encode(digits)
    order = np.argsort(codes)
    if jw_order is None:
        jw_order = tuple(range(n))
    if sorted(jw_order) != list(range(n)):
        raise ValueError("jw_order must be a permutation of the sites")
    assert codes.size == comb(n, n_up) * comb(n - n_up, n_down)
    return SectorBasis(spec, n_up, n_down, codes[order], digits[order], tuple(int(s) for s in jw_order))


def _between(basis: SectorBasis) -> dict[tuple[int, int], list[int]]:
    pos = {s: p for p, s in enumerate(basis.jw_order)}
    out = {}
    for i, j in basis.spec.edges:
        lo, hi = sorted((pos[i], pos[j]))
        out[(i, j)] = [basis.jw_order[p] for p in range(lo + 1, hi)]
    return out


def _member(basis: SectorBasis, codes) -> np.ndarray:
    idx = basis.index(codes)
    if np.any(idx < 0):
        raise RuntimeError("Hamiltonian term left the sector")
    return idx


def apply_hamiltonian(params: TJParams, basis: SectorBasis, v: np.ndarray) -> np.ndarray:
    """Matrix-free H v on the sector; nothing beyond the basis is stored."""
    v = np.asarray(v, dtype=float)
    if v.shape != (basis.dim,):
        raise ValueError(f"vector of length {v.shape} does not match sector dimension {basis.dim}")
    d = basis.digits
    n = basis.spec.n_sites
    weights = 3 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    out = np.zeros_like(v)
    occupied = d != HOLE
    for (i, j), mid in _between(basis).items():
        di, dj = d[:, i], d[:, j]
        wi, wj = weights[i], weights[j]
        # hopping: move the electron on one end into the hole on the other
        for src, dst, ws, wd in ((j, i, wj, wi), (i, j, wi, wj)):
            sel = np.flatnonzero((d[:, src] != HOLE) & (d[:, dst] == HOLE))
            if sel.size:
                s_val = d[sel, src].astype(np.int64)
                target = basis.codes[sel] + (HOLE - s_val) * ws + (s_val - HOLE) * wd
                sign = 1.0 - 2.0 * (occupied[np.ix_(sel, mid)].sum(axis=1) % 2) if mid and params.fermionic else 1.0
                np.add.at(out, _member(basis, target), -params.t * sign * v[sel])
        if params.J:
            both = np.flatnonzero((di != HOLE) & (dj != HOLE))
            si, sj = di[both], dj[both]
            parallel = si == sj
            out[both] += params.J * np.where(parallel, 0.25, -0.25) * v[both]
            flip = both[~parallel]
            if flip.size:
                a, b = d[flip, i].astype(np.int64), d[flip, j].astype(np.int64)
                target = basis.codes[flip] + (b - a) * wi + (a - b) * wj
                np.add.at(out, _member(basis, target), 0.5 * params.J * v[flip])
    return out


def dense_hamiltonian(params: TJParams, basis: SectorBasis) -> np.ndarray:
    """Dense sector matrix assembled column by column (reference use only)."""
    eye = np.eye(basis.dim)
    return np.column_stack([apply_hamiltonian(params, basis, eye[:, c]) for c in range(basis.dim)])


@dataclass
class GroundState:
    energy: float
    vector: SparseState
    residual: float
    gap: float = float("nan")
    iterations: int = 0
    basis: SectorBasis | None = field(default=None, repr=False)

    @property
    def degenerate(self) -> bool:
        return bool(self.gap < 1e-6)


def _lanczos_lowest(matvec, dim, start, tol, max_iter, max_basis, deflate=()):
    """Lowest eigenpair by Lanczos with full reorthogonalization and restarts."""
    Q = list(deflate)

    def project(x):
        for q in Q:
            x = x - (q @ x) * q
        return x

    v = project(start)
    nv = np.linalg.norm(v)
    if nv == 0:
        raise LanczosError("start vector lies in the deflated space")
    v /= nv
    total = 0
    energy, ritz = np.nan, v
    while total < max_iter:
        V = [v]
        alphas, betas = [], []
        converged = False
        for _ in range(min(max_basis, dim - len(Q))):
            w = project(matvec(V[-1]))
            total += 1
            alphas.append(float(V[-1] @ w))
            basis = np.array(V)
            w -= basis.T @ (basis @ w)
            w -= basis.T @ (basis @ w)
            beta = float(np.linalg.norm(w))
            T = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
            evals, evecs = np.linalg.eigh(T)
            energy = float(evals[0])
            est = abs(beta * evecs[-1, 0])
            if est < tol * 0.1 or beta < 1e-14 or total >= max_iter:
                converged = True
                break
            betas.append(beta)
            V.append(w / beta)
        y = evecs[:, 0]
        ritz = np.array(V[: len(y)]).T @ y
        ritz = project(ritz)
        ritz /= np.linalg.norm(ritz)
        res = float(np.linalg.norm(matvec(ritz) - energy * ritz))
        if res < tol:
            return energy, ritz, res, total
        if converged and total >= max_iter:
            break
        v = ritz
    raise LanczosError(f"Lanczos did not reach residual {tol:g} within {max_iter} iterations")


def lanczos_ground_state(
    params: TJParams,
    basis: SectorBasis,
    tol: float = 1e-10,
    seed: int = 0,
    max_iter: int = 2000,
    max_basis: int = 300,
    compute_gap: bool = True,
) -> GroundState:
    """Lowest eigenpair of the sector Hamiltonian.

    The start vector is drawn from ``numpy.random.default_rng(seed)``, so the
    result is reproducible.  With ``compute_gap`` a second deflated run gives
    the distance to the next level, which flags degenerate ground states.

    Raises
    ------
    LanczosError
        If the residual ``|Hv - Ev|`` does not drop below ``tol``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    dim = basis.dim
    matvec = lambda x: apply_hamiltonian(params, basis, x)  # noqa: E731
    if dim <= 2:
        h = dense_hamiltonian(params, basis)
        evals, evecs = np.linalg.eigh(h)
        vec = evecs[:, 0] * np.sign(evecs[np.argmax(np.abs(evecs[:, 0])), 0])
        gap = float(evals[1] - evals[0]) if dim > 1 else float("inf")
        res = float(np.linalg.norm(h @ vec - evals[0] * vec))
        return GroundState(float(evals[0]), basis.to_state(vec), res, gap, 0, basis)
    rng = np.random.default_rng(seed)
    start = rng.standard_normal(dim)
    energy, vec, res, it = _lanczos_lowest(matvec, dim, start, tol, max_iter, max_basis)
    gap = float("nan")
    if compute_gap:
        if dim == 1:
            gap = float("inf")
        else:
            e1, _, _, it1 = _lanczos_lowest(
                matvec, dim, rng.standard_normal(dim), tol, max_iter, max_basis, deflate=(vec,)
            )
            gap = max(e1 - energy, 0.0)
            it += it1
    # fix the overall sign so the largest-magnitude amplitude is positive
    vec = vec * np.sign(vec[np.argmax(np.abs(vec))])
    log.debug("sector (%d,%d) dim=%d E=%.12f res=%.2e gap=%.3g", basis.n_up, basis.n_down, dim, energy, res, gap)
    return GroundState(energy, basis.to_state(vec), res, gap, it, basis)


def electron_counts(spec: LadderSpec, n_el) -> tuple[int, int]:
    """(n_up, n_down) for density ``n_el`` at S^z = 0; needs an even electron count."""
    electrons = Fraction(n_el).limit_denominator(10 * spec.n_sites) * spec.n_sites
    if abs(float(electrons) - float(n_el) * spec.n_sites) > 1e-9 or electrons.denominator != 1:
        raise ValueError(f"n_el={n_el} does not give an integer electron count on {spec.n_sites} sites")
    electrons = int(electrons)
    if electrons % 2 or not 0 <= electrons <= spec.n_sites:
        raise ValueError(f"n_el={n_el} gives {electrons} electrons; S^z = 0 needs an even count")
    return electrons // 2, electrons // 2


def ground_state_at_density(
    params: TJParams, spec: LadderSpec, n_el, tol: float = 1e-10, seed: int = 0, **kwargs
) -> GroundState:
    """Ground state of the S^z = 0 sector with ``n_el * 2N`` electrons."""
    if spec.n_sites > MAX_SITES:
        raise ValueError(f"exact diagonalization is limited to {MAX_SITES} sites, got {spec.n_sites}")
    n_up, n_down = electron_counts(spec, n_el)
    basis = sector_basis(spec, n_up, n_down)
    return lanczos_ground_state(params, basis, tol=tol, seed=seed, **kwargs)
