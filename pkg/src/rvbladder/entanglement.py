"""Generalized geometric measure and the marginal-form checks for RVB states."""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .lattice import LadderSpec
from .statevec import HOLE, DensityMatrix, SparseState, encode, purity, reduce

__all__ = [
    "GGM_SITE_CEILING",
    "DENSE_LIMIT",
    "GGMResult",
    "WernerForm",
    "MixednessReport",
    "largest_eigenvalue",
    "max_schmidt_sq",
    "ggm_pure",
    "ggm_from_block",
    "single_site_form",
    "werner_decompose",
    "min_partial_transpose_eigenvalue",
    "theorem_mixedness_scan",
]

GGM_SITE_CEILING = 14
DENSE_LIMIT = 729
TIE_TOL = 1e-12


@dataclass(frozen=True)
class GGMResult:
    ggm: float
    lambda_max_sq: float
    argmax_bipartition: tuple[int, ...]


def largest_eigenvalue(
    matrix, tol: float = 1e-12, max_iter: int = 100_000, seed: int = 0, shift: float = 0.0
) -> float:
    """Largest eigenvalue of a real symmetric PSD matrix.

    Dense ``eigvalsh`` below ``DENSE_LIMIT``; otherwise power iteration on
    ``matrix + shift*I`` until the Rayleigh quotient settles to ``tol``.  PSD
    inputs (Gram matrices) need no shift.

    Raises
    ------
    RuntimeError
        If the power iteration does not converge within ``max_iter`` steps.
    """
    n = matrix.shape[0]
    if n < DENSE_LIMIT:
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        return float(np.linalg.eigvalsh(0.5 * (dense + dense.T))[-1])
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = matrix @ v + shift * v
        new = float(v @ w)
        norm = np.linalg.norm(w)
        if norm == 0:
            return -shift
        v = w / norm
        if abs(new - lam) <= tol * max(1.0, abs(new)):
            return new - shift
        lam = new
    raise RuntimeError(f"power iteration did not converge in {max_iter} steps")


def _block_max_sv2(m: sp.csr_matrix) -> float:
    """Largest squared singular value of a sparse block."""
    r, c = m.shape
    gram = m @ m.T if r <= c else m.T @ m
    if gram.shape[0] < DENSE_LIMIT:
        return largest_eigenvalue(gram.toarray())
    return largest_eigenvalue(gram.tocsr())


def max_schmidt_sq(state: SparseState, part: Sequence[int], *, _digits=None, _charges=None) -> float:
    """Largest eigenvalue of the normalized reduced state on ``part``.

    The coefficient matrix is split into independent blocks (connected rows
    and columns) and only the blocks are diagonalized.
    """
    d = state.digits() if _digits is None else _digits
    part = list(part)
    rest = [s for s in range(state.n_sites) if s not in part]
    if not part or not rest:
        return 1.0
    a = encode(d[:, part])
    b = encode(d[:, rest])
    ua, ia = np.unique(a, return_inverse=True)
    ub, ib = np.unique(b, return_inverse=True)
    ia, ib = ia.ravel(), ib.ravel()
    amps = state.amps
    norm2 = float(amps @ amps)
    if _charges is not None:
        # states with fixed (n_up, n_down): the charge of ``part`` labels the blocks
        dp = d[:, part]
        labels = (dp == 0).sum(axis=1) * (len(part) + 1) + (dp == 1).sum(axis=1)
    else:
        graph = sp.coo_matrix(
            (np.ones(len(amps)), (ia, ua.size + ib)), shape=(ua.size + ub.size,) * 2
        )
        _, comp = connected_components(graph, directed=False)
        labels = comp[ia]
    best = 0.0
    order = np.argsort(labels, kind="stable")
    splits = np.flatnonzero(np.diff(labels[order])) + 1
    for idx in np.split(order, splits):
        ra, rinv = np.unique(ia[idx], return_inverse=True)
        cb, cinv = np.unique(ib[idx], return_inverse=True)
        if ra.size == 1 or cb.size == 1:
            val = float(amps[idx] @ amps[idx])
        else:
            m = sp.csr_matrix((amps[idx], (rinv.ravel(), cinv.ravel())), shape=(ra.size, cb.size))
            val = _block_max_sv2(m)
        best = max(best, val)
    return best / norm2


def _has_fixed_charges(digits: np.ndarray) -> bool:
    up = (digits == 0).sum(axis=1)
    down = (digits == 1).sum(axis=1)
    return bool(np.all(up == up[0]) and np.all(down == down[0]))


def _pick(best: tuple[float, tuple[int, ...]] | None, cand: tuple[float, tuple[int, ...]]):
    if best is None:
        return cand
    if cand[0] > best[0] + TIE_TOL:
        return cand
    if abs(cand[0] - best[0]) <= TIE_TOL and cand[1] < best[1]:
        return (max(cand[0], best[0]), cand[1])
    return best


def ggm_pure(state: SparseState, threads: int = 1, subsets=None) -> GGMResult:
    """GGM of a pure state by scanning every bipartition with ``|A| <= n/2``.

    Ties (within ``1e-12``) resolve to the lexicographically smallest ``A``.
    ``subsets`` restricts the scan (used for large states).
    """
    n = state.n_sites
    if state.norm2() <= 0:
        raise ValueError("GGM of a zero-norm state")
    if n > GGM_SITE_CEILING:
        raise ValueError(f"exact GGM is limited to {GGM_SITE_CEILING} sites, got {n}")
    if n == 1:
        return GGMResult(0.0, 1.0, (0,))
    d = state.digits()
    charges = True if _has_fixed_charges(d) else None
    if subsets is None:
        subsets = [c for size in range(1, n // 2 + 1) for c in itertools.combinations(range(n), size)]
    subsets = list(subsets)

    def one(part):
        return max_schmidt_sq(state, part, _digits=d, _charges=charges), tuple(part)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            values = list(pool.map(one, subsets))
    else:
        values = [one(s) for s in subsets]
    best = None
    for cand in values:  # fixed order keeps the reduction independent of threading
        best = _pick(best, cand)
    lam = min(best[0], 1.0)
    return GGMResult(1.0 - lam, lam, best[1])


def ggm_from_block(rho: DensityMatrix, whole_system: bool | None = None) -> GGMResult:
    """GGM estimate from a 4-site reduced block of a pure state.

    Takes the largest eigenvalue over the block itself (the block : rest cut)
    and all of its nonempty marginals.  When the block is the entire state
    (``whole_system=True``; a 2-rung ladder) the block : rest cut is empty and
    is skipped.  The default ``None`` treats a pure block as the whole state.
    """
    if len(rho.sites) != 4:
        raise ValueError(f"expected a 4-site block, got {len(rho.sites)} sites")
    rho = rho.normalized().validate()
    top = float(rho.eigvalsh()[-1])
    if whole_system is None:
        whole_system = top > 1.0 - 1e-12
    best = None if whole_system else (top, tuple(sorted(rho.sites)))
    for size in range(1, 4):
        for sub in itertools.combinations(rho.sites, size):
            best = _pick(best, (float(rho.reduce(sub).eigvalsh()[-1]), tuple(sorted(sub))))
    lam = min(best[0], 1.0)
    return GGMResult(1.0 - lam, lam, best[1])


def single_site_form(rho: DensityMatrix, tol: float = 1e-9) -> float:
    """Return ``p = <2|rho|2>`` after checking ``rho = p|2><2| + (1-p)/2 I_2``.

    Raises ValueError when the residual exceeds ``tol``.
    """
    if len(rho.sites) != 1:
        raise ValueError("single_site_form needs a one-site matrix")
    m = rho.matrix / rho.trace
    p = float(m[HOLE, HOLE])
    model = np.diag([(1 - p) / 2, (1 - p) / 2, p])
    resid = float(np.max(np.abs(m - model)))
    if resid > tol:
        raise ValueError(f"one-site marginal deviates from the invariant form by {resid:.3g}")
    return p


@dataclass(frozen=True)
class WernerForm:
    """``p1 |22><22| + p2 I_9/9 + p3 W(q)`` with ``W(q) = q|psi-><psi-| + (1-q) I_4/4``."""

    p1: float
    p2: float
    p3: float
    q: float
    residual: float

    def matrix(self) -> np.ndarray:
        return _werner_basis() @ np.array([self.p1, self.p2, self.p3, self.p3 * self.q])


def _psi_minus() -> np.ndarray:
    v = np.zeros(9)
    v[0 * 3 + 1], v[1 * 3 + 0] = np.sqrt(0.5), -np.sqrt(0.5)
    return v


def _werner_basis() -> np.ndarray:
    """Columns: vec|22><22|, vec I9/9, vec I4/4, vec(|psi-><psi-| - I4/4); output shape (9, 9, 4)."""
    hh = np.zeros((9, 9))
    hh[8, 8] = 1.0
    spin = np.zeros(9)
    spin[[0, 1, 3, 4]] = 1.0
    i4 = np.diag(spin)
    pm = np.outer(_psi_minus(), _psi_minus())
    return np.stack([hh, np.eye(9) / 9, i4 / 4, pm - i4 / 4], axis=-1)


def werner_decompose(rho: DensityMatrix, tol: float = 1e-6) -> WernerForm:
    """Least-squares fit of a two-site marginal to the invariant Werner family.

    ``q`` is reported as 0 when ``p3`` vanishes.  Raises ValueError if the
    Frobenius residual exceeds ``tol``.
    """
    if len(rho.sites) != 2:
        raise ValueError("werner_decompose needs a two-site matrix")
    m = rho.matrix / rho.trace
    basis = _werner_basis().reshape(81, 4)
    coef, *_ = np.linalg.lstsq(basis, m.ravel(), rcond=None)
    resid = float(np.linalg.norm(basis @ coef - m.ravel()))
    p1, p2, p3, r = (float(c) for c in coef)
    q = r / p3 if abs(p3) > 1e-12 else 0.0
    if resid > tol:
        raise ValueError(f"two-site marginal is not of Werner form (residual {resid:.3g})")
    return WernerForm(p1, p2, p3, q, resid)


def min_partial_transpose_eigenvalue(rho: DensityMatrix) -> float:
    """Smallest eigenvalue of the partial transpose on the second site."""
    if len(rho.sites) != 2:
        raise ValueError("partial transpose test needs a two-site matrix")
    pt = rho.partial_transpose([rho.sites[1]]) / rho.trace
    return float(np.linalg.eigvalsh(0.5 * (pt + pt.T))[0])


@dataclass
class MixednessReport:
    rungs: int
    boundary: str
    k: int
    status: str
    hole_probability: dict[int, float] = field(default_factory=dict)
    max_site_purity: float = float("nan")
    max_pair_purity: float = float("nan")
    rung_pt_min: dict[tuple[int, int], float] = field(default_factory=dict)
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.status != "violations"


def theorem_mixedness_scan(
    spec: LadderSpec, k: int, state: SparseState | None = None, purity_gap: float = 1e-6, npt_tol: float = 1e-10
) -> MixednessReport:
    """Check mixed one- and two-site marginals and entangled rungs of the RVB state.

    Uses the brute-force state, so it is limited to oracle-sized ladders.  The
    premise needs ``k >= 1``; ``k = 0`` returns status ``"premise excluded"``.
    """
    report = MixednessReport(spec.rungs, spec.boundary.value, k, "ok")
    if k == 0:
        report.status = "premise excluded"
        return report
    if state is None:
        from .coverings import build_rvb_state

        state = build_rvb_state(spec, k)
    site_pur = []
    for s in spec.sites:
        r1 = reduce(state, [s])
        site_pur.append(purity(r1))
        try:
            report.hole_probability[s] = single_site_form(r1)
        except ValueError as err:
            report.violations.append(f"site {s}: {err}")
    pair_pur = []
    for i, j in spec.edges:
        r2 = reduce(state, [i, j])
        pair_pur.append(purity(r2))
        if (i, j) in spec.rung_edges():
            ev = min_partial_transpose_eigenvalue(r2)
            report.rung_pt_min[(i, j)] = ev
            if ev >= -npt_tol:
                report.violations.append(f"rung {(i, j)}: partial transpose is PSD (min eig {ev:.3g})")
    report.max_site_purity = max(site_pur)
    report.max_pair_purity = max(pair_pur)
    for s, pur in zip(spec.sites, site_pur):
        if pur > 1 - purity_gap:
            report.violations.append(f"site {s}: marginal purity {pur:.12g}")
    for e, pur in zip(spec.edges, pair_pur):
        if pur > 1 - purity_gap:
            report.violations.append(f"edge {e}: marginal purity {pur:.12g}")
    if report.violations:
        report.status = "violations"
    return report
