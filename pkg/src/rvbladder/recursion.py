"""Linear-cost recursion for norms and 4-site reduced states of doped RVB ladders.

The ladder is swept one rung at a time.  The state crossing each rung boundary
is summarised by a frontier label per leg: no open bond, or an open horizontal
singlet whose left end carries spin up / spin down.  A rung then acts as a
small tensor ``A[frontier_in, (top, bottom), frontier_out]`` and the doped RVB
state is the product of these tensors.  Bra and ket are swept together, with
an extra index counting occupied sites, so the norms ``Z`` and the reduced
block for every dimer number ``k`` come out of a single O(N) pass.

Nothing is normalized until the very end; all intermediate weights are
unnormalized covering-sum overlaps.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .coverings import Covering, covering_state
from .lattice import Boundary, build_ladder
from .statevec import HOLE, DensityMatrix, SparseState

__all__ = [
    "NormTable",
    "JunctionState",
    "JUNCTION_LABELS",
    "d_sequence",
    "z_table",
    "junction_state",
    "generate_open_state",
    "rho_red_open",
    "rho_red_periodic",
    "periodic_term_families",
    "rho_red_all_k",
]

SQRT_HALF = np.sqrt(0.5)
NONE, DANGLE_UP, DANGLE_DOWN = 0, 1, 2
BOND = 9  # frontier labels per rung boundary (3 per leg)
PAIR = BOND * BOND
_EMPTY = 0  # (NONE, NONE)


# ---------------------------------------------------------------------------
# D sequence and norm tables


def d_sequence(x: int) -> int:
    """D_x with D_0 = D_1 = 1 and D_x = D_{x-1} + 2 D_{x-2}."""
    if int(x) != x or x < 0:
        raise ValueError(f"D_x needs a non-negative integer, got {x!r}")
    a, b = 1, 1
    for _ in range(int(x) - 1):
        a, b = b, b + 2 * a
    return b if x >= 1 else a


@dataclass(frozen=True)
class NormTable:
    """``Z[(hole_pairs, dimers)] = <N-k,k|N-k,k>`` plus the D sequence.

    For open ladders every sub-ladder up to ``rungs`` is tabulated (the sweep
    produces them for free); periodic tables hold only ``hole_pairs + dimers
    == rungs``.
    """

    rungs: int
    boundary: Boundary
    Z: Mapping[tuple[int, int], float]
    D: Mapping[int, int] = field(default_factory=dict)

    def norm(self, k: int, rungs: int | None = None) -> float:
        n = self.rungs if rungs is None else rungs
        return self.Z[(n - k, k)]

    def row(self, rungs: int | None = None) -> np.ndarray:
        n = self.rungs if rungs is None else rungs
        return np.array([self.Z[(n - k, k)] for k in range(n + 1)])


# ---------------------------------------------------------------------------
# rung tensors


def _dimer_amp(spin_a: int) -> float:
    return SQRT_HALF if spin_a == 0 else -SQRT_HALF


def _leg_options(incoming: int, current_is_a: bool):
    """(spin, outgoing, amplitude) choices for one site that is not in a rung dimer."""
    if incoming != NONE:
        left_spin = incoming - 1
        spin = 1 - left_spin
        amp = _dimer_amp(spin if current_is_a else left_spin)
        return [(spin, NONE, amp)]
    return [(HOLE, NONE, 1.0), (0, DANGLE_UP, 1.0), (1, DANGLE_DOWN, 1.0)]


@lru_cache(maxsize=2)
def _rung_tensor(parity: int) -> np.ndarray:
    """A[bond_in, 3*top + bottom, bond_out] for a rung whose index has this parity."""
    a = np.zeros((BOND, 9, BOND))
    top_is_a = parity == 0
    for t_in in range(3):
        for b_in in range(3):
            bin_ = 3 * t_in + b_in
            for st, t_out, at in _leg_options(t_in, top_is_a):
                for sb, b_out, ab in _leg_options(b_in, not top_is_a):
                    a[bin_, 3 * st + sb, 3 * t_out + b_out] += at * ab
            if t_in == NONE and b_in == NONE:
                for s in (0, 1):
                    amp = _dimer_amp(s if top_is_a else 1 - s)
                    a[bin_, 3 * s + (1 - s), _EMPTY] += amp
    return a


_OCC = np.array([(t != HOLE) + (b != HOLE) for t in range(3) for b in range(3)])


@lru_cache(maxsize=2)
def _transfer(parity: int) -> np.ndarray:
    """E[c][(a, a'), (b, b')]: bra-ket transfer over one traced rung with c occupied sites."""
    a = _rung_tensor(parity)
    e = np.zeros((3, PAIR, PAIR))
    for c in range(3):
        sel = a[:, _OCC == c, :]
        e[c] = np.einsum("apb,ApB->aAbB", sel, sel).reshape(PAIR, PAIR)
    return e


@lru_cache(maxsize=2)
def _block_tensor(parity: int) -> np.ndarray:
    """Two-rung ket tensor K[bond_in, 81 physical, bond_out], first rung of given parity."""
    a0 = _rung_tensor(parity)
    a1 = _rung_tensor(1 - parity)
    k = np.einsum("apx,xqb->apqb", a0, a1)
    return k.reshape(BOND, 81, BOND)


_BLOCK_OCC = (_OCC[:, None] + _OCC[None, :]).ravel()


def _step_vector(env: np.ndarray, parity: int) -> np.ndarray:
    """Advance a left environment env[count, pair] over one traced rung."""
    e = _transfer(parity)
    out = np.zeros((env.shape[0] + 2, PAIR))
    for c in range(3):
        out[c : c + env.shape[0]] += env @ e[c]
    return out


@lru_cache(maxsize=2)
def _transfer_sparse(parity: int) -> tuple:
    return tuple(sp.csc_matrix(e) for e in _transfer(parity))


def _step_operator(op: np.ndarray, parity: int) -> np.ndarray:
    """Right-multiply a count-resolved operator op[count, pair, pair] by one rung transfer."""
    n = op.shape[0]
    out = np.zeros((n + 2, PAIR, PAIR))
    flat = op.reshape(n * PAIR, PAIR)
    for c, e in enumerate(_transfer_sparse(parity)):
        out[c : c + n] += np.asarray(flat @ e).reshape(n, PAIR, PAIR)
    return out


def _left_envs(n_rungs: int) -> list[np.ndarray]:
    """envs[r] is the environment to the left of rung r (open left edge)."""
    env = np.zeros((1, PAIR))
    env[0, _EMPTY * BOND + _EMPTY] = 1.0
    envs = [env]
    for r in range(n_rungs):
        env = _step_vector(env, r % 2)
        envs.append(env)
    return envs


def _right_env(start: int, n_rungs: int) -> np.ndarray:
    """Environment to the right of rung ``start - 1`` for an open right edge, as R[count, pair]."""
    env = np.zeros((1, PAIR))
    env[0, _EMPTY * BOND + _EMPTY] = 1.0
    for r in range(n_rungs - 1, start - 1, -1):
        e = _transfer(r % 2)
        out = np.zeros((env.shape[0] + 2, PAIR))
        for c in range(3):
            out[c : c + env.shape[0]] += env @ e[c].T
        env = out
    return env


def _check_rungs(n: int, boundary: Boundary):
    if int(n) != n or n < 1:
        raise ValueError(f"rungs must be a positive integer, got {n!r}")
    if boundary is Boundary.PERIODIC:
        build_ladder(n, boundary)  # validates even N >= 4


def z_table(N: int, boundary="open") -> NormTable:
    """Norms Z(N-k, k) for 0 <= k <= N from one transfer sweep."""
    boundary = Boundary.parse(boundary)
    _check_rungs(N, boundary)
    z: dict[tuple[int, int], float] = {}
    if boundary is Boundary.OPEN:
        envs = _left_envs(N)
        for n in range(1, N + 1):
            col = envs[n][:, _EMPTY * BOND + _EMPTY]
            for k in range(n + 1):
                z[(n - k, k)] = float(col[2 * k])
    else:
        diag = _periodic_operator(N, 0).diagonal(axis1=1, axis2=2).sum(axis=1)
        for k in range(N + 1):
            z[(N - k, k)] = float(diag[2 * k])
    return NormTable(N, boundary, z, {x: d_sequence(x) for x in range(N + 1)})


@lru_cache(maxsize=8)
def _periodic_operator(N: int, first: int) -> np.ndarray:
    """Count-resolved product of transfers over rungs first .. N-1 (then wraps to rung 0)."""
    op = np.zeros((1, PAIR, PAIR))
    op[0] = np.eye(PAIR)
    for r in range(first, N):
        op = _step_operator(op, r % 2)
    return op


# ---------------------------------------------------------------------------
# reduced blocks


def _contract_block(parity: int, weights: np.ndarray, k: int) -> np.ndarray:
    """Sum over block occupations of K W K for total occupation 2k.

    ``weights[t]`` is the environment tensor W[a, a', b, b'] carrying ``t``
    occupied sites outside the block.
    """
    kt = _block_tensor(parity)
    rho = np.zeros((81, 81))
    for cb in range(5):
        t = 2 * k - cb
        if t < 0 or t >= weights.shape[0]:
            continue
        idx = np.flatnonzero(_BLOCK_OCC == cb)
        kb = kt[:, idx, :]
        w = weights[t].reshape(BOND, BOND, BOND, BOND)
        half = np.einsum("apb,aAbB->pAB", kb, w)
        rho[np.ix_(idx, idx)] += np.einsum("pAB,AqB->pq", half, kb)
    return rho


@lru_cache(maxsize=16)
def _open_blocks(N: int, m: int) -> np.ndarray:
    """Unnormalized 4-site blocks at rungs (m-1, m) for every k, shape (N+1, 81, 81)."""
    left = _left_envs(m - 1)[m - 1]
    right = _right_env(m + 1, N)
    weights = np.zeros((left.shape[0] + right.shape[0] - 1, PAIR, PAIR))
    for c1 in range(left.shape[0]):
        weights[c1 : c1 + right.shape[0]] += left[c1][None, :, None] * right[:, None, :]
    # W[a, a', b, b'] expects (left pair, right pair) order
    w = weights.reshape(-1, BOND, BOND, BOND, BOND)
    out = np.array([_contract_block((m - 1) % 2, w.reshape(-1, PAIR * PAIR), k) for k in range(N + 1)])
    return out


def _periodic_weights(N: int) -> np.ndarray:
    """W[t, a, a', b, b'] for the block at rungs (0, 1); ``a`` is the wrap bond."""
    op = _periodic_operator(N, 2)  # maps bond after rung 1 -> bond before rung 0
    return op.reshape(-1, BOND, BOND, BOND, BOND).transpose(0, 3, 4, 1, 2)


@lru_cache(maxsize=16)
def _periodic_blocks(N: int) -> np.ndarray:
    """Unnormalized blocks at rungs (0, 1) for every k."""
    w = np.ascontiguousarray(_periodic_weights(N)).reshape(-1, PAIR * PAIR)
    return np.array([_contract_block(0, w, k) for k in range(N + 1)])


def _periodic_family_block(N: int, k: int, family: str) -> np.ndarray:
    mask = _wrap_family_masks()[family]
    w = _periodic_weights(N) * mask[None, :, :, None, None]
    return _contract_block(0, w.reshape(-1, PAIR * PAIR), k)


def _wrap_kind(bond: int) -> str:
    t, b = divmod(bond, 3)
    n_open = (t != NONE) + (b != NONE)
    return ("none", "single", "both")[n_open]


def _wrap_family_masks() -> dict[str, np.ndarray]:
    """Classify (ket, bra) wrap-bond pairs into the NP / P1 / P2 / P12 families."""
    table = {
        ("none", "none"): "NP",
        ("both", "both"): "P1",
        ("both", "none"): "P1",
        ("none", "both"): "P1",
        ("single", "single"): "P2",
        ("single", "none"): "P2",
        ("none", "single"): "P2",
        ("both", "single"): "P12",
        ("single", "both"): "P12",
    }
    masks = {name: np.zeros((BOND, BOND)) for name in ("NP", "P1", "P2", "P12")}
    for a in range(BOND):
        for b in range(BOND):
            masks[table[(_wrap_kind(a), _wrap_kind(b))]][a, b] = 1.0
    return masks


def rho_red_all_k(N: int, boundary="open", rung_pair=None) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized blocks for all k and their traces (which equal Z)."""
    boundary = Boundary.parse(boundary)
    _check_rungs(N, boundary)
    if N < 2:
        raise ValueError("a two-rung block needs N >= 2")
    if boundary is Boundary.OPEN:
        if rung_pair is None:
            rung_pair = (N - 2, N - 1)
        r1, r2 = (int(r) for r in rung_pair)
        if r2 != r1 + 1 or r1 < 0 or r2 >= N:
            raise ValueError(f"rungs {rung_pair} are not an adjacent pair of an open {N}-rung ladder")
        blocks = _open_blocks(N, r2)
    else:
        blocks = _periodic_blocks(N)
    return blocks, np.trace(blocks, axis1=1, axis2=2)


def _normalized(blocks: np.ndarray, k: int, N: int, sites) -> DensityMatrix:
    if not 0 <= k <= N:
        raise ValueError(f"k={k} outside 0..{N}")
    m = blocks[k]
    m = 0.5 * (m + m.T)
    return DensityMatrix(tuple(sites), m / np.trace(m))


def rho_red_open(N: int, k: int, rung_pair=None) -> DensityMatrix:
    """Normalized reduced state on rungs ``rung_pair`` (default: the last two) of an open ladder."""
    if rung_pair is None:
        rung_pair = (N - 2, N - 1)
    blocks, _ = rho_red_all_k(N, Boundary.OPEN, rung_pair)
    r1, r2 = rung_pair
    return _normalized(blocks, k, N, (2 * r1, 2 * r1 + 1, 2 * r2, 2 * r2 + 1))


def rho_red_periodic(N: int, k: int) -> DensityMatrix:
    """Normalized reduced state on rungs (0, 1) of a periodic ladder (any pair by translation)."""
    blocks, _ = rho_red_all_k(N, Boundary.PERIODIC)
    return _normalized(blocks, k, N, (0, 1, 2, 3))


def periodic_term_families(N: int, k: int) -> dict[str, np.ndarray]:
    """Split the periodic block by which wrap singlets bra and ket carry.

    Keys: ``NP`` (no wrap singlet in either), ``P1`` (both legs wrap in at
    least one side, the other side both or none), ``P2`` (one leg wraps, the
    other side one or none) and ``P12`` (both legs against one leg).  Each
    matrix is divided by the full norm, so the four add up to the block.
    """
    boundary = Boundary.PERIODIC
    _check_rungs(N, boundary)
    if not 0 <= k <= N:
        raise ValueError(f"k={k} outside 0..{N}")
    z = np.trace(_periodic_blocks(N)[k])
    return {name: _periodic_family_block(N, k, name) / z for name in ("NP", "P1", "P2", "P12")}


# ---------------------------------------------------------------------------
# junction states


JUNCTION_LABELS = ("Chi", "TwoBar", "Xi", "Gamma1", "Gamma2", "Zeta")


@dataclass(frozen=True)
class JunctionState:
    """An explicit window state; ``rungs`` rungs indexed locally from 0."""

    label: str
    k: int | None
    rungs: int
    coverings: tuple[Covering, ...]
    window: SparseState


def _window_state(rungs: int, covs) -> SparseState:
    spec = build_ladder(rungs, "open")
    parts = [covering_state(spec, c) for c in covs]
    return sum(parts[1:], parts[0])


def _staircases(m: int) -> list[Covering]:
    """Coverings of an m-rung window by m-1 horizontal singlets alternating legs."""
    covs = []
    for start_leg in (0, 1):
        # grow from the right: the seed is one horizontal singlet on two rungs
        dimers = [(start_leg, 2 + start_leg)]
        hole_leg = 1 - start_leg  # hole on the leftmost rung
        for _ in range(m - 2):
            dimers = [(a + 2, b + 2) for a, b in dimers]
            dimers.append((hole_leg, 2 + hole_leg))
            hole_leg = 1 - hole_leg
        used = {s for d in dimers for s in d}
        holes = tuple(s for s in range(2 * m) if s not in used)
        covs.append(Covering(tuple(sorted(dimers)), holes))
    return sorted(covs, key=lambda c: c.dimers)


def junction_state(label: str, k: int | None = None) -> JunctionState:
    """Explicit window states used to organise the covering sum.

    ``Chi`` (k >= 2): k rungs, k-1 horizontal singlets crossing every internal
    rung boundary, one hole at each end.  ``Chi(k+1)`` is ``Chi(k)`` with a rung
    added on the left and a horizontal singlet from it to the old end hole.
    ``TwoBar``: a 2x2 plaquette holding two parallel leg singlets, i.e. the
    two-dimer plaquette RVB minus the two-rung-singlet covering.

    The periodic windows sit on the two rungs joined by the wrap edges
    (last rung first): ``Gamma1`` / ``Gamma2`` carry one wrapped singlet on the
    top / bottom leg with holes at the other leg's end sites, ``Xi`` is their
    sum (the wrapped analogue of ``Chi(2)``), and ``Zeta`` carries wrapped
    singlets on both legs.
    """
    if label not in JUNCTION_LABELS:
        raise ValueError(f"unknown junction label {label!r}")
    if label == "Chi":
        if k is None or k < 2:
            raise ValueError("Chi(k) is defined for k >= 2")
        covs = _staircases(k)
        return JunctionState("Chi", k, k, tuple(covs), _window_state(k, covs))
    if k is not None:
        raise ValueError(f"{label} takes no k")
    two_leg = Covering(((0, 2), (1, 3)), ())
    gamma1 = Covering(((0, 2),), (1, 3))
    gamma2 = Covering(((1, 3),), (0, 2))
    covs = {
        "TwoBar": (two_leg,),
        "Zeta": (two_leg,),
        "Gamma1": (gamma1,),
        "Gamma2": (gamma2,),
        "Xi": (gamma1, gamma2),
    }[label]
    return JunctionState(label, None, 2, covs, _window_state(2, covs))


def _segment_states() -> dict:
    hole_rung = SparseState.product([HOLE, HOLE])
    rung_singlet = covering_state(build_ladder(1, "open"), Covering(((0, 1),), ()))
    return {"H": hole_rung, "R": rung_singlet}


def generate_open_state(N: int, k: int) -> SparseState:
    """Open-ladder RVB state grown rung-block by rung-block from junction states.

    Every covering splits uniquely at the rung boundaries no singlet crosses
    into irreducible pieces: an empty rung, a rung singlet, the two-leg
    plaquette, or a staircase ``Chi(m)``.  The state of ``n`` rungs is the sum
    over the last piece appended to the state of the remaining rungs; pieces
    starting on an odd rung pick up ``(-1)^dimers`` from the swapped
    sublattice.  Exponential cost, intended as a cross-check.
    """
    if not 0 <= k <= N:
        raise ValueError(f"k={k} outside 0..{N}")
    seg = _segment_states()
    pieces = [(1, 0, seg["H"]), (1, 1, seg["R"]), (2, 2, junction_state("TwoBar").window)]
    pieces += [(m, m - 1, junction_state("Chi", m).window) for m in range(2, N + 1)]
    unit = object()
    memo: dict = {}

    def state(n: int, d: int):
        if n == 0:
            return unit if d == 0 else None
        if (n, d) not in memo:
            total = None
            for width, dimers, piece in pieces:
                if width > n or dimers > d:
                    continue
                head = state(n - width, d - dimers)
                if head is None:
                    continue
                if (n - width) % 2:
                    piece = piece * (-1.0) ** dimers
                term = piece if head is unit else head.kron(piece)
                total = term if total is None else total + term
            memo[(n, d)] = total
        return memo[(n, d)]

    out = state(N, k)
    return SparseState.zero(2 * N) if out is None else out
