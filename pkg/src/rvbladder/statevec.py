"""Sparse real states on qutrit sites and their reduced density matrices.

Local levels: ``0`` spin up, ``1`` spin down, ``2`` hole.  A configuration of
``n`` sites is stored as a base-3 integer with site 0 as the most significant
digit, so numeric order of codes equals lexicographic order of strings.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

__all__ = [
    "UP",
    "DOWN",
    "HOLE",
    "PRUNE_TOL",
    "SparseState",
    "DensityMatrix",
    "encode",
    "decode",
    "inner",
    "partial_trace",
    "reduce",
    "purity",
    "dump_rho",
    "load_rho",
    "dump_state",
    "load_state",
]

UP, DOWN, HOLE = 0, 1, 2
PRUNE_TOL = 1e-14
_LETTERS = {"0": 0, "1": 1, "2": 2, "u": 0, "d": 1, "h": 2}


def encode(digits: np.ndarray) -> np.ndarray:
    """Base-3 codes for rows of ``digits`` (site 0 most significant)."""
    digits = np.atleast_2d(np.asarray(digits, dtype=np.int64))
    n = digits.shape[1]
    weights = 3 ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return digits @ weights


def decode(codes, n_sites: int) -> np.ndarray:
    """Inverse of :func:`encode`; returns an ``(len(codes), n_sites)`` array."""
    codes = np.atleast_1d(np.asarray(codes, dtype=np.int64))
    out = np.empty((codes.size, n_sites), dtype=np.int8)
    rest = codes.copy()
    for j in range(n_sites - 1, -1, -1):
        out[:, j] = rest % 3
        rest //= 3
    return out


def _parse_key(key, n_sites: int) -> int:
    if isinstance(key, (int, np.integer)):
        return int(key)
    if isinstance(key, str):
        digits = [_LETTERS[c] for c in key if not c.isspace()]
    else:
        digits = list(key)
    if len(digits) != n_sites:
        raise ValueError(f"configuration {key!r} does not have {n_sites} sites")
    return int(encode(np.array(digits))[0])


@dataclass(frozen=True, eq=False)
class SparseState:
    """Unnormalized real state as sorted base-3 codes with nonzero amplitudes."""

    n_sites: int
    codes: np.ndarray
    amps: np.ndarray

    def __post_init__(self):
        codes = np.asarray(self.codes, dtype=np.int64).ravel()
        amps = np.asarray(self.amps, dtype=np.float64).ravel()
        if codes.shape != amps.shape:
            raise ValueError("codes and amplitudes differ in length")
        if codes.size and (codes.min() < 0 or codes.max() >= 3**self.n_sites):
            raise ValueError("configuration code out of range for n_sites")
        uniq, inv = np.unique(codes, return_inverse=True)
        summed = np.zeros(uniq.size)
        np.add.at(summed, inv, amps)
        keep = np.abs(summed) > PRUNE_TOL
        codes, amps = uniq[keep], summed[keep]
        codes.setflags(write=False)
        amps.setflags(write=False)
        object.__setattr__(self, "codes", codes)
        object.__setattr__(self, "amps", amps)

    # construction -----------------------------------------------------
    @classmethod
    def zero(cls, n_sites: int) -> "SparseState":
        return cls(n_sites, np.zeros(0, np.int64), np.zeros(0))

    @classmethod
    def from_dict(cls, n_sites: int, mapping: Mapping) -> "SparseState":
        codes = [_parse_key(k, n_sites) for k in mapping]
        return cls(n_sites, np.array(codes, dtype=np.int64), np.array(list(mapping.values()), dtype=float))

    @classmethod
    def product(cls, occupation: Sequence[int] | str, amp: float = 1.0) -> "SparseState":
        n = len([c for c in occupation if not (isinstance(c, str) and c.isspace())])
        return cls(n, np.array([_parse_key(occupation, n)]), np.array([amp]))

    @classmethod
    def from_dense(cls, vector: np.ndarray, n_sites: int) -> "SparseState":
        vector = np.asarray(vector, dtype=float).ravel()
        if vector.size != 3**n_sites:
            raise ValueError("dense vector length must be 3**n_sites")
        idx = np.flatnonzero(np.abs(vector) > PRUNE_TOL)
        return cls(n_sites, idx, vector[idx])

    # views ------------------------------------------------------------
    def __len__(self) -> int:
        return int(self.codes.size)

    def digits(self) -> np.ndarray:
        return decode(self.codes, self.n_sites)

    def to_dict(self) -> dict[str, float]:
        return {"".join(map(str, row)): float(a) for row, a in zip(self.digits(), self.amps)}

    def dense(self) -> np.ndarray:
        if self.n_sites > 14:
            raise ValueError("dense vectors are limited to 14 sites")
        out = np.zeros(3**self.n_sites)
        out[self.codes] = self.amps
        return out

    def norm2(self) -> float:
        return float(self.amps @ self.amps)

    def normalized(self) -> "SparseState":
        n2 = self.norm2()
        if n2 <= 0:
            raise ValueError("cannot normalize a zero state")
        return SparseState(self.n_sites, self.codes, self.amps / np.sqrt(n2))

    def amplitude(self, key) -> float:
        code = _parse_key(key, self.n_sites)
        i = np.searchsorted(self.codes, code)
        if i < self.codes.size and self.codes[i] == code:
            return float(self.amps[i])
        return 0.0

    # algebra ----------------------------------------------------------
    def _check_same(self, other: "SparseState"):
        if self.n_sites != other.n_sites:
            raise ValueError(f"site counts differ: {self.n_sites} vs {other.n_sites}")

    def __add__(self, other: "SparseState") -> "SparseState":
        self._check_same(other)
        return SparseState(
            self.n_sites, np.concatenate([self.codes, other.codes]), np.concatenate([self.amps, other.amps])
        )

    def __sub__(self, other: "SparseState") -> "SparseState":
        return self + (-1.0) * other

    def __mul__(self, scalar: float) -> "SparseState":
        return SparseState(self.n_sites, self.codes, self.amps * float(scalar))

    __rmul__ = __mul__

    def kron(self, other: "SparseState") -> "SparseState":
        """Tensor product with ``other`` appended after this state's sites."""
        codes = (self.codes[:, None] * 3**other.n_sites + other.codes[None, :]).ravel()
        amps = (self.amps[:, None] * other.amps[None, :]).ravel()
        return SparseState(self.n_sites + other.n_sites, codes, amps)

    def permute_sites(self, perm: Sequence[int]) -> "SparseState":
        """State with site ``i`` moved to position ``perm[i]``."""
        perm = np.asarray(perm)
        d = self.digits()
        out = np.empty_like(d)
        out[:, perm] = d
        return SparseState(self.n_sites, encode(out), self.amps)

    def allclose(self, other: "SparseState", atol: float = 1e-12) -> bool:
        diff = self - other
        return bool(len(diff) == 0 or np.max(np.abs(diff.amps)) <= atol)


def inner(a: SparseState, b: SparseState) -> float:
    """Real inner product <a|b>."""
    a._check_same(b)
    _, ia, ib = np.intersect1d(a.codes, b.codes, assume_unique=True, return_indices=True)
    return float(a.amps[ia] @ b.amps[ib])


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Real symmetric matrix on an ordered list of qutrit sites."""

    sites: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        d = 3 ** len(self.sites)
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match {len(self.sites)} sites")
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix))

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.matrix + self.matrix.T))

    def validate(self, herm_tol: float = 1e-12, psd_tol: float = 1e-10) -> "DensityMatrix":
        m = self.matrix
        if np.max(np.abs(m - m.T), initial=0.0) > herm_tol * max(1.0, abs(self.trace)):
            raise ValueError("density matrix is not Hermitian")
        if self.trace <= 0:
            raise ValueError("density matrix has non-positive trace")
        if self.eigvalsh().min() < -psd_tol * self.trace:
            raise ValueError("density matrix is not positive semidefinite")
        return self

    def normalized(self) -> "DensityMatrix":
        return DensityMatrix(self.sites, self.matrix / self.trace)

    def reduce(self, keep: Iterable[int]) -> "DensityMatrix":
        """Partial trace down to the listed sites (labels, not positions)."""
        keep = list(keep)
        if not keep:
            raise ValueError("keep list is empty")
        pos = [self.sites.index(s) for s in keep]
        n = len(self.sites)
        rest = [i for i in range(n) if i not in pos]
        t = self.matrix.reshape((3,) * (2 * n))
        t = t.transpose(pos + rest + [n + i for i in pos] + [n + i for i in rest])
        dk, dr = 3 ** len(pos), 3 ** len(rest)
        t = t.reshape(dk, dr, dk, dr)
        return DensityMatrix(tuple(keep), np.einsum("ajbj->ab", t))

    def partial_transpose(self, sites: Iterable[int]) -> np.ndarray:
        """Matrix with the listed sites transposed."""
        n = len(self.sites)
        flip = {self.sites.index(s) for s in sites}
        t = self.matrix.reshape((3,) * (2 * n))
        axes = [n + i if i in flip else i for i in range(n)] + [i if i in flip else n + i for i in range(n)]
        return t.transpose(axes).reshape(self.dim, self.dim)


def partial_trace(state: SparseState, keep: Sequence[int]) -> np.ndarray:
    """Unnormalized reduced matrix Tr_rest |psi><psi| on ``keep`` (in that order)."""
    keep = [int(s) for s in keep]
    if not keep:
        raise ValueError("keep list is empty")
    if len(set(keep)) != len(keep) or min(keep) < 0 or max(keep) >= state.n_sites:
        raise ValueError(f"invalid keep list {keep} for {state.n_sites} sites")
    rest = [s for s in range(state.n_sites) if s not in keep]
    d = state.digits()
    a = encode(d[:, keep])
    if rest:
        _, b = np.unique(encode(d[:, rest]), return_inverse=True)
    else:
        b = np.zeros(len(state), dtype=np.int64)
    dk = 3 ** len(keep)
    m = sp.csr_matrix((state.amps, (a, b.ravel())), shape=(dk, int(b.max(initial=-1)) + 1))
    return (m @ m.T).toarray()


def reduce(state: SparseState, keep: Sequence[int]) -> DensityMatrix:
    """Unit-trace reduced density matrix of ``state`` on ``keep``."""
    if state.norm2() <= 0:
        raise ValueError("cannot reduce a zero-norm state")
    rho = partial_trace(state, keep)
    return DensityMatrix(tuple(keep), rho / np.trace(rho))


def purity(rho: DensityMatrix) -> float:
    m = rho.matrix
    return float(np.sum(m * m.T))


# text formats ----------------------------------------------------------

def dump_rho(rho: DensityMatrix, fh=None) -> str:
    """Row-major text dump with a ``sites=[...] dim=d`` header and 17 significant digits."""
    buf = io.StringIO()
    buf.write(f"sites={list(rho.sites)} dim={rho.dim}\n")
    for row in rho.matrix:
        buf.write(" ".join(f"{x:.17g}" for x in row))
        buf.write("\n")
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def load_rho(text_or_fh) -> DensityMatrix:
    text = text_or_fh if isinstance(text_or_fh, str) else text_or_fh.read()
    header, *rows = text.strip().splitlines()
    fields = dict(part.split("=", 1) for part in header.replace(", ", ",").split())
    sites = tuple(int(s) for s in fields["sites"].strip("[]").split(",") if s)
    dim = int(fields["dim"])
    m = np.array([[float(x) for x in r.split()] for r in rows])
    if m.shape != (dim, dim):
        raise ValueError(f"expected {dim}x{dim} matrix, got {m.shape}")
    return DensityMatrix(sites, m)


def dump_state(state: SparseState, fh=None) -> str:
    """One ``<occupation string> <amplitude>`` line per stored configuration."""
    lines = [f"n_sites={state.n_sites} nnz={len(state)}"]
    for row, a in zip(state.digits(), state.amps):
        lines.append(f"{''.join(map(str, row))} {a:.17g}")
    text = "\n".join(lines) + "\n"
    if fh is not None:
        fh.write(text)
    return text


def load_state(text_or_fh) -> SparseState:
    text = text_or_fh if isinstance(text_or_fh, str) else text_or_fh.read()
    header, *rows = text.strip().splitlines()
    fields = dict(part.split("=", 1) for part in header.split())
    n = int(fields["n_sites"])
    mapping = {}
    for r in rows:
        key, amp = r.split()
        mapping[key] = float(amp)
    return SparseState.from_dict(n, mapping)
