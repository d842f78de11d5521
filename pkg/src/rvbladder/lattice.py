"""Two-leg ladder geometry.

Sites are indexed rung-major: rung ``r`` holds site ``2*r`` on the top leg and
``2*r + 1`` on the bottom leg.  The checkerboard sublattice puts site
``(r, leg)`` on A when ``r + leg`` is even.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

__all__ = ["Boundary", "LadderSpec", "build_ladder", "nn_edges", "site", "rung_of", "leg_of"]


class Boundary(str, enum.Enum):
    OPEN = "open"
    PERIODIC = "periodic"

    @classmethod
    def parse(cls, value) -> "Boundary":
        if isinstance(value, cls):
            return value
        return cls(str(value).lower())


def site(rung: int, leg: int) -> int:
    return 2 * rung + leg


def rung_of(i: int) -> int:
    return i // 2


def leg_of(i: int) -> int:
    return i % 2


@dataclass(frozen=True)
class LadderSpec:
    """Immutable description of a 2 x N ladder.

    ``sublattice`` is ``None`` for a periodic ladder with an odd number of
    rungs, which is not bipartite (only the t-J solver accepts it).
    """

    rungs: int
    boundary: Boundary
    edges: tuple[tuple[int, int], ...]
    sublattice: tuple[str, ...] | None = field(default=None)

    @property
    def n_sites(self) -> int:
        return 2 * self.rungs

    @property
    def sites(self) -> range:
        return range(self.n_sites)

    @property
    def periodic(self) -> bool:
        return self.boundary is Boundary.PERIODIC

    def is_a_site(self, i: int) -> bool:
        return (rung_of(i) + leg_of(i)) % 2 == 0

    def degree(self, i: int) -> int:
        return sum(i in e for e in self.edges)

    def neighbors(self, i: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def rung_edges(self) -> list[tuple[int, int]]:
        return [(site(r, 0), site(r, 1)) for r in range(self.rungs)]


def _edges(rungs: int, periodic: bool) -> tuple[tuple[int, int], ...]:
    rung = [(site(r, 0), site(r, 1)) for r in range(rungs)]
    top = [(site(r, 0), site(r + 1, 0)) for r in range(rungs - 1)]
    bottom = [(site(r, 1), site(r + 1, 1)) for r in range(rungs - 1)]
    wrap = []
    if periodic:
        wrap = [(site(rungs - 1, 0), site(0, 0)), (site(rungs - 1, 1), site(0, 1))]
    return tuple(rung + top + bottom + wrap)


def build_ladder(rungs: int, boundary="open", *, require_bipartite: bool = True) -> LadderSpec:
    """Build a 2-leg ladder with ``rungs`` rungs.

    Parameters
    ----------
    rungs : int
        Number of rungs N (the ladder has 2N sites).
    boundary : {"open", "periodic"} or Boundary
        Periodic ladders wrap both legs from rung N-1 back to rung 0.
    require_bipartite : bool
        Periodic ladders need an even rung count for a consistent checkerboard.
        Passing False admits odd periodic ladders (no sublattice labels), which
        the t-J solver uses; the RVB machinery always needs the default.

    Raises
    ------
    ValueError
        On ``rungs < 1``, periodic ladders shorter than 3 (4 when bipartite) rungs,
        or odd periodic ladders when ``require_bipartite`` is set.
    """
    boundary = Boundary.parse(boundary)
    if int(rungs) != rungs or rungs < 1:
        raise ValueError(f"rungs must be a positive integer, got {rungs!r}")
    rungs = int(rungs)
    periodic = boundary is Boundary.PERIODIC
    bipartite = True
    if periodic:
        if rungs % 2:
            if require_bipartite:
                raise ValueError(
                    f"periodic ladder with odd rungs ({rungs}) has no consistent A/B sublattice"
                )
            bipartite = False
        if rungs < (4 if require_bipartite else 3):
            raise ValueError(f"periodic ladder needs at least {4 if require_bipartite else 3} rungs")
    labels = None
    if bipartite:
        labels = tuple("A" if (rung_of(i) + leg_of(i)) % 2 == 0 else "B" for i in range(2 * rungs))
    return LadderSpec(rungs=rungs, boundary=boundary, edges=_edges(rungs, periodic), sublattice=labels)


def nn_edges(spec: LadderSpec) -> list[tuple[int, int]]:
    """Nearest-neighbour edges: rungs, top leg, bottom leg, then wrap edges."""
    return list(spec.edges)
