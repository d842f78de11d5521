import csv
import time
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvbladder.coverings import Covering, build_rvb_state, covering_state, oracle_norm, oracle_rho_red
from rvbladder.entanglement import single_site_form
from rvbladder.lattice import build_ladder
from rvbladder.recursion import (
    JUNCTION_LABELS,
    d_sequence,
    generate_open_state,
    junction_state,
    periodic_term_families,
    rho_red_all_k,
    rho_red_open,
    rho_red_periodic,
    z_table,
)
from rvbladder.statevec import load_rho

GOLDEN = Path(__file__).parent / "golden"
S = np.sqrt(0.5)


def test_d_sequence():
    assert [d_sequence(x) for x in range(5)] == [1, 1, 3, 5, 11]
    assert d_sequence(10) == 683
    assert all(d_sequence(x) == (2 ** (x + 1) + (-1) ** x) // 3 for x in range(40))
    with pytest.raises(ValueError):
        d_sequence(-1)


def test_z_examples():
    z = z_table(2)
    assert z.norm(1) == pytest.approx(4.0)
    assert all(z_table(n).norm(0) == 1.0 for n in range(1, 8))
    assert z_table(3).norm(3) == pytest.approx(5.5)
    assert z_table(4, "periodic").row().tolist() == pytest.approx([1, 12, 48, 76, 31.5])


def test_z_golden():
    with open(GOLDEN / "z_norms.csv") as fh:
        for row in csv.DictReader(fh):
            z = z_table(int(row["rungs"]), row["boundary"])
            assert z.norm(int(row["k"])) == pytest.approx(float(row["Z"]), rel=1e-9)


def test_z_open_holds_subladders():
    z = z_table(6)
    for n in range(1, 6):
        assert z.row(n).tolist() == pytest.approx(z_table(n).row().tolist(), rel=1e-14)


def test_z_positive_and_rising():
    for n in (7, 20):
        row = z_table(n).row()
        assert (row > 0).all()
        half = -(-n // 2)
        assert (np.diff(row[: half + 1]) >= 0).all()


@pytest.mark.parametrize("n,boundary", [(2, "open"), (3, "open"), (4, "open"), (5, "open"), (4, "periodic")])
def test_rho_golden(n, boundary):
    for k in range(n + 1):
        gold = load_rho((GOLDEN / f"rho_{boundary}_N{n}_k{k}.txt").read_text())
        rho = rho_red_periodic(n, k) if boundary == "periodic" else rho_red_open(n, k)
        assert rho.sites == gold.sites
        assert np.abs(rho.matrix - gold.matrix).max() < 1e-10


def test_rho_zero_k_exact():
    for rho in (rho_red_open(5, 0), rho_red_periodic(6, 0)):
        ref = np.zeros((81, 81))
        ref[-1, -1] = 1.0
        assert np.array_equal(rho.matrix, ref)


def test_interior_pairs_open():
    spec = build_ladder(5)
    for pair in [(0, 1), (1, 2), (2, 3)]:
        for k in range(6):
            assert np.abs(rho_red_open(5, k, pair).matrix - oracle_rho_red(spec, k, pair).matrix).max() < 1e-10


def test_periodic_six_matches_oracle():
    spec = build_ladder(6, "periodic")
    z = z_table(6, "periodic")
    for k in (1, 3, 5, 6):
        assert np.abs(rho_red_periodic(6, k).matrix - oracle_rho_red(spec, k, (0, 1)).matrix).max() < 1e-10
        assert z.norm(k) == pytest.approx(oracle_norm(spec, k), rel=1e-9)


def test_block_weights_four_one():
    # one dimer on four rungs: 4 coverings miss the block, 4 sit inside it, 2 straddle
    rho = rho_red_open(4, 1).matrix
    occ = np.array([sum(d != "2" for d in np.base_repr(i, 3).zfill(4)) for i in range(81)])
    w = np.diag(rho)
    assert w[occ == 0].sum() == pytest.approx(0.4)
    assert w[occ == 2].sum() == pytest.approx(0.4)
    assert w[occ == 1].sum() == pytest.approx(0.2)


@pytest.mark.parametrize("n", [6, 11, 40])
def test_rho_is_state(n):
    for k in range(0, n + 1, max(1, n // 5)):
        rho = rho_red_open(n, k).validate()
        assert rho.trace == pytest.approx(1.0, abs=1e-12)
        assert rho.eigvalsh()[0] > -1e-10
        for s in rho.sites:
            single_site_form(rho.reduce([s]), tol=1e-10)


@settings(max_examples=15, deadline=None)
@given(st.integers(2, 30), st.data())
def test_periodic_rung_exchange(half, data):
    n = 2 * half
    if n < 4:
        return
    k = data.draw(st.integers(0, n))
    m = rho_red_periodic(n, k).matrix.reshape((3,) * 8)
    swapped = m.transpose(2, 3, 0, 1, 6, 7, 4, 5)
    assert np.abs(m - swapped).max() < 1e-10


def test_families_sum():
    for n in (4, 6, 10):
        blocks, traces = rho_red_all_k(n, "periodic")
        for k in range(n + 1):
            fam = periodic_term_families(n, k)
            assert set(fam) == {"NP", "P1", "P2", "P12"}
            total = sum(fam.values())
            assert np.abs(total - blocks[k] / traces[k]).max() < 1e-12


def test_np_family_is_open_block():
    # with no wrap singlet the periodic ladder is an open ladder cut at the wrap
    n = 6
    _, traces = rho_red_all_k(n, "periodic")
    open_blocks, _ = rho_red_all_k(n, "open", (0, 1))
    for k in range(n + 1):
        np_part = periodic_term_families(n, k)["NP"] * traces[k]
        assert np.abs(np_part - open_blocks[k]).max() < 1e-9


def test_families_at_one_hole_pair():
    fam = periodic_term_families(4, 3)
    assert np.abs(fam["P2"]).max() > 0
    assert np.abs(fam["P1"]).max() > 0


def test_junction_chi_two():
    j = junction_state("Chi", 2)
    assert j.rungs == 2
    # leg singlet on one leg, holes at the two ends of the other leg; site 3 is on A
    assert j.window.to_dict() == pytest.approx({"0212": S, "1202": -S, "2021": -S, "2120": S})


def test_junction_chi_growth():
    for m in range(2, 7):
        small, big = junction_state("Chi", m), junction_state("Chi", m + 1)
        assert big.rungs == small.rungs + 1
        assert all(c.k == m for c in big.coverings)
        # dropping the new left rung and its singlet gives back the smaller staircase
        shifted = {tuple(sorted((a - 2, b - 2) for a, b in c.dimers if a >= 2)) for c in big.coverings}
        assert shifted == {c.dimers for c in small.coverings}


def test_junction_twobar():
    # two leg singlets = plaquette RVB minus the two-rung-singlet term
    bar = junction_state("TwoBar").window
    spec = build_ladder(2)
    rvb = build_rvb_state(spec, 2)
    rungs = covering_state(spec, Covering(((0, 1), (2, 3)), ()))
    assert rungs.to_dict() == pytest.approx({"0110": 0.5, "0101": -0.5, "1010": -0.5, "1001": 0.5})
    assert bar.allclose(rvb - rungs)
    assert junction_state("Zeta").window.allclose(bar)


def test_junction_periodic_windows():
    xi = junction_state("Xi").window
    assert xi.allclose(junction_state("Gamma1").window + junction_state("Gamma2").window)
    assert xi.allclose(junction_state("Chi", 2).window)
    for label in JUNCTION_LABELS:
        if label != "Chi":
            assert junction_state(label).window.norm2() > 0


def test_junction_errors():
    with pytest.raises(ValueError):
        junction_state("Chi", 1)
    with pytest.raises(ValueError):
        junction_state("Omega")
    with pytest.raises(ValueError):
        junction_state("TwoBar", 3)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_generator_matches_enumeration(n):
    spec = build_ladder(n)
    for k in range(n + 1):
        assert generate_open_state(n, k).allclose(build_rvb_state(spec, k))


@pytest.mark.slow
def test_large_periodic_runtime():
    t0 = time.perf_counter()
    blocks, traces = rho_red_all_k(150, "periodic")
    elapsed = time.perf_counter() - t0
    assert blocks.shape == (151, 81, 81)
    assert np.isfinite(traces).all() and (traces > 0).all()
    assert elapsed < 120


def test_bad_inputs():
    with pytest.raises(ValueError):
        rho_red_open(3, 4)
    with pytest.raises(ValueError):
        rho_red_periodic(5, 1)
    with pytest.raises(ValueError):
        rho_red_open(4, 1, (0, 2))
