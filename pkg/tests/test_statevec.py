import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rvbladder.coverings import build_rvb_state
from rvbladder.lattice import build_ladder
from rvbladder.statevec import (
    DensityMatrix,
    SparseState,
    decode,
    dump_rho,
    dump_state,
    encode,
    inner,
    load_rho,
    load_state,
    partial_trace,
    purity,
    reduce,
)

S = np.sqrt(0.5)
SINGLET = SparseState.from_dict(2, {"01": S, "10": -S})


def random_state(seed, n, density=0.4):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(3**n) * (rng.random(3**n) < density)
    if not v.any():
        v[0] = 1.0
    return SparseState.from_dense(v, n)


def test_inner_examples():
    assert inner(SINGLET, SINGLET) == pytest.approx(1.0)
    assert inner(SparseState.product("2222"), SparseState.product("0122")) == 0.0
    psi = build_rvb_state(build_ladder(2), 1)
    assert inner(psi, psi) == pytest.approx(4.0, abs=1e-12)


def test_inner_mismatch():
    with pytest.raises(ValueError):
        inner(SINGLET, SparseState.product("222"))


def test_reduce_examples():
    assert np.allclose(reduce(SINGLET, [0]).matrix, np.diag([0.5, 0.5, 0]))
    assert np.allclose(reduce(SparseState.product("22"), [0]).matrix, np.diag([0, 0, 1.0]))
    rho = reduce(build_rvb_state(build_ladder(2), 1), [0])
    assert np.allclose(rho.matrix, np.diag([0.25, 0.25, 0.5]), atol=1e-14)
    assert purity(rho) == pytest.approx(3 / 8)


def test_reduce_errors():
    with pytest.raises(ValueError):
        reduce(SINGLET, [])
    with pytest.raises(ValueError):
        reduce(SparseState.zero(2), [0])
    with pytest.raises(ValueError):
        reduce(SINGLET, [2])


def test_purity_examples():
    assert purity(DensityMatrix((0,), np.diag([0, 0, 1.0]))) == 1.0
    assert purity(DensityMatrix((0,), np.diag([0.5, 0.5, 0]))) == 0.5


def test_keys_and_pruning():
    s = SparseState.from_dict(3, {"uhd": 1.0, (0, 2, 1): 1.0, "222": 1e-16})
    assert s.to_dict() == {"021": 2.0}
    assert (s - s).norm2() == 0.0
    assert len(SparseState.zero(3)) == 0
    with pytest.raises(ValueError):
        SparseState.from_dict(3, {"01": 1.0})


@given(st.lists(st.integers(0, 2), min_size=1, max_size=12))
def test_encode_roundtrip(d):
    codes = encode(np.array([d]))
    assert decode(codes, len(d)).tolist() == [d]


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 6))
def test_partial_trace_properties(seed, n):
    psi = random_state(seed, n)
    rng = np.random.default_rng(seed + 1)
    keep = sorted(rng.choice(n, size=rng.integers(1, n + 1), replace=False).tolist())
    raw = partial_trace(psi, keep)
    assert np.trace(raw) == pytest.approx(psi.norm2(), rel=1e-12)
    rho = reduce(psi, keep).validate()
    assert rho.eigvalsh().sum() == pytest.approx(1.0, abs=1e-10)
    # nesting: trace to keep, then to a subset, equals tracing directly
    sub = keep[: max(1, len(keep) // 2)]
    assert np.allclose(rho.reduce(sub).matrix, reduce(psi, sub).matrix, atol=1e-12)
    full = reduce(psi, list(range(n)))
    assert full.eigvalsh()[-1] == pytest.approx(1.0, abs=1e-12)
    assert purity(full) == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10**6))
def test_complement_spectra(seed):
    psi = random_state(seed, 5)
    a = reduce(psi, [0, 3]).eigvalsh()
    b = reduce(psi, [1, 2, 4]).eigvalsh()
    assert np.allclose(np.sort(a)[-9:], np.sort(b)[-9:], atol=1e-12)


def test_rho_roundtrip():
    rho = reduce(build_rvb_state(build_ladder(3), 2), [2, 3, 4, 5])
    text = dump_rho(rho)
    assert text.splitlines()[0] == "sites=[2, 3, 4, 5] dim=81"
    back = load_rho(text)
    assert back.sites == rho.sites
    assert np.array_equal(back.matrix, rho.matrix)


def test_state_roundtrip():
    psi = build_rvb_state(build_ladder(3), 2)
    back = load_state(dump_state(psi))
    assert back.allclose(psi, atol=0)


def test_permute_and_kron():
    s = SINGLET.kron(SparseState.product("2"))
    assert s.to_dict() == {"012": S, "102": -S}
    p = s.permute_sites([2, 0, 1])
    assert p.to_dict() == {"120": S, "021": -S}
