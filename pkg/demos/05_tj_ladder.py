"""
Exact t-J ground states on small ladders
========================================

Lanczos in fixed (n_up, n_down) sectors, then the GGM of the ground state as
the ladder is filled.
"""

# %%
import numpy as np

from rvbladder.entanglement import ggm_pure
from rvbladder.lattice import build_ladder
from rvbladder.tjmodel import TJParams, dense_hamiltonian, ground_state_at_density, lanczos_ground_state, sector_basis

params = TJParams(t=1.0, J=0.66)

# %% a 2x3 ladder: Lanczos against dense diagonalization
spec = build_ladder(3)
for m in range(4):
    b = sector_basis(spec, m, m)
    gs = lanczos_ground_state(params, b)
    print(m, b.dim, gs.energy, np.linalg.eigvalsh(dense_hamiltonian(params, b))[0], gs.gap)

# %% GGM against filling on a 10-site periodic ladder (odd length, so not bipartite)
spec = build_ladder(5, "periodic", require_bipartite=False)
for n_el in range(0, 11, 2):
    gs = ground_state_at_density(params, spec, n_el / 10)
    g = ggm_pure(gs.vector)
    print(f"n_el={n_el / 10:.1f}  E={gs.energy:+.6f}  G={g.ggm:.5f}  cut={g.argmax_bipartition}")

# %% without the fermion string the hopping is that of hard-core bosons
boson = TJParams(t=1.0, J=0.66, fermionic=False)
for n_el in (4, 6, 8):
    gs = ground_state_at_density(boson, spec, n_el / 10)
    print(f"bosonic n_el={n_el / 10:.1f}  E={gs.energy:+.6f}  G={ggm_pure(gs.vector).ggm:.5f}")
