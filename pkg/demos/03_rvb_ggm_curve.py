"""
Genuine multipartite entanglement of doped RVB ladders
======================================================

GGM against electron density, using only the two-rung block, and the
location of its maximum as the ladder grows.
"""

# %%
import numpy as np

from rvbladder.cli import locate_nc, rvb_curve
from rvbladder.coverings import build_rvb_state
from rvbladder.entanglement import ggm_from_block, ggm_pure
from rvbladder.lattice import build_ladder
from rvbladder.recursion import rho_red_periodic

# %% the block answer agrees with the full-state optimum on a small ladder
spec = build_ladder(4, "periodic")
for k in range(1, 5):
    full = ggm_pure(build_rvb_state(spec, k).normalized())
    block = ggm_from_block(rho_red_periodic(4, k))
    print(k, round(full.ggm, 10), round(block.ggm, 10), block.argmax_bipartition)

# %% the 40-site curve
n_el, g = rvb_curve(20)
for x, y in zip(n_el, g):
    print(f"{x:.2f} {y:.5f} " + "#" * int(60 * y))

# %% maximum location against size
for n in (10, 20, 50, 100, 150):
    n_c, g_c, grid = locate_nc(*rvb_curve(n))
    print(f"2N={2 * n:4d}  n_c={n_c:.4f}  G={g_c:.5f}  grid max at {grid:.3f}")
