"""
Mixed marginals and entangled rungs
===================================

For every k >= 1 the one- and two-site marginals of a doped RVB ladder are
mixed and every rung is entangled, so no bipartition is a product.  This
walks the checks on the oracle-sized ladders.
"""

# %%
import numpy as np

from rvbladder.coverings import build_rvb_state
from rvbladder.entanglement import theorem_mixedness_scan, werner_decompose
from rvbladder.lattice import build_ladder
from rvbladder.statevec import reduce

# %%
for n, boundary in [(3, "open"), (5, "open"), (4, "periodic"), (6, "periodic")]:
    spec = build_ladder(n, boundary)
    for k in range(n + 1):
        rep = theorem_mixedness_scan(spec, k)
        pt = min(rep.rung_pt_min.values()) if rep.rung_pt_min else np.nan
        print(f"{n} {boundary:8s} k={k}  {rep.status:16s} site purity {rep.max_site_purity:.4f}  rung PT min {pt:.4f}")

# %% a rung marginal in the spin-rotation invariant basis
rho = reduce(build_rvb_state(build_ladder(4), 2), [6, 7])
w = werner_decompose(rho)
print(w)
print("reconstruction error", np.abs(w.matrix() - rho.matrix).max())
