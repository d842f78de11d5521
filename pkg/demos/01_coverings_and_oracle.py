"""
Dimer coverings and the brute-force RVB state
=============================================

Builds doped RVB states on small ladders by summing over every k-dimer
covering, and looks at the counts and norms that the fast recursion has to
reproduce.
"""

# %%
import numpy as np

from rvbladder.coverings import build_rvb_state, count_coverings, enumerate_coverings, export_coverings, oracle_norm
from rvbladder.lattice import build_ladder, nn_edges

# %% a 2x3 open ladder: sites are numbered rung by rung, leg 0 first
spec = build_ladder(3)
print("edges:", nn_edges(spec))

# %% number of k-dimer coverings for each k
for n in range(2, 7):
    spec = build_ladder(n)
    print(n, [count_coverings(spec, k) for k in range(n + 1)])

# %% the coverings themselves, one per line (dimers | holes)
print(export_coverings(build_ladder(3), 2))

# %% the unnormalized state and its norm; coverings overlap, so Z exceeds the count
spec = build_ladder(4, "periodic")
for k in range(5):
    psi = build_rvb_state(spec, k)
    print(k, len(enumerate_coverings(spec, k)), oracle_norm(spec, k), len(psi))

# %% the undoped limit: amplitudes of the plaquette RVB
psi = build_rvb_state(build_ladder(2), 2).normalized()
for key, amp in sorted(psi.to_dict().items()):
    print(key, np.round(amp, 4))
