# ---
# jupyter:
#   jupytext:
#     formats: ipynb,py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
#       format_version: '1.3'
#   kernelspec:
#     display_name: Python 3
#     language: python
#     name: python3
# ---

# %% [markdown]
# # Generator spectrum and the slowest relaxation
#
# Each fully flagged configuration is frozen under the shortened rule set, so
# the generator has one zero mode per even defect pattern. The next eigenvalue
# sets the lifetime of the active, quasi-stationary state. At the transition it
# closes with system size roughly as `L^-z`.

# %%
import numpy as np

from heralded_spt import exact
from heralded_spt.params import SimParams

# %%
rows = exact.spectrum_rows([SimParams(L=L, eta=0.6065) for L in (3, 4, 5, 6)])
for r in rows:
    print(f"L={r['L']}: zero modes {r['n_zero']}, gap {r['gap']:.4f}")

# %%
Ls = np.array([r["L"] for r in rows[1:]], dtype=float)
gaps = np.array([abs(r["gap"]) for r in rows[1:]])
print("effective z from L=4..6:", -np.polyfit(np.log(Ls), np.log(gaps), 1)[0])

# %% [markdown]
# With all noise channels the maximally mixed fully flagged state is the only
# stationary state, and every initial condition relaxes to it.

# %%
rm = exact.build_generator(SimParams(L=4, eta=3.0, semantics="full-channel"))
p = exact.evolve_exact(rm, rm.delta(0), 200.0)
print("flag density:", rm.expect(p, lambda d, e: e.mean(axis=1)))
