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
# # Locating the erasure transition
#
# Starting from the cluster state, the clean-qubit density `1 - n_e` decays as a
# power law at the transition. The running exponent
# `delta(t) = log(O(t)/O(bt)) / log b` bends down in the active phase and up in the
# absorbing one. The small system here keeps the run short; the acceptance suite
# repeats it at `L = 256` and `512`.

# %%
import numpy as np

from heralded_spt.ensemble import geometric_schedule, run_ensemble
from heralded_spt.params import SimParams
from heralded_spt.scaling import EnsembleSeries, find_critical, running_exponent

# %%
L = 64
T = int(2 * L**1.5)
family = []
for eta in (0.56, 0.58, 0.60, 0.62, 0.64, 0.66):
    st = run_ensemble(SimParams(L=L, eta=eta, n_traj=400, t_max_sweeps=T),
                      geometric_schedule(T, 20), ls=[L // 2])
    s = EnsembleSeries.from_stats(st, "n_e", (-1, 1))
    family.append(s)
    inv_t, d = running_exponent(s)
    print(f"eta={eta:.2f}  delta(t) late: {np.round(d[-6:], 3)}")

# %%
ce = find_critical(family)
print(f"eta_c = {ce.eta_c} +- {ce.eta_err:.3f}  (slope crossing {ce.eta_c_interp:.4f}), "
      f"delta = {ce.delta:.3f}")

# %% [markdown]
# Defects and string order follow the same decay at the transition, with string
# order decaying twice as fast: a window is only ordered if both its ends are clean.
