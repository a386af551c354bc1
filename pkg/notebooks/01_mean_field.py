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
# # Mean-field rate equations
#
# Erasure flags behave like a contact process: they are created at rate
# `eta f_e` and removed at rate `gamma` when a neighbouring qubit is clean.
# Below `eta f_e = 2 gamma` the mean-field erasure density stays finite, above it
# every qubit ends up flagged.

# %%
import numpy as np

from heralded_spt import meanfield as mf

# %%
for eta in (0.5, 1.0, 1.9, 2.1, 3.0):
    st = mf.mf_steady(mf.RateParams(eta))
    print(f"eta={eta:4.1f}  active={mf.is_active(mf.RateParams(eta))!s:5}  "
          f"n_e={st.n_e:.4f}  n_d={st.n_d:.4f}")

# %% [markdown]
# Integrating the equations from the empty lattice reaches the closed form on
# both branches. Close to the line the approach slows down as `1/|eta f_e - 2 gamma|`.

# %%
for eta in (1.0, 1.9, 2.5):
    p = mf.RateParams(eta)
    traj = mf.mf_integrate(p, t_max=40 / abs(eta - 2.0))
    print(eta, traj.final.n_e, mf.mf_steady(p).n_e)

# %% [markdown]
# With imperfect heralding the defect density has two candidate steady values:
# the closed form used for the phase diagram and the true fixed point of the
# defect rate equation. They agree only at `f_e = 1`.

# %%
for fe in (1.0, 0.9, 0.5):
    p = mf.RateParams(1.0, 1.0, fe)
    print(f"f_e={fe}: closed form {mf.mf_steady(p).n_d:.4f}, "
          f"ODE fixed point {mf.mf_ode_fixed_point(p).n_d:.4f}")

# %% [markdown]
# Unheralded defects (no flag on either neighbouring qubit) scale as
# `sqrt(1 - f_e)` when erasures are rare and heralding is nearly perfect; the
# exact small-noise value is `s / (1 + s)` with `s = sqrt(1 - f_e)`.

# %%
xs = np.array([1e-5, 1e-4, 1e-3])
h = np.array([mf.h_small_noise(1 - x) for x in xs])
print("log-log slope:", np.polyfit(np.log(xs), np.log(h), 1)[0])

# %%
table = mf.phase_diagram(np.linspace(0.2, 3.0, 8), [0.5, 0.8, 1.0])
print({k: np.round(v[:4], 3) for k, v in table.items()})
