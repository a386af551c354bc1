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
# # Imperfect heralding
#
# A fraction `1 - f_e` of the noise leaves no flag. These defects are not
# confined, so string order decays in time and space. The time scale goes as
# `1/(1 - f_e)`, the length scale as `1/sqrt(1 - f_e)`, and the density of
# unheralded defects as `sqrt(1 - f_e)`.

# %%
import numpy as np

from heralded_spt.ensemble import linear_schedule, run_ensemble
from heralded_spt.params import SimParams
from heralded_spt.scaling import fit_decay, loglog_slope

# %%
L, eta = 64, 0.3
dt = 1 / (eta + 4)
xs = np.array([0.05, 0.1, 0.2])
ls = list(range(1, 13)) + [L // 2]
taus, xis, hs = [], [], []
for x in xs:
    T = int(6 / (4 * eta * x) / dt) + 400
    st = run_ensemble(SimParams(L=L, eta=eta, f_e=1 - x, n_traj=200, t_max_sweeps=T),
                      linear_schedule(T, max(1, T // 200)), ls=ls,
                      keep=["h"] + [f"omega_{l}" for l in ls])
    t, m, s = st.series(f"omega_{L // 2}")
    taus.append(fit_decay(t, m, "exp", sigma=s, window=(5, t[-1])).params["tau"])
    om = np.array([st.steady_state(f"omega_{l}", t[-1] / 2) for l in range(1, 13)])
    xis.append(fit_decay(np.arange(1, 13), om[:, 0], "exp_plateau", sigma=om[:, 1]).params["xi"])
    hs.append(st.steady_state("h", t[-1] / 2)[0])
    print(f"1-f_e={x}: tau={taus[-1]:.1f} (1/4 eta (1-f_e) = {1 / (4 * eta * x):.1f}), "
          f"xi={xis[-1]:.2f}, h={hs[-1]:.4f}")

# %%
for name, vals in (("tau", taus), ("xi", xis), ("h", hs)):
    print(name, "slope vs 1-f_e:", round(loglog_slope(xs, np.array(vals))[0], 3))
