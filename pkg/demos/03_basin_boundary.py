# %% [markdown]
# # Between the two wells
#
# The set of data that converge to the origin separates the basins of
# +-sigma0 e1.  Along the e1 axis it is the origin itself; a run started
# delta away from it lingers for a time growing like ln(1/delta) / s+, where
# s+ = (sqrt(5) - 1)/2 is the unstable rate at the origin.

# %%
import numpy as np

from duffing_flow import PhaseState, bisect_boundary, canonical_params, constant_on_mode, openness_probe
from duffing_flow.basin import dwell_growth_rate

P = canonical_params()
E1 = P.operator.e1()
Z = np.zeros(P.n_modes)

# %%
res = bisect_boundary(PhaseState(0.7 * E1, Z), PhaseState(-0.3 * E1, Z), None, P, horizon=80, width_tol=1e-8)
print(f"{res.steps} halvings, width {res.width:.1e}, boundary u1 = {res.boundary.u[0]:.2e}, dwell {res.dwell:.1f}")

# %% [markdown]
# A small constant push on the first mode moves the boundary to roughly -eps.

# %%
eps = 1e-2
push = constant_on_mode(eps, 0, P.n_modes)
res = bisect_boundary(PhaseState(0.7 * E1, Z), PhaseState(-0.5 * E1, Z), push, P, horizon=80, width_tol=1e-8)
print(f"forced boundary u1 = {res.boundary.u[0]:.5f}  (eps = {eps})")

# %% [markdown]
# ## The wells' basins are open

# %%
print("fraction kept under 1e-3 kicks:", openness_probe(PhaseState(E1.copy(), Z), 1e-3, 8, None, P, horizon=60))

# %% [markdown]
# ## Dwell time near the origin

# %%
rate, runs = dwell_growth_rate(P)
for r in runs:
    print(f"delta={r.delta:.0e}  dwell={r.dwell:6.2f}  lands at {r.target:+.0f}")
print(f"fitted rate {rate:.4f} vs s+ = {(np.sqrt(5) - 1) / 2:.4f}")
