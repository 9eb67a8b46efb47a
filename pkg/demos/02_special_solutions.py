# %% [markdown]
# # Periodic special solutions and convergence to them
#
# Small periodic forcing turns each equilibrium into a periodic orbit with
# the forcing's period.  The orbit is the fixed point of a Fourier
# contraction; runs started near +sigma0 e1 are attracted to it.

# %%
import numpy as np

from duffing_flow import (
    PeriodicForcing,
    PhaseState,
    Trajectory,
    asymptotic_distance,
    canonical_params,
    integrate,
    solve_periodic,
)
from duffing_flow.special import solve_bounded

P = canonical_params()
E1 = P.operator.e1()
f = PeriodicForcing(2 * np.pi, ((1, 0, 0.05, 0.0), (1, 1, 0.02, 0.0)), P.n_modes)

# %%
for sigma in (-1.0, 0.0, 1.0):
    sol = solve_periodic(sigma, f, P)
    print(f"sigma={sigma:+.0f}  sweeps={sol.iterations:2d}  residual={sol.residual:.1e}  "
          f"closure={sol.closure():.1e}  first-mode amplitude={sol.amplitude(1, 0):.5f}")

# %% [markdown]
# ## The same orbit from the time-domain Green functions
#
# On a long window the forcing is cut off at the edges; away from the
# boundary layers the two constructions agree to discretisation error.

# %%
sol = solve_periodic(1.0, f, P)
window = solve_bounded(1.0, f, P, 0.0, 40 * np.pi, dt=5e-3).interior()
u_ref, _ = sol.evaluate(window.times)
print("boundary-layer width: %.1f" % solve_bounded(1.0, f, P, 0.0, 40 * np.pi).boundary_layer)
print("interior max deviation: %.1e" % np.max(np.abs(window.u - u_ref)))

# %% [markdown]
# ## Nearby runs converge exponentially
#
# The distance stalls near 1e-11, the RK4 error at this step; samples below
# 1e-10 are left out of the rate fit.

# %%
start = PhaseState(E1 + np.array([0.05, -0.01, 0.002, 0.0]), np.array([0.0, 0.05, 0.0, 0.0]))
tr = integrate(start, f, P, 0.0, 200.0, dt=1e-2, stride=10)
u, v = sol.evaluate(tr.times)
d, rate = asymptotic_distance(tr, Trajectory(tr.times, u, v), P, window_fraction=0.9, floor=1e-10)
for t in (0, 20, 50, 100, 200):
    i = np.searchsorted(tr.times, t)
    print(f"t={t:3d}  distance={d[i]:.2e}")
print("fitted decay rate: %.3f (linearisation predicts 0.5)" % rate)
