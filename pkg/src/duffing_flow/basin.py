"""Basins of the two stable equilibria and the stable set of the unstable one.

The two basins are open, so the set of data converging to the origin is
found by bisection along a segment joining points of opposite basins.  It
has measure zero, hence the "boundary point" returned is operational: the
evaluated point whose trajectory lingers longest near the origin.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .asymptotics import classify, regime_constants
from .dynamics import integrate, integrate_many, random_states
from .errors import EndpointsSameBasin, HorizonTooShort, UncertifiedBasePoint
from .forcing import Forcing
from .spectral import ModelParams, PhaseState, energy_norm

__all__ = [
    "BisectionResult",
    "bisect_boundary",
    "openness_probe",
    "HeteroclinicRun",
    "heteroclinic_demo",
    "dwell_growth_rate",
]


def _longest_stretch(mask) -> int:
    """Length of the longest run of ``True`` in a boolean array."""
    if not mask.any():
        return 0
    padded = np.concatenate([[0], mask.astype(np.int8), [0]])
    edges = np.flatnonzero(np.diff(padded))
    return int(np.max(edges[1::2] - edges[::2]))


@dataclass
class BisectionResult:
    a: PhaseState
    b: PhaseState
    boundary: PhaseState
    width: float
    sigma_a: float
    sigma_b: float
    dwell: float
    steps: int
    widths: list = field(default_factory=list)
    hit_stable_set: bool = False

    def as_dict(self) -> dict:
        return {
            "a": {"u": self.a.u.tolist(), "v": self.a.v.tolist()},
            "b": {"u": self.b.u.tolist(), "v": self.b.v.tolist()},
            "boundary": {"u": self.boundary.u.tolist(), "v": self.boundary.v.tolist()},
            "width": self.width,
            "sigma_a": self.sigma_a,
            "sigma_b": self.sigma_b,
            "dwell": self.dwell,
            "steps": self.steps,
            "hit_stable_set": self.hit_stable_set,
        }


def _classify_point(state, forcing, params, horizon, dt, beta0):
    traj = integrate(state, forcing, params, 0.0, horizon, dt=dt)
    rep = classify(traj, forcing, params)
    near = np.abs(traj.u[:, 0]) <= beta0
    return rep, _longest_stretch(near) * traj.dt


def bisect_boundary(
    a: PhaseState,
    b: PhaseState,
    forcing: Forcing | None,
    params: ModelParams,
    horizon: float = 150.0,
    width_tol: float = 1e-10,
    dt: float = 1e-2,
    max_steps: int = 80,
) -> BisectionResult:
    """Bisect the segment ``[a, b]`` between the two stable basins.

    Each step integrates the midpoint, classifies it and keeps the half
    whose ends still lie in different basins.  The segment width (energy
    norm of ``a - b``) halves exactly every step.  If a midpoint converges
    to the origin it lies on the stable set and the search stops there.

    Raises
    ------
    EndpointsSameBasin
        ``a`` and ``b`` classify to the same equilibrium.
    HorizonTooShort
        An endpoint or midpoint is not certified at this horizon.
    """
    a = PhaseState.from_arrays(a.u, a.v)
    b = PhaseState.from_arrays(b.u, b.v)
    s0 = params.sigma0
    beta0 = regime_constants(params).beta0
    ra, da = _classify_point(a, forcing, params, horizon, dt, beta0)
    rb, db = _classify_point(b, forcing, params, horizon, dt, beta0)
    for r in (ra, rb):
        if not r.certified:
            raise HorizonTooShort("endpoint classification not certified; increase the horizon")
    if ra.sigma == rb.sigma or 0.0 in (ra.sigma, rb.sigma):
        raise EndpointsSameBasin(f"endpoints classify to {ra.sigma:g} and {rb.sigma:g}")

    best, best_dwell = (a, da) if da >= db else (b, db)
    width = float(energy_norm(a.u - b.u, a.v - b.v, params.operator))
    widths = [width]
    steps = 0
    hit = False
    while width > width_tol and steps < max_steps:
        mid = PhaseState(0.5 * (a.u + b.u), 0.5 * (a.v + b.v))
        rm, dm = _classify_point(mid, forcing, params, horizon, dt, beta0)
        steps += 1
        if dm > best_dwell:
            best, best_dwell = mid, dm
        if rm.sigma == 0.0 and abs(s0) > 0:
            if rm.certified:
                best, best_dwell, hit = mid, dm, True
                width = 0.5 * width
                widths.append(width)
                break
            raise HorizonTooShort("midpoint lingers near the origin; increase the horizon")
        if not rm.certified:
            raise HorizonTooShort("midpoint classification not certified; increase the horizon")
        if rm.sigma == ra.sigma:
            a = mid
        else:
            b = mid
        width = 0.5 * width
        widths.append(width)
    return BisectionResult(
        a=a, b=b, boundary=best, width=width, sigma_a=ra.sigma, sigma_b=rb.sigma,
        dwell=best_dwell, steps=steps, widths=widths, hit_stable_set=hit,
    )


def openness_probe(
    p: PhaseState,
    radius: float,
    samples: int,
    forcing: Forcing | None,
    params: ModelParams,
    horizon: float = 150.0,
    seed: int = 0,
    dt: float = 1e-2,
) -> float:
    """Fraction of random perturbations of ``p`` keeping its classification.

    Perturbations are drawn uniformly from the energy-norm ball of the given
    radius with :func:`~duffing_flow.dynamics.random_states`.

    Raises
    ------
    UncertifiedBasePoint
        ``p`` itself is not certified to a stable equilibrium.
    """
    base = classify(integrate(p, forcing, params, 0.0, horizon, dt=dt), forcing, params)
    if not base.certified or base.sigma == 0.0:
        raise UncertifiedBasePoint(f"base point classifies to {base.sigma:g} (certified={base.certified})")
    if radius == 0 or samples == 0:
        return 1.0
    kicks = random_states(seed, params.operator, radius, samples)
    starts = [PhaseState(p.u + k.u, p.v + k.v) for k in kicks]
    runs = integrate_many(starts, forcing, params, 0.0, horizon, dt=dt)
    same = [classify(tr, forcing, params).sigma == base.sigma for tr in runs]
    return float(np.mean(same))


@dataclass
class HeteroclinicRun:
    delta: float
    trajectory: object
    dwell: float
    residual_origin: float
    residual_target: float
    target: float


def heteroclinic_demo(params: ModelParams, delta: float = 1e-8, horizon: float = 200.0, dt: float = 1e-2) -> HeteroclinicRun:
    """Unforced run from ``(delta e1, 0)``: lingers at the origin, then falls into a well.

    ``dwell`` is the first time ``|u1| >= beta0`` (``inf`` if never).
    ``residual_origin`` is ``|v(0)| + |A u(0)|`` and ``residual_target`` the
    same quantity relative to ``sign(delta) sigma0 e1`` at the final time.

    Raises
    ------
    HorizonTooShort
        ``delta != 0`` and the run never leaves the neighbourhood of the origin.
    """
    e1 = params.operator.e1()
    start = PhaseState(delta * e1, np.zeros(params.n_modes))
    traj = integrate(start, None, params, 0.0, horizon, dt=dt)
    beta0 = regime_constants(params).beta0
    out = np.flatnonzero(np.abs(traj.u[:, 0]) >= beta0)
    if delta != 0 and out.size == 0:
        raise HorizonTooShort(f"no escape from the origin before t={horizon:g}")
    dwell = float(traj.times[out[0]]) if out.size else float("inf")
    target = float(np.sign(delta) * params.sigma0)
    lam = params.eigenvalues
    w = traj.u[-1] - target * e1
    return HeteroclinicRun(
        delta=delta,
        trajectory=traj,
        dwell=dwell,
        residual_origin=float(np.linalg.norm(traj.v[0]) + np.linalg.norm(lam * traj.u[0])),
        residual_target=float(np.linalg.norm(traj.v[-1]) + np.linalg.norm(lam * w)),
        target=target,
    )


def dwell_growth_rate(params: ModelParams, deltas=(1e-4, 1e-6, 1e-8), horizon: float = 200.0, dt: float = 1e-2):
    """Fit ``dwell = a + ln(1/delta) / s`` and return ``(s, runs)``.

    Linearisation predicts ``s = s+ = (-1 + sqrt(1 + 4 lam1 (lam - lam1)))/2``.
    """
    runs = [heteroclinic_demo(params, d, horizon, dt) for d in deltas]
    x = np.log(1 / np.abs(np.asarray(deltas, dtype=float)))
    slope = np.polyfit(x, [r.dwell for r in runs], 1)[0]
    return float(1 / slope), runs
