"""Modal equations of motion and fixed-step time integration.

In the eigenbasis of ``A`` the equation

    u'' + u' + A^2 u - lam A u + |A^{1/2} u|^2 A u = f(t)

becomes, for every mode ``k``,

    u_k'' = -u_k' - lam_k^2 u_k + lam lam_k u_k - (sum_j lam_j u_j^2) lam_k u_k + f_k(t).

Coordinates that start at zero and are never forced stay exactly zero, so any
finite set of modes is an exact invariant subsystem of the full equation.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .errors import DimensionMismatch, NonFiniteState, StepTooLargeForStiffness
from .forcing import Forcing, as_forcing
from .spectral import ModelParams, PhaseState, SpectralOperator

__all__ = [
    "Trajectory",
    "rhs",
    "integrate",
    "integrate_many",
    "integrate_mode",
    "stationary_states",
    "random_states",
    "stroboscopic_iterates",
    "default_dt",
    "stability_number",
    "STABILITY_BUDGET",
]

# Largest admissible ``dt * lam_N`` per method.  For RK4 the linear modal
# frequencies are bounded by lam_N and the imaginary-axis stability limit is
# 2*sqrt(2); 2.0 leaves room for nonlinear stiffening.  The integrating-factor
# variant handles the linear part exactly and is limited by the cubic term,
# whose stiffness scales like sqrt(lam * lam_N).
STABILITY_BUDGET = {"rk4": 2.0, "rk4-if": 2.0}
METHODS = tuple(STABILITY_BUDGET)


@dataclass
class Trajectory:
    """Sampled solution on a uniform (or at least increasing) time grid.

    ``u`` and ``v`` have shape ``(len(times), n_modes)``.  ``ledger`` is an
    :class:`~duffing_flow.energy.EnergyRecord` of arrays once filled in.
    """

    times: np.ndarray
    u: np.ndarray
    v: np.ndarray
    ledger: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.u.shape != self.v.shape or self.u.shape[0] != self.times.shape[0]:
            raise DimensionMismatch("times, u and v lengths disagree")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self) -> int:
        return self.times.size

    @property
    def n_modes(self) -> int:
        return self.u.shape[-1]

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    def state(self, i: int) -> PhaseState:
        return PhaseState(self.u[i], self.v[i])

    @property
    def states(self) -> list[PhaseState]:
        return [self.state(i) for i in range(len(self))]

    @property
    def final(self) -> PhaseState:
        return self.state(-1)

    def window(self, t_start: float, t_end: float = np.inf) -> "Trajectory":
        keep = (self.times >= t_start) & (self.times <= t_end)
        return Trajectory(self.times[keep], self.u[keep], self.v[keep])

    def __neg__(self) -> "Trajectory":
        return Trajectory(self.times, -self.u, -self.v)


def _modal_acceleration(params: ModelParams) -> Callable:
    lam = params.eigenvalues
    lin = lam * (params.lam - lam)

    def acc(u, v, f):
        s = np.expand_dims((u * u) @ lam, -1)
        a = (lin - s * lam) * u - v
        return a if f is None else a + f

    return acc


def rhs(state, t: float, forcing: Forcing | None, params: ModelParams):
    """Time derivative ``(du, dv)`` of the modal system at ``(state, t)``."""
    u = np.asarray(state.u, dtype=float)
    v = np.asarray(state.v, dtype=float)
    n = params.n_modes
    if u.shape[-1:] != (n,) or v.shape != u.shape:
        raise DimensionMismatch(f"state shape {u.shape}/{v.shape} does not match {n} modes")
    forcing = as_forcing(forcing, n)
    f = None if forcing.is_zero else forcing.evaluate(t)
    return v.copy(), _modal_acceleration(params)(u, v, f)


def default_dt(op: SpectralOperator) -> float:
    return 0.5 / op.lam_max**2


def stability_number(dt: float, op: SpectralOperator, method: str = "rk4", lam: float | None = None) -> float:
    """Quantity compared against :data:`STABILITY_BUDGET`.

    ``dt * lam_N`` for RK4; ``dt * sqrt(lam * lam_N)`` for the integrating
    factor variant (``lam`` defaults to ``lam_2``, an upper bound).
    """
    if method == "rk4":
        return dt * op.lam_max
    if method == "rk4-if":
        lam = op.lam2 if lam is None else lam
        return dt * np.sqrt(lam * op.lam_max)
    raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")


def _check_step(dt, op, method, lam):
    if not dt > 0:
        raise ValueError("dt must be positive")
    number = stability_number(dt, op, method, lam)
    if number > STABILITY_BUDGET[method]:
        raise StepTooLargeForStiffness(
            f"dt={dt:g} gives stability number {number:.3g} > {STABILITY_BUDGET[method]} for method {method!r}"
        )


def _grid(t0, t1, dt, stride):
    if not t1 > t0:
        raise ValueError("need t1 > t0")
    n = max(1, int(round((t1 - t0) / dt)))
    if n % stride:
        raise ValueError(f"stride {stride} does not divide the {n} integration steps")
    return n, (t1 - t0) / n


def _forcing_table(forcing: Forcing, t0: float, h: float, n: int):
    """Forcing at every RK stage time ``t0 + i h / 2``, or ``None`` if zero."""
    if forcing.is_zero:
        return None
    return forcing.evaluate_many(t0 + (0.5 * h) * np.arange(2 * n + 1))


def _rk4_march(acc, u, v, ftab, h, n, stride):
    """Classical RK4; returns stored samples of shape ``(n // stride + 1, ...)``."""
    m = n // stride
    us = np.empty((m + 1,) + u.shape)
    vs = np.empty_like(us)
    us[0], vs[0] = u, v
    hh, h6 = 0.5 * h, h / 6.0
    fa = fb = fc = None
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            if ftab is not None:
                fa, fb, fc = ftab[2 * i], ftab[2 * i + 1], ftab[2 * i + 2]
            a1 = acc(u, v, fa)
            u2 = u + hh * v
            v2 = v + hh * a1
            a2 = acc(u2, v2, fb)
            u3 = u + hh * v2
            v3 = v + hh * a2
            a3 = acc(u3, v3, fb)
            u4 = u + h * v3
            v4 = v + h * a3
            a4 = acc(u4, v4, fc)
            u = u + h6 * (v + 2.0 * (v2 + v3) + v4)
            v = v + h6 * (a1 + 2.0 * (a2 + a3) + a4)
            if (i + 1) % stride == 0:
                j = (i + 1) // stride
                if not (np.isfinite(u).all() and np.isfinite(v).all()):
                    raise NonFiniteState(f"non-finite state at step {i + 1} (t offset {(i + 1) * h:g})")
                us[j], vs[j] = u, v
    return us, vs


def _linear_propagators(params: ModelParams, tau: float) -> np.ndarray:
    """Per-mode ``exp(tau * [[0, 1], [-mu_k, -1]])`` with ``mu_k = lam_k^2 - lam lam_k``."""
    lam = params.eigenvalues
    mu = lam * lam - params.lam * lam
    return np.stack([expm(tau * np.array([[0.0, 1.0], [-m, -1.0]])) for m in mu])


def _if_rk4_march(params, u, v, ftab, h, n, stride):
    """Lawson (integrating-factor) RK4: linear modal part exact, cubic term by RK4."""
    lam = params.eigenvalues
    Eh = _linear_propagators(params, 0.5 * h)
    Ef = _linear_propagators(params, h)

    def prop(E, a, b):
        return E[:, 0, 0] * a + E[:, 0, 1] * b, E[:, 1, 0] * a + E[:, 1, 1] * b

    def nl(x, f):
        s = np.expand_dims((x * x) @ lam, -1)
        out = -s * lam * x
        return out if f is None else out + f

    m = n // stride
    us = np.empty((m + 1,) + u.shape)
    vs = np.empty_like(us)
    us[0], vs[0] = u, v
    hh, h6 = 0.5 * h, h / 6.0
    fa = fb = fc = None
    zero = np.zeros_like(u)
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n):
            if ftab is not None:
                fa, fb, fc = ftab[2 * i], ftab[2 * i + 1], ftab[2 * i + 2]
            n1 = nl(u, fa)
            a_u, a_v = prop(Eh, u, v + hh * n1)
            n2 = nl(a_u, fb)
            eu, ev = prop(Eh, u, v)
            b_u, b_v = eu, ev + hh * n2
            n3 = nl(b_u, fb)
            fu, fv = prop(Ef, u, v)
            k3u, k3v = prop(Eh, zero, n3)
            c_u, c_v = fu + h * k3u, fv + h * k3v
            n4 = nl(c_u, fc)
            p1u, p1v = prop(Ef, zero, n1)
            p23u, p23v = prop(Eh, zero, n2 + n3)
            u = fu + h6 * (p1u + 2.0 * p23u)
            v = fv + h6 * (p1v + 2.0 * p23v + n4)
            if (i + 1) % stride == 0:
                j = (i + 1) // stride
                if not (np.isfinite(u).all() and np.isfinite(v).all()):
                    raise NonFiniteState(f"non-finite state at step {i + 1} (t offset {(i + 1) * h:g})")
                us[j], vs[j] = u, v
    return us, vs


def _run(u0, v0, forcing, params, t0, t1, dt, method, stride):
    op = params.operator
    if method not in STABILITY_BUDGET:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    dt = default_dt(op) if dt is None else float(dt)
    _check_step(dt, op, method, params.lam)
    n, h = _grid(t0, t1, dt, stride)
    forcing = as_forcing(forcing, params.n_modes)
    ftab = _forcing_table(forcing, t0, h, n)
    if ftab is not None and u0.ndim > 1:
        ftab = ftab.reshape((ftab.shape[0],) + (1,) * (u0.ndim - 1) + (ftab.shape[1],))
    if method == "rk4":
        us, vs = _rk4_march(_modal_acceleration(params), u0, v0, ftab, h, n, stride)
    else:
        us, vs = _if_rk4_march(params, u0, v0, ftab, h, n, stride)
    times = t0 + (h * stride) * np.arange(n // stride + 1)
    return times, us, vs


def _as_state_arrays(initial, n):
    u = np.array(initial.u, dtype=float)
    v = np.array(initial.v, dtype=float)
    if u.shape[-1:] != (n,) or u.shape != v.shape:
        raise DimensionMismatch(f"initial state shape {u.shape}/{v.shape} does not match {n} modes")
    return u, v


def integrate(
    initial,
    forcing: Forcing | None,
    params: ModelParams,
    t0: float,
    t1: float,
    dt: float | None = None,
    method: str = "rk4",
    stride: int = 1,
) -> Trajectory:
    """Integrate from ``initial`` at ``t0`` to ``t1`` with a fixed step.

    Parameters
    ----------
    initial : PhaseState
        Initial coefficients ``(u, u')``.
    forcing : Forcing or None
        ``None`` means unforced.
    params : ModelParams
    t0, t1 : float
        Time window, ``t1 > t0``.
    dt : float, optional
        Requested step, default ``0.5 / lam_N**2``.  The number of steps is
        ``round((t1 - t0) / dt)`` and the step actually used is adjusted so
        the grid ends exactly at ``t1``.
    method : {"rk4", "rk4-if"}
        Classical RK4 or the integrating-factor (Lawson) variant.
    stride : int
        Keep every ``stride``-th step in the returned trajectory.

    Raises
    ------
    StepTooLargeForStiffness
        ``dt`` exceeds the documented stability budget of ``method``.
    NonFiniteState
        Overflow or NaN while stepping.
    """
    u0, v0 = _as_state_arrays(initial, params.n_modes)
    if u0.ndim != 1:
        raise DimensionMismatch("integrate expects a single state; use integrate_many for batches")
    times, us, vs = _run(u0, v0, forcing, params, float(t0), float(t1), dt, method, stride)
    return Trajectory(times, us, vs)


def integrate_many(
    initials: Sequence[PhaseState] | PhaseState,
    forcing: Forcing | None,
    params: ModelParams,
    t0: float,
    t1: float,
    dt: float | None = None,
    method: str = "rk4",
    stride: int = 1,
) -> list[Trajectory]:
    """Integrate several initial states under a common forcing in one sweep.

    ``initials`` is a sequence of states or a single :class:`PhaseState`
    whose arrays have shape ``(batch, n_modes)``.  Each run matches the
    corresponding :func:`integrate` call up to round-off (the batched modal
    sums may associate differently).
    """
    if isinstance(initials, PhaseState):
        u0, v0 = _as_state_arrays(initials, params.n_modes)
    else:
        pairs = [_as_state_arrays(s, params.n_modes) for s in initials]
        u0 = np.stack([p[0] for p in pairs])
        v0 = np.stack([p[1] for p in pairs])
    if u0.ndim != 2:
        raise DimensionMismatch("batched initial data must have shape (batch, n_modes)")
    times, us, vs = _run(u0, v0, forcing, params, float(t0), float(t1), dt, method, stride)
    return [Trajectory(times, us[:, b].copy(), vs[:, b].copy()) for b in range(u0.shape[0])]


def integrate_mode(u0: float, v0: float, f_k: Callable | None, lam_k: float, lam: float,
                   t0: float, t1: float, dt: float, stride: int = 1):
    """Integrate the scalar Duffing equation of one isolated mode.

        u'' + u' + lam_k (lam_k - lam) u + lam_k^2 u^3 = f_k(t)

    ``f_k`` is a scalar function of time (vectorised over arrays) or ``None``.
    Returns ``(times, u, v)`` with 1-d arrays, using the same RK4 stepping as
    :func:`integrate`.
    """
    stiff = lam_k * (lam_k - lam)
    sq = lam_k * lam_k

    def acc(u, v, f):
        a = -v - stiff * u - sq * u * u * u
        return a if f is None else a + f

    n, h = _grid(float(t0), float(t1), dt, stride)
    ftab = None
    if f_k is not None:
        ftab = np.asarray(f_k(t0 + (0.5 * h) * np.arange(2 * n + 1)), dtype=float)
    us, vs = _rk4_march(acc, np.float64(u0), np.float64(v0), ftab, h, n, stride)
    times = t0 + (h * stride) * np.arange(n // stride + 1)
    return times, us, vs


def stationary_states(params: ModelParams) -> list[PhaseState]:
    """The three equilibria ``(-sigma0 e1, 0)``, ``(0, 0)``, ``(sigma0 e1, 0)``."""
    e1 = params.operator.e1()
    zero = np.zeros(params.n_modes)
    return [PhaseState(s * params.sigma0 * e1, zero.copy()) for s in (-1.0, 0.0, 1.0)]


def random_states(seed: int, op: SpectralOperator, bound: float, count: int = 1) -> list[PhaseState]:
    """Seeded initial data, uniform in the energy ball ``|Au|^2 + |v|^2 <= bound^2``.

    Generator: ``numpy.random.Generator(PCG64(seed))``.  For each state draw
    ``z ~ N(0, I_{2N})`` then ``r = U(0,1)``; with ``x = bound * r**(1/(2N)) * z/|z|``
    set ``u_k = x_k / lam_k`` and ``v_k = x_{N+k}``.  Draws are consumed in
    that order, state by state.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    n = op.n_modes
    out = []
    for _ in range(count):
        z = rng.standard_normal(2 * n)
        r = rng.random()
        x = bound * r ** (1.0 / (2 * n)) * z / np.linalg.norm(z)
        out.append(PhaseState(x[:n] / op.eigenvalues, x[n:]))
    return out


def stroboscopic_iterates(
    initials: Sequence[PhaseState],
    forcing: Forcing,
    params: ModelParams,
    period: float,
    n_periods: int,
    steps_per_period: int,
    method: str = "rk4",
):
    """Sample the flow once per forcing period (Poincare map iterates).

    Returns ``(u, v)`` arrays of shape ``(n_periods + 1, batch, n_modes)``;
    index ``n`` is the state at ``t = n * period``.
    """
    pairs = [_as_state_arrays(s, params.n_modes) for s in initials]
    u0 = np.stack([p[0] for p in pairs])
    v0 = np.stack([p[1] for p in pairs])
    dt = period / steps_per_period
    _, us, vs = _run(u0, v0, forcing, params, 0.0, n_periods * period, dt, method, steps_per_period)
    return us, vs
