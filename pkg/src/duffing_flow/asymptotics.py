"""Long-time behaviour: tail sups, regime classification and proof constants.

``limsup`` is unobservable on a finite horizon; every routine here replaces
it by a supremum over a trailing window of the samples.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import (
    EmptySeries,
    GridMismatch,
    HorizonTooShort,
    InfeasibleBeta,
    NonCoerciveB,
    UnboundedSolution,
)
from .forcing import Forcing, as_forcing
from .spectral import ModelParams

__all__ = [
    "tail_limsup",
    "stabilized_tail_sup",
    "TailStats",
    "tail_stats",
    "RegimeConstants",
    "regime_constants",
    "check_regime_constants",
    "RegimeReport",
    "classify",
    "verify_ultimate_bound",
    "asymptotic_distance",
    "ode_limsup_oracle",
    "pde_limsup_oracle",
    "poincare_fixed_points",
    "cosine_sum",
    "LEMMA_SUITE",
    "run_lemma_case",
]

CERTIFY_RATIO = 3.0
ULTIMATE_SLACK = 1e-9


def tail_limsup(series, window_fraction: float = 0.5) -> float:
    """Supremum of ``series`` over its last ``window_fraction`` of samples."""
    x = np.asarray(series, dtype=float).ravel()
    if x.size == 0:
        raise EmptySeries("cannot take a tail sup of an empty series")
    if not 0 < window_fraction <= 1:
        raise ValueError("window_fraction must lie in (0, 1]")
    k = max(1, int(np.ceil(window_fraction * x.size)))
    return float(np.max(x[-k:]))


def stabilized_tail_sup(series, window_fraction: float = 0.5, rtol: float = 0.05, start: int = 16) -> float:
    """Tail sup with window doubling.

    Starts from ``window_fraction / start`` and doubles the window until two
    successive estimates agree within ``rtol`` (the larger one is returned) or
    ``window_fraction`` is reached.  For stationary oscillations this settles
    early; for decaying series it returns the full-window value, which is the
    conservative choice.
    """
    frac = window_fraction / start
    prev = tail_limsup(series, frac)
    while frac < window_fraction:
        frac = min(2 * frac, window_fraction)
        cur = tail_limsup(series, frac)
        if abs(cur - prev) <= rtol * max(abs(cur), abs(prev)):
            return max(cur, prev)
        prev = cur
    return prev


def _check_horizon(traj, burn_in, window_fraction):
    t = traj.times
    if t.size < 3:
        raise HorizonTooShort("trajectory has fewer than 3 samples")
    span = t[-1] - t[0]
    if span * (1 - window_fraction) < burn_in:
        raise HorizonTooShort(
            f"horizon {span:g} leaves less than burn-in {burn_in:g} before the tail window"
        )


def _tail(traj, window_fraction):
    k = max(1, int(np.ceil(window_fraction * len(traj))))
    return slice(len(traj) - k, None)


@dataclass
class TailStats:
    """Sups over the samples with ``t >= window_start``."""

    window_start: float
    f_norm: float
    F: float
    v_norm: float
    u1_abs: float
    residuals: dict  # sigma -> sup |v| + |A(u - sigma e1)|


def _residual_series(traj, params, sigma):
    lam = params.eigenvalues
    w = traj.u.copy()
    w[:, 0] -= sigma
    return np.sqrt((traj.v * traj.v).sum(-1)) + np.sqrt(((lam * w) ** 2).sum(-1))


def tail_stats(traj, forcing, params, window_fraction=0.5, burn_in=0.0) -> TailStats:
    from .energy import corrected_energy

    _check_horizon(traj, burn_in, window_fraction)
    tail = _tail(traj, window_fraction)
    fnorm = as_forcing(forcing, params.n_modes).norm_many(traj.times)
    s0 = params.sigma0
    return TailStats(
        window_start=float(traj.times[tail][0]),
        f_norm=float(np.max(fnorm[tail])),
        F=float(np.max(corrected_energy(traj, params)[tail])),
        v_norm=float(np.max(np.linalg.norm(traj.v[tail], axis=-1))),
        u1_abs=float(np.max(np.abs(traj.u[tail, 0]))),
        residuals={s: float(np.max(_residual_series(traj, params, s)[tail])) for s in (-s0, 0.0, s0)},
    )


# ---------------------------------------------------------------------------
# proof constants


@dataclass(frozen=True)
class RegimeConstants:
    beta: float
    beta0: float
    beta1: float
    delta: float
    K1: float
    K2: float
    K3: float
    gamma1: float
    eta: float
    eps1: float
    M1: float
    M2: float
    M3: float

    def as_dict(self):
        return asdict(self)


def _beta0(params: ModelParams) -> float:
    lam1, lam2, lam = params.operator.lam1, params.operator.lam2, params.lam
    b_a = ((lam2 - lam) * params.gamma0 / (16 * lam2 * lam1 * lam1)) ** 0.25
    b_b = np.sqrt((lam - lam1) / (2 * lam1))
    return float(min(b_a, b_b, 0.99 * params.sigma0))


def regime_constants(params: ModelParams, beta: float | None = None) -> RegimeConstants:
    """Constants of the stability argument around ``+sigma0 e1``.

    ``beta`` defaults to ``beta0``.  Each constant is the largest (or
    smallest, for ``K1``) value compatible with its defining inequalities,
    obtained in closed form:

    * ``beta1`` solves ``W(beta1) = W(0) - gamma0 beta^2 / 12`` on
      ``(0, sigma0)``, hence ``delta = gamma0 beta^2 / 12``.
    * ``K1`` is the positive root of ``W(x) = W(0) + 1``.
    * ``K2 = (lam1^2/4)(sqrt(2) sigma0 + sigma0)^2`` and
      ``K3 = lam1^2 beta1 (beta1 + sigma0)``.
    * ``gamma1`` is the minimum over its five constraints, the quadratic one
      solved exactly; ``eta`` likewise.
    * ``eps1`` sits just below ``(gamma1/2) sqrt(delta)``.

    Raises
    ------
    InfeasibleBeta
        ``beta`` outside ``(0, sigma0)``.
    """
    s0, g0 = params.sigma0, params.gamma0
    lam1, lam2, lam = params.operator.lam1, params.operator.lam2, params.lam
    beta0 = _beta0(params)
    beta = beta0 if beta is None else float(beta)
    if not 0 < beta < s0:
        raise InfeasibleBeta(f"beta must lie in (0, sigma0={s0:g}), got {beta:g}")

    from .energy import double_well as W

    c = g0 * beta * beta / 12
    beta1 = float(np.sqrt(s0 * s0 - np.sqrt(s0**4 - 4 * c / (lam1 * lam1))))
    delta = float(W(beta1, params) - W(0.0, params) + g0 * beta * beta / 6)
    K1 = float(np.sqrt(s0 * s0 + np.sqrt(s0**4 + 4 / (lam1 * lam1))))
    K2 = 0.25 * lam1 * lam1 * (np.sqrt(2) * s0 + s0) ** 2
    K3 = lam1 * lam1 * beta1 * (beta1 + s0)
    b = K2 + 0.25
    gamma1 = min(
        0.25,
        (-b + np.sqrt(b * b + 4 * K3)) / 2,
        (lam2 - lam) * g0 / (lam1 * np.sqrt(2) * s0 * s0),
        np.sqrt(g0),
        delta / (2 * (K1 + s0) ** 2),
    )
    eta = min(1.0, delta / (4 * (1 + (g0 / 3 + gamma1) * (K1 + s0))))
    eps1 = 0.5 * gamma1 * np.sqrt(delta) * (1 - 1e-6)
    m1 = 2 / g0
    return RegimeConstants(
        beta=beta, beta0=beta0, beta1=beta1, delta=delta, K1=K1, K2=float(K2), K3=float(K3),
        gamma1=float(gamma1), eta=float(eta), eps1=float(eps1), M1=m1, M2=lam * lam, M3=4 * m1,
    )


def check_regime_constants(params: ModelParams, rc: RegimeConstants, n_grid: int = 20001) -> dict:
    """Re-verify every defining inequality; returns ``name -> bool``.

    Inequalities quantified over ``x`` are checked on a uniform grid (with a
    relative round-off tolerance of ``1e-12``).
    """
    from .energy import double_well as W

    s0, g0 = params.sigma0, params.gamma0
    lam1, lam2, lam = params.operator.lam1, params.operator.lam2, params.lam
    tol = 1e-12
    g1 = rc.gamma1
    x_k1 = np.linspace(rc.K1, 3 * rc.K1, n_grid)
    x_k2 = np.linspace(0, np.sqrt(2) * s0, n_grid)
    x_k3 = np.linspace(rc.beta1, 3 * rc.K1, n_grid)
    w0 = float(W(0.0, params))
    wp = lam1 * lam1 * x_k3 * (x_k3 * x_k3 - s0 * s0)
    return {
        "beta0_a": 16 * rc.beta0**4 * lam1**2 <= (lam2 - lam) / lam2 * g0 * (1 + tol),
        "beta0_b": rc.beta0**2 <= (lam - lam1) / (2 * lam1) * (1 + tol),
        "beta1_range": 0 < rc.beta1 < rc.beta,
        "delta_positive": rc.delta > 0,
        "K1": bool(np.all(W(x_k1, params) >= (w0 + 1) * (1 - tol))),
        "K2": bool(np.all(W(x_k2, params) <= rc.K2 * (x_k2 - s0) ** 2 + tol)),
        "K3": bool(np.all((x_k3 - s0) * wp >= rc.K3 * (x_k3 - s0) ** 2 - tol * np.maximum(1, np.abs(wp)))),
        "gamma1_a": g1 <= 0.25,
        "gamma1_b": rc.K2 * g1 + g1 / 4 + g1 * g1 <= rc.K3 * (1 + tol),
        "gamma1_c": lam1 * g1 * np.sqrt(2) * s0 * s0 <= (lam2 - lam) * g0 * (1 + tol),
        "gamma1_d": g1 * g1 <= g0 * (1 + tol),
        "gamma1_e": 2 * (rc.K1 + s0) ** 2 * g1 <= rc.delta * (1 + tol),
        "eta_a": rc.eta <= 1,
        "eta_b": (1 + (g0 / 3 + g1) * (rc.K1 + s0)) * rc.eta <= rc.delta / 4 * (1 + tol),
        "eps1": rc.eps1**2 < rc.delta / 4 * g1 * g1,
        "M": rc.M1 == 2 / g0 and rc.M2 == lam * lam and rc.M3 == 4 * rc.M1,
    }


# ---------------------------------------------------------------------------
# classification


@dataclass
class RegimeReport:
    sigma: float
    tail_residual: float
    forcing_tail: float
    margin_vs_linear_scaling: float
    certified: bool
    residuals: dict = field(default_factory=dict)
    gate: str | None = None

    def as_dict(self) -> dict:
        d = asdict(self)
        d["residuals"] = {repr(float(k)): v for k, v in self.residuals.items()}
        return d


def _gates(traj, fnorm, params, rc: RegimeConstants, tail):
    """Which stability hypothesis (origin or one of the wells) holds on the tail, if any."""
    from .energy import corrected_energy

    u1 = traj.u[:, 0]
    if np.max(np.abs(u1[tail])) <= rc.beta0 and np.max(fnorm[tail]) <= 1:
        return "unstable"
    F = corrected_energy(traj, params)
    # sup_{t >= T0} |f| for every candidate T0
    fsup_after = np.maximum.accumulate(fnorm[::-1])[::-1]
    idx = np.arange(len(traj))[tail]
    ok = (fsup_after[idx] <= rc.eps1) & (F[idx] < rc.eta) & (np.abs(traj.v[idx, 0]) < rc.eta)
    if np.any(ok & (u1[idx] > rc.beta)):
        return "stable+"
    if np.any(ok & (-u1[idx] > rc.beta)):
        return "stable-"
    return None


def classify(
    traj,
    forcing: Forcing | None,
    params: ModelParams,
    mode: str = "pragmatic",
    window_fraction: float = 0.5,
    burn_in: float = 0.0,
) -> RegimeReport:
    """Assign the trajectory to one of the three equilibria.

    The residual for candidate ``sigma`` is the stabilized tail sup of
    ``|v| + |A(u - sigma e1)|``; the winner is the argmin, and the report is
    certified when the runner-up residual is at least 3 times the winner's.
    ``mode="theoretical"`` additionally records which stability hypothesis
    (``"unstable"``, ``"stable+"``, ``"stable-"``) holds on the tail.

    Raises
    ------
    HorizonTooShort
        Burn-in plus tail window exceed the trajectory span.
    """
    if mode not in ("pragmatic", "theoretical"):
        raise ValueError("mode must be 'pragmatic' or 'theoretical'")
    _check_horizon(traj, burn_in, window_fraction)
    s0 = params.sigma0
    fnorm = as_forcing(forcing, params.n_modes).norm_many(traj.times)
    res = {s: stabilized_tail_sup(_residual_series(traj, params, s), window_fraction) for s in (-s0, 0.0, s0)}
    order = sorted(res, key=res.get)
    win, runner = order[0], order[1]
    best = res[win]
    ftail = stabilized_tail_sup(fnorm, window_fraction)
    report = RegimeReport(
        sigma=float(win),
        tail_residual=best,
        forcing_tail=ftail,
        margin_vs_linear_scaling=best / ftail if ftail > 0 else float("nan"),
        certified=bool(res[runner] >= CERTIFY_RATIO * best),
        residuals=res,
    )
    if mode == "theoretical":
        report.gate = _gates(traj, fnorm, params, regime_constants(params), _tail(traj, window_fraction))
    return report


def verify_ultimate_bound(
    traj, forcing: Forcing | None, params: ModelParams, window_fraction: float = 0.5,
    burn_in: float = 0.0, slack: float = ULTIMATE_SLACK,
):
    """Check ``tail F <= M1 (tail |f|)^2`` and ``tail(|v|^2+|Au|^2) <= M2 + M3 (tail |f|)^2``.

    Returns ``(ok, margins)`` with margins as ``bound - measured``.
    """
    from .energy import corrected_energy

    _check_horizon(traj, burn_in, window_fraction)
    rc = regime_constants(params)
    tail = _tail(traj, window_fraction)
    fsup = float(np.max(as_forcing(forcing, params.n_modes).norm_many(traj.times)[tail]))
    f_tail = float(np.max(corrected_energy(traj, params)[tail]))
    lam = params.eigenvalues
    en = ((lam * traj.u) ** 2).sum(-1) + (traj.v**2).sum(-1)
    e_tail = float(np.max(en[tail]))
    margins = {
        "F": rc.M1 * fsup**2 + slack - f_tail,
        "energy": rc.M2 + rc.M3 * fsup**2 + slack - e_tail,
    }
    return all(m >= 0 for m in margins.values()), margins


def asymptotic_distance(traj_u, traj_v, params: ModelParams, window_fraction: float = 0.5, floor: float = 1e-13):
    """Distance ``|u' - v'| + |A(u - v)|`` between two runs and its decay rate.

    The rate is minus the slope of a least-squares line through
    ``log(distance)`` on the tail window, using samples above ``floor`` only
    (round-off level).  ``nan`` when fewer than two such samples exist.

    Raises
    ------
    GridMismatch
    """
    if traj_u.times.shape != traj_v.times.shape or not np.array_equal(traj_u.times, traj_v.times):
        raise GridMismatch("trajectories are sampled on different grids")
    lam = params.eigenvalues
    d = np.linalg.norm(traj_u.v - traj_v.v, axis=-1) + np.linalg.norm(lam * (traj_u.u - traj_v.u), axis=-1)
    tail = _tail(traj_u, window_fraction)
    t, y = traj_u.times[tail], d[tail]
    keep = y > floor
    rate = float("nan")
    if keep.sum() >= 2:
        slope = np.polyfit(t[keep], np.log(y[keep]), 1)[0]
        rate = float(-slope)
    return d, rate


# ---------------------------------------------------------------------------
# lemma oracles


def ode_limsup_oracle(m: float, psi, horizon: float = 200.0, dt: float = 1e-2, window_fraction: float = 0.5):
    """Check the two tail bounds for the bounded solution of ``y'' + y' - m y = psi``.

    ``psi`` is a vectorised scalar function of time.  The bounded solution is
    built with the exponential-dichotomy Green function on ``[0, horizon]``;
    its values near the right edge are influenced by the zero extension of
    ``psi``, so ``psi`` is sampled on a padded window of length
    ``40 / min(|s-|, s+)`` beyond each edge and the measured tail excludes the
    padding.

    Returns ``(ok, ratios)`` where ``ratios`` maps ``"y"`` to
    ``m * tail|y| / tail|psi|`` and ``"dy"`` to ``tail|y'| / (2 tail|psi|)``
    (both must be ``<= 1``).  For ``psi = 0`` the ratios are reported as 0
    when ``y`` vanishes.

    Raises
    ------
    UnboundedSolution
        ``m <= 0``: the equation has no exponential dichotomy.
    """
    from .special import dichotomy_green_apply

    if not m > 0:
        raise UnboundedSolution(f"m must be positive for a bounded solution to be unique, got {m}")
    sp = 0.5 * (-1 + np.sqrt(1 + 4 * m))
    sm = 0.5 * (-1 - np.sqrt(1 + 4 * m))
    pad = 40.0 / min(abs(sm), sp)
    n_pad = int(np.ceil(pad / dt))
    n = int(round(horizon / dt))
    t = dt * np.arange(-n_pad, n + n_pad + 1)
    h = np.broadcast_to(np.asarray(psi(t), dtype=float), t.shape)
    y, dy = dichotomy_green_apply(-m, h, dt, extension="zero", return_derivative=True)
    inner = slice(n_pad, n_pad + n + 1)
    y, dy, h = y[inner], dy[inner], h[inner]
    psi_tail = tail_limsup(np.abs(h), window_fraction)
    y_tail = tail_limsup(np.abs(y), window_fraction)
    dy_tail = tail_limsup(np.abs(dy), window_fraction)
    rtol = 1e-9
    if psi_tail == 0:
        ok = y_tail <= rtol and dy_tail <= rtol
        return ok, {"y": 0.0 if y_tail <= rtol else np.inf, "dy": 0.0 if dy_tail <= rtol else np.inf}
    ratios = {"y": m * y_tail / psi_tail, "dy": dy_tail / (2 * psi_tail)}
    return all(r <= 1 + rtol for r in ratios.values()), ratios


def pde_limsup_oracle(eigs, psi: Forcing, horizon: float = 200.0, dt: float | None = None,
                      window_fraction: float = 0.5):
    """Check ``tail(|y'|^2 + |B^{1/2} y|^2) <= 9 max(1, 1/m) tail|psi|^2``.

    ``B = diag(eigs)``; the system ``y'' + y' + B y = psi`` is integrated
    from rest by classical RK4 (the transient decays like ``exp(-t/2)`` or
    faster, so a horizon of a few hundred is ample).

    Returns ``(ok, ratio)`` with ``ratio = measured / bound``.

    Raises
    ------
    NonCoerciveB
        Some eigenvalue of ``B`` is ``<= 0``.
    """
    from .dynamics import _grid, _forcing_table, _rk4_march

    mu = np.asarray(eigs, dtype=float).ravel()
    if mu.size == 0 or np.any(mu <= 0):
        raise NonCoerciveB(f"B must be positive definite, got eigenvalues {mu.tolist()}")
    psi = as_forcing(psi, mu.size)
    m = float(mu.min())
    dt = min(1e-2, 0.5 / np.sqrt(mu.max())) if dt is None else dt
    n, h = _grid(0.0, float(horizon), dt, 1)

    def acc(y, v, f):
        a = -v - mu * y
        return a if f is None else a + f

    ys, vs = _rk4_march(acc, np.zeros_like(mu), np.zeros_like(mu), _forcing_table(psi, 0.0, h, n), h, n, 1)
    times = h * np.arange(n + 1)
    en = (vs * vs).sum(-1) + (mu * ys * ys).sum(-1)
    psi_tail = tail_limsup(psi.norm_many(times), window_fraction)
    measured = tail_limsup(en, window_fraction)
    bound = 9 * max(1.0, 1.0 / m) * psi_tail**2
    if bound == 0:
        return measured <= 1e-20, 0.0 if measured <= 1e-20 else np.inf
    return measured <= bound, measured / bound


# ---------------------------------------------------------------------------
# stroboscopic analysis


def poincare_fixed_points(us, vs, params: ModelParams, tol: float = 1e-8):
    """Summarise stroboscopic iterates of shape ``(n_periods + 1, batch, N)``.

    For each run reports the final step ``|P x_n - x_{n-1}|`` and the
    period-2 defect ``|P^2 x_n - x_n|`` (energy norm), and clusters the
    final iterates into distinct fixed points with tolerance ``sqrt(tol)``.

    Returns ``(step, step2, labels, centers)``.
    """
    from .spectral import energy_norm

    op = params.operator
    step = energy_norm(us[-1] - us[-2], vs[-1] - vs[-2], op)
    step2 = energy_norm(us[-1] - us[-3], vs[-1] - vs[-3], op)
    finals = np.concatenate([us[-1], vs[-1]], axis=-1)
    centers: list[np.ndarray] = []
    labels = np.empty(finals.shape[0], dtype=int)
    radius = np.sqrt(tol)
    for i, x in enumerate(finals):
        for j, c in enumerate(centers):
            if np.linalg.norm(x - c) <= radius:
                labels[i] = j
                break
        else:
            centers.append(x)
            labels[i] = len(centers) - 1
    return step, step2, labels, np.array(centers)


# ---------------------------------------------------------------------------
# reference suite for the two lemma oracles


def cosine_sum(terms):
    """Scalar ``psi(t) = sum a cos(omega t + phase)`` from ``(a, omega, phase)`` triples."""
    terms = [tuple(float(x) for x in term) for term in terms]

    def psi(t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for a, w, ph in terms:
            out = out + a * np.cos(w * t + ph)
        return out

    return psi


def _modal_cosines(n_modes, terms, period=2 * np.pi):
    """``PeriodicForcing`` from ``(harmonic, mode, a, b)`` terms."""
    from .forcing import PeriodicForcing

    return PeriodicForcing(period, tuple(terms), n_modes)


LEMMA_SUITE = (
    {"kind": "ode", "m": 1.0, "psi": [(1.0, 0.0, 0.0)]},
    {"kind": "ode", "m": 2.0, "psi": [(-0.5, 0.0, 0.0)]},
    {"kind": "ode", "m": 1.0, "psi": [(1.0, 1.0, -np.pi / 2)]},
    {"kind": "ode", "m": 0.5, "psi": [(1.0, 2.0, 0.0)]},
    {"kind": "ode", "m": 4.0, "psi": [(1.0, 1.0, 0.3), (0.5, 3.0, 0.0)]},
    {"kind": "ode", "m": 0.1, "psi": [(1.0, 1.0, 0.0)]},
    {"kind": "ode", "m": 10.0, "psi": [(2.0, 0.3, 1.0), (0.2, 0.0, 0.0)]},
    {"kind": "pde", "eigs": [2.0, 12.0], "terms": [(1, 0, 1.0, 0.0)]},
    {"kind": "pde", "eigs": [0.5, 3.0], "terms": [(0, 0, 1.0, 0.0), (0, 1, -2.0, 0.0)]},
    {"kind": "pde", "eigs": [2.0, 12.0, 72.0, 240.0], "terms": [(1, 0, 0.3, 0.1), (2, 1, 0.5, 0.0), (3, 3, 0.0, 1.0)]},
)


def run_lemma_case(case: dict, horizon: float = 200.0) -> dict:
    """Evaluate one :data:`LEMMA_SUITE` entry; returns a JSON-friendly dict."""
    if case["kind"] == "ode":
        ok, ratios = ode_limsup_oracle(case["m"], cosine_sum(case["psi"]), horizon)
        return {"kind": "ode", "m": case["m"], "passed": bool(ok), "ratios": ratios}
    eigs = case["eigs"]
    ok, ratio = pde_limsup_oracle(eigs, _modal_cosines(len(eigs), case["terms"]), horizon)
    return {"kind": "pde", "eigs": list(eigs), "passed": bool(ok), "ratio": float(ratio)}
