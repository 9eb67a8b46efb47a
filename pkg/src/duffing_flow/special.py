"""Special bounded and periodic solutions near the three equilibria.

Writing ``u = sigma e1 + w`` turns the equation into

    w'' + w' + L w = f(t) + g(w),

with ``L`` diagonal (modal stiffnesses ``mu``) and ``g`` collecting the
quadratic and cubic terms.  The special solution is the fixed point of
``w = K(f + g(w))``, where ``K`` is the bounded inverse of
``d^2/dt^2 + d/dt + L``.  For periodic forcing ``K`` is diagonal in time
Fourier space; on a finite window it is a per-mode convolution with the
bounded Green function (one-sided for ``mu > 0``, two-sided dichotomy
kernel for ``mu < 0``).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .errors import (
    DimensionMismatch,
    MaxIterExceeded,
    NonContraction,
    NonNegativeMu,
    WindowTooShort,
    ZeroStiffnessMode,
)
from .forcing import Forcing, PeriodicForcing, as_forcing
from .spectral import ModelParams

__all__ = [
    "LinearizedOperator",
    "linearize",
    "nonlinear_remainder",
    "PeriodicSolution",
    "solve_periodic",
    "dichotomy_green_apply",
    "causal_green_apply",
    "BoundedSolution",
    "solve_bounded",
]

DIVERGENCE_STREAK = 3


@dataclass(frozen=True)
class LinearizedOperator:
    sigma: float
    mu: np.ndarray

    @property
    def coercivity(self) -> float:
        """Smallest stiffness ``m0`` (negative around the origin)."""
        return float(self.mu.min())


def _snap_sigma(sigma, params: ModelParams) -> float:
    s0 = params.sigma0
    for cand in (-s0, 0.0, s0):
        if abs(sigma - cand) <= 1e-12 * max(1.0, s0):
            return cand
    raise ValueError(f"sigma must be one of -sigma0, 0, +sigma0 (sigma0={s0:g}), got {sigma}")


def linearize(sigma: float, params: ModelParams) -> LinearizedOperator:
    """Modal stiffnesses of the linearisation at ``sigma e1``.

    ``mu_k = lam_k^2 - lam lam_k`` at the origin; at ``+-sigma0``,
    ``mu_1 = 2 lam1 (lam - lam1)`` and ``mu_k = lam_k^2 - lam1 lam_k`` for ``k >= 2``.
    """
    sigma = _snap_sigma(sigma, params)
    lam = params.eigenvalues
    if sigma == 0.0:
        mu = lam * lam - params.lam * lam
    else:
        lam1 = params.operator.lam1
        mu = lam * lam - lam1 * lam
        mu[0] = 2 * lam1 * (params.lam - lam1)
    mu.setflags(write=False)
    return LinearizedOperator(sigma, mu)


def nonlinear_remainder(sigma: float, w, params: ModelParams) -> np.ndarray:
    """Quadratic plus cubic part ``g(w)`` of the equation around ``sigma e1``.

    ``g(w) = -(2 sigma lam1 w1 Aw + sigma lam1 |A^{1/2}w|^2 e1 + |A^{1/2}w|^2 Aw)``,
    which reduces to ``-|A^{1/2}w|^2 Aw`` at the origin.  Vectorised over
    leading axes.
    """
    sigma = _snap_sigma(sigma, params)
    w = np.asarray(w, dtype=float)
    lam = params.eigenvalues
    if w.shape[-1:] != (lam.size,):
        raise DimensionMismatch(f"w has trailing dimension {w.shape[-1:]}, expected {lam.size}")
    lam1 = params.operator.lam1
    q = np.expand_dims((w * w) @ lam, -1)
    aw = lam * w
    out = -q * aw
    if sigma != 0.0:
        out = out - 2 * sigma * lam1 * w[..., :1] * aw
        out[..., 0] -= sigma * lam1 * q[..., 0]
    return out


# ---------------------------------------------------------------------------
# periodic solutions


@dataclass
class PeriodicSolution:
    """``u(t) = sigma e1 + Re sum_j c_j exp(i j 2 pi t / T)``.

    ``coefficients`` has shape ``(harmonics + 1, N)`` in the one-sided
    convention of :func:`numpy.fft.rfft` scaled by ``1/M``, so the physical
    amplitude of harmonic ``j >= 1`` in mode ``k`` is ``2 |c[j, k]|``.
    """

    sigma: float
    period: float
    coefficients: np.ndarray
    residual: float
    iterations: int

    @property
    def harmonics(self) -> int:
        return self.coefficients.shape[0] - 1

    def amplitude(self, harmonic: int, mode: int) -> float:
        c = abs(self.coefficients[harmonic, mode])
        return float(c if harmonic == 0 else 2 * c)

    def _series(self, times, order):
        t = np.asarray(times, dtype=float).ravel()
        omega = 2 * np.pi / self.period * np.arange(self.harmonics + 1)
        weights = np.where(omega == 0, 1.0, 2.0)
        phase = np.exp(1j * np.outer(np.mod(t, self.period), omega))
        return ((phase * weights * (1j * omega) ** order) @ self.coefficients).real

    def evaluate(self, times):
        """Return ``(u, v)`` arrays of shape ``(len(times), N)``."""
        u = self._series(times, 0)
        u[:, 0] += self.sigma
        return u, self._series(times, 1)

    def state(self, t: float):
        from .spectral import PhaseState

        u, v = self.evaluate([t])
        return PhaseState(u[0], v[0])

    def trajectory(self, n_samples: int = 256, t0: float = 0.0):
        """One period sampled at ``n_samples + 1`` points (both ends included)."""
        from .dynamics import Trajectory

        t = t0 + self.period * np.arange(n_samples + 1) / n_samples
        # evaluate without phase reduction so the closing sample is genuinely t0 + T
        omega = 2 * np.pi / self.period * np.arange(self.harmonics + 1)
        weights = np.where(omega == 0, 1.0, 2.0)
        phase = np.exp(1j * np.outer(t, omega)) * weights
        u = (phase @ self.coefficients).real
        u[:, 0] += self.sigma
        v = ((phase * 1j * omega) @ self.coefficients).real
        return Trajectory(t, u, v)

    def closure(self) -> float:
        """``|w(T) - w(0)| + |w'(T) - w'(0)|`` from the reconstructed series."""
        tr = self.trajectory(n_samples=1)
        return float(np.linalg.norm(tr.u[-1] - tr.u[0]) + np.linalg.norm(tr.v[-1] - tr.v[0]))


def _fourier_grid(period, harmonics):
    # a cubic nonlinearity spreads harmonics up to 3J; M > 4J keeps the
    # aliased images outside the retained band 0..J
    m = 4 * harmonics + 4
    return m, period * np.arange(m) / m


def _pde_residual(sol: PeriodicSolution, forcing: Forcing, params: ModelParams, n_fine: int):
    from .dynamics import _modal_acceleration

    t = sol.period * np.arange(n_fine) / n_fine
    u, v = sol.evaluate(t)
    acc = sol._series(t, 2)
    f = forcing.evaluate_many(t)
    return float(np.max(np.linalg.norm(acc - _modal_acceleration(params)(u, v, f), axis=-1)))


def solve_periodic(
    sigma: float,
    forcing: PeriodicForcing | None,
    params: ModelParams,
    tol: float = 1e-13,
    max_iter: int = 200,
    harmonics: int | None = None,
    initial=None,
    period: float | None = None,
) -> PeriodicSolution:
    """Periodic special solution near ``sigma e1`` by Fourier fixed-point iteration.

    Each sweep evaluates ``h = f + g(w)`` on a uniform grid of one period,
    transforms to harmonics ``j = 0..J`` and divides by
    ``-omega_j^2 + i omega_j + mu_k``.  Iteration stops when the change in
    the coefficients, measured in ``sqrt(sum (omega_j^2 + lam_k^2)|dc|^2)``
    (the ``D(A) x H`` norm, up to the factor 2 on ``j >= 1``), is below ``tol``.

    Parameters
    ----------
    sigma : float
        One of ``-sigma0, 0, +sigma0``.
    forcing : PeriodicForcing or None
        ``None`` (or zero) returns the equilibrium; ``period`` is then required
        unless a forcing is supplied.
    harmonics : int, optional
        Retained harmonics ``J``; default ``max(32, 8 * max forcing harmonic)``.
    initial : None, int or array
        Starting coefficients: zero, a seed for small random coefficients
        (amplitude ``1e-3``), or an explicit ``(J + 1, N)`` complex array.

    Raises
    ------
    ZeroStiffnessMode
        Some ``mu_k`` vanishes, so ``K`` is singular at ``omega = 0``.
    NonContraction
        The iterate difference grew for 3 consecutive sweeps (or overflowed).
    MaxIterExceeded
    """
    n = params.n_modes
    lin = linearize(sigma, params)
    sigma = lin.sigma
    if np.any(np.abs(lin.mu) < 1e-14):
        raise ZeroStiffnessMode(f"stiffness vanishes in mode(s) {np.flatnonzero(np.abs(lin.mu) < 1e-14).tolist()}")
    if forcing is None:
        if period is None:
            raise ValueError("period is required when forcing is None")
    else:
        forcing = as_forcing(forcing, n)
        period = forcing.period if hasattr(forcing, "period") else period
        if period is None:
            raise ValueError("forcing has no period; pass period explicitly")
    period = float(period)
    forcing = as_forcing(forcing, n)
    if harmonics is None:
        harmonics = max(32, 8 * getattr(forcing, "max_harmonic", 0))
    m, t = _fourier_grid(period, harmonics)
    omega = 2 * np.pi / period * np.arange(harmonics + 1)
    denom = (-omega * omega + 1j * omega)[:, None] + lin.mu[None, :]
    weight = np.sqrt(np.where(omega == 0, 1.0, 2.0)[:, None] * (omega[:, None] ** 2 + params.eigenvalues**2))
    fgrid = forcing.evaluate_many(t)

    if initial is None:
        c = np.zeros((harmonics + 1, n), dtype=complex)
    elif isinstance(initial, (int, np.integer)):
        rng = np.random.Generator(np.random.PCG64(int(initial)))
        c = 1e-3 * (rng.standard_normal((harmonics + 1, n)) + 1j * rng.standard_normal((harmonics + 1, n)))
        c /= (1 + np.arange(harmonics + 1))[:, None] ** 2
        c[0] = c[0].real
    else:
        c = np.array(initial, dtype=complex)
        if c.shape != (harmonics + 1, n):
            raise DimensionMismatch(f"initial coefficients must have shape {(harmonics + 1, n)}")

    def synth(coef):
        full = np.zeros((m // 2 + 1, n), dtype=complex)
        full[: harmonics + 1] = coef
        return np.fft.irfft(full * m, n=m, axis=0)

    prev_diff = np.inf
    streak = 0
    for it in range(1, max_iter + 1):
        w = synth(c)
        h = fgrid + nonlinear_remainder(sigma, w, params)
        hh = np.fft.rfft(h, axis=0)[: harmonics + 1] / m
        c_new = hh / denom
        diff = float(np.sqrt(np.sum(np.abs((c_new - c) * weight) ** 2)))
        c = c_new
        if not np.isfinite(diff):
            raise NonContraction(f"iteration overflowed at sweep {it}")
        if diff <= tol:
            break
        streak = streak + 1 if diff > prev_diff else 0
        if streak >= DIVERGENCE_STREAK:
            raise NonContraction(f"iterate difference grew {DIVERGENCE_STREAK} times in a row (sweep {it}, diff {diff:.3g})")
        prev_diff = diff
    else:
        raise MaxIterExceeded(f"no convergence to tol={tol:g} within {max_iter} sweeps (last diff {diff:.3g})")

    sol = PeriodicSolution(sigma=sigma, period=period, coefficients=c, residual=np.nan, iterations=it)
    sol.residual = _pde_residual(sol, forcing, params, n_fine=8 * m)
    return sol


# ---------------------------------------------------------------------------
# Green functions on a sampled window


def _phi(a):
    """``phi1(a) = (e^a - 1)/a`` and ``phi2(a) = (e^a - 1 - a)/a^2`` (series near 0)."""
    a = complex(a)
    if abs(a) < 1e-3:
        phi1 = 1 + a / 2 + a * a / 6 + a**3 / 24 + a**4 / 120
        phi2 = 0.5 + a / 6 + a * a / 24 + a**3 / 120 + a**4 / 720
    else:
        e = np.exp(a)
        phi1 = (e - 1) / a
        phi2 = (e - 1 - a) / (a * a)
    return phi1, phi2


def _exp_filter(s, h, dt, periodic):
    """``z(t) = int_{-inf}^t exp(s (t - tau)) h(tau) dtau`` for ``Re s < 0``.

    Exact for piecewise-linear ``h`` on the uniform grid.  ``h`` has shape
    ``(n,)``; with ``periodic`` the samples cover one period (end point
    excluded), otherwise ``h`` vanishes before the first sample.
    """
    a = s * dt
    phi1, phi2 = _phi(a)
    w0, w1 = dt * (phi1 - phi2), dt * phi2
    decay = np.exp(a)
    hh = np.append(h, h[0]) if periodic else h
    x = np.zeros(hh.size, dtype=complex)
    x[1:] = w0 * hh[:-1] + w1 * hh[1:]
    z = lfilter([1.0], [1.0, -decay], x)
    if periodic:
        # add the homogeneous part that makes z periodic: z0 = Z(P) / (1 - e^{sP})
        n = h.size
        z0 = z[n] / (1 - decay**n)
        z = z[:n] + z0 * decay ** np.arange(n)
    return z


def _roots(mu):
    disc = complex(1 - 4 * mu)
    if abs(disc) < 1e-12:
        # critically damped: split the double root slightly
        disc = 1e-12
    r = np.sqrt(disc)
    return (-1 + r) / 2, (-1 - r) / 2


def _check_extension(extension):
    if extension not in ("zero", "periodic"):
        raise ValueError("extension must be 'zero' or 'periodic'")
    return extension == "periodic"


def dichotomy_green_apply(mu: float, h, dt: float, extension: str = "zero", return_derivative: bool = False):
    """Bounded solution of ``y'' + y' + mu y = h`` for ``mu < 0``.

    ``y = int G(t - tau) h(tau) dtau`` with the two-sided kernel
    ``G(t) = -exp(s- t)/(s+ - s-)`` for ``t >= 0`` and ``-exp(s+ t)/(s+ - s-)``
    for ``t < 0``, where ``s+- = (-1 +- sqrt(1 - 4 mu))/2``.  The convolution
    is evaluated exactly for the piecewise-linear interpolant of ``h``.

    Parameters
    ----------
    h : array
        Samples on a uniform grid with spacing ``dt``.
    extension : {"zero", "periodic"}
        ``"zero"``: ``h`` vanishes outside the window.  ``"periodic"``: the
        samples cover one period, right end point excluded.

    Returns
    -------
    y or (y, y')

    Raises
    ------
    NonNegativeMu
    """
    if not mu < 0:
        raise NonNegativeMu(f"the dichotomy kernel needs mu < 0, got {mu}")
    periodic = _check_extension(extension)
    h = np.asarray(h, dtype=float).ravel()
    sp, sm = _roots(mu)
    sp, sm = sp.real, sm.real
    z_minus = _exp_filter(sm, h, dt, periodic).real
    # the anticausal part is a causal filter in reversed time with rate -s+
    z_plus = _exp_filter(-sp, h[::-1] if not periodic else np.roll(h[::-1], 1), dt, periodic).real
    z_plus = z_plus[::-1] if not periodic else np.roll(z_plus, -1)[::-1].copy()
    c = -1.0 / (sp - sm)
    y = c * (z_minus + z_plus)
    if not return_derivative:
        return y
    return y, c * (sm * z_minus + sp * z_plus)


def causal_green_apply(mu: float, h, dt: float, extension: str = "zero", return_derivative: bool = False):
    """Bounded solution of ``y'' + y' + mu y = h`` for ``mu > 0``.

    Kernel ``G(t) = (exp(s+ t) - exp(s- t))/(s+ - s-)`` for ``t >= 0``; both
    roots have negative real part.  Same conventions as
    :func:`dichotomy_green_apply`.
    """
    if not mu > 0:
        raise ValueError(f"the causal kernel needs mu > 0, got {mu}")
    periodic = _check_extension(extension)
    h = np.asarray(h, dtype=float).ravel()
    sp, sm = _roots(mu)
    zp = _exp_filter(sp, h, dt, periodic)
    zm = _exp_filter(sm, h, dt, periodic)
    y = ((zp - zm) / (sp - sm)).real
    if not return_derivative:
        return y
    return y, ((sp * zp - sm * zm) / (sp - sm)).real


def _green_apply(mu, h, dt, extension):
    if mu < 0:
        return dichotomy_green_apply(mu, h, dt, extension, return_derivative=True)
    return causal_green_apply(mu, h, dt, extension, return_derivative=True)


@dataclass
class BoundedSolution:
    """Special solution on a finite window.

    Samples closer than ``boundary_layer`` to an edge where the forcing was
    extended by zero are affected by the truncation.
    """

    sigma: float
    trajectory: object
    boundary_layer: float
    iterations: int
    extension: str

    def interior(self):
        """Trajectory restricted to samples outside the boundary layers."""
        t = self.trajectory.times
        if self.extension == "periodic":
            return self.trajectory
        return self.trajectory.window(t[0] + self.boundary_layer, t[-1] - self.boundary_layer)


def boundary_layer_width(lin: LinearizedOperator, level: float = 1e-8) -> float:
    """Time for the slowest modal transient to decay by ``level``."""
    rates = []
    for mu in lin.mu:
        sp, sm = _roots(mu)
        rates.append(min(abs(sp.real), abs(sm.real)) if mu < 0 else -max(sp.real, sm.real))
    return float(np.log(1 / level) / min(rates))


def solve_bounded(
    sigma: float,
    forcing: Forcing | None,
    params: ModelParams,
    t0: float,
    t1: float,
    dt: float = 1e-2,
    tol: float = 1e-12,
    max_iter: int = 200,
    extension: str = "zero",
) -> BoundedSolution:
    """Bounded special solution near ``sigma e1`` on the window ``[t0, t1]``.

    Fixed point of ``w = K(f + g(w))`` with ``K`` applied mode by mode through
    :func:`causal_green_apply` (``mu > 0``) or :func:`dichotomy_green_apply`
    (``mu < 0``, only at the origin).  With ``extension="periodic"`` the
    window must be one period of the forcing (or a multiple of it).

    Raises
    ------
    WindowTooShort
        Zero extension and the window is shorter than two boundary layers.
    NonContraction
    MaxIterExceeded
    """
    from .dynamics import Trajectory

    periodic = _check_extension(extension)
    lin = linearize(sigma, params)
    sigma = lin.sigma
    n = params.n_modes
    forcing = as_forcing(forcing, n)
    layer = 0.0 if periodic else boundary_layer_width(lin)
    if not periodic and t1 - t0 <= 2 * layer:
        raise WindowTooShort(f"window {t1 - t0:g} shorter than twice the boundary layer {layer:g}")
    steps = int(round((t1 - t0) / dt))
    h_step = (t1 - t0) / steps
    count = steps if periodic else steps + 1
    t = t0 + h_step * np.arange(count)
    f = forcing.evaluate_many(t)

    w = np.zeros((count, n))
    dw = np.zeros((count, n))
    prev_diff, streak = np.inf, 0
    for it in range(1, max_iter + 1):
        h = f + nonlinear_remainder(sigma, w, params)
        w_new = np.empty_like(w)
        dw_new = np.empty_like(w)
        for k in range(n):
            w_new[:, k], dw_new[:, k] = _green_apply(lin.mu[k], h[:, k], h_step, extension)
        diff = float(np.max(np.abs(w_new - w)) + np.max(np.abs(dw_new - dw)))
        w, dw = w_new, dw_new
        if not np.isfinite(diff):
            raise NonContraction(f"iteration overflowed at sweep {it}")
        if diff <= tol:
            break
        streak = streak + 1 if diff > prev_diff else 0
        if streak >= DIVERGENCE_STREAK:
            raise NonContraction(f"iterate difference grew {DIVERGENCE_STREAK} times in a row (sweep {it})")
        prev_diff = diff
    else:
        raise MaxIterExceeded(f"no convergence to tol={tol:g} within {max_iter} sweeps")

    if periodic:
        t = np.append(t, t1)
        w = np.vstack([w, w[:1]])
        dw = np.vstack([dw, dw[:1]])
    u = w.copy()
    u[:, 0] += sigma
    return BoundedSolution(sigma, Trajectory(t, u, dw), layer, it, extension)
