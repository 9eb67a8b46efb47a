"""Time-dependent forcing terms ``f(t)`` expressed in modal coefficients."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, ForcingDomainError

__all__ = [
    "Forcing",
    "ZeroForcing",
    "ConstantForcing",
    "PeriodicForcing",
    "DecayingForcing",
    "SampledForcing",
    "as_forcing",
    "constant_on_mode",
    "sampled_from",
]


class Forcing:
    """Base class.  Subclasses implement :meth:`evaluate_many`."""

    n_modes: int
    is_zero = False

    def evaluate(self, t: float) -> np.ndarray:
        return self.evaluate_many(np.array([t], dtype=float))[0]

    def __call__(self, t: float) -> np.ndarray:
        return self.evaluate(t)

    def evaluate_many(self, times) -> np.ndarray:
        """Return an array of shape ``(len(times), n_modes)``."""
        raise NotImplementedError

    def norm_many(self, times) -> np.ndarray:
        f = self.evaluate_many(times)
        return np.sqrt((f * f).sum(axis=-1))

    def scaled(self, factor: float) -> "Forcing":
        raise NotImplementedError

    def __neg__(self) -> "Forcing":
        return self.scaled(-1.0)


@dataclass(frozen=True)
class ZeroForcing(Forcing):
    n_modes: int
    is_zero = True

    def evaluate_many(self, times):
        return np.zeros((np.size(times), self.n_modes))

    def scaled(self, factor):
        return self


@dataclass(frozen=True, eq=False)
class ConstantForcing(Forcing):
    coefficients: np.ndarray

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float).ravel()
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def n_modes(self) -> int:
        return self.coefficients.size

    def evaluate(self, t):
        return self.coefficients.copy()

    def evaluate_many(self, times):
        return np.broadcast_to(self.coefficients, (np.size(times), self.n_modes)).copy()

    def scaled(self, factor):
        return ConstantForcing(factor * self.coefficients)


@dataclass(frozen=True, eq=False)
class PeriodicForcing(Forcing):
    """Finite Fourier series with period ``period``.

    Each term ``(j, k, a, b)`` adds ``a cos(2 pi j t / T) + b sin(2 pi j t / T)``
    to mode ``k`` (0-based).  ``j = 0`` gives a constant offset ``a``.
    """

    period: float
    terms: tuple
    n_modes: int

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        terms = []
        for j, k, a, b in self.terms:
            j, k = int(j), int(k)
            if j < 0:
                raise ValueError("frequency index must be >= 0")
            if not 0 <= k < self.n_modes:
                raise DimensionMismatch(f"mode index {k} outside 0..{self.n_modes - 1}")
            terms.append((j, k, float(a), float(b)))
        object.__setattr__(self, "terms", tuple(terms))

    @classmethod
    def cosine(cls, amplitude: float, mode: int, n_modes: int, omega: float = 1.0) -> "PeriodicForcing":
        """``amplitude * cos(omega t)`` on a single mode."""
        return cls(2 * np.pi / omega, ((1, mode, amplitude, 0.0),), n_modes)

    @property
    def max_harmonic(self) -> int:
        return max((j for j, *_ in self.terms), default=0)

    def evaluate_many(self, times):
        times = np.asarray(times, dtype=float).ravel()
        # reduce the phase first so large t keeps full accuracy
        phase = 2 * np.pi * np.mod(times, self.period) / self.period
        out = np.zeros((times.size, self.n_modes))
        for j, k, a, b in self.terms:
            if j == 0:
                out[:, k] += a
            else:
                out[:, k] += a * np.cos(j * phase) + b * np.sin(j * phase)
        return out

    def scaled(self, factor):
        terms = tuple((j, k, factor * a, factor * b) for j, k, a, b in self.terms)
        return PeriodicForcing(self.period, terms, self.n_modes)


@dataclass(frozen=True, eq=False)
class DecayingForcing(Forcing):
    """``exp(-rate * t) * base(t)``."""

    base: Forcing
    rate: float

    @property
    def n_modes(self) -> int:
        return self.base.n_modes

    def evaluate_many(self, times):
        times = np.asarray(times, dtype=float).ravel()
        return np.exp(-self.rate * times)[:, None] * self.base.evaluate_many(times)

    def scaled(self, factor):
        return DecayingForcing(self.base.scaled(factor), self.rate)


@dataclass(frozen=True, eq=False)
class SampledForcing(Forcing):
    """Piecewise-linear interpolation of samples; no extrapolation."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.array(self.times, dtype=float).ravel()
        vals = np.array(self.values, dtype=float)
        if vals.ndim != 2 or vals.shape[0] != t.size:
            raise DimensionMismatch("values must have shape (len(times), n_modes)")
        if t.size < 2 or np.any(np.diff(t) <= 0):
            raise ValueError("sample times must be strictly increasing with at least 2 entries")
        t.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", vals)

    @property
    def n_modes(self) -> int:
        return self.values.shape[1]

    def evaluate_many(self, times):
        times = np.asarray(times, dtype=float).ravel()
        if times.size and (times.min() < self.times[0] or times.max() > self.times[-1]):
            raise ForcingDomainError(
                f"sampled forcing defined on [{self.times[0]}, {self.times[-1]}], "
                f"requested [{times.min()}, {times.max()}]"
            )
        return np.stack([np.interp(times, self.times, self.values[:, k]) for k in range(self.n_modes)], axis=-1)

    def scaled(self, factor):
        return SampledForcing(self.times, factor * self.values)


def as_forcing(forcing: Forcing | None, n_modes: int) -> Forcing:
    if forcing is None:
        return ZeroForcing(n_modes)
    if forcing.n_modes != n_modes:
        raise DimensionMismatch(f"forcing has {forcing.n_modes} modes, model has {n_modes}")
    return forcing


def constant_on_mode(value: float, mode: int, n_modes: int) -> ConstantForcing:
    c = np.zeros(n_modes)
    c[mode] = value
    return ConstantForcing(c)


def sampled_from(times: Sequence[float], values) -> SampledForcing:
    return SampledForcing(np.asarray(times), np.asarray(values))
