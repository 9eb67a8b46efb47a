"""Operator, model parameters and phase-space norms.

The operator ``A`` is diagonal in a fixed orthonormal eigenbasis, so every
object here is a coefficient array with respect to that basis.  Index ``0``
is the soft first mode ``e_1``; the remaining indices span its orthogonal
complement (the "stiff" modes).

All functions accept arrays with arbitrary leading (batch or time) axes; the
last axis is always the modal one.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import (
    DimensionMismatch,
    LambdaOutOfGap,
    NonIncreasingSpectrum,
    NonPositiveEigenvalue,
    TooFewModes,
)

__all__ = [
    "SpectralOperator",
    "ModelParams",
    "PhaseState",
    "make_operator",
    "make_params",
    "norms",
    "apply_P",
    "energy_norm",
    "canonical_params",
]


@dataclass(frozen=True)
class SpectralOperator:
    """Diagonal operator with a simple lowest eigenvalue.

    Use :func:`make_operator` to build one; the constructor itself does not
    validate.
    """

    eigenvalues: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def lam1(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lam2(self) -> float:
        return float(self.eigenvalues[1])

    @property
    def lam_max(self) -> float:
        return float(self.eigenvalues[-1])

    def e1(self) -> np.ndarray:
        out = np.zeros(self.n_modes)
        out[0] = 1.0
        return out


@dataclass(frozen=True)
class ModelParams:
    """Operator plus the load parameter ``lam`` lying in the spectral gap.

    ``sigma0`` is the amplitude of the two stable equilibria and ``gamma0``
    the weight of the correction terms in the corrected energy.
    """

    operator: SpectralOperator
    lam: float
    sigma0: float = field(init=False)
    gamma0: float = field(init=False)

    def __post_init__(self):
        lam1, lam2, lam = self.operator.lam1, self.operator.lam2, self.lam
        object.__setattr__(self, "sigma0", float(np.sqrt((lam - lam1) / lam1)))
        gamma0 = min(1.0, lam1 * (lam - lam1), lam2 * (lam2 - lam)) / 8.0
        object.__setattr__(self, "gamma0", float(gamma0))

    @property
    def eigenvalues(self) -> np.ndarray:
        return self.operator.eigenvalues

    @property
    def n_modes(self) -> int:
        return self.operator.n_modes


class PhaseState(NamedTuple):
    """Position ``u`` and velocity ``v`` coefficient arrays."""

    u: np.ndarray
    v: np.ndarray

    @classmethod
    def from_arrays(cls, u, v=None) -> "PhaseState":
        u = np.array(u, dtype=float)
        v = np.zeros_like(u) if v is None else np.array(v, dtype=float)
        if u.shape != v.shape:
            raise DimensionMismatch(f"u has shape {u.shape}, v has shape {v.shape}")
        return cls(u, v)

    def __neg__(self) -> "PhaseState":
        return PhaseState(-self.u, -self.v)


def make_operator(eigenvalues) -> SpectralOperator:
    """Validate an eigenvalue list and wrap it as a :class:`SpectralOperator`.

    Raises
    ------
    TooFewModes
        Fewer than two eigenvalues.
    NonPositiveEigenvalue
        Some eigenvalue is ``<= 0``.
    NonIncreasingSpectrum
        The sequence is not strictly increasing.
    """
    eig = np.array(eigenvalues, dtype=float).ravel()
    if eig.size < 2:
        raise TooFewModes(f"need at least 2 modes, got {eig.size}")
    if not np.all(np.isfinite(eig)):
        raise NonPositiveEigenvalue("eigenvalues must be finite")
    if np.any(eig <= 0):
        raise NonPositiveEigenvalue(f"eigenvalues must be positive, got {eig.tolist()}")
    if np.any(np.diff(eig) <= 0):
        raise NonIncreasingSpectrum(f"eigenvalues must be strictly increasing, got {eig.tolist()}")
    eig.setflags(write=False)
    return SpectralOperator(eig)


def make_params(op: SpectralOperator, lam: float) -> ModelParams:
    """Attach the load parameter; it must satisfy ``lam1 < lam < lam2``."""
    lam = float(lam)
    if not (op.lam1 < lam < op.lam2):
        raise LambdaOutOfGap(f"need {op.lam1} < lambda < {op.lam2}, got {lam}")
    return ModelParams(op, lam)


def canonical_params() -> ModelParams:
    """Eigenvalues ``k**2`` for ``k = 1..4`` and ``lam = 2`` (``sigma0 = 1``)."""
    return make_params(make_operator([1.0, 4.0, 9.0, 16.0]), 2.0)


def _check_dim(x: np.ndarray, n: int, name: str = "state"):
    if x.shape[-1:] != (n,):
        raise DimensionMismatch(f"{name} has trailing dimension {x.shape[-1:]} but operator has {n} modes")


def norms(state, op: SpectralOperator):
    """Return ``(|u|, |A^{1/2} u|, |A u|, |v|)``."""
    lam = op.eigenvalues
    u, v = np.asarray(state.u, dtype=float), np.asarray(state.v, dtype=float)
    _check_dim(u, lam.size, "u")
    _check_dim(v, lam.size, "v")
    u2 = u * u
    return (
        np.sqrt(u2.sum(axis=-1)),
        np.sqrt((u2 * lam).sum(axis=-1)),
        np.sqrt((u2 * lam * lam).sum(axis=-1)),
        np.sqrt((v * v).sum(axis=-1)),
    )


def energy_norm(u, v, op: SpectralOperator):
    """Norm of ``(u, v)`` in ``D(A) x H``: ``sqrt(|Au|^2 + |v|^2)``."""
    lam = op.eigenvalues
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    return np.sqrt(((lam * u) ** 2).sum(axis=-1) + (v * v).sum(axis=-1))


def apply_P(u) -> np.ndarray:
    """Scale the first coordinate by 1/6 and leave the others unchanged."""
    out = np.array(u, dtype=float)
    out[..., 0] /= 6.0
    return out
