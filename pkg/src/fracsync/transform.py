"""The fractional O-U change of variables and the random vector fields it induces.

For dX = f(X) dt + (a X + b) dB^H and the stationary fOU path O,

    U = e^{-a O} (X + b/a) - b/a

solves the pathwise ODE dU/dt = e^{-a O} f(U e^{a O} + (b/a)(e^{a O} - 1)) + (a U + b) O.
A channel with purely additive noise uses V = Y - b O instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .drifts import DriftSpec
from .errors import InvalidParameter

__all__ = [
    "LinearNoiseCoeffs",
    "AdditiveNoise",
    "forward_transform",
    "inverse_transform",
    "rde_vector_field",
]


def _vec(b) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if arr.ndim != 1:
        raise InvalidParameter("b must be a vector")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class LinearNoiseCoeffs:
    """Diffusion coefficient x -> a x + b with scalar a != 0 and vector b."""

    a: float
    b: np.ndarray

    def __post_init__(self):
        a = float(self.a)
        if a == 0.0 or not np.isfinite(a):
            raise InvalidParameter("a must be a nonzero finite scalar; use AdditiveNoise for a = 0")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", _vec(self.b))

    @property
    def dim(self) -> int:
        return self.b.size

    def forward(self, x, o):
        c = self.b / self.a
        return np.exp(-self.a * o) * (x + c) - c

    def inverse(self, u, o):
        c = self.b / self.a
        return np.exp(self.a * o) * (u + c) - c

    def field(self, u, o, drift):
        e = np.exp(self.a * o)
        return drift(u * e + (self.b / self.a) * (e - 1.0)) / e + (self.a * u + self.b) * o

    def forcing(self, o, drift):
        """e^{-2aO} ||f((b/a)(e^{aO} - 1))||^2 + ||b O||^2, the inhomogeneity in the
        energy estimate for ||U||^2."""
        o = np.asarray(o, dtype=np.float64)[..., None]
        e = np.exp(self.a * o)
        f0 = drift((self.b / self.a) * (e - 1.0))
        return np.sum(f0 * f0, axis=-1) / (e[..., 0] ** 2) + np.sum((self.b * o) ** 2, axis=-1)


@dataclass(frozen=True, eq=False)
class AdditiveNoise:
    """Diffusion coefficient x -> b (a = 0): V = Y - b O, dV/dt = g(V + b O) + b O."""

    b: np.ndarray
    a = 0.0

    def __post_init__(self):
        object.__setattr__(self, "b", _vec(self.b))

    @property
    def dim(self) -> int:
        return self.b.size

    def forward(self, y, o):
        return y - self.b * o

    def inverse(self, v, o):
        return v + self.b * o

    def field(self, v, o, drift):
        bo = self.b * o
        return drift(v + bo) + bo


def forward_transform(x, o, coeffs: LinearNoiseCoeffs):
    """U = e^{-aO}(X + b/a) - b/a."""
    return coeffs.forward(np.asarray(x, dtype=np.float64), o)


def inverse_transform(u, o, coeffs: LinearNoiseCoeffs):
    """X = e^{aO}(U + b/a) - b/a."""
    return coeffs.inverse(np.asarray(u, dtype=np.float64), o)


def rde_vector_field(u, o, coeffs: LinearNoiseCoeffs, drift: DriftSpec):
    """e^{-aO} f(U e^{aO} + (b/a)(e^{aO} - 1)) + (aU + b) O."""
    return coeffs.field(np.asarray(u, dtype=np.float64), o, drift)
