"""Drift vector fields with declared growth and dissipativity constants.

Every drift acts on the last axis of its argument, so the same callable serves
single states, clouds of states and batches of trials.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidParameter

__all__ = ["DriftSpec", "linear", "affine", "cubic", "CATALOG", "from_catalog"]


@dataclass(frozen=True)
class DriftSpec:
    """f together with constants (l, M) of ||f(x)|| <= l||x|| + M and L of
    <x - y, f(x) - f(y)> <= -L ||x - y||^2.

    ``linear_growth_l`` is None for fields that are dissipative but grow
    faster than linearly; their growth bound is not certified.
    """

    f: Callable[[np.ndarray], np.ndarray]
    linear_growth_l: float | None
    linear_growth_M: float | None
    dissipativity_L: float
    name: str = "custom"
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.dissipativity_L > 0:
            raise InvalidParameter(f"dissipativity L must be positive, got {self.dissipativity_L}")
        if self.linear_growth_l is not None:
            if not (self.linear_growth_l > 0 and self.linear_growth_M is not None and self.linear_growth_M > 0):
                raise InvalidParameter("linear growth constants l, M must be positive")

    def __call__(self, x):
        return self.f(x)

    def check(self, dim: int, n_samples: int = 512, scale: float = 10.0, seed: int = 0) -> None:
        """Sampled verification of the declared constants on a random cloud."""
        rng = np.random.default_rng(seed)
        x = rng.normal(scale=scale, size=(n_samples, dim))
        y = rng.normal(scale=scale, size=(n_samples, dim))
        fx, fy = self.f(x), self.f(y)
        if self.linear_growth_l is not None:
            lhs = np.linalg.norm(fx, axis=-1)
            rhs = self.linear_growth_l * np.linalg.norm(x, axis=-1) + self.linear_growth_M
            if np.any(lhs > rhs + 1e-9):
                raise InvalidParameter(f"drift {self.name!r} violates its linear growth bound")
        inner = np.sum((x - y) * (fx - fy), axis=-1)
        bound = -self.dissipativity_L * np.sum((x - y) ** 2, axis=-1)
        if np.any(inner > bound + 1e-9 * (1.0 + np.abs(bound))):
            raise InvalidParameter(f"drift {self.name!r} violates its one-sided Lipschitz bound")


def linear(L: float = 1.0) -> DriftSpec:
    """f(x) = -L x."""
    return DriftSpec(lambda x: -L * x, L, 1.0, L, "linear", {"L": L})


def affine(c=1.0, L: float = 1.0) -> DriftSpec:
    """f(x) = -L x + c."""
    c_arr = np.asarray(c, dtype=np.float64)
    M = float(np.linalg.norm(np.atleast_1d(c_arr))) or 1.0
    return DriftSpec(lambda x: -L * x + c_arr, L, M, L, "affine", {"L": L, "c": c_arr.tolist()})


def cubic(L: float = 1.0) -> DriftSpec:
    """f(x) = -L x - x^3 (componentwise): dissipative with the same L, superlinear growth."""
    return DriftSpec(lambda x: -L * x - x**3, None, None, L, "cubic-dissipative", {"L": L})


CATALOG: dict[str, Callable[..., DriftSpec]] = {
    "linear": linear,
    "affine": affine,
    "cubic-dissipative": cubic,
}


def from_catalog(name: str, **params) -> DriftSpec:
    try:
        factory = CATALOG[name]
    except KeyError:
        raise InvalidParameter(f"unknown drift {name!r}; choose from {sorted(CATALOG)}") from None
    return factory(**params)
