"""Fractional Brownian motion on uniform lattices.

Exact samplers (circulant embedding of fractional Gaussian noise, dense
Cholesky as a reference), the Wiener shift, and regularity/growth
diagnostics for sampled paths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Any, Literal

import numpy as np
import scipy.linalg

from .errors import (
    DegeneratePath,
    GridMismatch,
    InvalidGrid,
    InvalidParameter,
    NonPositiveDefinite,
    OutOfWindow,
)

__all__ = [
    "HurstParameter",
    "TimeGrid",
    "SamplePath",
    "RngSeed",
    "GrowthReport",
    "fbm_covariance",
    "covariance_matrix",
    "sample_fbm",
    "sample_fbm_batch",
    "wiener_shift",
    "variogram",
    "estimate_holder_exponent",
    "holder_seminorm",
    "holder_norm",
    "polynomial_growth_check",
]

# relative tolerance for "is this time a lattice point"
_LATTICE_TOL = 1e-9


@dataclass(frozen=True)
class HurstParameter:
    value: float

    def __post_init__(self):
        v = float(self.value)
        if not (0.5 < v < 1.0):
            raise InvalidParameter(f"Hurst parameter must lie in (1/2, 1), got {v}")
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return self.value

    @classmethod
    def coerce(cls, H: "HurstParameter | float") -> "HurstParameter":
        return H if isinstance(H, cls) else cls(H)


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid t0 < t0 + h < ... < t1 with n steps of size h = (t1 - t0)/n."""

    t0: float
    t1: float
    n: int

    def __post_init__(self):
        t0, t1 = float(self.t0), float(self.t1)
        if not (math.isfinite(t0) and math.isfinite(t1)) or not t0 < t1:
            raise InvalidGrid(f"need finite t0 < t1, got [{t0}, {t1}]")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidGrid(f"need integer n >= 1, got {self.n}")
        object.__setattr__(self, "t0", t0)
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_step(cls, t0: float, t1: float, h: float) -> "TimeGrid":
        n = (t1 - t0) / h
        k = round(n)
        if k < 1 or abs(n - k) > _LATTICE_TOL * max(1.0, abs(n)):
            raise InvalidGrid(f"step {h} does not divide [{t0}, {t1}]")
        return cls(t0, t1, k)

    @property
    def h(self) -> float:
        return (self.t1 - self.t0) / self.n

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.n + 1)

    @property
    def two_sided(self) -> bool:
        return self.t0 < 0.0 < self.t1

    def lattice_position(self, t: float) -> int | None:
        """Integer k with t0 + k*h == t (k may fall outside [0, n]), else None."""
        q = (t - self.t0) / self.h
        k = round(q)
        if abs(q - k) <= _LATTICE_TOL * max(1.0, abs(q)):
            return int(k)
        return None

    def index_of(self, t: float) -> int | None:
        k = self.lattice_position(t)
        if k is None or k < 0 or k > self.n:
            return None
        return k

    @property
    def origin_index(self) -> int | None:
        return self.index_of(0.0)

    def locate(self, window: "TimeGrid") -> tuple[int, int]:
        """Return (start, stride) such that window.times == times[start::stride][:window.n + 1].

        Raises GridMismatch when the window is not a sub-lattice of this grid and
        OutOfWindow when it is a sub-lattice but extends past the grid.
        """
        ratio = window.h / self.h
        stride = round(ratio)
        if stride < 1 or abs(ratio - stride) > _LATTICE_TOL * max(1.0, ratio):
            raise GridMismatch(
                f"window step {window.h} is not a multiple of grid step {self.h}"
            )
        start = self.lattice_position(window.t0)
        if start is None:
            raise GridMismatch(f"window start {window.t0} is not a grid point")
        stop = start + stride * window.n
        if start < 0 or stop > self.n:
            raise OutOfWindow(
                f"window [{window.t0}, {window.t1}] exceeds grid [{self.t0}, {self.t1}]"
            )
        return start, stride


@dataclass(frozen=True)
class SamplePath:
    """A path sampled on a TimeGrid.

    ``values`` has shape (n+1,) for scalar paths or (n+1, ..., d) for vector
    paths (extra middle axes hold clouds of trajectories). The array is stored
    read-only so paths can be shared freely.
    """

    grid: TimeGrid
    values: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim == 0 or v.shape[0] != self.grid.n + 1:
            raise InvalidGrid(
                f"values length {v.shape[0] if v.ndim else 0} != n+1 = {self.grid.n + 1}"
            )
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    @property
    def dim(self) -> int:
        return 1 if self.values.ndim == 1 else self.values.shape[-1]

    @property
    def origin_index(self) -> int | None:
        return self.grid.origin_index

    def __len__(self) -> int:
        return self.values.shape[0]

    def restrict(self, window: TimeGrid) -> "SamplePath":
        start, stride = self.grid.locate(window)
        vals = self.values[start : start + stride * window.n + 1 : stride]
        return SamplePath(window, vals, dict(self.meta))

    def at(self, t: float) -> np.ndarray | float:
        k = self.grid.index_of(t)
        if k is None:
            raise OutOfWindow(f"t={t} is not a grid point")
        return self.values[k]


@dataclass(frozen=True)
class RngSeed:
    """Key of a counter-based (Philox) random stream."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if int(v) != v or not 0 <= v < 2**64:
                raise InvalidParameter(f"{name} must be a 64-bit unsigned integer, got {v}")
            object.__setattr__(self, name, int(v))

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=self.seed | (self.stream_id << 64)))

    def offset(self, k: int) -> "RngSeed":
        return RngSeed(self.seed, (self.stream_id + k) % 2**64)


def fbm_covariance(t, s, H: HurstParameter | float):
    """E[B_t B_s] = (|t|^{2H} + |s|^{2H} - |t-s|^{2H}) / 2 (vectorised)."""
    h2 = 2.0 * float(H)
    t = np.asarray(t, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    out = 0.5 * (np.abs(t) ** h2 + np.abs(s) ** h2 - np.abs(t - s) ** h2)
    return out[()] if out.ndim == 0 else out


def covariance_matrix(times: np.ndarray, H: HurstParameter | float) -> np.ndarray:
    times = np.asarray(times, dtype=np.float64)
    return fbm_covariance(times[:, None], times[None, :], H)


def _fgn_autocov(k: np.ndarray, H: float) -> np.ndarray:
    k = np.abs(np.asarray(k, dtype=np.float64))
    h2 = 2.0 * H
    return 0.5 * ((k + 1.0) ** h2 - 2.0 * k**h2 + np.abs(k - 1.0) ** h2)


@lru_cache(maxsize=64)
def _circulant_coeffs(n: int, H: float) -> np.ndarray | None:
    """sqrt(eigenvalues / 2n) of the circulant embedding of n unit-step fGn
    increments, or None when the embedding is not nonnegative definite."""
    gamma = _fgn_autocov(np.arange(n + 1), H)
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    lam = np.fft.fft(row).real
    if lam.min() < -1e-10 * lam.max():
        return None
    coeffs = np.sqrt(np.clip(lam, 0.0, None) / row.size)
    coeffs.setflags(write=False)
    return coeffs


@lru_cache(maxsize=16)
def _toeplitz_factor(n: int, H: float) -> np.ndarray:
    gamma = _fgn_autocov(np.arange(n), H)
    try:
        return scipy.linalg.cholesky(scipy.linalg.toeplitz(gamma), lower=True)
    except np.linalg.LinAlgError as exc:
        raise NonPositiveDefinite(f"fGn covariance (n={n}, H={H}) not factorizable") from exc


@lru_cache(maxsize=16)
def _dense_factor(t0: float, t1: float, n: int, H: float) -> tuple[np.ndarray, np.ndarray]:
    times = TimeGrid(t0, t1, n).times
    keep = np.abs(times) > _LATTICE_TOL * (t1 - t0) / n
    cov = covariance_matrix(times[keep], H)
    try:
        factor = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise NonPositiveDefinite(
            f"fBm covariance on [{t0}, {t1}] with n={n}, H={H} failed Cholesky"
        ) from exc
    factor.setflags(write=False)
    return keep, factor


def _unit_fgn(n: int, H: float, rng: np.random.Generator) -> np.ndarray:
    coeffs = _circulant_coeffs(n, H)
    if coeffs is None:
        return _toeplitz_factor(n, H) @ rng.standard_normal(n)
    z = rng.standard_normal((2, coeffs.size))
    return np.fft.fft(coeffs * (z[0] + 1j * z[1])).real[:n]


def sample_fbm(
    grid: TimeGrid,
    H: HurstParameter | float,
    seed: RngSeed,
    method: Literal["auto", "circulant", "cholesky"] = "auto",
) -> SamplePath:
    """Sample B^H on ``grid``, pinned to 0 at t = 0.

    ``auto``/``circulant`` build the path from stationary fGn increments on the
    lattice extended to contain 0 and re-pin at the origin; this is exact in law
    for one- and two-sided grids. ``cholesky`` factorizes the dense covariance of
    the grid points and serves as the reference construction. Grids whose
    lattice does not contain 0 always use Cholesky.
    """
    Hv = HurstParameter.coerce(H).value
    k0 = grid.lattice_position(0.0)
    if grid.two_sided and k0 is None:
        raise InvalidGrid(f"grid [{grid.t0}, {grid.t1}] straddles 0 but 0 is not a grid point")
    if method not in ("auto", "circulant", "cholesky"):
        raise InvalidParameter(f"unknown method {method!r}")
    rng = seed.generator()

    if method != "cholesky" and k0 is not None:
        lo, hi = min(0, k0), max(grid.n, k0)
        incr = _unit_fgn(hi - lo, Hv, rng) * grid.h**Hv
        ext = np.concatenate([[0.0], np.cumsum(incr)])
        ext -= ext[k0 - lo]
        values = ext[-lo : -lo + grid.n + 1]
        used = "circulant"
    else:
        keep, factor = _dense_factor(grid.t0, grid.t1, grid.n, Hv)
        values = np.zeros(grid.n + 1)
        values[keep] = factor @ rng.standard_normal(factor.shape[0])
        used = "cholesky"
    if k0 is not None and 0 <= k0 <= grid.n:
        values[k0] = 0.0
    return SamplePath(grid, values, {"H": Hv, "seed": seed.seed, "stream_id": seed.stream_id, "method": used})


def sample_fbm_batch(
    grid: TimeGrid, H: HurstParameter | float, seed: RngSeed, n_paths: int, method: str = "auto"
) -> np.ndarray:
    """Stack of ``n_paths`` paths; row k equals ``sample_fbm(grid, H, seed.offset(k))``."""
    out = np.empty((n_paths, grid.n + 1))
    for k in range(n_paths):
        out[k] = sample_fbm(grid, H, seed.offset(k), method=method).values
    return out


def wiener_shift(path: SamplePath, tau: float) -> SamplePath:
    """theta_tau: s -> w(s + tau) - w(tau), on the part of the lattice where both
    the original and the shifted path are defined."""
    g = path.grid
    m = tau / g.h
    mi = round(m)
    if abs(m - mi) > _LATTICE_TOL * max(1.0, abs(m)):
        raise InvalidParameter(f"shift {tau} is not a multiple of the grid step {g.h}")
    k_tau = g.index_of(tau)
    n_new = g.n - abs(mi)
    if k_tau is None or n_new < 1:
        raise OutOfWindow(f"shift {tau} leaves no overlap with [{g.t0}, {g.t1}]")
    if mi == 0:
        return path
    start = mi if mi > 0 else 0
    t0_new = g.t0 if mi > 0 else g.t0 - tau
    vals = path.values[start : start + n_new + 1] - path.values[k_tau]
    new_grid = TimeGrid(t0_new, t0_new + n_new * g.h, n_new)
    return SamplePath(new_grid, vals, {**path.meta, "shift": path.meta.get("shift", 0.0) + tau})


def _sq_increments(values: np.ndarray, lag: int) -> np.ndarray:
    d = values[lag:] - values[:-lag]
    if d.ndim > 1:
        d = np.sum(d.reshape(d.shape[0], -1) ** 2, axis=1)
        return d
    return d * d


def variogram(path: SamplePath, lags) -> np.ndarray:
    """Mean squared increment at each integer lag."""
    return np.array([_sq_increments(path.values, int(k)).mean() for k in lags])


def _default_lags(n: int, max_lag: int) -> np.ndarray:
    top = min(max_lag, n // 4)
    return 2 ** np.arange(int(math.log2(top)) + 1)


def estimate_holder_exponent(path: SamplePath, max_lag: int = 32) -> float:
    """Half the log-log slope of the variogram over dyadic lags 1, 2, 4, ..., max_lag.

    For fBm, E|B(t+h) - B(t)|^2 = h^{2H}, so the estimate targets H. The lag
    range is fixed in grid steps so that the estimator's finite-sample bias
    shrinks as the grid refines.
    """
    if path.grid.n < 64:
        raise InvalidParameter(f"need at least 64 steps, got {path.grid.n}")
    lags = _default_lags(path.grid.n, max_lag)
    v = variogram(path, lags)
    if np.any(v <= 0.0):
        raise DegeneratePath("path has zero increments at some lag")
    slope = np.polyfit(np.log(lags * path.grid.h), np.log(v), 1)[0]
    return 0.5 * float(slope)


def holder_seminorm(path: SamplePath, alpha: float) -> float:
    """sup_{i != j} |u_i - u_j| / |t_i - t_j|^alpha over the grid (O(n^2))."""
    v = path.values.reshape(len(path), -1)
    h = path.grid.h
    best = 0.0
    for k in range(1, path.grid.n + 1):
        d = np.sqrt(np.sum((v[k:] - v[:-k]) ** 2, axis=1)).max()
        best = max(best, d / (k * h) ** alpha)
    return float(best)


def holder_norm(path: SamplePath, alpha: float) -> float:
    sup = float(np.sqrt(np.sum(path.values.reshape(len(path), -1) ** 2, axis=1)).max())
    return sup + holder_seminorm(path, alpha)


@dataclass(frozen=True)
class GrowthReport:
    K: float
    t_max: float


def polynomial_growth_check(path: SamplePath) -> GrowthReport:
    """Smallest K with |B_t| <= K (1 + t^2) on the grid, and where it is attained."""
    t = path.times
    mag = np.sqrt(np.sum(path.values.reshape(len(path), -1) ** 2, axis=1))
    ratio = mag / (1.0 + t * t)
    i = int(np.argmax(ratio))
    return GrowthReport(K=float(ratio[i]), t_max=float(t[i]))
