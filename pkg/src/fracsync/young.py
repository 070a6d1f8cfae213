"""Young (Riemann-Stieltjes) integration on lattices and the explicit
Young-Euler scheme for dX = f(X) dt + (a X + b) dB."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, OutOfWindow, RegularityViolation, StepExplosion
from .paths import SamplePath, TimeGrid

__all__ = [
    "YoungResult",
    "RefinementProfile",
    "young_integral",
    "young_refinement",
    "young_euler_sde",
    "young_euler_batch",
    "EXPLOSION_THRESHOLD",
]

EXPLOSION_THRESHOLD = 1e12


@dataclass(frozen=True)
class YoungResult:
    value: np.ndarray | float
    refinement_gap: float
    alpha_beta_margin: float

    def to_json(self) -> dict:
        return {
            "value": np.asarray(self.value).tolist(),
            "refinement_gap": self.refinement_gap,
            "margin": self.alpha_beta_margin,
        }


@dataclass(frozen=True)
class RefinementProfile:
    steps: np.ndarray
    gaps: np.ndarray
    order: float


def _on_window(path: SamplePath, window: TimeGrid) -> np.ndarray:
    try:
        return path.restrict(window).values
    except GridMismatch as exc:
        raise GridMismatch(f"path lattice incompatible with window: {exc}") from exc


def _left_sum(Y: np.ndarray, X: np.ndarray, idx: np.ndarray):
    dX = np.diff(X[idx], axis=0)
    Yl = Y[idx[:-1]]
    while dX.ndim < Yl.ndim:
        dX = dX[..., None]
    while Yl.ndim < dX.ndim:
        Yl = Yl[..., None]
    s = np.sum(Yl * dX, axis=0)
    return s[()] if np.ndim(s) == 0 else s


def _coarse_index(n: int, stride: int) -> np.ndarray:
    idx = np.arange(0, n + 1, stride)
    if idx[-1] != n:
        idx = np.append(idx, n)
    return idx


def young_integral(
    integrand: SamplePath, integrator: SamplePath, window: TimeGrid, alpha: float, beta: float
) -> YoungResult:
    """Left-point sum of Y dX over ``window``; the gap to the sum on every other
    lattice point is returned as an error surrogate."""
    margin = alpha + beta - 1.0
    if margin <= 0:
        raise RegularityViolation(f"alpha + beta = {alpha + beta} <= 1")
    Y = _on_window(integrand, window)
    X = _on_window(integrator, window)
    fine = _left_sum(Y, X, np.arange(window.n + 1))
    coarse = _left_sum(Y, X, _coarse_index(window.n, 2))
    gap = float(np.max(np.abs(np.asarray(fine) - coarse)))
    return YoungResult(fine, gap, margin)


def young_refinement(
    integrand: SamplePath, integrator: SamplePath, window: TimeGrid, levels: int = 3
) -> RefinementProfile:
    """Gaps |S_{2^j h} - S_{2^{j+1} h}| for j < levels and their fitted order in h."""
    Y = _on_window(integrand, window)
    X = _on_window(integrator, window)
    sums = [_left_sum(Y, X, _coarse_index(window.n, 2**j)) for j in range(levels + 1)]
    gaps = np.array([np.max(np.abs(np.asarray(sums[j]) - sums[j + 1])) for j in range(levels)])
    steps = window.h * 2.0 ** np.arange(levels)
    order = float(np.polyfit(np.log(steps), np.log(gaps), 1)[0]) if np.all(gaps > 0) else np.inf
    return RefinementProfile(steps, gaps, order)


def _check(x: np.ndarray, k: int) -> None:
    m = np.max(np.abs(x))
    if not m <= EXPLOSION_THRESHOLD:
        raise StepExplosion(f"state magnitude {m:.3g} at step {k}")


def _euler_loop(f, a, b, dB: np.ndarray, x0: np.ndarray, h: float) -> np.ndarray:
    out = np.empty((dB.shape[0] + 1,) + x0.shape)
    out[0] = x = x0
    extra = (1,) * (x0.ndim - dB.ndim + 1)
    for k in range(dB.shape[0]):
        dBk = dB[k].reshape(np.shape(dB[k]) + extra)
        x = x + f(x) * h + (a * x + b) * dBk
        _check(x, k)
        out[k + 1] = x
    return out


def young_euler_sde(drift, a: float, b, noise: SamplePath, x0, window: TimeGrid) -> SamplePath:
    """X_{k+1} = X_k + f(X_k) h + (a X_k + b)(B_{k+1} - B_k) on ``window``."""
    B = noise.restrict(window).values
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    b = np.broadcast_to(np.asarray(b, dtype=np.float64), x0.shape[-1:])
    vals = _euler_loop(drift, a, b, np.diff(B), x0, window.h)
    return SamplePath(window, vals, {"scheme": "young-euler", "h": window.h})


def young_euler_batch(drift, a: float, b, noises, x0, window: TimeGrid) -> np.ndarray:
    """Young-Euler over several noise paths at once; returns (n_paths, n+1, ..., d)."""
    B = np.stack([p.restrict(window).values for p in noises], axis=1)
    x0 = np.atleast_1d(np.asarray(x0, dtype=np.float64))
    x0 = np.broadcast_to(x0, (B.shape[1],) + x0.shape).copy()
    b = np.broadcast_to(np.asarray(b, dtype=np.float64), x0.shape[-1:])
    return np.moveaxis(_euler_loop(drift, a, b, np.diff(B, axis=0), x0, window.h), 0, 1)
