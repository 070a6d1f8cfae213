"""Pathwise integrators for the transformed random ODEs.

Single systems and the averaged system are stepped with Heun's method. The
coupled pair uses Strang splitting: the linear coupling flow
d(U, V)/dt = kappa (V - U, U - V) is applied exactly for half a step on each
side of a Heun step of the uncoupled fields, so stability does not depend on
kappa.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .drifts import DriftSpec
from .errors import InvalidParameter, StepExplosion
from .paths import HurstParameter, SamplePath, TimeGrid
from .transform import AdditiveNoise, LinearNoiseCoeffs
from .young import EXPLOSION_THRESHOLD

__all__ = [
    "CoupledConfig",
    "CoupledState",
    "CoupledTrajectory",
    "ReconstructedSDE",
    "integrate_rde",
    "integrate_rde_batch",
    "integrate_coupled",
    "integrate_coupled_batch",
    "integrate_averaged",
    "integrate_averaged_batch",
    "coupled_sde_drift",
    "reconstruct_coupled_sde",
]

Coeffs = LinearNoiseCoeffs | AdditiveNoise


@dataclass(frozen=True, eq=False)
class CoupledConfig:
    coeffs1: LinearNoiseCoeffs
    coeffs2: Coeffs
    drift_f: DriftSpec
    drift_g: DriftSpec
    H1: HurstParameter
    H2: HurstParameter
    kappa: float = 1.0
    dissipativity_L: float | None = None

    def __post_init__(self):
        if not self.kappa >= 0:
            raise InvalidParameter(f"kappa must be nonnegative, got {self.kappa}")
        if self.coeffs1.dim != self.coeffs2.dim:
            raise InvalidParameter("both channels must act on the same dimension")
        object.__setattr__(self, "H1", HurstParameter.coerce(self.H1))
        object.__setattr__(self, "H2", HurstParameter.coerce(self.H2))
        common = min(self.drift_f.dissipativity_L, self.drift_g.dissipativity_L)
        if self.dissipativity_L is None:
            object.__setattr__(self, "dissipativity_L", common)
        elif self.dissipativity_L > common:
            raise InvalidParameter("common L exceeds one of the drifts' declared L")

    @property
    def dim(self) -> int:
        return self.coeffs1.dim

    @property
    def mixed(self) -> bool:
        return isinstance(self.coeffs2, AdditiveNoise)

    def with_kappa(self, kappa: float) -> "CoupledConfig":
        return replace(self, kappa=kappa)

    def F(self, u, o1):
        return self.coeffs1.field(u, o1, self.drift_f)

    def G(self, v, o2):
        return self.coeffs2.field(v, o2, self.drift_g)

    def averaged_field(self, w, o1, o2):
        return 0.5 * (self.F(w, o1) + self.G(w, o2))


@dataclass(frozen=True)
class CoupledState:
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.u, dtype=np.float64))
        v = np.atleast_1d(np.asarray(self.v, dtype=np.float64))
        if u.shape != v.shape:
            raise InvalidParameter("u and v must have the same shape")
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(v))):
            raise InvalidParameter("state must be finite")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)


@dataclass(frozen=True)
class CoupledTrajectory:
    grid: TimeGrid
    u: np.ndarray
    v: np.ndarray

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def gap(self) -> np.ndarray:
        """||U - V||^2 at each grid time."""
        d = (self.u - self.v).reshape(self.u.shape[0], -1)
        return np.sum(d * d, axis=1)

    def mean(self) -> np.ndarray:
        return 0.5 * (self.u + self.v)


def _expand(o: np.ndarray, ndim: int) -> np.ndarray:
    return o.reshape(np.shape(o) + (1,) * (ndim - np.ndim(o)))


def _check(x: np.ndarray, k: int) -> None:
    m = np.max(np.abs(x))
    if not m <= EXPLOSION_THRESHOLD:
        raise StepExplosion(f"state magnitude {m:.3g} at step {k}")


def _heun_step(field: Callable, u: np.ndarray, o_now: tuple, o_next: tuple, h: float) -> np.ndarray:
    k1 = field(u, *o_now)
    k2 = field(u + h * k1, *o_next)
    return u + 0.5 * h * (k1 + k2)


def _heun(field: Callable, os: tuple[np.ndarray, ...], u0: np.ndarray, h: float) -> np.ndarray:
    n = os[0].shape[0] - 1
    out = np.empty((n + 1,) + u0.shape)
    out[0] = u = u0
    nd = u0.ndim
    cur = tuple(_expand(o[0], nd) for o in os)
    for k in range(n):
        nxt = tuple(_expand(o[k + 1], nd) for o in os)
        u = _heun_step(field, u, cur, nxt, h)
        _check(u, k)
        out[k + 1] = u
        cur = nxt
    return out


def _coupling_half(u, v, decay):
    s = 0.5 * (u + v)
    d = 0.5 * (u - v) * decay
    return s + d, s - d


def _strang(cfg: CoupledConfig, o1, o2, u0, v0, h):
    n = o1.shape[0] - 1
    us = np.empty((n + 1,) + u0.shape)
    vs = np.empty_like(us)
    us[0], vs[0] = u, v = u0, v0
    nd = u0.ndim
    decay = np.exp(-cfg.kappa * h)
    couple = cfg.kappa > 0.0
    c1, c2 = _expand(o1[0], nd), _expand(o2[0], nd)
    for k in range(n):
        n1, n2 = _expand(o1[k + 1], nd), _expand(o2[k + 1], nd)
        if couple:
            u, v = _coupling_half(u, v, decay)
        u = _heun_step(cfg.F, u, (c1,), (n1,), h)
        v = _heun_step(cfg.G, v, (c2,), (n2,), h)
        if couple:
            u, v = _coupling_half(u, v, decay)
        _check(u, k)
        _check(v, k)
        us[k + 1], vs[k + 1] = u, v
        c1, c2 = n1, n2
    return us, vs


def _vec0(x) -> np.ndarray:
    return np.atleast_1d(np.asarray(x, dtype=np.float64))


def _stack(paths: Sequence[SamplePath], window: TimeGrid) -> np.ndarray:
    return np.stack([p.restrict(window).values for p in paths], axis=1)


def _batched_init(x0, n_batch: int) -> np.ndarray:
    x0 = _vec0(x0)
    return np.broadcast_to(x0, (n_batch,) + x0.shape).copy()


def integrate_rde(
    drift: DriftSpec, coeffs: Coeffs, fou: SamplePath, u0, window: TimeGrid
) -> SamplePath:
    """Heun stepping of dU/dt = field(U, O_t); ``u0`` may be a (m, d) cloud."""
    o = fou.restrict(window).values
    field = lambda u, ot: coeffs.field(u, ot, drift)
    vals = _heun(field, (o,), _vec0(u0), window.h)
    return SamplePath(window, vals, {"scheme": "heun", "h": window.h})


def integrate_rde_batch(
    drift: DriftSpec, coeffs: Coeffs, fous: Sequence[SamplePath], u0, window: TimeGrid
) -> np.ndarray:
    """integrate_rde over several fOU paths; returns (n_paths, n+1, ..., d)."""
    o = _stack(fous, window)
    field = lambda u, ot: coeffs.field(u, ot, drift)
    out = _heun(field, (o,), _batched_init(u0, o.shape[1]), window.h)
    return np.moveaxis(out, 0, 1)


def integrate_coupled(
    cfg: CoupledConfig, fou1: SamplePath, fou2: SamplePath, state0: CoupledState, window: TimeGrid
) -> CoupledTrajectory:
    o1 = fou1.restrict(window).values
    o2 = fou2.restrict(window).values
    us, vs = _strang(cfg, o1, o2, state0.u, state0.v, window.h)
    return CoupledTrajectory(window, us, vs)


def integrate_coupled_batch(
    cfg: CoupledConfig,
    fous1: Sequence[SamplePath],
    fous2: Sequence[SamplePath],
    state0: CoupledState,
    window: TimeGrid,
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (U, V), each shaped (n_paths, n+1, ..., d)."""
    o1, o2 = _stack(fous1, window), _stack(fous2, window)
    B = o1.shape[1]
    us, vs = _strang(cfg, o1, o2, _batched_init(state0.u, B), _batched_init(state0.v, B), window.h)
    return np.moveaxis(us, 0, 1), np.moveaxis(vs, 0, 1)


def integrate_averaged(
    cfg: CoupledConfig, fou1: SamplePath, fou2: SamplePath, w0, window: TimeGrid
) -> SamplePath:
    """Heun stepping of dW/dt = (F(W, O1) + G(W, O2)) / 2."""
    o1 = fou1.restrict(window).values
    o2 = fou2.restrict(window).values
    vals = _heun(cfg.averaged_field, (o1, o2), _vec0(w0), window.h)
    return SamplePath(window, vals, {"scheme": "heun", "h": window.h})


def integrate_averaged_batch(
    cfg: CoupledConfig, fous1: Sequence[SamplePath], fous2: Sequence[SamplePath], w0, window: TimeGrid
) -> np.ndarray:
    o1, o2 = _stack(fous1, window), _stack(fous2, window)
    out = _heun(cfg.averaged_field, (o1, o2), _batched_init(w0, o1.shape[1]), window.h)
    return np.moveaxis(out, 0, 1)


def coupled_sde_drift(cfg: CoupledConfig, x, y, o1, o2) -> tuple[np.ndarray, np.ndarray]:
    """dt-coefficients of the coupled SDEs in the original variables.

    Multiplicative pair, with eta = (a1 O1 - a2 O2)/2:
        f(X) + k(e^{2 eta} Y - X) + k((b2/a2)(e^{2 eta} - e^{a1 O1}) - (b1/a1)(1 - e^{a1 O1}))
        g(Y) + k(e^{-2 eta} X - Y) + k((b1/a1)(e^{-2 eta} - e^{a2 O2}) - (b2/a2)(1 - e^{a2 O2}))
    Mixed pair (second channel additive):
        f(X) + k(e^{a O1} Y - X) + k((b1/a)(e^{a O1} - 1) - e^{a O1} b2 O2)
        g(Y) + k(e^{-a O1} X - Y) + k(b2 O2 + (b1/a)(e^{-a O1} - 1))
    """
    k = cfg.kappa
    a1, b1 = cfg.coeffs1.a, cfg.coeffs1.b
    c1 = b1 / a1
    e1 = np.exp(a1 * o1)
    fx, gy = cfg.drift_f(x), cfg.drift_g(y)
    if cfg.mixed:
        b2 = cfg.coeffs2.b
        dx = fx + k * (e1 * y - x) + k * (c1 * (e1 - 1.0) - e1 * b2 * o2)
        dy = gy + k * (x / e1 - y) + k * (b2 * o2 + c1 * (1.0 / e1 - 1.0))
        return dx, dy
    a2, b2 = cfg.coeffs2.a, cfg.coeffs2.b
    c2 = b2 / a2
    e2 = np.exp(a2 * o2)
    e2eta = np.exp(a1 * o1 - a2 * o2)
    dx = fx + k * (e2eta * y - x) + k * (c2 * (e2eta - e1) - c1 * (1.0 - e1))
    dy = gy + k * (x / e2eta - y) + k * (c1 * (1.0 / e2eta - e2) - c2 * (1.0 - e2))
    return dx, dy


@dataclass(frozen=True)
class ReconstructedSDE:
    grid: TimeGrid
    x: np.ndarray
    y: np.ndarray
    eta: np.ndarray
    x_ref: np.ndarray
    y_ref: np.ndarray
    z_ref: np.ndarray


def reconstruct_coupled_sde(
    cfg: CoupledConfig,
    fou1: SamplePath,
    fou2: SamplePath,
    state0: CoupledState,
    window: TimeGrid,
    averaged: SamplePath | None = None,
) -> ReconstructedSDE:
    """Map a coupled RDE solve back to (X, Y) and build the large-kappa reference.

    ``state0`` is given in the transformed variables (U, V). The reference pair
    is the averaged solution W pushed through each inverse transform, and
    Z = e^{(a1 O1 + a2 O2)/2} W.
    """
    traj = integrate_coupled(cfg, fou1, fou2, state0, window)
    o1 = fou1.restrict(window).values[:, None]
    o2 = fou2.restrict(window).values[:, None]
    if averaged is None:
        averaged = integrate_averaged(cfg, fou1, fou2, 0.5 * (state0.u + state0.v), window)
    W = averaged.restrict(window).values
    x = cfg.coeffs1.inverse(traj.u, o1)
    y = cfg.coeffs2.inverse(traj.v, o2)
    eta = 0.5 * (cfg.coeffs1.a * o1[:, 0] - cfg.coeffs2.a * o2[:, 0])
    z = np.exp(0.5 * (cfg.coeffs1.a * o1 + cfg.coeffs2.a * o2)) * W
    return ReconstructedSDE(
        window, x, y, eta, cfg.coeffs1.inverse(W, o1), cfg.coeffs2.inverse(W, o2), z
    )
