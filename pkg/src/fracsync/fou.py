"""Fractional Ornstein-Uhlenbeck paths built from sampled fBm.

The stochastic integral e^{-nu t} int_{-inf}^t e^{nu s} dB_s is never formed
directly: integrating by parts gives

    O_t = B_t - nu * int_{-inf}^t e^{-nu (t-s)} B_s ds,

a Riemann convolution against the path itself, which is evaluated with the
trapezoid rule on the sampling lattice and truncated ``tail_length`` before t.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
import scipy.signal

from .errors import InsufficientSupport, InvalidParameter, OutOfWindow
from .paths import SamplePath, TimeGrid

__all__ = [
    "FouConfig",
    "DiagnosticRecord",
    "GrowthTrend",
    "fou_stationary",
    "fou_ivp",
    "ergodic_average",
    "sublinear_growth_check",
]


@dataclass(frozen=True)
class FouConfig:
    nu: float = 1.0
    tail_length: float = 20.0

    def __post_init__(self):
        if not self.nu > 0:
            raise InvalidParameter(f"nu must be positive, got {self.nu}")
        if not self.tail_length > 0:
            raise InvalidParameter(f"tail_length must be positive, got {self.tail_length}")

    @property
    def truncation_bound(self) -> float:
        return math.exp(-self.nu * self.tail_length)


@dataclass(frozen=True)
class DiagnosticRecord:
    T: float
    value: float
    tolerance: float
    passed: bool

    def to_json(self) -> dict:
        return {"T": self.T, "value": self.value, "tolerance": self.tolerance, "pass": self.passed}


def _scalar(noise: SamplePath) -> np.ndarray:
    if noise.values.ndim != 1:
        raise InvalidParameter("fOU construction expects a scalar noise path")
    return noise.values


def fou_stationary(
    noise: SamplePath, cfg: FouConfig = FouConfig(), window: TimeGrid | None = None
) -> SamplePath:
    """Stationary fOU path on ``window`` (default: everything after the first tail).

    The quadrature runs at the noise resolution; ``window`` may be any
    sub-lattice of the noise grid.
    """
    B = _scalar(noise)
    g = noise.grid
    h = g.h
    m = max(1, round(cfg.tail_length / h))
    if window is None:
        if m >= g.n:
            raise InsufficientSupport(f"noise shorter than the tail length {cfg.tail_length}")
        window = TimeGrid(g.t0 + m * h, g.t1, g.n - m)
    try:
        start, stride = g.locate(window)
    except OutOfWindow as exc:
        raise InsufficientSupport(str(exc)) from exc
    stop = start + stride * window.n
    if start - m < 0:
        raise InsufficientSupport(
            f"noise starts at {g.t0}; need support from {window.t0 - m * h}"
        )
    kernel = np.exp(-cfg.nu * h * np.arange(m + 1))
    kernel[0] *= 0.5
    kernel[-1] *= 0.5
    conv = scipy.signal.fftconvolve(B[start - m : stop + 1], kernel, mode="valid")
    O = B[start : stop + 1] - cfg.nu * h * conv
    meta = {
        "nu": cfg.nu,
        "tail_length": m * h,
        "quadrature_step": h,
        "truncation_bound": math.exp(-cfg.nu * m * h),
        "kind": "stationary",
    }
    return SamplePath(window, O[::stride], meta)


def fou_ivp(
    noise: SamplePath,
    x0: float,
    t_start: float,
    cfg: FouConfig = FouConfig(),
    window: TimeGrid | None = None,
) -> SamplePath:
    """fOU started from ``x0`` at ``t_start``:

    O_t = e^{-nu (t - t_start)} (x0 - B_{t_start}) + B_t - nu int_{t_start}^t e^{-nu (t-s)} B_s ds.
    """
    B = _scalar(noise)
    g = noise.grid
    h = g.h
    k0 = g.index_of(t_start)
    if k0 is None:
        raise InsufficientSupport(f"t_start={t_start} is not a grid point of the noise")
    if window is None:
        if k0 >= g.n:
            raise InsufficientSupport("no room after t_start")
        window = TimeGrid(t_start, g.t1, g.n - k0)
    if window.t0 < t_start - 1e-12 * max(1.0, abs(t_start)):
        raise InsufficientSupport("window starts before t_start")
    try:
        start, stride = g.locate(window)
    except OutOfWindow as exc:
        raise InsufficientSupport(str(exc)) from exc
    stop = start + stride * window.n
    seg = B[k0 : stop + 1]
    decay = math.exp(-cfg.nu * h)
    # J_k = decay * J_{k-1} + h/2 (decay * B_{k-1} + B_k), J_0 = 0
    drive = np.zeros_like(seg)
    drive[1:] = 0.5 * h * (decay * seg[:-1] + seg[1:])
    J = scipy.signal.lfilter([1.0], [1.0, -decay], drive)
    t_rel = h * np.arange(seg.size)
    O = np.exp(-cfg.nu * t_rel) * (x0 - seg[0]) + seg - cfg.nu * J
    O = O[start - k0 :: stride]
    meta = {"nu": cfg.nu, "quadrature_step": h, "x0": x0, "t_start": t_start, "kind": "ivp"}
    return SamplePath(window, O, meta)


def ergodic_average(fou: SamplePath, T: float) -> float:
    """(1/T) int_0^T O_s ds by the trapezoid rule on the path's lattice."""
    if not T > 0:
        raise InvalidParameter(f"T must be positive, got {T}")
    g = fou.grid
    i0, i1 = g.index_of(0.0), g.index_of(T)
    if i0 is None or i1 is None:
        raise OutOfWindow(f"[0, {T}] is not covered by the lattice of the path")
    seg = fou.values[i0 : i1 + 1]
    avg = np.trapezoid(seg, dx=g.h, axis=0) / T
    return float(avg) if seg.ndim == 1 else avg


@dataclass(frozen=True)
class GrowthTrend:
    times: np.ndarray
    scaled: np.ndarray
    trend: float
    violated: bool

    def to_json(self) -> dict:
        d = asdict(self)
        d["times"] = self.times.tolist()
        d["scaled"] = self.scaled.tolist()
        return d


def sublinear_growth_check(fou: SamplePath, delta: float) -> GrowthTrend:
    """|t_k|^{-delta} |O_{t_k}| at dyadic times t_k = 1, 2, 4, ... inside the path.

    ``trend`` is the least-squares slope of the sequence against log2 t_k; a
    positive trend flags a violation of eventual decrease.
    """
    if not delta > 0:
        raise InvalidParameter("delta must be positive")
    g = fou.grid
    t_hi = max(abs(g.t0), abs(g.t1))
    times, scaled = [], []
    k = 0
    while 2.0**k <= t_hi:
        for t in (2.0**k, -(2.0**k)):
            i = g.index_of(t)
            if i is not None:
                times.append(t)
                scaled.append(abs(t) ** (-delta) * float(np.linalg.norm(np.atleast_1d(fou.values[i]))))
                break
        k += 1
    times_a, scaled_a = np.array(times), np.array(scaled)
    if times_a.size < 2:
        raise InsufficientSupport("need at least two dyadic times inside the path")
    trend = float(np.polyfit(np.log2(np.abs(times_a)), scaled_a, 1)[0])
    return GrowthTrend(times_a, scaled_a, trend, trend > 0.0)
