"""Single-realization synchronization experiments.

Each function takes one realization of the fOU path(s) and returns a report;
ensembles, medians and verdicts live in :mod:`fracsync.suite`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.integrate

from .drifts import DriftSpec
from .errors import InsufficientSupport, InvalidParameter, OutOfWindow
from .integrate import (
    CoupledConfig,
    CoupledState,
    integrate_averaged,
    integrate_coupled,
    integrate_rde,
)
from .paths import SamplePath, TimeGrid
from .transform import AdditiveNoise, LinearNoiseCoeffs

__all__ = [
    "ContractionMatrixSample",
    "SyncReport",
    "AbsorbingRadius",
    "PullbackReport",
    "contraction_test",
    "absorbing_radius",
    "pullback_attractor_estimate",
    "contraction_matrix_integral",
    "contraction_eigenvalues",
    "comparison_bound",
    "fundamental_bound",
    "eigenvalue_onset",
    "resolution_floor",
    "pair_scale",
    "comparison_excess",
    "coupled_contraction_eigs",
    "steady_gap",
    "sync_gap_sweep",
    "averaged_limit_sweep",
    "case_pure_multiplicative",
    "case_mixed_noise",
]


@dataclass(frozen=True)
class ContractionMatrixSample:
    """A_kappa(t) = [[-2L - k + 2 a1 O1_t, k], [k, -2L - k + 2 a2 O2_t]]."""

    t: float
    entries: np.ndarray

    @classmethod
    def build(cls, cfg: CoupledConfig, t: float, o1: float, o2: float) -> "ContractionMatrixSample":
        L, k = cfg.dissipativity_L, cfg.kappa
        m = np.array(
            [[-2 * L - k + 2 * cfg.coeffs1.a * o1, k], [k, -2 * L - k + 2 * cfg.coeffs2.a * o2]]
        )
        m.setflags(write=False)
        return cls(t, m)

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)


@dataclass
class SyncReport:
    experiment: str
    kappa: float
    gap_times: np.ndarray
    gap_values: np.ndarray
    fitted_rate: float = float("nan")
    eigenvalue_bound: float = float("nan")
    reference_distance: float = float("nan")
    extras: dict = field(default_factory=dict)

    @property
    def gap_trajectory(self) -> np.ndarray:
        """(t, ||U - V||^2) rows."""
        return np.column_stack([self.gap_times, self.gap_values])

    def to_json(self) -> dict:
        return {
            "experiment": self.experiment,
            "kappa": self.kappa,
            "fitted_rate": self.fitted_rate,
            "eigenvalue_bound": self.eigenvalue_bound,
            "reference_distance": self.reference_distance,
            **{k: v for k, v in self.extras.items() if np.isscalar(v) or v is None},
        }


def _sq_norm(x: np.ndarray) -> np.ndarray:
    return np.sum(x.reshape(x.shape[0], -1) ** 2, axis=1)


def _slope(t: np.ndarray, y: np.ndarray) -> float:
    return float(np.polyfit(t, y, 1)[0])


def _time_mean(o: np.ndarray, h: float) -> float:
    return float(np.trapezoid(o, dx=h) / (h * (o.size - 1)))


def contraction_test(
    drift: DriftSpec,
    coeffs: LinearNoiseCoeffs,
    fou: SamplePath,
    u0_pairs: Sequence[tuple],
    window: TimeGrid,
    tolerance: float = 0.05,
) -> SyncReport:
    """Fit the slope of log||U1 - U2||^2 for each pair and check the Gronwall bound.

    The bound 2(-L + a * mean(O)) controls the chord rate log(d(T)/d(0))/T; the
    least-squares slope is reported as ``fitted_rate`` but can exceed the bound
    when O is not constant, so the check uses the chord.
    """
    o = fou.restrict(window).values
    slopes, chords, first = [], [], None
    for u1, u2 in u0_pairs:
        cloud = np.stack([np.atleast_1d(u1), np.atleast_1d(u2)]).astype(np.float64)
        if np.array_equal(cloud[0], cloud[1]):
            raise InvalidParameter("initial conditions in a pair must differ")
        U = integrate_rde(drift, coeffs, fou, cloud, window).values
        dist2 = _sq_norm(U[:, 0] - U[:, 1])
        slopes.append(_slope(window.times, np.log(dist2)))
        chords.append(float(np.log(dist2[-1] / dist2[0]) / (window.t1 - window.t0)))
        if first is None:
            first = dist2
    bound = 2.0 * (-drift.dissipativity_L + coeffs.a * _time_mean(o, window.h))
    return SyncReport(
        "contraction",
        0.0,
        window.times,
        first,
        fitted_rate=max(slopes),
        extras={
            "slopes": slopes,
            "chord_rates": chords,
            "bound": bound,
            "tolerance": tolerance,
            "pass": max(chords) <= bound + tolerance,
        },
    )


@dataclass(frozen=True)
class AbsorbingRadius:
    R_squared: float
    truncation_T: float
    quadrature_step: float
    tail_bound: float


def absorbing_radius(
    drift: DriftSpec, coeffs: LinearNoiseCoeffs, fou: SamplePath, truncation_T: float
) -> AbsorbingRadius:
    """R^2 = 1 + (2/L) int_{-T}^0 forcing(O_tau) exp(L tau + 2a int_tau^0 O_s ds) dtau."""
    h = fou.grid.h
    n = round(truncation_T / h)
    try:
        o = fou.restrict(TimeGrid(-n * h, 0.0, n)).values
    except OutOfWindow as exc:
        raise InsufficientSupport(f"fOU path must cover [-{truncation_T}, 0]") from exc
    L = drift.dissipativity_L
    tau = -h * np.arange(n, -1, -1)
    cum = scipy.integrate.cumulative_trapezoid(o, dx=h, initial=0.0)
    inner = cum[-1] - cum
    integrand = coeffs.forcing(o, drift) * np.exp(L * tau + 2.0 * coeffs.a * inner)
    R2 = 1.0 + (2.0 / L) * float(np.trapezoid(integrand, dx=h))
    return AbsorbingRadius(R2, n * h, h, float(np.exp(-L * n * h)))


def _default_cloud(dim: int, radius0: float) -> np.ndarray:
    eye = np.eye(dim) * radius0
    return np.concatenate([np.zeros((1, dim)), eye, -eye])


def _diameter(cloud: np.ndarray) -> float:
    d = cloud[:, None, :] - cloud[None, :, :]
    return float(np.sqrt(np.max(np.sum(d * d, axis=-1))))


@dataclass(frozen=True)
class PullbackReport:
    start_times: np.ndarray
    diameters: np.ndarray

    @property
    def strictly_decreasing(self) -> bool:
        order = np.argsort(-self.start_times)
        return bool(np.all(np.diff(self.diameters[order]) < 0))


def pullback_attractor_estimate(
    drift: DriftSpec,
    coeffs: LinearNoiseCoeffs,
    fou: SamplePath,
    start_times: Sequence[float],
    radius0: float,
    cloud: np.ndarray | None = None,
) -> PullbackReport:
    """Integrate a cloud of initial states of norm <= radius0 from each start time to
    t = 0 on the same realization and report the cloud diameter at t = 0."""
    if cloud is None:
        cloud = _default_cloud(coeffs.dim, radius0)
    cloud = np.atleast_2d(np.asarray(cloud, dtype=np.float64))
    if np.any(np.linalg.norm(cloud, axis=-1) > radius0 * (1 + 1e-12)):
        raise InvalidParameter("cloud points must have norm <= radius0")
    h = fou.grid.h
    diams = []
    for s in start_times:
        if not s < 0:
            raise InvalidParameter("start times must be negative")
        n = round(-s / h)
        U = integrate_rde(drift, coeffs, fou, cloud, TimeGrid(-n * h, 0.0, n)).values
        diams.append(_diameter(U[-1]))
    return PullbackReport(np.asarray(start_times, dtype=np.float64), np.array(diams))


def contraction_matrix_integral(cfg: CoupledConfig, o1: np.ndarray, o2: np.ndarray, h: float):
    """Entries of int_0^t A_kappa(s) ds at every lattice time, where
    A_kappa = [[-2L - k + 2 a1 O1, k], [k, -2L - k + 2 a2 O2]].

    Returns (diag1, diag2, offdiag, t) arrays along the lattice.
    """
    L, k = cfg.dissipativity_L, cfg.kappa
    t = h * np.arange(o1.shape[0])
    I1 = scipy.integrate.cumulative_trapezoid(o1, dx=h, axis=0, initial=0.0)
    I2 = scipy.integrate.cumulative_trapezoid(o2, dx=h, axis=0, initial=0.0)
    base = (-2.0 * L - k) * t
    if o1.ndim > 1:
        base, t_b = base[:, None], t[:, None]
    else:
        t_b = t
    return base + 2.0 * cfg.coeffs1.a * I1, base + 2.0 * cfg.coeffs2.a * I2, np.broadcast_to(k * t_b, I1.shape), t


def contraction_eigenvalues(d1, d2, off) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (max, min) of the symmetric matrices [[d1, off], [off, d2]]."""
    mean = 0.5 * (d1 + d2)
    rad = np.sqrt((0.5 * (d1 - d2)) ** 2 + off**2)
    return mean + rad, mean - rad


def _sym_expm_apply(d1, d2, off, x0, x1):
    mean = 0.5 * (d1 + d2)
    half = 0.5 * (d1 - d2)
    rad = np.sqrt(half**2 + off**2)
    ep, em = np.exp(mean + rad), np.exp(mean - rad)
    ch = 0.5 * (ep + em)
    with np.errstate(invalid="ignore", divide="ignore"):
        sh_r = np.where(rad > 1e-12, 0.5 * (ep - em) / np.where(rad > 0, rad, 1.0), np.exp(mean))
    return (ch + sh_r * half) * x0 + sh_r * off * x1, sh_r * off * x0 + (ch - sh_r * half) * x1


def comparison_bound(d1, d2, off, m0) -> np.ndarray:
    """exp([[d1, off], [off, d2]]) @ m0 for arrays of matrices; returns (..., 2)."""
    m0 = np.asarray(m0, dtype=np.float64)
    return np.stack(_sym_expm_apply(d1, d2, off, m0[..., 0], m0[..., 1]), axis=-1)


def fundamental_bound(d1, d2, off, m0) -> np.ndarray:
    """Phi(t) m0 with Phi the fundamental matrix of m' = A(t) m, as the ordered
    product of the exponentials of int A over each lattice step.

    Time runs along axis 0 of d1, d2, off; trailing axes are batch axes and
    ``m0`` has shape batch + (2,). Returns time + batch + (2,).
    """
    dd1, dd2, doff = np.diff(d1, axis=0), np.diff(d2, axis=0), np.diff(off, axis=0)
    m0 = np.asarray(m0, dtype=np.float64)
    out = np.empty(d1.shape + (2,))
    x0, x1 = np.broadcast_to(m0[..., 0], d1.shape[1:]), np.broadcast_to(m0[..., 1], d1.shape[1:])
    out[0, ..., 0], out[0, ..., 1] = x0, x1
    for k in range(dd1.shape[0]):
        x0, x1 = _sym_expm_apply(dd1[k], dd2[k], doff[k], x0, x1)
        out[k + 1, ..., 0], out[k + 1, ..., 1] = x0, x1
    return out


def resolution_floor(scale, dim: int, ulps: float = 16.0):
    """Smallest squared difference of two states of magnitude ``scale`` that
    float64 arithmetic can resolve, padded by ``ulps`` units in the last place."""
    return dim * (ulps * np.finfo(np.float64).eps * np.asarray(scale)) ** 2


def pair_scale(cfg: CoupledConfig, states, o1, o2) -> np.ndarray:
    """Largest magnitude among the states (U_a, V_a, U_b, V_b) and their vector
    fields at each time; the fields set the rounding level when the states
    themselves are small. States have shape (..., time, d), o1 and o2 (..., time)."""
    ua, va, ub, vb = states
    o1, o2 = o1[..., None], o2[..., None]
    terms = (ua, va, ub, vb, cfg.F(ua, o1), cfg.G(va, o2), cfg.F(ub, o1), cfg.G(vb, o2))
    return np.max(np.abs(np.stack(terms)), axis=(0, -1))


def comparison_excess(m, bound, floor=0.0, axis=None):
    """Largest relative excess (m - floor - bound) / bound; <= tol means m <= bound(1 + tol) + floor."""
    return np.max((m - floor - bound) / np.maximum(bound, 1e-300), axis=axis)


def eigenvalue_onset(t: np.ndarray, max_eig: np.ndarray, L: float) -> float | None:
    """First time after which max_eig <= -L t holds at every later lattice time."""
    ok = max_eig <= -L * t
    if not ok[-1]:
        return None
    bad = np.flatnonzero(~ok)
    i = 0 if bad.size == 0 else bad[-1] + 1
    return float(t[i])


def coupled_contraction_eigs(
    cfg: CoupledConfig,
    fou1: SamplePath,
    fou2: SamplePath,
    window: TimeGrid,
    pair: tuple[CoupledState, CoupledState] | None = None,
    rel_tol: float = 1e-6,
) -> SyncReport:
    """Eigenvalues of int_0^t A_kappa, their onset below -L t, and the comparison
    of realized (||U1 - U2||^2, ||V1 - V2||^2) with exp(int_0^t A_kappa) m(0)."""
    o1 = fou1.restrict(window).values
    o2 = fou2.restrict(window).values
    d1, d2, off, t = contraction_matrix_integral(cfg, o1, o2, window.h)
    lam_max, lam_min = contraction_eigenvalues(d1, d2, off)
    onset = eigenvalue_onset(t, lam_max, cfg.dissipativity_L)
    extras = {"onset": onset, "lambda_max": lam_max, "lambda_min": lam_min, "times": t}
    gap_vals = np.zeros(t.size)
    if pair is not None:
        ta = integrate_coupled(cfg, fou1, fou2, pair[0], window)
        tb = integrate_coupled(cfg, fou1, fou2, pair[1], window)
        m = np.stack([_sq_norm(ta.u - tb.u), _sq_norm(ta.v - tb.v)], axis=-1)
        scale = pair_scale(cfg, (ta.u, ta.v, tb.u, tb.v), o1, o2)
        floor = resolution_floor(scale, cfg.dim)[:, None]
        bound = comparison_bound(d1, d2, off, m[0])
        excess = float(comparison_excess(m, bound, floor))
        phi = fundamental_bound(d1, d2, off, m[0])
        extras.update(
            fundamental_excess=float(comparison_excess(m, phi, floor)),
            comparison_excess=excess,
            comparison_ok=excess <= rel_tol,
            m=m,
            bound=bound,
        )
        gap_vals = m.sum(axis=1)
    return SyncReport(
        "coupled-contraction",
        cfg.kappa,
        t + window.t0,
        gap_vals,
        eigenvalue_bound=float(lam_max[-1]),
        extras=extras,
    )


def steady_gap(gap: np.ndarray, burn_fraction: float = 0.5, h: float = 1.0) -> float:
    """Time average over the part of the last axis after the burn-in fraction."""
    gap = np.asarray(gap, dtype=np.float64)
    i = int(round(burn_fraction * (gap.shape[-1] - 1)))
    seg = gap[..., i:]
    span = h * (seg.shape[-1] - 1)
    if seg.ndim == 1:
        return float(np.trapezoid(seg, dx=h)) / span
    # row by row, so a trial's value does not depend on the batch it was run in
    rows = seg.reshape(-1, seg.shape[-1])
    avg = np.array([np.trapezoid(r, dx=h) for r in rows]) / span
    return avg.reshape(seg.shape[:-1])


def sync_gap_sweep(
    cfg_base: CoupledConfig,
    kappas: Sequence[float],
    fou1: SamplePath,
    fou2: SamplePath,
    window: TimeGrid,
    state0: CoupledState,
    burn_fraction: float = 0.5,
) -> list[SyncReport]:
    """Time-averaged steady gap ||U_k - V_k||^2 for each kappa from a common start."""
    if any(k <= 0 for k in kappas) or list(kappas) != sorted(kappas):
        raise InvalidParameter("kappas must be positive and increasing")
    out = []
    for k in kappas:
        traj = integrate_coupled(cfg_base.with_kappa(k), fou1, fou2, state0, window)
        gap = traj.gap()
        out.append(
            SyncReport(
                "sync-gap",
                k,
                window.times,
                gap,
                extras={"steady_gap": steady_gap(gap, burn_fraction, window.h)},
            )
        )
    return out


def _reference(cfg_base, fou1, fou2, state0, window):
    return integrate_averaged(cfg_base, fou1, fou2, 0.5 * (state0.u + state0.v), window).values


def averaged_limit_sweep(
    cfg_base: CoupledConfig,
    kappas: Sequence[float],
    fou1: SamplePath,
    fou2: SamplePath,
    window: TimeGrid,
    state0: CoupledState,
    burn_fraction: float = 0.5,
) -> list[SyncReport]:
    """sup over the post-burn-in window of ||(U_k + V_k)/2 - W|| with W the
    averaged solution started from the same mean state."""
    W = _reference(cfg_base, fou1, fou2, state0, window)
    i = int(round(burn_fraction * window.n))
    out = []
    for k in kappas:
        traj = integrate_coupled(cfg_base.with_kappa(k), fou1, fou2, state0, window)
        dist = np.sqrt(_sq_norm(traj.mean()[i:] - W[i:]))
        gap = traj.gap()
        out.append(
            SyncReport(
                "averaged-limit",
                k,
                window.times,
                gap,
                reference_distance=float(dist.max()),
                extras={"steady_gap": steady_gap(gap, burn_fraction, window.h)},
            )
        )
    return out


def _case_pipeline(name, cfg_base, kappas, fou1, fou2, window, state0, burn_fraction):
    W = _reference(cfg_base, fou1, fou2, state0, window)
    o1 = fou1.restrict(window).values[:, None]
    o2 = fou2.restrict(window).values[:, None]
    x_ref = cfg_base.coeffs1.inverse(W, o1)
    y_ref = cfg_base.coeffs2.inverse(W, o2)
    i = int(round(burn_fraction * window.n))
    out = []
    for k in kappas:
        traj = integrate_coupled(cfg_base.with_kappa(k), fou1, fou2, state0, window)
        x = cfg_base.coeffs1.inverse(traj.u, o1)
        y = cfg_base.coeffs2.inverse(traj.v, o2)
        gap = traj.gap()
        resid = max(
            float(np.sqrt(_sq_norm(x[i:] - x_ref[i:])).max()),
            float(np.sqrt(_sq_norm(y[i:] - y_ref[i:])).max()),
        )
        out.append(
            SyncReport(
                name,
                k,
                window.times,
                gap,
                reference_distance=float(np.sqrt(_sq_norm(traj.mean()[i:] - W[i:])).max()),
                extras={"steady_gap": steady_gap(gap, burn_fraction, window.h), "reconstruction_residual": resid},
            )
        )
    return out


def case_pure_multiplicative(
    cfg_base: CoupledConfig,
    kappas: Sequence[float],
    fou1: SamplePath,
    fou2: SamplePath,
    window: TimeGrid,
    state0: CoupledState,
    burn_fraction: float = 0.5,
) -> list[SyncReport]:
    """b1 = b2 = 0: gaps, averaged limit, and the residual of X_k -> e^{a1 O1} W,
    Y_k -> e^{a2 O2} W in the original variables."""
    if cfg_base.mixed or np.any(cfg_base.coeffs1.b != 0) or np.any(cfg_base.coeffs2.b != 0):
        raise InvalidParameter("pure multiplicative case needs b1 = b2 = 0 and a1, a2 != 0")
    return _case_pipeline("case-multiplicative", cfg_base, kappas, fou1, fou2, window, state0, burn_fraction)


def case_mixed_noise(
    cfg_base: CoupledConfig,
    kappas: Sequence[float],
    fou1: SamplePath,
    fou2: SamplePath,
    window: TimeGrid,
    state0: CoupledState,
    burn_fraction: float = 0.5,
) -> list[SyncReport]:
    """Multiplicative first channel, additive second channel (V = Y - b2 O2);
    limits X_k -> e^{a O1}(W + b1/a) - b1/a and Y_k -> W + b2 O2."""
    if not isinstance(cfg_base.coeffs2, AdditiveNoise):
        raise InvalidParameter("mixed case needs an AdditiveNoise second channel")
    return _case_pipeline("case-mixed", cfg_base, kappas, fou1, fou2, window, state0, burn_fraction)
