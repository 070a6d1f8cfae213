"""Ensemble drivers: one noise realization per trial, statistics aggregated by
ensemble medians, one verdict per checked property.

Trial k draws channel j's fBm from the Philox stream (seed, 2k + j), so every
trial is reproducible in isolation and independent of the number of trials or
threads. Trials are integrated as one batch (split into contiguous chunks when
``threads > 1``); per-trial arithmetic does not depend on the batch layout.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .conjugacy import equivalence_harness
from .drifts import DriftSpec, from_catalog
from .errors import InvalidParameter
from .experiments import (
    _default_cloud,
    comparison_bound,
    contraction_eigenvalues,
    contraction_matrix_integral,
    comparison_excess,
    eigenvalue_onset,
    fundamental_bound,
    pair_scale,
    resolution_floor,
    steady_gap,
)
from .fou import FouConfig, ergodic_average, fou_stationary
from .integrate import (
    CoupledConfig,
    CoupledState,
    integrate_averaged_batch,
    integrate_coupled_batch,
    integrate_rde_batch,
)
from .paths import (
    RngSeed,
    SamplePath,
    TimeGrid,
    estimate_holder_exponent,
    fbm_covariance,
    sample_fbm,
)
from .transform import AdditiveNoise, LinearNoiseCoeffs
from .young import young_refinement

__all__ = [
    "SystemSpec",
    "Table",
    "Verdict",
    "ExperimentResult",
    "fou_for_trial",
    "run_fbm_law",
    "run_fbm_regularity",
    "run_ergodic",
    "run_young",
    "run_equivalence",
    "run_contraction",
    "run_pullback",
    "run_coupled_eigs",
    "run_sync_sweep",
    "run_averaged_sweep",
    "run_case",
    "run_coupling_flow",
]


@dataclass(frozen=True)
class SystemSpec:
    """Parameters of the coupled pair; a2 = 0 selects an additive second channel."""

    a1: float = 0.5
    a2: float = 0.5
    b1: tuple = (0.5, 0.0)
    b2: tuple = (0.0, 0.5)
    H1: float = 0.75
    H2: float = 0.75
    L: float = 1.0
    drift_f: str = "affine"
    drift_g: str = "affine"
    c_f: tuple = (1.0, 1.0)
    c_g: tuple = (-1.0, -1.0)
    tail_length: float = 20.0

    def __post_init__(self):
        if len(self.b1) != len(self.b2):
            raise InvalidParameter("b1 and b2 must have the same length")
        object.__setattr__(self, "b1", tuple(float(x) for x in self.b1))
        object.__setattr__(self, "b2", tuple(float(x) for x in self.b2))
        object.__setattr__(self, "c_f", tuple(float(x) for x in self.c_f))
        object.__setattr__(self, "c_g", tuple(float(x) for x in self.c_g))

    @property
    def dim(self) -> int:
        return len(self.b1)

    def _drift(self, name: str, c: tuple) -> DriftSpec:
        if name == "affine":
            if len(c) not in (1, self.dim):
                raise InvalidParameter(f"affine offset has length {len(c)}, dimension is {self.dim}")
            return from_catalog(name, c=np.array(c), L=self.L)
        return from_catalog(name, L=self.L)

    @property
    def f(self) -> DriftSpec:
        return self._drift(self.drift_f, self.c_f)

    @property
    def g(self) -> DriftSpec:
        return self._drift(self.drift_g, self.c_g)

    @property
    def coeffs1(self) -> LinearNoiseCoeffs:
        return LinearNoiseCoeffs(self.a1, self.b1)

    @property
    def coeffs2(self) -> LinearNoiseCoeffs | AdditiveNoise:
        if self.a2 == 0:
            return AdditiveNoise(self.b2)
        return LinearNoiseCoeffs(self.a2, self.b2)

    def coupled(self, kappa: float = 1.0) -> CoupledConfig:
        return CoupledConfig(self.coeffs1, self.coeffs2, self.f, self.g, self.H1, self.H2, kappa, self.L)

    def state0(self) -> CoupledState:
        return CoupledState(2.0 * np.ones(self.dim), -2.0 * np.ones(self.dim))

    def to_json(self) -> dict:
        return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(self).items()}


@dataclass
class Table:
    name: str
    header: list
    rows: np.ndarray
    kappa: float | None = None


@dataclass
class Verdict:
    experiment: str
    params: dict
    statistic: object
    tolerance: object
    passed: bool

    def to_json(self) -> dict:
        return {
            "experiment": self.experiment,
            "params": self.params,
            "statistic": self.statistic,
            "tolerance": self.tolerance,
            "pass": bool(self.passed),
        }


@dataclass
class ExperimentResult:
    experiment: str
    verdicts: list
    tables: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)


# ---------------------------------------------------------------- noise


def fou_for_trial(
    H: float, seed: int, stream: int, window: TimeGrid, tail_length: float = 20.0
) -> SamplePath:
    """Stationary fOU on ``window`` from the fBm stream (seed, stream)."""
    h = window.h
    m = max(1, round(tail_length / h))
    noise_grid = TimeGrid(window.t0 - m * h, window.t1, window.n + m)
    noise = sample_fbm(noise_grid, H, RngSeed(seed, stream))
    return fou_stationary(noise, FouConfig(tail_length=m * h), window)


def _fous(spec: SystemSpec, seed: int, trials: int, window: TimeGrid, channels=(0, 1)):
    Hs = (spec.H1, spec.H2)
    out = []
    for j in channels:
        out.append([fou_for_trial(Hs[j], seed, 2 * k + j, window, spec.tail_length) for k in range(trials)])
    return out


def _chunked(fn: Callable[[slice], np.ndarray], trials: int, threads: int):
    """Evaluate fn on contiguous trial slices and concatenate along axis 0."""
    threads = max(1, min(threads, trials))
    bounds = np.linspace(0, trials, threads + 1).astype(int)
    slices = [slice(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]
    if threads == 1:
        parts = [fn(slices[0])]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            parts = list(ex.map(fn, slices))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p, axis=0) for p in zip(*parts))
    return np.concatenate(parts, axis=0)


def _median(x) -> float:
    return float(np.median(np.asarray(x, dtype=np.float64)))


def _fmt(x: float) -> str:
    return f"{x:g}"


# ---------------------------------------------------------------- noise laws


# probe pairs as fractions of the unit interval, in 64ths
PROBE_PAIRS = ((8, 8), (16, 16), (32, 32), (48, 48), (64, 64), (8, 64), (16, 48), (24, 40), (32, 64), (56, 60))


def run_fbm_law(Hs=(0.6, 0.75, 0.9), n: int = 64, trials: int = 20000, seed: int = 1, tolerance: float = 0.02):
    """Empirical covariance of fBm on [0, 1] at fixed probe pairs versus the exact kernel."""
    grid = TimeGrid(0.0, 1.0, n)
    ii = np.array([round(i * n / 64) for i, _ in PROBE_PAIRS])
    jj = np.array([round(j * n / 64) for _, j in PROBE_PAIRS])
    verdicts, rows = [], []
    for H in Hs:
        paths = np.stack([sample_fbm(grid, H, RngSeed(seed, k)).values for k in range(trials)])
        emp = np.mean(paths[:, ii] * paths[:, jj], axis=0)
        exact = fbm_covariance(grid.times[ii], grid.times[jj], H)
        dev = np.abs(emp - exact)
        rows += [[H, grid.times[i], grid.times[j], e, x] for i, j, e, x in zip(ii, jj, emp, exact)]
        verdicts.append(
            Verdict("fbm-law", {"H": H, "n": n, "trials": trials}, float(dev.max()), tolerance, bool(dev.max() < tolerance))
        )
    table = Table("covariance", ["H", "t", "s", "empirical", "exact"], np.array(rows))
    return ExperimentResult("fbm-law", verdicts, [table])


def run_fbm_regularity(Hs=(0.6, 0.75, 0.9), n: int = 4096, trials: int = 200, seed: int = 2, tolerance: float = 0.1):
    """Variogram slope (= 2 x Hoelder estimate) of sampled fBm versus 2H."""
    grid = TimeGrid(0.0, 1.0, n)
    verdicts, rows = [], []
    for H in Hs:
        slopes = np.array(
            [2.0 * estimate_holder_exponent(sample_fbm(grid, H, RngSeed(seed, k))) for k in range(trials)]
        )
        rows += [[H, k, s] for k, s in enumerate(slopes)]
        med = _median(slopes)
        verdicts.append(
            Verdict(
                "fbm-regularity",
                {"H": H, "n": n, "trials": trials, "target": 2 * H},
                med,
                tolerance,
                abs(med - 2 * H) <= tolerance,
            )
        )
    return ExperimentResult("fbm-regularity", verdicts, [Table("slopes", ["H", "trial", "slope"], np.array(rows))])


def run_ergodic(H: float = 0.75, T: float = 500.0, h: float = 2**-4, trials: int = 100, seed: int = 3,
                tail_length: float = 20.0, tolerance: float = 0.05):
    """Ensemble mean of |(1/T) int_0^T O_s ds|."""
    window = TimeGrid.from_step(0.0, T, h)
    avgs = np.array(
        [ergodic_average(fou_for_trial(H, seed, k, window, tail_length), T) for k in range(trials)]
    )
    stat = float(np.mean(np.abs(avgs)))
    v = Verdict("ergodic", {"H": H, "T": T, "h": h, "trials": trials}, stat, tolerance, stat < tolerance)
    return ExperimentResult("ergodic", [v], [Table("averages", ["trial", "average"], np.column_stack([np.arange(trials), avgs]))])


def run_young(H: float = 0.75, n: int = 4096, alpha: float = 0.7, trials: int = 50, seed: int = 4, levels: int = 3,
              T: float = 1.0):
    """int X dX on fBm over [0, T]: refinement order of the left sums and the
    chain-rule error measured in units of the reported gap."""
    grid = TimeGrid(0.0, T, n)
    orders, ratios = [], []
    for k in range(trials):
        X = sample_fbm(grid, H, RngSeed(seed, k))
        prof = young_refinement(X, X, grid, levels)
        fine_sum = float(np.sum(X.values[:-1] * np.diff(X.values)))
        exact = 0.5 * (X.values[-1] ** 2 - X.values[0] ** 2)
        orders.append(prof.order)
        ratios.append(abs(fine_sum - exact) / prof.gaps[0])
    target = 2 * alpha - 1
    med_o, med_r = _median(orders), _median(ratios)
    params = {"H": H, "n": n, "T": T, "alpha": alpha, "trials": trials, "levels": levels}
    return ExperimentResult(
        "young",
        [
            Verdict("young-order", params, med_o, target, med_o >= target),
            Verdict("young-chain-rule", params, med_r, 1.0, med_r <= 1.0),
        ],
        [Table("young", ["trial", "order", "error_over_gap"], np.column_stack([np.arange(trials), orders, ratios]))],
    )


def run_equivalence(
    bs=((0.0,), (1.0,)),
    a: float = 1.0,
    c: float = 1.0,
    L: float = 1.0,
    H: float = 0.75,
    n: int = 4096,
    T: float = 1.0,
    x0: float = 0.5,
    trials: int = 50,
    seed: int = 5,
    tail_length: float = 20.0,
    tolerance_factor: float = 3.0,
    threads: int = 1,
):
    """Direct Young-Euler versus transform + RDE solve on [0, T] with step T/n."""
    drift = from_catalog("affine", c=np.array([c]), L=L)
    window = TimeGrid(0.0, T, n)
    fine = TimeGrid(0.0, T, 2 * n)
    verdicts, rows = [], []
    for b in bs:
        coeffs = LinearNoiseCoeffs(a, b)

        def one(k):
            m = round(tail_length / fine.h)
            noise = sample_fbm(TimeGrid(-m * fine.h, T, 2 * n + m), H, RngSeed(seed, k))
            return equivalence_harness(drift, coeffs, noise, [x0] * len(b), window, fou_cfg=FouConfig(tail_length=m * fine.h),
                                       tolerance_factor=tolerance_factor)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as ex:
                reps = list(ex.map(one, range(trials)))
        else:
            reps = [one(k) for k in range(trials)]
        ratio = np.array([r.sup_distance / r.envelope for r in reps])
        order = np.array([r.refinement_order for r in reps])
        rows += [[b[0], k, r.sup_distance, r.envelope, o] for k, (r, o) in enumerate(zip(reps, order))]
        params = {"a": a, "b": list(b), "h": window.h, "trials": trials, "H": H}
        verdicts.append(Verdict("equivalence", params, _median(ratio), tolerance_factor, _median(ratio) <= tolerance_factor))
    table = Table("equivalence", ["b", "trial", "sup_distance", "envelope", "order"], np.array(rows))
    return ExperimentResult("equivalence", verdicts, [table])


# ---------------------------------------------------------------- single system


def _contraction_pairs(dim: int) -> np.ndarray:
    e = np.ones(dim)
    return np.stack([e, -e, 3.0 * e, -e])


def run_contraction(spec: SystemSpec, window: TimeGrid, seed: int, trials: int, threads: int = 1,
                    rate_limit: float = -1.0, tolerance: float = 0.05):
    """Fitted slope of log||U1 - U2||^2 for two pairs on each realization."""
    (fous,) = _fous(spec, seed, trials, window, channels=(0,))
    drift, coeffs = spec.f, spec.coeffs1
    cloud = _contraction_pairs(spec.dim)

    def chunk(sl):
        U = integrate_rde_batch(drift, coeffs, fous[sl], cloud, window)
        return np.sum((U[:, :, 0::2] - U[:, :, 1::2]) ** 2, axis=-1)

    d2 = _chunked(chunk, trials, threads)  # (B, n+1, pairs)
    t = window.times
    slopes = np.array([np.polyfit(t, np.log(d2[k]), 1)[0] for k in range(trials)])  # (B, pairs)
    rate = slopes.max(axis=1)
    chord = (np.log(d2[:, -1] / d2[:, 0]) / (window.t1 - window.t0)).max(axis=1)
    o = np.stack([p.restrict(window).values for p in fous])
    bound = 2.0 * (-drift.dissipativity_L + coeffs.a * np.trapezoid(o, dx=window.h, axis=1) / (window.t1 - window.t0))
    within = chord <= bound + tolerance
    params = {"L": spec.L, "a": spec.a1, "H": spec.H1, "T": window.t1 - window.t0, "h": window.h, "trials": trials}
    verdicts = [
        Verdict("contraction-rate", params, _median(rate), rate_limit, _median(rate) <= rate_limit),
        Verdict("contraction-bound", params, float(np.mean(within)), tolerance, bool(np.all(within))),
    ]
    tables = [
        Table("slopes", ["trial", "rate", "chord_rate", "bound"], np.column_stack([np.arange(trials), rate, chord, bound])),
        Table("distance", ["t", "dist2"], np.column_stack([t, d2[0, :, 0]])),
    ]
    return ExperimentResult("contraction", verdicts, tables)


def run_pullback(spec: SystemSpec, h: float, seed: int, trials: int, start_times=(-5.0, -10.0, -20.0),
                 radius0: float = 10.0, threads: int = 1, final_limit: float = 1e-3):
    """Cloud diameters at t = 0 after starting ever earlier on the same realization."""
    s_min = min(start_times)
    full = TimeGrid.from_step(s_min, 0.0, h)
    (fous,) = _fous(spec, seed, trials, full, channels=(0,))
    cloud = _default_cloud(spec.dim, radius0)
    diams = np.empty((trials, len(start_times)))
    for i, s in enumerate(start_times):
        w = TimeGrid.from_step(s, 0.0, h)

        def chunk(sl):
            U = integrate_rde_batch(spec.f, spec.coeffs1, fous[sl], cloud, w)[:, -1]
            d = U[:, :, None, :] - U[:, None, :, :]
            return np.sqrt(np.max(np.sum(d * d, axis=-1), axis=(1, 2)))

        diams[:, i] = _chunked(chunk, trials, threads)
    med = np.median(diams, axis=0)
    order = np.argsort(-np.asarray(start_times))
    decreasing = bool(np.all(np.diff(med[order]) < 0))
    params = {"start_times": list(start_times), "radius0": radius0, "h": h, "trials": trials, "H": spec.H1}
    verdicts = [
        Verdict("pullback-decreasing", params, med.tolist(), "strict", decreasing),
        Verdict("pullback-final", params, float(med[order[-1]]), final_limit, float(med[order[-1]]) < final_limit),
    ]
    rows = np.column_stack([np.arange(trials), diams])
    return ExperimentResult("pullback", verdicts, [Table("diameters", ["trial"] + [f"s{_fmt(s)}" for s in start_times], rows)])


# ---------------------------------------------------------------- coupled pair


def _pair_states(dim: int) -> tuple[CoupledState, CoupledState]:
    e = np.ones(dim)
    return CoupledState(2 * e, -e), CoupledState(-2 * e, e)


def _eigs_for(cfg: CoupledConfig, fous1, fous2, window: TimeGrid, threads: int, rel_tol: float):
    trials = len(fous1)
    o1 = np.stack([p.restrict(window).values for p in fous1], axis=1)
    o2 = np.stack([p.restrict(window).values for p in fous2], axis=1)
    d1, d2, off, t = contraction_matrix_integral(cfg, o1, o2, window.h)
    lam_max, _ = contraction_eigenvalues(d1, d2, off)
    onsets = np.array(
        [np.nan if (x := eigenvalue_onset(t, lam_max[:, k], cfg.dissipativity_L)) is None else x for k in range(trials)]
    )
    sa, sb = _pair_states(cfg.dim)

    def chunk(sl):
        ua, va = integrate_coupled_batch(cfg, fous1[sl], fous2[sl], sa, window)
        ub, vb = integrate_coupled_batch(cfg, fous1[sl], fous2[sl], sb, window)
        m = np.stack([np.sum((ua - ub) ** 2, axis=-1), np.sum((va - vb) ** 2, axis=-1)], axis=-1)
        scale = pair_scale(cfg, (ua, va, ub, vb), o1.T[sl], o2.T[sl])
        return m, scale

    m, scale = _chunked(chunk, trials, threads)  # (B, n+1, 2), (B, n+1)
    floor = resolution_floor(scale, cfg.dim)[..., None]
    bound = comparison_bound(d1.T, d2.T, off.T, m[:, :1, :])
    excess = comparison_excess(m, bound, floor, axis=(1, 2))
    phi = np.moveaxis(fundamental_bound(d1, d2, off, m[:, 0, :]), 0, 1)
    phi_excess = comparison_excess(m, phi, floor, axis=(1, 2))
    return t, lam_max, onsets, m, bound, excess, phi_excess


def run_coupled_eigs(spec: SystemSpec, window: TimeGrid, kappas, seed: int, trials: int, threads: int = 1,
                     rel_tol: float = 1e-6, name: str = "coupled-eigs"):
    """Eigenvalue bound of int A_kappa past the onset time and the componentwise
    comparison of realized gaps with exp(int A_kappa) m(0)."""
    fous1, fous2 = _fous(spec, seed, trials, window)
    verdicts, tables = [], []
    for kappa in kappas:
        cfg = spec.coupled(kappa)
        t, lam_max, onsets, m, bound, excess, phi_excess = _eigs_for(cfg, fous1, fous2, window, threads, rel_tol)
        L = cfg.dissipativity_L
        end_margin = lam_max[-1] + L * t[-1]
        params = {"kappa": kappa, "L": L, "T": t[-1], "h": window.h, "trials": trials, "H1": spec.H1, "H2": spec.H2}
        med_onset = float(np.nanmedian(onsets)) if np.mean(np.isfinite(onsets)) >= 0.5 else float("nan")
        has_onset = bool(np.mean(np.isfinite(onsets)) >= 0.5) and _median(end_margin) <= 0
        verdicts.append(Verdict(f"{name}-onset", params, {"median_onset": med_onset, "median_end_margin": _median(end_margin)},
                                0.0, has_onset))
        worst = float(np.max(excess))
        verdicts.append(Verdict(f"{name}-comparison", params, worst, rel_tol, worst <= rel_tol))
        worst_phi = float(np.max(phi_excess))
        verdicts.append(Verdict(f"{name}-fundamental", params, worst_phi, rel_tol, worst_phi <= rel_tol))
        tables.append(
            Table("eigs", ["t", "lambda_max", "minus_Lt", "m1", "m2", "bound1", "bound2"],
                  np.column_stack([t + window.t0, lam_max[:, 0], -L * t, m[0, :, 0], m[0, :, 1], bound[0, :, 0], bound[0, :, 1]]),
                  kappa)
        )
        tables.append(Table("onsets", ["trial", "onset", "end_margin", "excess", "fundamental_excess"],
                            np.column_stack([np.arange(trials), np.nan_to_num(onsets, nan=-1.0), end_margin, excess,
                                             phi_excess]), kappa))
    return ExperimentResult(name, verdicts, tables)


def _sweep_core(spec: SystemSpec, window: TimeGrid, kappas, seed: int, trials: int, threads: int, burn_fraction: float):
    fous1, fous2 = _fous(spec, seed, trials, window)
    state0 = spec.state0()
    cfg0 = spec.coupled(kappas[0])
    i = int(round(burn_fraction * window.n))
    o1 = np.stack([p.restrict(window).values for p in fous1])[:, :, None]
    o2 = np.stack([p.restrict(window).values for p in fous2])[:, :, None]

    W = _chunked(lambda sl: integrate_averaged_batch(cfg0, fous1[sl], fous2[sl], 0.5 * (state0.u + state0.v), window),
                 trials, threads)
    x_ref, y_ref = cfg0.coeffs1.inverse(W, o1), cfg0.coeffs2.inverse(W, o2)
    out = {}
    for kappa in kappas:
        cfg = spec.coupled(kappa)
        U, V = _chunked(lambda sl: integrate_coupled_batch(cfg, fous1[sl], fous2[sl], state0, window), trials, threads)
        gap = np.sum((U - V) ** 2, axis=-1)
        ref = np.sqrt(np.sum((0.5 * (U + V) - W)[:, i:] ** 2, axis=-1)).max(axis=1)
        x, y = cfg.coeffs1.inverse(U, o1), cfg.coeffs2.inverse(V, o2)
        resid = np.maximum(
            np.sqrt(np.sum((x - x_ref)[:, i:] ** 2, axis=-1)).max(axis=1),
            np.sqrt(np.sum((y - y_ref)[:, i:] ** 2, axis=-1)).max(axis=1),
        )
        out[kappa] = {
            "steady_gap": steady_gap(gap, burn_fraction, window.h),
            "reference_distance": ref,
            "residual": resid,
            "gap0": gap[0],
            "wk0": 0.5 * (U[0] + V[0]),
        }
    return out, W[0]


def _gap_verdicts(name, kappas, core, params):
    med = np.array([_median(core[k]["steady_gap"]) for k in kappas])
    mono = bool(np.all(np.diff(med) <= 0))
    drop_needed = kappas[-1] / kappas[0] >= 100
    drop_ok = (med[-1] <= med[0] / 10) if drop_needed else True
    return [
        Verdict(f"{name}-gap-monotone", params, med.tolist(), "nonincreasing", mono),
        Verdict(f"{name}-gap-drop", params, float(med[-1] / med[0]) if med[0] > 0 else 0.0, 0.1, bool(drop_ok)),
    ]


def _ref_verdict(name, kappas, core, params, key="reference_distance", label="averaged"):
    med = np.array([_median(core[k][key]) for k in kappas])
    return Verdict(f"{name}-{label}-decreasing", params, med.tolist(), "strict", bool(np.all(np.diff(med) < 0)))


def _sweep_tables(kappas, core, window, W0):
    tables = []
    for k in kappas:
        c = core[k]
        rows = np.column_stack([window.times, c["gap0"], c["wk0"], W0])
        d = W0.shape[-1]
        header = ["t", "gap"] + [f"wk{j}" for j in range(d)] + [f"w{j}" for j in range(d)]
        tables.append(Table("trajectory", header, rows, k))
    trials = len(core[kappas[0]]["steady_gap"])
    summary = []
    for k in kappas:
        c = core[k]
        summary += [[k, j, c["steady_gap"][j], c["reference_distance"][j], c["residual"][j]] for j in range(trials)]
    tables.append(Table("summary", ["kappa", "trial", "steady_gap", "reference_distance", "reconstruction_residual"],
                        np.array(summary)))
    return tables


def _sweep_params(spec, window, kappas, trials, burn_fraction):
    return {"kappas": list(kappas), "T": window.t1 - window.t0, "h": window.h, "trials": trials,
            "burn_fraction": burn_fraction, "H1": spec.H1, "H2": spec.H2}


def _check_kappas(kappas):
    if not kappas or any(k <= 0 for k in kappas) or list(kappas) != sorted(set(kappas)):
        raise InvalidParameter("kappas must be positive and strictly increasing")


def run_sync_sweep(spec: SystemSpec, window: TimeGrid, kappas, seed: int, trials: int, threads: int = 1,
                   burn_fraction: float = 0.5):
    _check_kappas(kappas)
    core, W0 = _sweep_core(spec, window, kappas, seed, trials, threads, burn_fraction)
    params = _sweep_params(spec, window, kappas, trials, burn_fraction)
    return ExperimentResult("sync-sweep", _gap_verdicts("sync", kappas, core, params), _sweep_tables(kappas, core, window, W0))


def run_averaged_sweep(spec: SystemSpec, window: TimeGrid, kappas, seed: int, trials: int, threads: int = 1,
                       burn_fraction: float = 0.5):
    _check_kappas(kappas)
    core, W0 = _sweep_core(spec, window, kappas, seed, trials, threads, burn_fraction)
    params = _sweep_params(spec, window, kappas, trials, burn_fraction)
    return ExperimentResult("averaged-sweep", [_ref_verdict("averaged", kappas, core, params)],
                            _sweep_tables(kappas, core, window, W0))


def run_case(spec: SystemSpec, window: TimeGrid, kappas, seed: int, trials: int, case: str, threads: int = 1,
             burn_fraction: float = 0.5, rel_tol: float = 1e-6):
    """Eigenvalue/comparison checks, gap sweep and averaged limit under one of the
    special configurations, plus the reconstruction residual in (X, Y)."""
    _check_kappas(kappas)
    if case == "multiplicative":
        if spec.a2 == 0 or any(spec.b1) or any(spec.b2):
            raise InvalidParameter("multiplicative case needs b1 = b2 = 0 and a2 != 0")
    elif case == "mixed":
        if spec.a2 != 0:
            raise InvalidParameter("mixed case needs a2 = 0 (additive second channel)")
    else:
        raise InvalidParameter(f"unknown case {case!r}")
    name = f"case-{case}"
    eigs = run_coupled_eigs(spec, window, kappas, seed, trials, threads, rel_tol, name=name)
    core, W0 = _sweep_core(spec, window, kappas, seed, trials, threads, burn_fraction)
    params = _sweep_params(spec, window, kappas, trials, burn_fraction)
    verdicts = eigs.verdicts + _gap_verdicts(name, kappas, core, params) + [
        _ref_verdict(name, kappas, core, params),
        _ref_verdict(name, kappas, core, params, key="residual", label="reconstruction"),
    ]
    return ExperimentResult(name, verdicts, eigs.tables + _sweep_tables(kappas, core, window, W0))


def run_coupling_flow(kappa: float = 10.0, h: float = 2**-7, steps: int = 64, tolerance: float = 1e-12):
    """Coupling-only flow: the difference must shrink by e^{-2 kappa h} per step."""
    from .integrate import _coupling_half

    u, v = np.array([1.0, -0.5]), np.array([-2.0, 0.25])
    decay = math.exp(-kappa * h)
    d0 = u - v
    errs = []
    for k in range(1, steps + 1):
        u, v = _coupling_half(u, v, decay)
        u, v = _coupling_half(u, v, decay)
        errs.append(float(np.max(np.abs((u - v) - d0 * math.exp(-2 * kappa * h * k)))))
    worst = max(errs)
    return Verdict("coupling-flow", {"kappa": kappa, "h": h, "steps": steps}, worst, tolerance, worst <= tolerance)
