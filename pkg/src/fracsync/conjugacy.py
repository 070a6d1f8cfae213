"""Numerical checks of the chain rule and of the SDE <-> RDE conjugacy.

Both checks are pathwise: one noise realization, one fOU path, and solvers
run on dyadic refinements of the same lattice so that each scheme's own
refinement gap calibrates the tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .drifts import DriftSpec
from .errors import GridMismatch, InvalidParameter
from .fou import FouConfig, fou_stationary
from .integrate import _heun, _vec0
from .paths import SamplePath, TimeGrid
from .transform import LinearNoiseCoeffs
from .young import young_euler_sde

__all__ = [
    "ChainRuleReport",
    "EquivalenceReport",
    "chain_rule_residual",
    "chain_rule_refinement",
    "solve_via_rde",
    "equivalence_harness",
]


@dataclass(frozen=True)
class ChainRuleReport:
    sup_defect: float
    defect: np.ndarray


@dataclass(frozen=True)
class RefinementReport:
    steps: np.ndarray
    defects: np.ndarray
    order: float


def _sup(x: np.ndarray) -> float:
    return float(np.max(np.abs(x)))


def chain_rule_residual(
    x_path: SamplePath, o_path: SamplePath, coeffs: LinearNoiseCoeffs, drift: DriftSpec
) -> ChainRuleReport:
    """Defect U_t - U_0 - int_0^t F(U_s, O_s) ds along U = T(X), with the time
    integral taken by the trapezoid rule on the shared lattice."""
    if x_path.grid != o_path.grid:
        raise GridMismatch("x_path and o_path must share a grid")
    o = o_path.values
    X = x_path.values if x_path.values.ndim > 1 else x_path.values[:, None]
    U = coeffs.forward(X, o[:, None])
    F = coeffs.field(U, o[:, None], drift)
    integral = scipy.integrate.cumulative_trapezoid(F, dx=x_path.grid.h, axis=0, initial=0.0)
    defect = U - U[0] - integral
    return ChainRuleReport(_sup(defect), defect)


def _halved(window: TimeGrid, j: int) -> TimeGrid:
    if window.n % 2**j:
        raise InvalidParameter(f"window with n={window.n} cannot be coarsened {j} times")
    return TimeGrid(window.t0, window.t1, window.n // 2**j)


def _order(steps: np.ndarray, values: np.ndarray) -> float:
    if np.any(values <= 0):
        return float("inf")
    return float(np.polyfit(np.log(steps), np.log(values), 1)[0])


def chain_rule_refinement(
    drift: DriftSpec,
    coeffs: LinearNoiseCoeffs,
    noise: SamplePath,
    o_path: SamplePath,
    x0,
    window: TimeGrid,
    levels: int = 3,
) -> RefinementReport:
    """Chain-rule defect of the Young-Euler solution at steps h, 2h, ..., 2^{levels-1} h."""
    steps, defects = [], []
    for j in range(levels):
        w = _halved(window, j)
        x = young_euler_sde(drift, coeffs.a, coeffs.b, noise, x0, w)
        defects.append(chain_rule_residual(x, o_path.restrict(w), coeffs, drift).sup_defect)
        steps.append(w.h)
    steps_a, defects_a = np.array(steps), np.array(defects)
    return RefinementReport(steps_a, defects_a, _order(steps_a, defects_a))


def _euler(field, os, u0, h):
    n = os[0].shape[0] - 1
    out = np.empty((n + 1,) + u0.shape)
    out[0] = u = u0
    for k in range(n):
        u = u + h * field(u, os[0][k])
        out[k + 1] = u
    return out


def solve_via_rde(
    drift: DriftSpec,
    coeffs: LinearNoiseCoeffs,
    fou: SamplePath,
    x0,
    window: TimeGrid,
    scheme: str = "heun",
) -> SamplePath:
    """Solve the SDE through the conjugacy: transform x0, integrate the RDE, map back."""
    o = fou.restrict(window).values
    u0 = coeffs.forward(_vec0(x0), o[0])
    field = lambda u, ot: coeffs.field(u, ot, drift)
    if scheme == "heun":
        U = _heun(field, (o,), u0, window.h)
    elif scheme == "euler":
        U = _euler(field, (o,), u0, window.h)
    else:
        raise InvalidParameter(f"unknown scheme {scheme!r}")
    return SamplePath(window, coeffs.inverse(U, o[:, None]), {"scheme": scheme})


@dataclass(frozen=True)
class EquivalenceReport:
    sup_distance: float
    envelope: float
    steps: np.ndarray
    distances: np.ndarray
    refinement_order: float
    tolerance_factor: float

    @property
    def passed(self) -> bool:
        return self.sup_distance <= self.tolerance_factor * self.envelope

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.distances) >= 0))

    def to_json(self) -> dict:
        return {
            "sup_distance": self.sup_distance,
            "envelope": self.envelope,
            "refinement_order": self.refinement_order,
            "pass": self.passed,
        }


def equivalence_harness(
    drift: DriftSpec,
    coeffs: LinearNoiseCoeffs,
    noise: SamplePath,
    x0,
    window: TimeGrid,
    fou: SamplePath | None = None,
    fou_cfg: FouConfig = FouConfig(),
    levels: int = 3,
    tolerance_factor: float = 3.0,
    rde_scheme: str = "heun",
) -> EquivalenceReport:
    """Compare the direct Young-Euler solve with the transform + RDE solve.

    The envelope is the direct scheme's own gap sup|X_h - X_{h/2}|, so the noise
    lattice must resolve h/2. Distances are also reported at 2h, 4h, ... to
    expose the refinement decay.
    """
    fine = TimeGrid(window.t0, window.t1, 2 * window.n)
    if fou is None:
        fou = fou_stationary(noise, fou_cfg, fine)
    x_fine = young_euler_sde(drift, coeffs.a, coeffs.b, noise, x0, fine)
    steps, dists, envelope = [], [], 0.0
    for j in range(levels):
        w = _halved(window, j)
        direct = young_euler_sde(drift, coeffs.a, coeffs.b, noise, x0, w)
        via = solve_via_rde(drift, coeffs, fou, x0, w, rde_scheme)
        dists.append(_sup(direct.values - via.values))
        steps.append(w.h)
        if j == 0:
            envelope = _sup(direct.values - x_fine.restrict(w).values)
    steps_a, dists_a = np.array(steps), np.array(dists)
    return EquivalenceReport(
        dists_a[0], envelope, steps_a, dists_a, _order(steps_a, dists_a), tolerance_factor
    )
