import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracsync.drifts import affine, linear
from fracsync.errors import GridMismatch, RegularityViolation, StepExplosion
from fracsync.paths import RngSeed, SamplePath, TimeGrid, sample_fbm
from fracsync.young import (
    YoungResult,
    young_euler_batch,
    young_euler_sde,
    young_integral,
    young_refinement,
)

from conftest import constant_path

UNIT = TimeGrid(0.0, 1.0, 1024)


def fbm(seed, stream=0, grid=UNIT, H=0.75):
    return sample_fbm(grid, H, RngSeed(seed, stream))


class TestYoungIntegral:
    @given(st.floats(-5, 5), st.integers(0, 50))
    def test_constant_integrand(self, c, k):
        X = fbm(1, k)
        r = young_integral(constant_path(UNIT, c), X, UNIT, 0.7, 0.7)
        assert r.value == pytest.approx(c * (X.values[-1] - X.values[0]), abs=1e-12)

    def test_riemann_case(self):
        t = SamplePath(UNIT, UNIT.times)
        r = young_integral(t, t, UNIT, 1.0, 1.0)
        # left sum of t dt is (1 - h) / 2
        assert r.value == pytest.approx(0.5 * (1 - UNIT.h), abs=1e-12)
        assert r.value == pytest.approx(0.5, abs=UNIT.h)

    def test_regularity_violation(self):
        X = fbm(2)
        with pytest.raises(RegularityViolation):
            young_integral(X, X, UNIT, 0.5, 0.5)

    def test_grid_mismatch(self):
        X = fbm(2)
        with pytest.raises(GridMismatch):
            young_integral(X, X, TimeGrid(0.0, 1.0, 1000), 0.7, 0.7)

    def test_json(self):
        X = fbm(3)
        r = young_integral(X, X, UNIT, 0.7, 0.7)
        assert set(r.to_json()) == {"value", "refinement_gap", "margin"}
        assert r.alpha_beta_margin == pytest.approx(0.4)

    @given(st.floats(-3, 3), st.floats(-3, 3))
    def test_linear_in_integrand(self, a, b):
        X, Y1, Y2 = fbm(4), fbm(4, 1), fbm(4, 2)
        combo = SamplePath(UNIT, a * Y1.values + b * Y2.values)
        lhs = young_integral(combo, X, UNIT, 0.7, 0.7).value
        rhs = a * young_integral(Y1, X, UNIT, 0.7, 0.7).value + b * young_integral(Y2, X, UNIT, 0.7, 0.7).value
        assert lhs == pytest.approx(rhs, abs=1e-12)

    def test_additive_over_windows(self):
        X, Y = fbm(5), fbm(5, 1)
        whole = young_integral(Y, X, UNIT, 0.7, 0.7).value
        left = young_integral(Y, X, TimeGrid(0.0, 0.5, 512), 0.7, 0.7).value
        right = young_integral(Y, X, TimeGrid(0.5, 1.0, 512), 0.7, 0.7).value
        assert whole == pytest.approx(left + right, abs=1e-12)

    def test_smooth_integrator_matches_riemann(self):
        errs = []
        for n in (256, 1024, 4096):
            g = TimeGrid(0.0, 1.0, n)
            Y = fbm(6, grid=g)
            X = SamplePath(g, np.sin(3 * g.times))
            lhs = young_integral(Y, X, g, 0.7, 1.0).value
            rhs = np.trapezoid(Y.values * 3 * np.cos(3 * g.times), dx=g.h)
            errs.append(abs(lhs - rhs))
        assert errs[-1] < 4 * (1.0 / 256) and errs[-1] < errs[0]

    def test_chain_rule_error_vanishes(self):
        errs = []
        for n in (2**8, 2**10, 2**12):
            g = TimeGrid(0.0, 1.0, n)
            X = fbm(7, grid=g)
            v = young_integral(X, X, g, 0.7, 0.7).value
            errs.append(abs(v - 0.5 * X.values[-1] ** 2))
        assert errs[0] > errs[1] > errs[2]

    def test_refinement_order_median(self):
        g = TimeGrid(0.0, 1.0, 4096)
        orders = [young_refinement(fbm(8, k, g), fbm(8, k, g), g).order for k in range(100)]
        assert np.median(orders) >= 2 * 0.7 - 1


class TestYoungEuler:
    def test_pure_additive_noise_is_exact(self):
        B = fbm(9)
        x0 = np.array([0.3, -1.0])
        x = young_euler_sde(lambda x: 0 * x, 0.0, [1.0, 0.0], B, x0, UNIT)
        expected = x0 + np.outer(B.values - B.values[0], [1.0, 0.0])
        assert np.allclose(x.values, expected, atol=1e-12)

    def test_zero_noise_is_forward_euler(self):
        x = young_euler_sde(linear(1.0), 0.0, 0.0, constant_path(UNIT, 0.0), [2.0], UNIT)
        k = np.arange(UNIT.n + 1)
        assert np.allclose(x.values[:, 0], 2.0 * (1 - UNIT.h) ** k, rtol=1e-12)
        assert x.values[-1, 0] == pytest.approx(2.0 * np.exp(-1.0), rel=1e-3)

    def test_refinement_gap_shrinks(self):
        ratios = []
        for k in range(30):
            g3 = TimeGrid(0.0, 1.0, 2**14)
            B = fbm(10, k, g3)
            sols = [young_euler_sde(affine(1.0), 1.0, 0.0, B, [0.5], TimeGrid(0.0, 1.0, 2**j)).values[:, 0]
                    for j in (12, 13, 14)]
            gap1 = np.max(np.abs(sols[0] - sols[1][::2]))
            gap2 = np.max(np.abs(sols[1] - sols[2][::2]))
            ratios.append(gap1 / gap2)
        assert np.median(ratios) >= 2 ** (2 * 0.7 - 1)

    def test_explosion(self):
        with pytest.raises(StepExplosion):
            young_euler_sde(lambda x: 10 * x, 0.0, 0.0, constant_path(TimeGrid(0, 20, 20), 0.0), [1.0],
                            TimeGrid(0, 20, 20))

    def test_batch_matches_single(self):
        paths = [fbm(11, k) for k in range(3)]
        batch = young_euler_batch(affine(1.0), 1.0, [0.2], paths, [0.5], UNIT)
        for k, p in enumerate(paths):
            single = young_euler_sde(affine(1.0), 1.0, [0.2], p, [0.5], UNIT).values
            assert np.array_equal(batch[k], single)
