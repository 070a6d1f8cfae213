import numpy as np
import pytest
from hypothesis import given, strategies as st

from fracsync.conjugacy import solve_via_rde
from fracsync.drifts import DriftSpec, affine, linear
from fracsync.errors import InvalidParameter, StepExplosion
from fracsync.integrate import (
    CoupledConfig,
    CoupledState,
    coupled_sde_drift,
    integrate_averaged,
    integrate_averaged_batch,
    integrate_coupled,
    integrate_coupled_batch,
    integrate_rde,
    integrate_rde_batch,
    reconstruct_coupled_sde,
)
from fracsync.paths import SamplePath, TimeGrid
from fracsync.transform import AdditiveNoise, LinearNoiseCoeffs

from conftest import constant_path, fou_path

ZERO = DriftSpec(lambda x: 0 * x, 1.0, 1.0, 1.0, "zero")


def cfg(kappa=1.0, f=None, g=None, a1=0.5, a2=0.5, b1=(0.5, 0.0), b2=(0.0, 0.5)):
    c2 = AdditiveNoise(b2) if a2 == 0 else LinearNoiseCoeffs(a2, b2)
    return CoupledConfig(LinearNoiseCoeffs(a1, b1), c2, f or affine([1.0, 1.0]), g or affine([-1.0, -1.0]),
                         0.75, 0.75, kappa)


class TestSingle:
    def test_zero_noise_decay_second_order(self):
        errs = []
        for n in (64, 128, 256):
            g = TimeGrid(0.0, 1.0, n)
            u = integrate_rde(linear(1.0), LinearNoiseCoeffs(1.0, [0.0]), constant_path(g, 0.0), [1.0], g)
            errs.append(abs(u.values[-1, 0] - np.exp(-1.0)))
            assert errs[-1] < g.h**2
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)

    @pytest.mark.parametrize("c", [-1.0, 0.3, 2.0])
    def test_constant_noise_oracle(self, c):
        g = TimeGrid(0.0, 1.0, 1024)
        u = integrate_rde(ZERO, LinearNoiseCoeffs(0.7, [0.0]), constant_path(g, c), [1.5], g)
        assert np.allclose(u.values[:, 0], 1.5 * np.exp(0.7 * c * g.times), rtol=1e-6)

    def test_heun_order_smooth_noise(self):
        steps, errs = [], []
        for n in (32, 64, 128, 256):
            g = TimeGrid(0.0, 2.0, n)
            o = SamplePath(g, np.sin(g.times))
            u = integrate_rde(linear(1.0), LinearNoiseCoeffs(1.0, [0.0]), o, [1.0], g)
            exact = np.exp(-g.times + 1.0 - np.cos(g.times))
            steps.append(g.h)
            errs.append(np.max(np.abs(u.values[:, 0] - exact)))
        slope = np.polyfit(np.log(steps), np.log(errs), 1)[0]
        assert slope == pytest.approx(2.0, abs=0.2)

    def test_cloud_and_batch(self, fou_pair):
        w, o1, o2 = fou_pair
        c = LinearNoiseCoeffs(0.5, [0.5, 0.0])
        d = affine([1.0, 1.0])
        cloud = integrate_rde(d, c, o1, [[1.0, 0.0], [0.0, 1.0]], w).values
        single = integrate_rde(d, c, o1, [1.0, 0.0], w).values
        assert np.array_equal(cloud[:, 0], single)
        batch = integrate_rde_batch(d, c, [o1, o2], [1.0, 0.0], w)
        assert np.array_equal(batch[0], single)
        assert np.array_equal(batch[1], integrate_rde(d, c, o2, [1.0, 0.0], w).values)

    def test_explosion(self):
        g = TimeGrid(0.0, 50.0, 50)
        grow = DriftSpec(lambda x: 5 * x, 5.0, 1.0, 1.0, "grow")
        with pytest.raises(StepExplosion):
            integrate_rde(grow, LinearNoiseCoeffs(1.0, [0.0]), constant_path(g, 0.0), [1.0], g)


class TestCoupled:
    def test_config_validation(self):
        with pytest.raises(InvalidParameter):
            cfg(kappa=-1.0)
        with pytest.raises(InvalidParameter):
            CoupledConfig(LinearNoiseCoeffs(1.0, [0.0]), LinearNoiseCoeffs(1.0, [0.0, 0.0]), linear(), linear(),
                          0.75, 0.75)
        with pytest.raises(InvalidParameter):
            CoupledState([1.0], [1.0, 2.0])
        with pytest.raises(InvalidParameter):
            CoupledState([np.nan], [1.0])

    def test_zero_kappa_is_two_independent_solves(self, fou_pair):
        w, o1, o2 = fou_pair
        c = cfg(kappa=0.0)
        traj = integrate_coupled(c, o1, o2, CoupledState([2.0, 2.0], [-2.0, -2.0]), w)
        assert np.array_equal(traj.u, integrate_rde(c.drift_f, c.coeffs1, o1, [2.0, 2.0], w).values)
        assert np.array_equal(traj.v, integrate_rde(c.drift_g, c.coeffs2, o2, [-2.0, -2.0], w).values)

    @pytest.mark.parametrize("kappa", [0.0, 1.0, 100.0])
    def test_symmetric_null(self, fou_pair, kappa):
        w, o1, _ = fou_pair
        c = cfg(kappa, g=affine([1.0, 1.0]), b2=(0.5, 0.0))
        traj = integrate_coupled(c, o1, o1, CoupledState([1.0, -1.0], [1.0, -1.0]), w)
        assert np.array_equal(traj.u, traj.v)
        assert np.all(traj.gap() == 0.0)

    @pytest.mark.parametrize("kappa", [0.5, 10.0, 1e4])
    def test_exact_coupling_flow(self, kappa):
        g = TimeGrid(0.0, 1.0, 128)
        c = CoupledConfig(LinearNoiseCoeffs(1.0, [0.0, 0.0]), LinearNoiseCoeffs(1.0, [0.0, 0.0]), ZERO, ZERO,
                          0.75, 0.75, kappa)
        z = constant_path(g, 0.0)
        traj = integrate_coupled(c, z, z, CoupledState([1.5, 0.0], [0.5, 0.0]), g)
        diff = traj.u - traj.v
        assert np.allclose(diff[:, 0], np.exp(-2 * kappa * g.times), atol=1e-12, rtol=1e-12)
        assert np.all(diff[:, 1] == 0.0)
        assert np.allclose(traj.u + traj.v, [2.0, 0.0], atol=1e-12)

    @given(st.floats(0.0, 50.0))
    def test_mean_and_gap(self, kappa):
        g = TimeGrid(0.0, 1.0, 16)
        c = cfg(kappa)
        z = constant_path(g, 0.3)
        traj = integrate_coupled(c, z, z, CoupledState([1.0, 0.0], [0.0, 1.0]), g)
        assert traj.gap()[0] == pytest.approx(2.0)
        assert np.allclose(traj.mean(), 0.5 * (traj.u + traj.v))

    def test_batch_matches_single(self, fou_pair):
        w, o1, o2 = fou_pair
        c = cfg(10.0)
        s0 = CoupledState([2.0, 2.0], [-2.0, -2.0])
        U, V = integrate_coupled_batch(c, [o1, o2], [o2, o1], s0, w)
        t0 = integrate_coupled(c, o1, o2, s0, w)
        t1 = integrate_coupled(c, o2, o1, s0, w)
        assert np.array_equal(U[0], t0.u) and np.array_equal(V[0], t0.v)
        assert np.array_equal(U[1], t1.u) and np.array_equal(V[1], t1.v)


class TestAveraged:
    def test_field_at_zero_noise(self):
        c = cfg()
        z = np.array([0.3, -1.2])
        assert np.allclose(c.averaged_field(z, 0.0, 0.0), 0.5 * (c.drift_f(z) + c.drift_g(z)))

    def test_reduces_to_single_system(self, fou_pair):
        w, o1, _ = fou_pair
        c = cfg(g=affine([1.0, 1.0]), b2=(0.5, 0.0))
        avg = integrate_averaged(c, o1, o1, [1.0, 2.0], w)
        single = integrate_rde(c.drift_f, c.coeffs1, o1, [1.0, 2.0], w)
        assert np.array_equal(avg.values, single.values)

    def test_linear_pair(self):
        g = TimeGrid(0.0, 2.0, 512)
        c = CoupledConfig(LinearNoiseCoeffs(1.0, [0.0]), LinearNoiseCoeffs(1.0, [0.0]), linear(1.0), linear(3.0),
                          0.75, 0.75, 1.0)
        z = constant_path(g, 0.0)
        w = integrate_averaged(c, z, z, [1.0], g)
        assert np.allclose(w.values[:, 0], np.exp(-2 * g.times), atol=4 * g.h**2)

    def test_batch(self, fou_pair):
        w, o1, o2 = fou_pair
        c = cfg()
        batch = integrate_averaged_batch(c, [o1, o2], [o2, o1], [0.0, 0.0], w)
        assert np.array_equal(batch[1], integrate_averaged(c, o2, o1, [0.0, 0.0], w).values)


class TestReconstruct:
    def test_zero_kappa_matches_uncoupled_solves(self, fou_pair):
        w, o1, o2 = fou_pair
        c = cfg(kappa=0.0)
        x0, y0 = np.array([1.0, 0.5]), np.array([-1.0, 0.0])
        s0 = CoupledState(c.coeffs1.forward(x0, o1.values[0]), c.coeffs2.forward(y0, o2.values[0]))
        rec = reconstruct_coupled_sde(c, o1, o2, s0, w)
        assert np.allclose(rec.x, solve_via_rde(c.drift_f, c.coeffs1, o1, x0, w).values, atol=1e-12)
        assert np.allclose(rec.y, solve_via_rde(c.drift_g, c.coeffs2, o2, y0, w).values, atol=1e-12)

    def test_zero_noise_no_offsets(self):
        g = TimeGrid(0.0, 1.0, 64)
        c = cfg(2.0, b1=(0.0, 0.0), b2=(0.0, 0.0))
        z = constant_path(g, 0.0)
        s0 = CoupledState([1.0, 0.0], [0.0, 1.0])
        rec = reconstruct_coupled_sde(c, z, z, s0, g)
        assert np.all(rec.eta == 0.0)
        traj = integrate_coupled(c, z, z, s0, g)
        assert np.array_equal(rec.x, traj.u) and np.array_equal(rec.y, traj.v)
        assert np.array_equal(rec.z_ref, rec.x_ref)

    def test_drift_equal_exponents_hand_value(self):
        c = cfg(3.0, a1=0.5, a2=0.5, b1=(1.0, 0.0), b2=(0.0, 2.0))
        x, y, o = np.array([1.0, 2.0]), np.array([0.5, -1.0]), 0.4
        dx, dy = coupled_sde_drift(c, x, y, o, o)
        e1 = np.exp(0.5 * o)
        offset = 3.0 * (np.array([0.0, 4.0]) - np.array([2.0, 0.0])) * (1.0 - e1)
        assert np.allclose(dx, c.drift_f(x) + 3.0 * (y - x) + offset, atol=1e-14)
        assert np.allclose(dy, c.drift_g(y) + 3.0 * (x - y) - offset, atol=1e-14)

    def test_drift_mixed_zero_noise(self):
        c = cfg(2.0, a2=0.0, b2=(1.0, 0.0))
        x, y = np.array([1.0, 2.0]), np.array([0.5, -1.0])
        dx, dy = coupled_sde_drift(c, x, y, 0.0, 0.0)
        assert np.allclose(dx, c.drift_f(x) + 2.0 * (y - x))
        assert np.allclose(dy, c.drift_g(y) + 2.0 * (x - y))

    def test_reconstructed_pair_solves_coupled_sde(self):
        # With smooth O the SDEs become ODEs driven by dO; check the lattice residual.
        g = TimeGrid(0.0, 1.0, 4096)
        o = SamplePath(g, 0.3 * np.sin(3 * g.times))
        c = cfg(2.0, a1=0.5, a2=0.5)
        s0 = CoupledState([1.0, 0.0], [0.0, 1.0])
        rec = reconstruct_coupled_sde(c, o, o, s0, g)
        dO = np.diff(o.values)[:, None]
        mid = lambda a: 0.5 * (a[1:] + a[:-1])
        dx, dy = coupled_sde_drift(c, rec.x, rec.y, o.values[:, None], o.values[:, None])
        nu = 1.0
        # dO = -nu O dt + dB, so dB = dO + nu O dt
        dB = dO + nu * mid(o.values)[:, None] * g.h
        rx = np.diff(rec.x, axis=0) - mid(dx) * g.h - (c.coeffs1.a * mid(rec.x) + c.coeffs1.b) * dB
        ry = np.diff(rec.y, axis=0) - mid(dy) * g.h - (c.coeffs2.a * mid(rec.y) + c.coeffs2.b) * dB
        assert np.max(np.abs(rx)) < 1e-5 and np.max(np.abs(ry)) < 1e-5
