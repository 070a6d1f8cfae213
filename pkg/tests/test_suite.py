import json

import numpy as np
import pytest

from fracsync.errors import InvalidParameter
from fracsync.experiments import (
    averaged_limit_sweep,
    case_mixed_noise,
    contraction_test,
    coupled_contraction_eigs,
    pullback_attractor_estimate,
    sync_gap_sweep,
)
from fracsync.paths import TimeGrid
from fracsync import suite

WINDOW = TimeGrid(0.0, 4.0, 512)
KAPPAS = [1.0, 10.0, 100.0]


def summary(result):
    (table,) = [t for t in result.tables if t.name == "summary"]
    return table.rows


class TestSystemSpec:
    def test_defaults(self):
        s = suite.SystemSpec()
        assert s.dim == 2
        c = s.coupled(5.0)
        assert c.kappa == 5.0 and c.dissipativity_L == 1.0 and not c.mixed
        assert np.array_equal(s.state0().u, [2.0, 2.0])
        json.dumps(s.to_json())

    def test_additive_second_channel(self):
        assert suite.SystemSpec(a2=0.0).coupled().mixed

    def test_mismatched_lengths(self):
        with pytest.raises(InvalidParameter):
            suite.SystemSpec(b1=(0.0,), b2=(0.0, 0.0))
        with pytest.raises(InvalidParameter):
            suite.SystemSpec(c_f=(1.0, 2.0, 3.0)).f

    def test_trial_streams(self):
        a = suite.fou_for_trial(0.75, 9, 0, WINDOW)
        b = suite.fou_for_trial(0.75, 9, 0, WINDOW)
        c = suite.fou_for_trial(0.75, 9, 1, WINDOW)
        assert np.array_equal(a.values, b.values)
        assert not np.array_equal(a.values, c.values)


class TestBatchedEqualsSingle:
    spec = suite.SystemSpec()

    def fous(self, k, seed):
        return (suite.fou_for_trial(0.75, seed, 2 * k, WINDOW), suite.fou_for_trial(0.75, seed, 2 * k + 1, WINDOW))

    def test_sync_sweep(self):
        res = suite.run_sync_sweep(self.spec, WINDOW, KAPPAS, 17, 3)
        rows = summary(res)
        for k in range(3):
            o1, o2 = self.fous(k, 17)
            single = sync_gap_sweep(self.spec.coupled(1.0), KAPPAS, o1, o2, WINDOW, self.spec.state0())
            avg = averaged_limit_sweep(self.spec.coupled(1.0), KAPPAS, o1, o2, WINDOW, self.spec.state0())
            for j, kappa in enumerate(KAPPAS):
                row = rows[(rows[:, 0] == kappa) & (rows[:, 1] == k)][0]
                assert row[2] == pytest.approx(single[j].extras["steady_gap"], rel=1e-12)
                assert row[3] == pytest.approx(avg[j].reference_distance, rel=1e-12)

    def test_mixed_case(self):
        spec = suite.SystemSpec(a2=0.0)
        res = suite.run_case(spec, WINDOW, KAPPAS, 18, 2, "mixed")
        rows = summary(res)
        for k in range(2):
            o1, o2 = self.fous(k, 18)
            single = case_mixed_noise(spec.coupled(1.0), KAPPAS, o1, o2, WINDOW, spec.state0())
            for j, kappa in enumerate(KAPPAS):
                row = rows[(rows[:, 0] == kappa) & (rows[:, 1] == k)][0]
                assert row[4] == pytest.approx(single[j].extras["reconstruction_residual"], rel=1e-12)

    def test_coupled_eigs(self):
        res = suite.run_coupled_eigs(self.spec, WINDOW, [10.0], 19, 2)
        (onsets,) = [t for t in res.tables if t.name == "onsets"]
        o1, o2 = self.fous(1, 19)
        pair = suite._pair_states(2)
        single = coupled_contraction_eigs(self.spec.coupled(10.0), o1, o2, WINDOW, pair)
        assert onsets.rows[1, 3] == pytest.approx(single.extras["comparison_excess"], rel=1e-9, abs=1e-15)
        assert onsets.rows[1, 4] == pytest.approx(single.extras["fundamental_excess"], rel=1e-9, abs=1e-15)

    def test_contraction(self):
        res = suite.run_contraction(self.spec, WINDOW, 20, 2)
        (slopes,) = [t for t in res.tables if t.name == "slopes"]
        (fous,) = suite._fous(self.spec, 20, 2, WINDOW, channels=(0,))
        pairs = suite._contraction_pairs(2)
        single = contraction_test(self.spec.f, self.spec.coeffs1, fous[1], [(pairs[0], pairs[1]), (pairs[2], pairs[3])],
                                  WINDOW)
        assert slopes.rows[1, 1] == pytest.approx(single.fitted_rate, rel=1e-9)
        assert slopes.rows[1, 2] == pytest.approx(max(single.extras["chord_rates"]), rel=1e-9)

    def test_pullback(self):
        res = suite.run_pullback(self.spec, 1 / 32, 21, 2, (-2.0, -4.0), 5.0)
        full = TimeGrid.from_step(-4.0, 0.0, 1 / 32)
        (fous,) = suite._fous(self.spec, 21, 2, full, channels=(0,))
        single = pullback_attractor_estimate(self.spec.f, self.spec.coeffs1, fous[0], [-2.0, -4.0], 5.0)
        assert np.allclose(res.tables[0].rows[0, 1:], single.diameters, rtol=1e-12)


class TestThreads:
    @pytest.mark.parametrize("threads", [2, 3, 8])
    def test_thread_count_invariance(self, threads):
        spec = suite.SystemSpec()
        a = suite.run_sync_sweep(spec, WINDOW, KAPPAS, 22, 5, threads=1)
        b = suite.run_sync_sweep(spec, WINDOW, KAPPAS, 22, 5, threads=threads)
        for ta, tb in zip(a.tables, b.tables):
            assert np.array_equal(ta.rows, tb.rows)
        assert [v.to_json() for v in a.verdicts] == [v.to_json() for v in b.verdicts]


class TestDrivers:
    def test_coupling_flow(self):
        v = suite.run_coupling_flow()
        assert v.passed and v.statistic <= 1e-12

    def test_kappas_checked(self):
        with pytest.raises(InvalidParameter):
            suite.run_sync_sweep(suite.SystemSpec(), WINDOW, [10.0, 1.0], 1, 1)
        with pytest.raises(InvalidParameter):
            suite.run_case(suite.SystemSpec(), WINDOW, [1.0], 1, 1, "other")
        with pytest.raises(InvalidParameter):
            suite.run_case(suite.SystemSpec(), WINDOW, [1.0], 1, 1, "multiplicative")

    def test_verdict_shape(self):
        res = suite.run_fbm_law((0.75,), 16, 200, seed=3)
        (v,) = res.verdicts
        assert set(v.to_json()) == {"experiment", "params", "statistic", "tolerance", "pass"}
        assert np.isfinite(v.statistic)
        assert res.tables[0].rows.shape == (len(suite.PROBE_PAIRS), 5)
