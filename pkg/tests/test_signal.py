import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermatph.geometry import TimeSeries
from fermatph.metric import DistanceMatrix, fermat_matrix
from fermatph.persistence import persistent_homology, rips_filtration
from fermatph.signal import (ChangePointScore, DelayParams, change_point_score,
                             delay_embed, detect_peaks, evolving_diagrams)


def philox(seed):
    return np.random.Generator(np.random.Philox(seed))


def series(values, dt=1.0):
    return TimeSeries(np.asarray(values, dtype=float), dt=dt)


def two_regime(n, period, noise, seed):
    t = np.arange(n)
    x = np.where(t < n // 2, np.sin(2 * np.pi * t / period),
                 np.sin(4 * np.pi * t / period))
    return series(x + noise * philox(seed).standard_normal(n))


class TestDelayEmbed:
    def test_small_example(self):
        cloud = delay_embed(series([1, 2, 3, 4, 5]), DelayParams(tau=1, dim=3))
        assert cloud.points.tolist() == [[1, 2, 3], [2, 3, 4], [3, 4, 5]]

    def test_constant_series(self):
        cloud = delay_embed(series([7.0] * 12), DelayParams(tau=2, dim=3))
        assert np.all(cloud.points == 7.0)
        assert len(np.unique(cloud.points, axis=0)) == 1

    def test_sine_quarter_period_circle(self):
        period = 400
        t = np.arange(4000)
        ts = series(np.sin(2 * np.pi * t / period))
        cloud = delay_embed(ts, DelayParams(tau=period // 4, dim=2))
        radii = np.linalg.norm(cloud.points, axis=1)
        assert radii.std() / radii.mean() < 0.01
        assert abs(radii.mean() - 1.0) < 0.01

    def test_too_short_series(self):
        with pytest.raises(ValueError, match="too short"):
            delay_embed(series([1, 2, 3]), DelayParams(tau=2, dim=3))

    def test_stride(self):
        cloud = delay_embed(series(np.arange(20.0)), DelayParams(tau=2, dim=2, stride=3))
        assert cloud.points[:, 0].tolist() == [0, 3, 6, 9, 12, 15]

    def test_param_validation(self):
        with pytest.raises(ValueError):
            DelayParams(tau=0, dim=3)
        with pytest.raises(ValueError):
            DelayParams(tau=1, dim=1)
        with pytest.raises(ValueError):
            DelayParams(tau=1, dim=2, stride=0)


@given(st.integers(10, 60), st.integers(1, 4), st.integers(2, 4), st.integers(1, 5))
def test_delay_embed_count_formula(n, tau, dim, stride):
    span = (dim - 1) * tau
    if n <= span:
        return
    ts = series(np.arange(float(n)))
    cloud = delay_embed(ts, DelayParams(tau=tau, dim=dim, stride=stride))
    assert cloud.n == (n - span - 1) // stride + 1


class TestEvolvingDiagrams:
    def test_last_prefix_is_full_diagram(self):
        ts = two_regime(80, 16, 0.01, 0)
        params = DelayParams(tau=4, dim=3)
        out = evolving_diagrams(ts, params, p=2.0, step=24, degree=1)
        n_emb = delay_embed(ts, params).n
        assert out[-1][0] == n_emb
        full = persistent_homology(
            rips_filtration(fermat_matrix(delay_embed(ts, params), 2.0), 1))
        assert out[-1][1].bars == full.bars

    def test_single_prefix_when_step_covers_all(self):
        ts = two_regime(60, 12, 0.0, 0)
        out = evolving_diagrams(ts, DelayParams(tau=3, dim=3), p=2.0, step=10_000, degree=1)
        assert len(out) == 1

    def test_prefix_equals_submatrix_reduction(self):
        ts = two_regime(70, 14, 0.02, 3)
        params = DelayParams(tau=3, dim=3)
        out = evolving_diagrams(ts, params, p=2.0, step=15, degree=1)
        full = fermat_matrix(delay_embed(ts, params), 2.0)
        for j, dgm in out:
            sub = DistanceMatrix(full.values[:j, :j].copy(), kind="fermat", p=2.0)
            direct = persistent_homology(rips_filtration(sub, 1))
            assert dgm.bars == direct.bars

    def test_recompute_flag_differs_from_inherited(self):
        # recomputed prefix metrics use only prefix points, so early
        # diagrams generally differ from the inherited-metric ones
        ts = two_regime(80, 16, 0.05, 1)
        params = DelayParams(tau=4, dim=3)
        inherited = evolving_diagrams(ts, params, p=2.0, step=20, degree=1)
        recomputed = evolving_diagrams(ts, params, p=2.0, step=20, degree=1,
                                       recompute=True)
        assert inherited[-1][1].bars == recomputed[-1][1].bars
        assert any(a[1].bars != b[1].bars for a, b in zip(inherited[:-1], recomputed[:-1]))


class TestChangePointScore:
    def test_identical_diagrams_zero(self):
        ts = series(np.sin(np.arange(200) * 0.3))
        dgms = evolving_diagrams(ts, DelayParams(tau=5, dim=2), p=2.0, step=60, degree=1)
        fixed = [(j, dgms[-1][1]) for j, _ in dgms]
        sc = change_point_score(fixed, ts.dt, degree=1)
        assert np.all(sc.scores == 0.0)

    def test_window_one_keeps_raw(self):
        ts = two_regime(120, 12, 0.02, 2)
        dgms = evolving_diagrams(ts, DelayParams(tau=3, dim=3), p=2.0, step=20, degree=1)
        sc = change_point_score(dgms, ts.dt, degree=1, window=1)
        assert np.array_equal(sc.scores, sc.smoothed)

    def test_time_rescaling(self):
        ts = two_regime(120, 12, 0.02, 2)
        dgms = evolving_diagrams(ts, DelayParams(tau=3, dim=3), p=2.0, step=20, degree=1)
        a = change_point_score(dgms, 1.0, degree=1)
        b = change_point_score(dgms, 4.0, degree=1)
        assert np.allclose(b.scores, a.scores / 4.0, rtol=1e-15)

    def test_switch_found_at_midpoint(self):
        n, period = 240, 24
        ts = two_regime(n, period, 0.02, 0)
        dgms = evolving_diagrams(ts, DelayParams(tau=period // 4, dim=3),
                                 p=2.0, step=24, degree=1)
        sc = change_point_score(dgms, ts.dt, degree=1, window=3)
        top = sc.times[np.argmax(sc.smoothed)]
        assert abs(top - n // 2) <= n // 10

    def test_needs_two_diagrams(self):
        ts = two_regime(60, 12, 0.0, 0)
        dgms = evolving_diagrams(ts, DelayParams(tau=3, dim=3), p=2.0, step=10_000, degree=1)
        with pytest.raises(ValueError, match="two diagrams"):
            change_point_score(dgms, ts.dt, degree=1)


class TestDetectPeaks:
    def test_constant_score_no_peaks(self):
        sc = ChangePointScore(times=np.arange(1, 11), scores=np.ones(10),
                              smoothed=np.ones(10))
        assert detect_peaks(sc, z=3.0).size == 0

    def test_single_spike(self):
        s = np.zeros(20)
        s[7] = 5.0
        sc = ChangePointScore(times=np.arange(1, 21), scores=s, smoothed=s)
        assert detect_peaks(sc, z=1.0).tolist() == [7]

    def test_two_changes_flagged(self):
        # three regimes with distinct embedded geometry; each switch spikes
        n, period = 360, 24
        changes = (n // 3, 2 * n // 3)
        found = []
        for seed in range(3):
            t = np.arange(n)
            x = np.where(t < changes[0], np.sin(2 * np.pi * t / period),
                np.where(t < changes[1], np.sin(4 * np.pi * t / period),
                         np.sin(6 * np.pi * t / period)))
            ts = series(x + 0.02 * philox(seed).standard_normal(n))
            dgms = evolving_diagrams(ts, DelayParams(tau=period // 4, dim=3),
                                     p=2.0, step=12, degree=1)
            sc = change_point_score(dgms, ts.dt, degree=1, window=1)
            peaks = [int(sc.times[i]) for i in detect_peaks(sc, z=1.0)]
            found.append(peaks)
            for change in changes:
                assert any(abs(p - change) <= n // 10 for p in peaks), (seed, peaks)
            false_pos = [p for p in peaks
                         if all(abs(p - c) > n // 10 for c in changes)]
            assert len(false_pos) <= 1, (seed, peaks)

    def test_z_validation(self):
        sc = ChangePointScore(times=np.array([1]), scores=np.array([0.0]),
                              smoothed=np.array([0.0]))
        with pytest.raises(ValueError):
            detect_peaks(sc, z=0.0)
