import math

import numpy as np
import pytest

from fermatph.comparison import (DIAGONAL, bottleneck, check_stability,
                                 metric_distortion)
from fermatph.geometry import PointCloud, gen_eyeglasses, gen_uniform_manifold
from fermatph.metric import DistanceMatrix, euclidean_matrix, fermat_matrix
from fermatph.persistence import Bar, PersistenceDiagram

from .oracles import brute_bottleneck


def philox(seed):
    return np.random.Generator(np.random.Philox(seed))


def diagram(bars, degree=1, threshold=math.inf):
    return PersistenceDiagram(tuple(Bar(degree, b, d) for b, d in bars),
                              threshold=threshold)


def random_diagram(rng, max_bars=5, degree=1):
    m = int(rng.integers(0, max_bars + 1))
    births = rng.uniform(0, 2, m)
    lifes = rng.uniform(1e-3, 2, m)
    return diagram(list(zip(births, births + lifes)), degree=degree)


class TestBottleneck:
    def test_self_distance_zero(self):
        rng = philox(0)
        dgm = random_diagram(rng, 5)
        d, matching = bottleneck(dgm, dgm, 1)
        assert d == 0.0
        real = [p for p in matching.pairs if DIAGONAL not in p]
        assert len(real) == len(dgm.in_degree(1))

    def test_single_bar_vs_empty(self):
        d, matching = bottleneck(diagram([(1.0, 3.0)]), diagram([]), 1)
        assert d == 1.0
        assert matching.pairs == ((0, DIAGONAL),)

    @pytest.mark.parametrize("seed", range(30))
    def test_factorial_brute_force(self, seed):
        rng = philox(seed)
        d1 = random_diagram(rng, 5)
        d2 = random_diagram(rng, 5)
        got, _ = bottleneck(d1, d2, 1)
        expected = brute_bottleneck([(b.birth, b.death) for b in d1.in_degree(1)],
                                    [(b.birth, b.death) for b in d2.in_degree(1)])
        assert abs(got - expected) < 1e-12

    def test_symmetry_exact(self):
        rng = philox(77)
        d1, d2 = random_diagram(rng), random_diagram(rng)
        assert bottleneck(d1, d2, 1)[0] == bottleneck(d2, d1, 1)[0]

    def test_triangle_inequality(self):
        rng = philox(13)
        for _ in range(20):
            a, b, c = (random_diagram(rng) for _ in range(3))
            dab = bottleneck(a, b, 1)[0]
            dbc = bottleneck(b, c, 1)[0]
            dac = bottleneck(a, c, 1)[0]
            assert dac <= dab + dbc + 1e-12

    def test_empty_side_bound(self):
        rng = philox(5)
        d1 = random_diagram(rng, 5)
        empty = diagram([])
        got, _ = bottleneck(d1, empty, 1)
        cap = max((b.persistence / 2 for b in d1.in_degree(1)), default=0.0)
        assert got == pytest.approx(cap, rel=1e-15)

    def test_threshold_mismatch_rejected(self):
        d1 = diagram([(0.0, 1.0)], threshold=2.0)
        d2 = diagram([(0.0, 1.0)], threshold=3.0)
        with pytest.raises(ValueError, match="threshold"):
            bottleneck(d1, d2, 1)

    def test_mismatched_infinite_counts(self):
        d1 = diagram([(0.0, math.inf)])
        d2 = diagram([])
        got, _ = bottleneck(d1, d2, 1)
        assert math.isinf(got)

    def test_infinite_bars_matched_by_birth(self):
        d1 = diagram([(0.0, math.inf), (2.0, math.inf)])
        d2 = diagram([(0.5, math.inf), (2.2, math.inf)])
        got, matching = bottleneck(d1, d2, 1)
        assert got == pytest.approx(0.5)
        assert set(matching.pairs) == {(0, 0), (1, 1)}

    def test_mixed_finite_infinite(self):
        d1 = diagram([(0.0, 1.0), (0.0, math.inf)])
        d2 = diagram([(0.0, 1.4), (0.1, math.inf)])
        got, _ = bottleneck(d1, d2, 1)
        assert got == pytest.approx(0.4)

    def test_degree_restriction(self):
        bars = (Bar(0, 0.0, 5.0), Bar(1, 1.0, 2.0))
        d1 = PersistenceDiagram(bars)
        d2 = PersistenceDiagram((Bar(1, 1.0, 2.0),))
        assert bottleneck(d1, d2, 1)[0] == 0.0
        assert bottleneck(d1, d2, 0)[0] == 2.5


class TestDistortion:
    def test_identical(self):
        D = euclidean_matrix(PointCloud(philox(0).standard_normal((10, 2))))
        dist = metric_distortion(D, D)
        assert dist.sup == 0.0
        assert dist.gh_upper == 0.0

    def test_constant_offset(self):
        D1 = euclidean_matrix(PointCloud(philox(1).standard_normal((8, 2))))
        c = 0.37
        vals = D1.values + c * (1 - np.eye(8))
        D2 = DistanceMatrix(vals, kind="euclidean")
        dist = metric_distortion(D1, D2)
        assert dist.sup == pytest.approx(c, rel=1e-15)
        assert dist.gh_upper == pytest.approx(c / 2, rel=1e-15)

    def test_double_loop_oracle(self):
        rng = philox(2)
        D1 = euclidean_matrix(PointCloud(rng.standard_normal((20, 3))))
        D2 = euclidean_matrix(PointCloud(rng.standard_normal((20, 3))))
        best = 0.0
        for i in range(20):
            for j in range(20):
                best = max(best, abs(D1.values[i, j] - D2.values[i, j]))
        assert metric_distortion(D1, D2).sup == best

    def test_size_mismatch(self):
        D1 = euclidean_matrix(PointCloud(philox(0).standard_normal((5, 2))))
        D2 = euclidean_matrix(PointCloud(philox(0).standard_normal((6, 2))))
        with pytest.raises(ValueError, match="size"):
            metric_distortion(D1, D2)


class TestStability:
    def test_identical_matrices(self):
        D = euclidean_matrix(gen_uniform_manifold("circle", 40, 0.01, 0))
        rep = check_stability(D, D, degree=1)
        assert rep.bottleneck == 0.0
        assert rep.distortion == 0.0
        assert rep.passed

    @pytest.mark.parametrize("seed", range(3))
    def test_jitter_euclidean_and_fermat(self, seed):
        base = gen_uniform_manifold("circle", 60, 0.0, 10)
        eta = 0.05
        jitter = philox(seed).uniform(-eta / 2, eta / 2, base.points.shape)
        moved = PointCloud(base.points + jitter)
        for build in (euclidean_matrix, lambda c: fermat_matrix(c, 2.0)):
            D1, D2 = build(base), build(moved)
            g = metric_distortion(D1, D2).sup
            if build is euclidean_matrix:
                assert g <= 2 * eta
            for degree in (0, 1):
                rep = check_stability(D1, D2, degree=degree, max_dim=1)
                assert rep.passed, (degree, rep)

    def test_eyeglasses_replace_one_point(self):
        cloud = gen_eyeglasses(120, 0.0, 0)
        pts = cloud.points.copy()
        pts[7] = pts[63]  # re-add an existing point in place of another
        other = PointCloud(pts)
        D1 = fermat_matrix(cloud, 2.0)
        D2 = fermat_matrix(other, 2.0)
        for degree in (0, 1):
            rep = check_stability(D1, D2, degree=degree, max_dim=1)
            assert rep.passed
