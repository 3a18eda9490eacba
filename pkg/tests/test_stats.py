import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as hst
from scipy import stats as sps

from rggmax import limit_laws as ll
from rggmax.graph_atlas import build_atlas
from rggmax.sampling import MarkedCloud, RngStream, UniformCube, sample_poisson_process
from rggmax.stats import (CompoundPoissonLaw, EmpiricalSample, boxes_disjoint, box_count_test,
                          compound_poisson_pmf, ecdf_table, empirical_pmf, ks_distance, palm_check, tv_distance)


def test_ks_all_at_median():
    law = ll.GumbelLaw()
    n = 20
    ks = ks_distance(np.full(n, law.ppf(0.5)), law.cdf)
    assert 0.5 - 1 / (2 * n) <= ks <= 0.5 + 1e-12


def test_ks_quantile_sample():
    law = ll.WeibullLaw(1.5, 2)
    n = 200
    x = law.ppf((np.arange(1, n + 1) - 0.5) / n)
    assert ks_distance(x, law.cdf) == pytest.approx(1 / (2 * n), abs=1e-12)


def test_ks_sample_from_law():
    n = 10 ** 4
    x = sps.gumbel_r.rvs(size=n, random_state=1)
    assert ks_distance(EmpiricalSample(x), ll.gumbel_cdf) < 1.63 / math.sqrt(n)
    with pytest.raises(ValueError):
        ks_distance([], ll.gumbel_cdf)


def test_ks_matches_scipy():
    x = np.random.default_rng(2).normal(size=300)
    assert ks_distance(x, sps.norm.cdf) == pytest.approx(sps.kstest(x, "norm").statistic, abs=1e-14)


def test_ks_invariant_under_increasing_map():
    law = ll.WeibullLaw(1.0, 2)
    x = law.ppf(np.random.default_rng(3).random(500))
    direct = ks_distance(x, law.cdf)
    cubed = ks_distance(x ** 3, lambda y: law.cdf(np.cbrt(y)))
    assert cubed == pytest.approx(direct, abs=1e-12)


def test_ecdf_table_right_continuous():
    ux, e = ecdf_table([1.0, 1.0, 2.0, 3.0])
    assert ux.tolist() == [1.0, 2.0, 3.0] and e.tolist() == [0.5, 0.75, 1.0]


def test_compound_examples():
    lam = 1.7
    pmf = compound_poisson_pmf(CompoundPoissonLaw([(2, lam)]))
    assert pmf[0] == pytest.approx(math.exp(-lam), rel=1e-14)
    assert pmf[1] == 0.0
    assert pmf[2] == pytest.approx(lam * math.exp(-lam), rel=1e-14)
    assert compound_poisson_pmf(CompoundPoissonLaw([(1, 0.0), (3, 0.0)])).tolist() == [1.0]


def test_compound_mean_from_atlas():
    atlas = build_atlas(2, 1, n_samples=10 ** 5, rng=RngStream(1, 0))
    beta = 1.3
    atoms = [(c.q, beta * c.mu) for c in atlas.classes if c.mu > 0]
    pmf = compound_poisson_pmf(CompoundPoissonLaw(atoms))
    mean = float(np.sum(np.arange(len(pmf)) * pmf))
    p3, k3 = atlas.by_name("P3").mu, atlas.by_name("K3").mu
    assert mean == pytest.approx(beta * (p3 + 3 * k3), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(hst.lists(hst.tuples(hst.integers(1, 5), hst.floats(0, 4)), min_size=1, max_size=4))
def test_compound_moments_and_zero_mass(atoms):
    law = CompoundPoissonLaw(atoms)
    pmf = compound_poisson_pmf(law)
    j = np.arange(len(pmf))
    assert pmf.sum() == pytest.approx(1.0, abs=1e-10)
    assert np.all(pmf >= 0)
    assert pmf[0] == pytest.approx(math.exp(-sum(r for _, r in atoms)), rel=1e-12)
    mean = float(np.sum(j * pmf))
    assert mean == pytest.approx(law.mean, abs=1e-8 * max(1, law.mean))
    assert float(np.sum(j * j * pmf)) - mean ** 2 == pytest.approx(law.variance, abs=1e-7 * max(1, law.variance))


def test_compound_rejects_bad_atoms():
    with pytest.raises(ValueError):
        CompoundPoissonLaw([(0, 1.0)])
    with pytest.raises(ValueError):
        CompoundPoissonLaw([(1, -1.0)])


def test_tv_examples():
    p = np.array([0.2, 0.5, 0.3])
    assert tv_distance(p, p) == 0.0
    assert tv_distance([1.0, 0.0], [0.0, 0.0, 1.0]) == 1.0
    x = np.random.default_rng(4).poisson(3, 10 ** 5)
    exact = sps.poisson.pmf(np.arange(40), 3)
    assert tv_distance(exact, EmpiricalSample(x)) < 0.01
    with pytest.raises(ValueError):
        empirical_pmf([-1])


pmfs = hst.lists(hst.floats(0, 1), min_size=1, max_size=8).filter(lambda v: sum(v) > 0).map(
    lambda v: np.array(v) / sum(v))


@given(pmfs, pmfs, pmfs)
def test_tv_metric(p, q, r):
    d_pq = tv_distance(p, q)
    assert d_pq == pytest.approx(tv_distance(q, p))
    assert 0 <= d_pq <= 1
    assert d_pq <= tv_distance(p, r) + tv_distance(r, q) + 1e-12


def test_boxes_disjoint():
    a = ([0, 0], [1, 1])
    assert boxes_disjoint([a, ([1, 0], [2, 1])])
    assert not boxes_disjoint([a, ([0.5, 0.5], [2, 2])])
    with pytest.raises(ValueError):
        box_count_test([np.empty((0, 2))], [a, ([0.5, 0.5], [2, 2])], [[1.0], [1.0]])


def test_box_test_empty_points():
    res = box_count_test([np.empty((0, 2))] * 5, [([0, 0], [1, 1])], [np.array([1.0])])
    assert res.tv.tolist() == [0.0]


def test_box_test_poisson_self_consistency():
    lam = 40.0
    boxes = [([-0.5, -0.5], [0.0, 0.0]), ([0.0, -0.5], [0.5, 0.0]), ([-0.5, 0.0], [0.5, 0.5])]
    refs = [sps.poisson.pmf(np.arange(120), lam * v) for v in (0.25, 0.25, 0.5)]
    reps = [sample_poisson_process(lam, UniformCube(2), RngStream(5, i)).points for i in range(10 ** 4)]
    res = box_count_test(reps, boxes, refs)
    assert np.all(res.tv < 0.02)
    assert res.max_abs_correlation < 0.05
    assert res.counts.shape == (10 ** 4, 3)


def test_box_test_marked_cloud():
    mc = MarkedCloud(np.array([[0.1], [0.6]]), np.array([3, 2]))
    res = box_count_test([mc, (mc.points, mc.multiplicity)], [([0.0], [0.5]), ([0.5], [1.0])],
                         [np.eye(4)[3], np.eye(4)[2]])
    assert res.counts.tolist() == [[3, 2], [3, 2]]
    assert res.tv.tolist() == [0.0, 0.0]


def test_palm_check_report():
    rep = palm_check(ll.counting_functional(), 30.0, UniformCube(1), 2000, RngStream(6, 0))
    assert rep["pass"] and rep["rhs"] == 30.0 and rep["threshold"] == 3.0
