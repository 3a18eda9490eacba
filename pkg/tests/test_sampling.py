import math

import numpy as np
import pytest
from scipy import integrate, special
from scipy import stats as sps

from rggmax.graph_atlas import build_atlas, weight_law
from rggmax.sampling import (MarkedCloud, PointCloud, RadialPeak, RngStream, UniformCube, box_counts,
                             parse_density, sample_binomial, sample_compound_poisson_pp,
                             sample_depoissonized, sample_poisson_process)
from rggmax.stats import compound_poisson_pmf, CompoundPoissonLaw, empirical_pmf, tv_distance


def test_binomial_empty():
    cloud = sample_binomial(0, UniformCube(2), RngStream(1, 0))
    assert cloud.n == 0 and cloud.dim == 2


def test_uniform_quadrant_count():
    n = 10 ** 5
    pts = sample_binomial(n, UniformCube(2), RngStream(3, 0)).points
    inside = np.sum(np.all(pts >= 0, axis=1))
    assert abs(inside - n / 4) <= 4 * math.sqrt(n * 0.25 * 0.75)
    assert np.all(np.abs(pts) <= 0.5)


def test_radial_second_moment_matches_quadrature():
    peak = RadialPeak(1, 2.0)
    f_max = 1 + integrate.quad(lambda x: x * x, -0.5, 0.5)[0]
    m2 = integrate.quad(lambda x: x * x * (f_max - x * x), -0.5, 0.5)[0]
    m4 = integrate.quad(lambda x: x ** 4 * (f_max - x * x), -0.5, 0.5)[0]
    n = 10 ** 5
    x = sample_binomial(n, peak, RngStream(5, 0)).points[:, 0]
    assert abs(np.mean(x * x) - m2) <= 4 * math.sqrt((m4 - m2 * m2) / n)


def test_radial_constants():
    # one dimension: 1 + 1/12
    assert RadialPeak(1, 2.0).f_max == pytest.approx(13 / 12, rel=1e-12)
    # two dimensions: 1 + 2/12, by separability of x^2 + y^2
    assert RadialPeak(2, 2.0).f_max == pytest.approx(7 / 6, rel=1e-9)
    assert RadialPeak(3, 2.0).f_max == pytest.approx(1.25, rel=1e-8)
    # integral of exp(-|z|^2) over the plane is pi
    assert RadialPeak(2, 2.0).gamma == pytest.approx(math.pi, rel=1e-14)
    # s = 1 in d = 1: integral of exp(-|z|) is 2
    assert RadialPeak(1, 1.0).gamma == pytest.approx(2.0, rel=1e-14)


@pytest.mark.parametrize("d,s", [(1, 2.0), (2, 2.0), (2, 4.0), (3, 2.0)])
def test_radial_density_integrates_to_one(d, s):
    assert RadialPeak(d, s).mass() == pytest.approx(1.0, abs=1e-6)


def test_radial_rejects_negative_density():
    # corners sit at radius sqrt(5)/2 > 1, where |x|^10 exceeds f_max
    with pytest.raises(ValueError):
        RadialPeak(5, 10.0)
    with pytest.raises(ValueError):
        RadialPeak(2, 0.0)

def test_radial_peak_is_unique_maximum():
    peak = RadialPeak(2, 2.0)
    x = np.random.default_rng(0).random((1000, 2)) - 0.5
    assert np.all(peak.pdf(x) < peak.pdf(np.zeros((1, 2)))[0])
    assert peak.pdf(np.zeros((1, 2)))[0] == peak.f_max


def test_rejection_acceptance_rate():
    peak = RadialPeak(2, 2.0)
    stats = {}
    n = 2 * 10 ** 5
    peak.sample(n, np.random.default_rng(11), stats)
    m = stats["proposals"]
    p = 1 / peak.f_max
    assert abs(n / m - p) <= 3 * math.sqrt(p * (1 - p) / m)


def test_reproducible_and_independent_streams():
    a = sample_binomial(100, UniformCube(3), RngStream(42, 7)).points
    b = sample_binomial(100, UniformCube(3), RngStream(42, 7)).points
    c = sample_binomial(100, UniformCube(3), RngStream(42, 8)).points
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_poisson_zero_realisation():
    cloud = sample_poisson_process(1e-12, UniformCube(2), RngStream(0, 0))
    assert cloud.n == 0 and cloud.meta["N"] == 0


def test_poisson_disjoint_boxes_uncorrelated():
    boxes = [([-0.5, -0.5], [0.0, 0.0]), ([0.0, 0.0], [0.5, 0.5])]
    m = 4000
    counts = np.array([box_counts(sample_poisson_process(50, UniformCube(2), RngStream(9, i)).points, boxes)
                       for i in range(m)])
    cov = np.cov(counts.T)[0, 1]
    # variance of the sample covariance of independent Po(12.5) pairs is about 12.5^2 / m
    assert abs(cov) <= 4 * 12.5 / math.sqrt(m)
    pmf = sps.poisson.pmf(np.arange(60), 12.5)
    assert sps.chisquare(*_binned(counts[:, 0], pmf)).pvalue > 0.001


def _binned(values, pmf):
    obs = np.bincount(values.astype(int), minlength=len(pmf))[:len(pmf)].astype(float)
    exp = pmf * len(values)
    keep = exp >= 5
    o = np.append(obs[keep], len(values) - obs[keep].sum())
    e = np.append(exp[keep], len(values) - exp[keep].sum())
    return o, e


def test_poisson_total_count_moments():
    m = 10 ** 4
    n = np.array([sample_poisson_process(1000, UniformCube(1), RngStream(13, i)).meta["N"] for i in range(m)])
    assert abs(n.mean() - 1000) <= 4 * math.sqrt(1000 / m)
    # variance of the sample variance of Po(lam) is about (2 lam^2 + lam) / m
    assert abs(n.var(ddof=1) - 1000) <= 4 * math.sqrt((2 * 1000 ** 2 + 1000) / m)


def test_compound_poisson_mass_zero():
    mc = sample_compound_poisson_pp(0.0, UniformCube(2), {1: 1.0}, RngStream(0, 0))
    assert isinstance(mc, MarkedCloud) and len(mc.points) == 0 and mc.total == 0


def test_compound_poisson_constant_weight():
    lam = 3.0
    m = 10 ** 5
    totals = np.array([sample_compound_poisson_pp(lam, UniformCube(2), {2: 1.0}, RngStream(21, i)).total
                       for i in range(m)])
    pmf = compound_poisson_pmf(CompoundPoissonLaw([(2, lam)]))
    assert tv_distance(pmf, empirical_pmf(totals)) <= 0.01


def test_compound_poisson_weights_from_atlas():
    atlas = build_atlas(2, 1, n_samples=10 ** 6, rng=RngStream(1, 0))
    law = weight_law(atlas)
    mean = sum(q * p for q, p in law.items())
    p3, k3 = atlas.by_name("P3").mu, atlas.by_name("K3").mu
    assert mean == pytest.approx((p3 + 3 * k3) / (p3 + k3), rel=1e-12)
    mult = np.concatenate([sample_compound_poisson_pp(50.0, UniformCube(1), law, RngStream(2, i)).multiplicity
                           for i in range(400)])
    var = sum(q * q * p for q, p in law.items()) - mean ** 2
    assert abs(mult.mean() - mean) <= 3 * math.sqrt(var / len(mult))


@pytest.mark.parametrize("weights", [{0: 1.0}, {1: 0.5}, {1: 0.7, 2: 0.7}, {}])
def test_invalid_weights(weights):
    with pytest.raises(ValueError):
        sample_compound_poisson_pp(1.0, UniformCube(1), weights, RngStream(0, 0))


def test_depoissonized_triple_is_nested_prefix():
    (lo, mid, hi), nested = sample_depoissonized(10 ** 4, UniformCube(2), RngStream(4, 0))
    assert mid.n == 10 ** 4
    short, long_ = sorted((lo, mid, hi), key=len)[0], sorted((lo, mid, hi), key=len)[-1]
    assert np.array_equal(long_.points[:short.n], short.points)
    assert nested == (lo.n <= mid.n <= hi.n)


def test_cloud_roundtrip(tmp_path):
    cloud = sample_binomial(50, RadialPeak(2, 2.0), RngStream(8, 1))
    path = tmp_path / "cloud.txt"
    cloud.save(path)
    assert path.read_text().splitlines()[0] == "# d=2 n=50 density=radial(s=2) seed=8"
    back = PointCloud.load(path)
    assert np.array_equal(back.points, cloud.points)
    assert back.seed == 8 and back.density_tag == "radial(s=2)"


def test_parse_density():
    assert isinstance(parse_density("uniform", 2), UniformCube)
    peak = parse_density("radial:4", 2)
    assert isinstance(peak, RadialPeak) and peak.s == 4.0
    with pytest.raises(ValueError):
        parse_density("gaussian", 2)


def test_uniform_power_integral_is_box_volume():
    u = UniformCube(2)
    assert u.power_integral(5, ([0, 0], [0.25, 1.0])) == pytest.approx(0.125)
    assert u.power_integral(3) == 1.0


def test_radial_power_integral_one_dimension():
    peak = RadialPeak(1, 2.0)
    fm = 13 / 12
    want = integrate.quad(lambda x: (fm - x * x) ** 3, -0.5, 0.25)[0]
    assert peak.power_integral(3, ([-1.0], [0.25])) == pytest.approx(want, rel=1e-9)
