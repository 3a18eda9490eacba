"""Distances between empirical and reference laws, and point-process box-count checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .limit_laws import palm_lhs_rhs
from .sampling import MarkedCloud, box_counts


@dataclass
class EmpiricalSample:
    values: np.ndarray
    weights: np.ndarray | None = None
    _sorted: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).ravel()

    @property
    def sorted(self) -> np.ndarray:
        if self._sorted is None:
            self._sorted = np.sort(self.values)
        return self._sorted

    def __len__(self) -> int:
        return len(self.values)


def _values(sample) -> np.ndarray:
    return sample.sorted if isinstance(sample, EmpiricalSample) else np.sort(np.asarray(sample, dtype=float).ravel())


def ks_distance(sample, cdf) -> float:
    """Kolmogorov-Smirnov distance ``sup |ECDF - F|`` for a continuous ``F``.

    Both one-sided gaps are evaluated at every order statistic.
    """
    x = _values(sample)
    n = len(x)
    if n == 0:
        raise ValueError("empty sample")
    F = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def ecdf_table(sample, cdf=None):
    """Distinct sorted abscissae with right-continuous ECDF (and the law's CDF)."""
    x = _values(sample)
    if len(x) == 0:
        raise ValueError("empty sample")
    ux, counts = np.unique(x, return_counts=True)
    ecdf = np.cumsum(counts) / len(x)
    if cdf is None:
        return ux, ecdf
    return ux, ecdf, np.asarray(cdf(ux), dtype=float)


# -- integer laws -----------------------------------------------------------------

@dataclass
class CompoundPoissonLaw:
    """Law of ``sum_i q_i Po(rate_i)`` truncated where the remaining mass is below ``tail``."""

    atoms: list[tuple[int, float]]
    tail: float = 1e-12

    def __post_init__(self):
        for q, rate in self.atoms:
            if int(q) != q or q < 1 or rate < 0:
                raise ValueError("atoms must be (positive integer, nonnegative rate)")

    @property
    def mean(self) -> float:
        return float(sum(q * r for q, r in self.atoms))

    @property
    def variance(self) -> float:
        return float(sum(q * q * r for q, r in self.atoms))


def compound_poisson_pmf(law: CompoundPoissonLaw) -> np.ndarray:
    """Pmf table of the law by convolving dilated Poisson pmfs."""
    pmf = np.array([1.0])
    n_atoms = max(len(law.atoms), 1)
    for q, rate in law.atoms:
        q = int(q)
        if rate == 0:
            continue
        m = int(sps.poisson.isf(law.tail / n_atoms, rate)) + 1
        base = sps.poisson.pmf(np.arange(m + 1), rate)
        dil = np.zeros(q * m + 1)
        dil[::q] = base
        pmf = np.convolve(pmf, dil)
    # trim trailing negligible mass
    keep = len(pmf)
    while keep > 1 and pmf[keep - 1] < law.tail * 1e-3:
        keep -= 1
    return pmf[:keep]


def empirical_pmf(values, length: int | None = None) -> np.ndarray:
    v = np.asarray(values, dtype=np.int64).ravel()
    if np.any(v < 0):
        raise ValueError("integer samples must be nonnegative")
    counts = np.bincount(v, minlength=length or 0).astype(float)
    return counts / max(len(v), 1)


def tv_distance(p, q) -> float:
    """Total variation ``1/2 sum |p - q|`` between two pmf tables on ``{0, 1, ...}``.

    ``q`` may also be an :class:`EmpiricalSample` of nonnegative integers.
    """
    p = np.asarray(p, dtype=float)
    if isinstance(q, EmpiricalSample):
        q = empirical_pmf(q.values)
    q = np.asarray(q, dtype=float)
    m = max(len(p), len(q))
    pp = np.zeros(m)
    qq = np.zeros(m)
    pp[:len(p)] = p
    qq[:len(q)] = q
    return float(min(1.0, 0.5 * np.abs(pp - qq).sum()))


# -- box counts -------------------------------------------------------------------

def boxes_disjoint(boxes) -> bool:
    for a, b in zip(*np.triu_indices(len(boxes), 1)):
        lo = np.maximum(np.asarray(boxes[a][0]), np.asarray(boxes[b][0]))
        hi = np.minimum(np.asarray(boxes[a][1]), np.asarray(boxes[b][1]))
        if np.all(hi > lo):
            return False
    return True


@dataclass
class BoxTestResult:
    tv: np.ndarray
    correlations: np.ndarray   # upper-triangle pairwise Pearson correlations
    pvalues: np.ndarray        # two-sided normal-approximation p-values
    min_pvalue: float
    counts: np.ndarray         # replicates x boxes

    @property
    def max_abs_correlation(self) -> float:
        return float(np.max(np.abs(self.correlations))) if len(self.correlations) else 0.0


def box_count_test(replicates, boxes, reference) -> BoxTestResult:
    """Compare per-box counts over replicates with reference pmfs.

    Parameters
    ----------
    replicates : list
        One entry per replicate: an ``(m, d)`` point array, a ``MarkedCloud``
        or ``(points, weights)``.
    boxes : list of (lo, hi)
        Disjoint half-open boxes.
    reference : list of pmf tables
        Reference count law for each box.
    """
    if not boxes_disjoint(boxes):
        raise ValueError("boxes overlap")
    if len(reference) != len(boxes):
        raise ValueError("one reference pmf per box is required")
    rows = []
    for rep in replicates:
        if isinstance(rep, MarkedCloud):
            pts, w = rep.points, rep.multiplicity
        elif isinstance(rep, tuple):
            pts, w = rep
        else:
            pts, w = rep, None
        rows.append(box_counts(pts, boxes, w))
    counts = np.asarray(rows, dtype=float).reshape(len(replicates), len(boxes))
    tv = np.array([tv_distance(reference[b], empirical_pmf(counts[:, b].astype(np.int64)))
                   for b in range(len(boxes))])
    corr, pv = [], []
    m = len(counts)
    for a, b in zip(*np.triu_indices(len(boxes), 1)):
        x, y = counts[:, a], counts[:, b]
        if x.std() == 0 or y.std() == 0:
            c = 0.0
        else:
            c = float(np.corrcoef(x, y)[0, 1])
        corr.append(c)
        z = c * math.sqrt(max(m - 1, 1))
        pv.append(float(2 * sps.norm.sf(abs(z))))
    corr = np.array(corr)
    pv = np.array(pv)
    return BoxTestResult(tv, corr, pv, float(pv.min()) if len(pv) else 1.0, counts)


# -- Palm identity ----------------------------------------------------------------

def palm_check(h, lam: float, density, replicates: int = 10 ** 4, rng=0, n_se: float = 3.0) -> dict:
    """Compare both Monte Carlo sides of the Palm identity for the functional ``h``.

    Passes when the sides differ by at most ``n_se`` combined standard errors.
    """
    lhs, rhs, se_l, se_r = palm_lhs_rhs(h, lam, density, replicates, rng)
    comb = math.hypot(se_l, se_r)
    gap = abs(lhs - rhs)
    z = gap / comb if comb > 0 else (0.0 if gap == 0 else math.inf)
    return {"lhs": lhs, "rhs": rhs, "se_lhs": se_l, "se_rhs": se_r, "statistic": z,
            "threshold": n_se, "pass": bool(z <= n_se), "replicates": replicates}
