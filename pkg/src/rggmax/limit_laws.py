"""Closed-form limit laws, radius schedules, expected degree counts and tail bounds."""

from __future__ import annotations

import functools
import itertools
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as sps

from .geometry import Norm, build_grid, norm_of, unit_ball_volume
from .sampling import Density, RadialPeak, RngStream, UniformCube

INV_E = math.exp(-1.0)
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


# -- distributions ----------------------------------------------------------------

@dataclass(frozen=True)
class WeibullLaw:
    """Reversed Weibull law ``P[Z <= x] = exp(-mu (-x)^exponent)`` on ``x < 0``."""

    mu_dk: float
    exponent: float

    def __post_init__(self):
        if not (self.mu_dk > 0 and self.exponent > 0):
            raise ValueError("Weibull parameters must be positive")

    def cdf(self, x):
        x = np.asarray(x, dtype=float)
        neg = np.minimum(x, 0.0)
        out = np.where(x < 0, np.exp(-self.mu_dk * (-neg) ** self.exponent), 1.0)
        return out if out.ndim else float(out)

    def ppf(self, u):
        u = np.asarray(u, dtype=float)
        return -((-np.log(u)) / self.mu_dk) ** (1.0 / self.exponent)


@dataclass(frozen=True)
class GumbelLaw:
    def cdf(self, x):
        out = np.exp(-np.exp(-np.asarray(x, dtype=float)))
        return out if out.ndim else float(out)

    def ppf(self, u):
        return -np.log(-np.log(np.asarray(u, dtype=float)))


def weibull_cdf(x, law: WeibullLaw):
    return law.cdf(x)


def gumbel_cdf(x):
    return GumbelLaw().cdf(x)


# -- Lambert W --------------------------------------------------------------------

def _w0_scalar(t: float) -> float:
    if t < -INV_E:
        raise ValueError(f"W0 is undefined below -1/e (got {t!r})")
    if t == -INV_E:
        return -1.0
    if t == 0.0:
        return 0.0
    if t < -0.32:
        # branch-point series in p = sqrt(2 (e t + 1))
        p = math.sqrt(max(2.0 * (math.e * t + 1.0), 0.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif t < 3.0:
        w = math.log1p(t)
        w *= 1.0 - math.log1p(w) / (2.0 + w) if w > -0.5 else 1.0
    else:
        l1 = math.log(t)
        l2 = math.log(l1)
        w = l1 - l2 + l2 / l1
    for _ in range(100):
        ew = math.exp(w)
        f = w * ew - t
        wp1 = w + 1.0
        if wp1 <= 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_new = w - step
        if w_new < -1.0:
            w_new = -1.0
        if abs(w_new - w) <= 4e-16 * (1.0 + abs(w_new)):
            w = w_new
            break
        w = w_new
    return w


def lambert_w0(t):
    """Principal branch of the Lambert W function.

    Parameters
    ----------
    t : float or array_like
        Arguments, each ``>= -1/e``.

    Returns
    -------
    float or ndarray
        ``w >= -1`` with ``w exp(w) = t``.
    """
    if np.ndim(t) == 0:
        return _w0_scalar(float(t))
    arr = np.asarray(t, dtype=float)
    return np.vectorize(_w0_scalar, otypes=[float])(arr)


# -- radius schedules -------------------------------------------------------------

def radius_fixed_k(n, k, d, beta) -> float:
    """Radius with ``n^{k+1} r^{dk} = beta``."""
    if min(n, k, d, beta) <= 0:
        raise ValueError("all arguments must be positive")
    return math.exp((math.log(beta) - (k + 1) * math.log(n)) / (d * k))


def k_loglog(n) -> int:
    """``ceil(log n / log log n)``."""
    ln = math.log(n)
    return math.ceil(ln / math.log(ln))


def k_power(n, alpha: float) -> int:
    """``ceil((log n)^alpha)`` for ``0 < alpha < 1``."""
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    return math.ceil(math.log(n) ** alpha)


def _peak_terms(density: Density, d: int) -> tuple[float, float, float]:
    """``(f_max, gamma, d/s)``; the uniform density uses ``gamma = 1`` and ``d/s = 0``."""
    if isinstance(density, RadialPeak):
        return density.f_max, density.gamma, d / density.s
    if isinstance(density, UniformCube):
        return 1.0, 1.0, 0.0
    raise TypeError("only UniformCube and RadialPeak densities are supported")


@dataclass(frozen=True)
class GrowingRadius:
    r: float
    t: float           # f_max n theta r^d / k
    ntheta_r_d: float  # n theta r^d
    residual: float    # relative residual of t exp(-t) = c
    log_c: float


def solve_growing(n, k, d, theta, beta, density: Density | None = None) -> GrowingRadius:
    """Radius for which the Stirling-form expected count of degree-``k`` vertices is ``beta``.

    With ``t = f_max n theta r^d / k`` the defining equation is
    ``t exp(-t) = c`` where
    ``c = exp(-1) (n gamma f_max^{1+d/s} / (beta sqrt(2 pi k^{1+2d/s})))^{-1/k}``,
    solved on the principal branch ``t = -W0(-c)``.
    """
    if k < 2:
        raise ValueError("growing schedule needs k >= 2")
    density = density or UniformCube(d)
    f_max, gamma, ds = _peak_terms(density, d)
    log_big = (math.log(n) + math.log(gamma) + (1 + ds) * math.log(f_max) - math.log(beta)
               - LOG_SQRT_2PI - 0.5 * (1 + 2 * ds) * math.log(k))
    log_c = -1.0 - log_big / k
    c = math.exp(log_c)
    if c > INV_E:
        raise ValueError(f"n={n} is too small for the growing-k schedule (W0 argument {-c:.6g} < -1/e)")
    t = -lambert_w0(-c)
    residual = abs(t * math.exp(-t) - c) / c
    ntheta = k * t / f_max
    r = (ntheta / (n * theta)) ** (1.0 / d)
    return GrowingRadius(r, t, ntheta, residual, log_c)


def radius_growing(n, k, d, theta, beta, density: Density | None = None) -> float:
    return solve_growing(n, k, d, theta, beta, density).r


@dataclass
class RadiusSchedule:
    """``fixed`` regime (``n^{k+1} r^{dk} = beta``) or ``growing`` regime (Lambert-W solution).

    ``k_rule`` is an int for a fixed ``k`` or a callable ``n -> k_n``.
    """

    regime: str
    d: int
    beta: float
    k_rule: object = 1
    norm: Norm = Norm.EUCLIDEAN
    density: Density | None = None
    _cache: dict = field(default_factory=dict, repr=False)

    def k(self, n) -> int:
        return int(self.k_rule(n)) if callable(self.k_rule) else int(self.k_rule)

    @property
    def theta(self) -> float:
        return unit_ball_volume(self.d, self.norm)

    def solve(self, n):
        if n not in self._cache:
            k = self.k(n)
            if self.regime == "fixed":
                r = radius_fixed_k(n, k, self.d, self.beta)
                res = abs((k + 1) * math.log(n) + self.d * k * math.log(r) - math.log(self.beta))
                self._cache[n] = (k, r, n * self.theta * r ** self.d, res)
            elif self.regime == "growing":
                g = solve_growing(n, k, self.d, self.theta, self.beta, self.density)
                self._cache[n] = (k, g.r, g.ntheta_r_d, g.residual)
            else:
                raise ValueError(f"unknown regime {self.regime!r}")
        return self._cache[n]

    def radius(self, n) -> float:
        return self.solve(n)[1]

    def residual(self, n) -> float:
        return self.solve(n)[3]

    def dump_rows(self, ns) -> list[dict]:
        rows = []
        for n in ns:
            k, r, nt, res = self.solve(n)
            rows.append({"n": n, "k_n": k, "r_n": r, "ntheta_r_d": nt, "residual": res})
        return rows


# -- expected degree counts -------------------------------------------------------

def _interval_overlap(a, b):
    """Length of ``[a, b] intersect [-1/2, 1/2]``."""
    return np.clip(np.minimum(b, 0.5) - np.maximum(a, -0.5), 0.0, None)


def _power_antideriv(y, s):
    return np.sign(y) * np.abs(y) ** (s + 1) / (s + 1)


def _chord_integral(lo, hi, r):
    """``int_lo^hi sqrt(r^2 - u^2) du`` for ``-r <= lo <= hi <= r``."""
    def prim(u):
        u = np.clip(u, -r, r)
        return 0.5 * (u * np.sqrt(np.maximum(r * r - u * u, 0.0)) + r * r * np.arcsin(u / r))
    return prim(hi) - prim(lo)


def _capped_chord(lo, hi, r, cap):
    """``int_lo^hi min(sqrt(r^2 - u^2), cap) du`` with ``cap >= 0``, vectorised."""
    lo, hi, cap = np.broadcast_arrays(lo, hi, cap)
    a = np.sqrt(np.maximum(r * r - cap * cap, 0.0))  # sqrt(r^2-u^2) >= cap iff |u| <= a
    mid_lo = np.clip(lo, -a, a)
    mid_hi = np.clip(hi, -a, a)
    mid = np.clip(mid_hi - mid_lo, 0.0, None) * cap
    left = _chord_integral(np.minimum(lo, -a), np.minimum(hi, -a), r)
    right = _chord_integral(np.maximum(lo, a), np.maximum(hi, a), r)
    return mid + left + right


def disk_square_area(x, r):
    """Area of the Euclidean disk ``B(x; r)`` inside the unit square, for ``x`` in the square."""
    x = np.atleast_2d(x)
    u_lo = np.maximum(x[:, 0] - r, -0.5) - x[:, 0]
    u_hi = np.minimum(x[:, 0] + r, 0.5) - x[:, 0]
    top = 0.5 - x[:, 1]
    bottom = x[:, 1] + 0.5
    return _capped_chord(u_lo, u_hi, r, top) + _capped_chord(u_lo, u_hi, r, bottom)


@functools.lru_cache(maxsize=64)
def _ball_nodes(d: int, norm: Norm, m: int):
    """Midpoint nodes of the unit ball of ``norm`` on an ``m^d`` grid over ``[-1, 1]^d``."""
    ax = -1.0 + (np.arange(m) + 0.5) * 2.0 / m
    grid = np.stack(np.meshgrid(*([ax] * d), indexing="ij"), axis=-1).reshape(-1, d)
    inside = norm_of(grid, norm) <= 1.0
    return grid[inside], (2.0 / m) ** d


def ball_mass(x, r, d, norm, density: Density, nodes_per_axis: int | None = None):
    """``F(B(x; r)) = int_{B(x;r)} f`` for each row of ``x``.

    Exact in one dimension, for the max norm (uniform, or radial with s=2) and
    for the uniform square with the Euclidean norm; interior balls of the
    uniform density are exact in every case.  Otherwise a deterministic
    midpoint rule over the ball.
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    norm = Norm.parse(norm)
    theta = unit_ball_volume(d, norm)
    interior = np.all(np.abs(x) + r <= 0.5, axis=1)
    uniform = isinstance(density, UniformCube)
    if uniform:
        inside = density.in_support(x)
        if d == 1:
            return _interval_overlap(x[:, 0] - r, x[:, 0] + r)
        if norm is Norm.MAX:
            return np.prod(_interval_overlap(x - r, x + r), axis=1)
        if norm is Norm.EUCLIDEAN and d == 2:
            return np.where(inside, disk_square_area(x, r), 0.0)
        out = np.full(len(x), theta * r ** d)
        if np.all(interior):
            return out
        rest = ~interior
        out[rest] = _ball_quadrature(x[rest], r, d, norm, density, nodes_per_axis)
        return out
    s = density.s
    if d == 1:
        a = np.maximum(x[:, 0] - r, -0.5)
        b = np.minimum(x[:, 0] + r, 0.5)
        ln = np.clip(b - a, 0.0, None)
        return np.where(ln > 0, density.f_max * ln - (_power_antideriv(b, s) - _power_antideriv(a, s)), 0.0)
    if norm is Norm.MAX and s == 2:
        lo = np.maximum(x - r, -0.5)
        hi = np.minimum(x + r, 0.5)
        ln = np.clip(hi - lo, 0.0, None)
        vol = np.prod(ln, axis=1)
        sec = np.where(ln > 0, (hi ** 3 - lo ** 3) / 3.0, 0.0)
        moment = np.zeros(len(x))
        for c in range(d):
            others = np.prod(np.delete(ln, c, axis=1), axis=1)
            moment += sec[:, c] * others
        return density.f_max * vol - moment
    return _ball_quadrature(x, r, d, norm, density, nodes_per_axis)


def _ball_quadrature(x, r, d, norm, density, nodes_per_axis=None):
    m = nodes_per_axis or {2: 200, 3: 40}.get(d, 12)
    nodes, w = _ball_nodes(d, norm, m)
    out = np.empty(len(x))
    step = max(1, (1 << 22) // max(len(nodes), 1))
    for a in range(0, len(x), step):
        chunk = x[a:a + step]
        pts = chunk[:, None, :] + r * nodes[None, :, :]
        vals = density.pdf(pts.reshape(-1, d)).reshape(len(chunk), len(nodes))
        out[a:a + step] = vals.sum(axis=1) * w * r ** d
    return out


def _gauss_pieces(r, nodes):
    """Gauss-Legendre nodes/weights on ``[-1/2, 1/2]`` split at ``+-(1/2 - r)``."""
    g, gw = np.polynomial.legendre.leggauss(nodes)
    cuts = [-0.5, 0.5]
    if 0 < r < 0.5:
        cuts = [-0.5, -0.5 + r, 0.5 - r, 0.5]
    xs, ws = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        xs.append(0.5 * (b - a) * g + 0.5 * (a + b))
        ws.append(0.5 * (b - a) * gw)
    return np.concatenate(xs), np.concatenate(ws)


def expected_degree_count(n, r, k, d, norm=Norm.EUCLIDEAN, density: Density | None = None,
                          mode: str = "binomial", boundary: bool = True, nodes: int = 24,
                          mc_points: int = 20000, rng=0) -> float:
    """Expected number of degree-``k`` vertices.

    ``binomial`` mode uses ``n P[Bin(n-1, F) = k]`` averaged over the anchor,
    ``poisson`` mode ``n P[Po(n F) = k]``.  With ``boundary=False`` the ball
    mass is the leading-order ``f(x) theta r^d``.  The outer integral uses
    Gauss-Legendre pieces split at distance ``r`` from the faces for ``d <= 2``
    and Monte Carlo for ``d >= 3``.
    """
    density = density or UniformCube(d)
    norm = Norm.parse(norm)
    theta = unit_ball_volume(d, norm)
    if mode not in ("binomial", "poisson"):
        raise ValueError("mode must be 'binomial' or 'poisson'")

    def integrand(x):
        f = density.pdf(x)
        F = ball_mass(x, r, d, norm, density) if boundary else f * theta * r ** d
        F = np.clip(F, 0.0, 1.0)
        if mode == "binomial":
            q = sps.binom.pmf(k, n - 1, F)
        else:
            q = sps.poisson.pmf(k, n * F)
        return q * f

    if d <= 2:
        xs, ws = _gauss_pieces(r, nodes)
        if d == 1:
            val = float(np.sum(integrand(xs[:, None]) * ws))
        else:
            X, Y = np.meshgrid(xs, xs, indexing="ij")
            W = np.outer(ws, ws)
            val = float(np.sum(integrand(np.column_stack((X.ravel(), Y.ravel()))) * W.ravel()))
    else:
        gen = np.random.default_rng(rng)
        x = gen.random((mc_points, d)) - 0.5
        val = float(np.mean(integrand(x)))
    return n * val


def expected_count_asymptotic(n, r, k, d, norm=Norm.EUCLIDEAN, density: Density | None = None) -> float:
    """Leading-order ``n^{k+1} r^{dk} theta^k / k! int f^{k+1}``."""
    density = density or UniformCube(d)
    theta = unit_ball_volume(d, norm)
    return n ** (k + 1) * r ** (d * k) * theta ** k / math.factorial(k) * density.power_integral(k + 1)


# -- statistics of the threshold radius -------------------------------------------

def simplified_is_valid(n, k) -> bool:
    return k * n ** (-1.0 / k) < 0.1


def gumbel_statistic(S, n, k, d, theta, density: Density | None = None, variant: str = "full"):
    """Centred statistic of the threshold radius with a Gumbel limit.

    ``variant='simplified'`` drops the factor ``exp(-f_max n theta S^d / k)``;
    a warning is emitted when ``k n^{-1/k} >= 0.1``.
    """
    density = density or UniformCube(d)
    f_max, gamma, ds = _peak_terms(density, d)
    S = np.asarray(S, dtype=float)
    x = f_max * n * theta * S ** d
    first = math.e * n ** (1.0 / k) * x
    if variant == "full":
        first = first * np.exp(-x / k)
    elif variant == "simplified":
        if not simplified_is_valid(n, k):
            warnings.warn(f"k n^(-1/k) = {k * n ** (-1.0 / k):.3g} is not small; "
                          "the simplified statistic is unreliable here", RuntimeWarning, stacklevel=2)
    else:
        raise ValueError("variant must be 'full' or 'simplified'")
    shift = k + (0.5 + ds) * math.log(k) + LOG_SQRT_2PI - math.log(gamma) - (1 + ds) * math.log(f_max)
    out = -first + shift
    return out if out.ndim else float(out)


def probability_limit_ratio(S, n, k, d, theta, f_max: float = 1.0):
    """``n^{1+1/k} theta S^d / k``; converges to ``1/(f_max e)``."""
    S = np.asarray(S, dtype=float)
    out = n ** (1.0 + 1.0 / k) * theta * S ** d / k
    return out if out.ndim else float(out)


def weibull_statistic(S, n, k, d):
    """``-n^{(k+1)/(dk)} S``."""
    return -np.asarray(S, dtype=float) * n ** ((k + 1) / (d * k))


# -- tail bounds ------------------------------------------------------------------

def H(t):
    """``1 - t + t log t`` with ``H(0) = 1``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("H is defined on [0, inf)")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(t > 0, 1.0 - t + t * np.log(np.where(t > 0, t, 1.0)), 1.0)
    return out if out.ndim else float(out)


def tail_bounds(kind: str, **p) -> float:
    """Chernoff-type tail bounds.

    ``binomial_upper(n, p, k)`` bounds ``P[Bin >= k]`` for ``k >= np``;
    ``binomial_lower`` bounds ``P[Bin <= k]`` for ``k <= np``;
    ``poisson_upper(lam, k)`` / ``poisson_lower(lam, k)`` likewise;
    ``poisson_34(lam)`` bounds both deviations by ``lam^{3/4}/2``.
    """
    if kind in ("binomial_upper", "binomial_lower"):
        n, prob, k = p["n"], p["p"], p["k"]
        mean = n * prob
        if kind == "binomial_upper" and k < mean:
            raise ValueError("binomial_upper needs k >= np")
        if kind == "binomial_lower" and k > mean:
            raise ValueError("binomial_lower needs k <= np")
        return float(math.exp(-mean * H(k / mean)))
    if kind in ("poisson_upper", "poisson_lower"):
        lam, k = p["lam"], p["k"]
        if kind == "poisson_upper" and k < lam:
            raise ValueError("poisson_upper needs k >= lambda")
        if kind == "poisson_lower" and k > lam:
            raise ValueError("poisson_lower needs k <= lambda")
        return float(math.exp(-lam * H(k / lam)))
    if kind == "poisson_34":
        return float(math.exp(-math.sqrt(p["lam"]) / 9.0))
    raise ValueError(f"unknown bound {kind!r}")


def exact_tail(kind: str, **p) -> float:
    """Exact probability that the matching bound in :func:`tail_bounds` controls."""
    if kind == "binomial_upper":
        return float(sps.binom.sf(p["k"] - 1, p["n"], p["p"]))
    if kind == "binomial_lower":
        return float(sps.binom.cdf(p["k"], p["n"], p["p"]))
    if kind == "poisson_upper":
        return float(sps.poisson.sf(p["k"] - 1, p["lam"]))
    if kind == "poisson_lower":
        return float(sps.poisson.cdf(p["k"], p["lam"]))
    if kind == "poisson_34":
        lam = p["lam"]
        dev = lam ** 0.75 / 2
        upper = float(sps.poisson.sf(math.ceil(lam + dev) - 1, lam))
        lower = float(sps.poisson.cdf(math.floor(lam - dev), lam))
        return max(upper, lower)
    raise ValueError(f"unknown bound {kind!r}")


# -- Palm expectation -------------------------------------------------------------

@dataclass(frozen=True)
class PalmFunctional:
    """Functional ``h(Y, X)`` that vanishes unless ``Y`` has ``j`` points.

    ``evaluate(Y, X)`` takes a ``(j, d)`` array and the full configuration.
    ``total(X)``, when given, returns ``sum_{Y subset X} h(Y, X)`` directly.
    """

    j: int
    evaluate: object
    total: object = None
    uses_configuration: bool = True


def counting_functional() -> PalmFunctional:
    return PalmFunctional(1, lambda Y, X: 1.0, lambda X: float(len(X)), False)


def edge_functional(r: float, norm=Norm.EUCLIDEAN) -> PalmFunctional:
    def evaluate(Y, X):
        return float(norm_of(Y[1:2] - Y[0:1], norm)[0] <= r)

    def total(X):
        if len(X) < 2:
            return 0.0
        return float(len(build_grid(X, r).pairs(r, norm)[0]))

    return PalmFunctional(2, evaluate, total, False)


def zero_functional(j: int = 1) -> PalmFunctional:
    return PalmFunctional(j, lambda Y, X: 0.0, lambda X: 0.0, False)


def _subset_sum(h: PalmFunctional, X) -> float:
    return float(sum(h.evaluate(X[list(idx)], X) for idx in itertools.combinations(range(len(X)), h.j)))


def palm_lhs_rhs(h: PalmFunctional, lam: float, density: Density, mc_samples: int = 10 ** 4,
                 rng=0, rhs_samples: int | None = None):
    """Monte Carlo estimates of both sides of the Palm identity.

    Returns ``(lhs, rhs, se_lhs, se_rhs)`` where ``lhs`` estimates
    ``E[sum_{Y subset P_lam} h(Y, P_lam)]`` and ``rhs`` estimates
    ``lam^j / j! E[h(X'_j, X'_j + P_lam)]``.
    """
    if isinstance(rng, RngStream):
        g_lhs, g_rhs = rng.generator(0), rng.generator(1)
    else:
        seq = np.random.SeedSequence(rng if isinstance(rng, int) else None)
        g_lhs, g_rhs = (np.random.default_rng(s) for s in seq.spawn(2))
    lhs_vals = np.empty(mc_samples)
    for i in range(mc_samples):
        X = density.sample(int(g_lhs.poisson(lam)), g_lhs)
        lhs_vals[i] = h.total(X) if h.total is not None else _subset_sum(h, X)
    m = rhs_samples or mc_samples
    scale = lam ** h.j / math.factorial(h.j)
    rhs_vals = np.empty(m)
    for i in range(m):
        Y = density.sample(h.j, g_rhs)
        if h.uses_configuration:
            X = np.vstack((Y, density.sample(int(g_rhs.poisson(lam)), g_rhs)))
        else:
            X = Y
        rhs_vals[i] = h.evaluate(Y, X)
    lhs = float(lhs_vals.mean())
    rhs = scale * float(rhs_vals.mean())
    se_l = float(lhs_vals.std(ddof=1) / math.sqrt(mc_samples)) if mc_samples > 1 else float("nan")
    se_r = scale * float(rhs_vals.std(ddof=1) / math.sqrt(m)) if m > 1 else float("nan")
    return lhs, rhs, se_l, se_r
