"""Densities on the centred unit cube and the point-process samplers built on them."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np


# -- random streams ---------------------------------------------------------------

@dataclass(frozen=True)
class RngStream:
    """Replicate ``stream_index`` of the experiment seeded with ``master_seed``.

    Distinct indices map to independent PCG64 streams through ``SeedSequence``
    spawn keys, so a replicate's draws never depend on which others ran.
    """

    master_seed: int
    stream_index: int = 0

    def generator(self, *sub: int) -> np.random.Generator:
        key = (int(self.stream_index),) + tuple(int(s) for s in sub)
        ss = np.random.SeedSequence(int(self.master_seed) % 2 ** 64, spawn_key=key)
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _seed_of(rng):
    return rng.master_seed if isinstance(rng, RngStream) else None


# -- densities --------------------------------------------------------------------

def _box_in_cube(box, d):
    """Intersect an axis-aligned box ``(lo, hi)`` with the centred unit cube."""
    if box is None:
        return np.full(d, -0.5), np.full(d, 0.5)
    lo = np.maximum(np.broadcast_to(np.asarray(box[0], dtype=float), (d,)), -0.5)
    hi = np.minimum(np.broadcast_to(np.asarray(box[1], dtype=float), (d,)), 0.5)
    return lo, hi


def midpoint_integral(func, lo, hi, cells_per_axis: int) -> float:
    """Tensor midpoint rule of ``func`` (vectorised over an ``(m, d)`` array) on a box."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = len(lo)
    if np.any(hi <= lo):
        return 0.0
    axes = [lo[c] + (np.arange(cells_per_axis) + 0.5) * (hi[c] - lo[c]) / cells_per_axis
            for c in range(d)]
    cell_vol = float(np.prod((hi - lo) / cells_per_axis))
    rest = (np.stack(np.meshgrid(*axes[1:], indexing="ij"), axis=-1).reshape(-1, d - 1)
            if d > 1 else np.empty((1, 0)))
    # evaluate in slabs along the first axis to bound memory
    step = max(1, (1 << 22) // len(rest))
    total = 0.0
    for a in range(0, cells_per_axis, step):
        x0 = axes[0][a:a + step]
        pts = np.column_stack((np.repeat(x0, len(rest)), np.tile(rest, (len(x0), 1))))
        total += float(np.sum(func(pts)))
    return total * cell_vol


def _richardson_midpoint(func, lo, hi, d):
    m = {1: 1 << 20, 2: 1024, 3: 128}.get(d, 16)
    coarse = midpoint_integral(func, lo, hi, m)
    fine = midpoint_integral(func, lo, hi, 2 * m)
    return (4.0 * fine - coarse) / 3.0


class Density:
    """Base class: a probability density supported on ``[-1/2, 1/2]^d``."""

    d: int
    f_max: float
    tag: str

    def pdf(self, x) -> np.ndarray:
        raise NotImplementedError

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def power_integral(self, j: int, box=None) -> float:
        """``int_{box} f^j`` (whole cube when ``box`` is None)."""
        raise NotImplementedError

    def mass(self, box=None) -> float:
        return self.power_integral(1, box)

    def in_support(self, x) -> np.ndarray:
        x = np.atleast_2d(x)
        return np.all((x >= -0.5) & (x <= 0.5), axis=1)


@dataclass(frozen=True)
class UniformCube(Density):
    d: int = 1

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")

    @property
    def f_max(self) -> float:
        return 1.0

    @property
    def tag(self) -> str:
        return "uniform"

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.d)
        return self.in_support(x).astype(float)

    def sample(self, n: int, gen: np.random.Generator) -> np.ndarray:
        return gen.random((n, self.d)) - 0.5

    def power_integral(self, j: int, box=None) -> float:
        lo, hi = _box_in_cube(box, self.d)
        return float(np.prod(np.clip(hi - lo, 0.0, None)))


@functools.lru_cache(maxsize=None)
def _radial_moment(d: int, s: float) -> float:
    """``int_cube ||x||_2^s dx``: exact for even ``s``, Richardson-extrapolated midpoints otherwise."""
    if d == 1:
        return 2.0 * 0.5 ** (s + 1) / (s + 1)
    if s % 2 == 0:
        # (sum x_i^2)^m expanded multinomially; each axis contributes int x^(2a) / a!
        m = int(s) // 2
        axis = np.array([0.25 ** a / (2 * a + 1) / math.factorial(a) for a in range(m + 1)])
        poly = np.array([1.0])
        for _ in range(d):
            poly = np.convolve(poly, axis)[:m + 1]
        return math.factorial(m) * float(poly[m])

    def integrand(p):
        return np.sum(p * p, axis=1) ** (s / 2)

    # integrand is even in every coordinate: integrate one orthant
    return 2 ** d * _richardson_midpoint(integrand, np.zeros(d), np.full(d, 0.5), d)


@dataclass(frozen=True)
class RadialPeak(Density):
    """``f(x) = (f_max - ||x||_2^s)`` on the cube, normalised to integrate to one."""

    d: int = 1
    s: float = 2.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")
        if not self.s > 0:
            raise ValueError("exponent s must be positive")
        if self.f_max < (math.sqrt(self.d) / 2) ** self.s:
            raise ValueError("density would be negative at the cube corners")

    @property
    def f_max(self) -> float:
        return 1.0 + _radial_moment(self.d, float(self.s))

    @property
    def tag(self) -> str:
        return f"radial(s={self.s:g})"

    @property
    def gamma(self) -> float:
        """``int_{R^d} exp(-||z||_2^s) dz``."""
        sphere = 2 * math.pi ** (self.d / 2) / math.gamma(self.d / 2)
        return sphere * math.gamma(self.d / self.s) / self.s

    def pdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float).reshape(-1, self.d)
        val = self.f_max - np.sum(x * x, axis=1) ** (self.s / 2)
        return np.where(self.in_support(x), val, 0.0)

    def sample(self, n: int, gen: np.random.Generator, stats: dict | None = None) -> np.ndarray:
        out = np.empty((n, self.d))
        got = 0
        proposals = 0
        fm = self.f_max
        while got < n:
            m = int((n - got) * fm * 1.1) + 16
            prop = gen.random((m, self.d)) - 0.5
            u = gen.random(m) * fm
            mask = u < self.pdf(prop)
            acc = prop[mask]
            take = min(len(acc), n - got)
            out[got:got + take] = acc[:take]
            got += take
            # proposals consumed up to the last accepted one
            proposals += int(np.flatnonzero(mask)[take - 1]) + 1 if take < len(acc) else m
        if stats is not None:
            stats["proposals"] = stats.get("proposals", 0) + proposals
            stats["accepted"] = stats.get("accepted", 0) + n
        return out

    def power_integral(self, j: int, box=None) -> float:
        lo, hi = _box_in_cube(box, self.d)
        if np.any(hi <= lo):
            return 0.0
        return _radial_power(self.d, float(self.s), int(j), tuple(lo), tuple(hi))


@functools.lru_cache(maxsize=256)
def _radial_power(d, s, j, lo, hi):
    peak = RadialPeak(d, s)
    return _richardson_midpoint(lambda p: peak.pdf(p) ** j, np.array(lo), np.array(hi), d)


def parse_density(spec: str, d: int) -> Density:
    """``"uniform"`` or ``"radial"`` / ``"radial:s"`` / ``"radial(s=2)"``."""
    key = str(spec).strip().lower()
    if key in ("uniform", "uniformcube", "cube"):
        return UniformCube(d)
    if key.startswith("radial"):
        rest = key[len("radial"):].strip("():= s")
        return RadialPeak(d, float(rest) if rest else 2.0)
    raise ValueError(f"unknown density {spec!r}")


# -- point clouds -----------------------------------------------------------------

@dataclass
class PointCloud:
    points: np.ndarray
    density_tag: str = "uniform"
    seed: int | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        self.points = np.ascontiguousarray(pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return self.n

    def save(self, path) -> None:
        header = f"d={self.dim} n={self.n} density={self.density_tag} seed={self.seed}"
        np.savetxt(path, self.points, fmt="%.17g", header=header, comments="# ")

    @classmethod
    def load(cls, path) -> "PointCloud":
        with open(path) as fh:
            first = fh.readline()
        if not first.startswith("#"):
            raise ValueError("missing cloud header")
        fields = dict(tok.split("=", 1) for tok in first[1:].split())
        d, n = int(fields["d"]), int(fields["n"])
        pts = np.loadtxt(path, comments="#", ndmin=2).reshape(n, d)
        seed = None if fields.get("seed") in (None, "None") else int(fields["seed"])
        return cls(pts, fields.get("density", "uniform"), seed)


@dataclass
class MarkedCloud:
    """Support points with integer multiplicities."""

    points: np.ndarray
    multiplicity: np.ndarray

    @property
    def total(self) -> int:
        return int(self.multiplicity.sum())


def sample_binomial(n: int, density: Density, rng) -> PointCloud:
    """``n`` i.i.d. points with law ``density``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    gen = as_generator(rng)
    return PointCloud(density.sample(int(n), gen), density.tag, _seed_of(rng))


def sample_poisson_process(lam: float, density: Density, rng) -> PointCloud:
    """Poisson(lam) many i.i.d. points with law ``density``."""
    if not lam > 0:
        raise ValueError("intensity must be positive")
    gen = as_generator(rng)
    n = int(gen.poisson(lam))
    return PointCloud(density.sample(n, gen), density.tag, _seed_of(rng), {"N": n})


def sample_depoissonized(n: int, density: Density, rng):
    """Coupled ``(P_minus, X_n, P_plus)`` cut from one i.i.d. stream.

    ``P_minus`` keeps the first ``Po(n - n^{3/4})`` points and ``P_plus`` the
    first ``Po(n - n^{3/4}) + Po(2 n^{3/4})``; the returned flag says whether
    the realisation is nested, which fails with probability tending to zero.
    """
    gen = as_generator(rng)
    a = n ** 0.75
    n_minus = int(gen.poisson(n - a))
    extra = int(gen.poisson(2 * a))
    total = max(n, n_minus + extra)
    pts = density.sample(total, gen)
    seed = _seed_of(rng)
    clouds = (PointCloud(pts[:n_minus], density.tag, seed),
              PointCloud(pts[:n], density.tag, seed),
              PointCloud(pts[:n_minus + extra], density.tag, seed))
    return clouds, n_minus <= n <= n_minus + extra


def _check_weights(weights) -> tuple[np.ndarray, np.ndarray]:
    items = sorted((int(k), float(v)) for k, v in dict(weights).items() if v != 0)
    if not items:
        raise ValueError("weight law has no atoms")
    atoms = np.array([k for k, _ in items], dtype=np.int64)
    probs = np.array([v for _, v in items])
    if np.any(atoms < 1) or np.any(probs < 0) or abs(probs.sum() - 1.0) > 1e-9:
        raise ValueError("weights must be a probability law on positive integers")
    return atoms, probs / probs.sum()


def sample_compound_poisson_pp(mass: float, density: Density, weights, rng) -> MarkedCloud:
    """Poisson process with intensity ``mass * density``; each point carries an i.i.d. weight."""
    atoms, probs = _check_weights(weights)
    if mass < 0:
        raise ValueError("total mass must be nonnegative")
    gen = as_generator(rng)
    n = int(gen.poisson(mass)) if mass > 0 else 0
    pts = density.sample(n, gen)
    mult = atoms[gen.choice(len(atoms), size=n, p=probs)] if n else np.empty(0, np.int64)
    return MarkedCloud(pts, mult)


def box_counts(points, boxes, weights=None) -> np.ndarray:
    """Counts (weighted if ``weights`` given) in half-open boxes ``[lo, hi)``."""
    pts = np.asarray(points, dtype=float)
    out = np.zeros(len(boxes))
    if pts.size == 0:
        return out
    pts = pts.reshape(len(pts), -1)
    w = np.ones(len(pts)) if weights is None else np.asarray(weights, dtype=float)
    for b, (lo, hi) in enumerate(boxes):
        inside = np.all((pts >= np.asarray(lo)) & (pts < np.asarray(hi)), axis=1)
        out[b] = w[inside].sum()
    return out
