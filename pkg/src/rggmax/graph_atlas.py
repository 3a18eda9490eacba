"""Small-graph canonical forms and the integral constants of extreme-degree configurations.

A graph on ``j`` vertices is stored as an integer whose bits are the upper
triangle of its adjacency matrix read row by row: pair ``(0, 1)`` is the most
significant bit and ``(j-2, j-1)`` the least.  The canonical form is the
minimum of this integer over all ``j!`` relabelings.
"""

from __future__ import annotations

import csv
import enum
import functools
import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _backend
from .geometry import Norm, unit_ball_volume
from .sampling import Density, UniformCube, as_generator

MAX_VERTICES = 8
TABLE_VERTICES = 6


# -- small graphs -----------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def pair_slots(j: int) -> tuple[tuple[int, int], ...]:
    """Vertex pairs in bit order, most significant first."""
    return tuple(itertools.combinations(range(j), 2))


@functools.lru_cache(maxsize=None)
def _slot_index(j: int) -> dict[tuple[int, int], int]:
    return {p: q for q, p in enumerate(pair_slots(j))}


@dataclass(frozen=True, order=True)
class SmallGraph:
    j: int
    code: int

    def __post_init__(self):
        if not 1 <= self.j <= MAX_VERTICES:
            raise ValueError(f"graphs must have 1..{MAX_VERTICES} vertices")
        npairs = self.j * (self.j - 1) // 2
        if not 0 <= self.code < (1 << npairs):
            raise ValueError("adjacency code out of range")

    @classmethod
    def from_edges(cls, j: int, edges) -> "SmallGraph":
        idx = _slot_index(j)
        npairs = len(idx)
        code = 0
        for a, b in edges:
            if a == b:
                raise ValueError("self-loops are not allowed")
            code |= 1 << (npairs - 1 - idx[(min(a, b), max(a, b))])
        return cls(j, code)

    @classmethod
    def from_adjacency(cls, adj) -> "SmallGraph":
        adj = np.asarray(adj, dtype=bool)
        if adj.shape[0] != adj.shape[1] or np.any(adj != adj.T) or np.any(np.diag(adj)):
            raise ValueError("adjacency must be symmetric without self-loops")
        j = adj.shape[0]
        return cls.from_edges(j, [(a, b) for a, b in pair_slots(j) if adj[a, b]])

    @property
    def npairs(self) -> int:
        return self.j * (self.j - 1) // 2

    def edges(self) -> list[tuple[int, int]]:
        n = self.npairs
        return [p for q, p in enumerate(pair_slots(self.j)) if self.code >> (n - 1 - q) & 1]

    def adjacency(self) -> np.ndarray:
        adj = np.zeros((self.j, self.j), dtype=bool)
        for a, b in self.edges():
            adj[a, b] = adj[b, a] = True
        return adj

    def degrees(self) -> np.ndarray:
        return self.adjacency().sum(axis=1)

    def is_connected(self) -> bool:
        adj = self.adjacency()
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for w in np.flatnonzero(adj[v]):
                if int(w) not in seen:
                    seen.add(int(w))
                    stack.append(int(w))
        return len(seen) == self.j

    def bitstring(self) -> str:
        return format(self.code, f"0{self.npairs}b") if self.npairs else ""


@functools.lru_cache(maxsize=None)
def _srcpos(j: int) -> np.ndarray:
    """``srcpos[p, q]``: bit position in the input code feeding slot ``q`` under permutation ``p``."""
    slots = pair_slots(j)
    idx = _slot_index(j)
    n = len(slots)
    perms = list(itertools.permutations(range(j)))
    out = np.empty((len(perms), max(n, 1)), dtype=np.int64)
    for pi, p in enumerate(perms):
        for q, (a, b) in enumerate(slots):
            u, v = p[a], p[b]
            out[pi, q] = n - 1 - idx[(min(u, v), max(u, v))]
    return out[:, :n]


def canonical_codes(j: int, codes, backend: str | None = None) -> np.ndarray:
    """Canonical code for every labeled code in ``codes``."""
    codes = np.ascontiguousarray(codes, dtype=np.int64)
    if j <= 1 or codes.size == 0:
        return codes.copy()
    if j <= TABLE_VERTICES and backend is None:
        return _table(j)[codes]
    uniq, inv = np.unique(codes, return_inverse=True)
    kern = _backend.get(backend)
    return np.asarray(kern.canonical_codes(uniq, _srcpos(j)))[inv.reshape(codes.shape)]


@functools.lru_cache(maxsize=None)
def _table(j: int) -> np.ndarray:
    npairs = j * (j - 1) // 2
    all_codes = np.arange(1 << npairs, dtype=np.int64)
    return np.asarray(_backend.get().canonical_codes(all_codes, _srcpos(j)))


def canonical_form(g: SmallGraph) -> SmallGraph:
    """Minimum adjacency code over all relabelings of ``g``."""
    if g.j > MAX_VERTICES:
        raise ValueError("graph too large")
    return SmallGraph(g.j, int(canonical_codes(g.j, [g.code])[0]))


def is_proper_interval(g: SmallGraph) -> bool:
    """Whether ``g`` is a unit interval graph, by search over vertex orderings.

    A graph is a unit interval graph iff some ordering has every closed
    neighbourhood consecutive (``a < b < c`` and ``a ~ c`` imply ``a ~ b`` and ``b ~ c``).
    """
    adj = g.adjacency()
    for order in itertools.permutations(range(g.j)):
        ok = True
        for x in range(g.j):
            for z in range(x + 2, g.j):
                if adj[order[x], order[z]]:
                    for y in range(x + 1, z):
                        if not (adj[order[x], order[y]] and adj[order[y], order[z]]):
                            ok = False
                            break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            return True
    return False


_NAMED = {
    "K2": (2, [(0, 1)]),
    "P3": (3, [(0, 1), (1, 2)]),
    "K3": (3, [(0, 1), (0, 2), (1, 2)]),
    "K1,3": (4, [(0, 1), (0, 2), (0, 3)]),
    "paw": (4, [(0, 1), (0, 2), (0, 3), (1, 2)]),
    "diamond": (4, [(0, 1), (0, 2), (0, 3), (1, 2), (2, 3)]),
    "K4": (4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]),
}


@functools.lru_cache(maxsize=None)
def _names() -> dict[tuple[int, int], str]:
    return {(j, canonical_form(SmallGraph.from_edges(j, e)).code): name
            for name, (j, e) in _NAMED.items()}


def named_graph(name: str) -> SmallGraph:
    j, edges = _NAMED[name]
    return canonical_form(SmallGraph.from_edges(j, edges))


def graph_name(g: SmallGraph) -> str:
    c = canonical_form(g)
    return _names().get((c.j, c.code), f"G{c.j}:{c.bitstring()}")


# -- classes ----------------------------------------------------------------------

class Feasibility(enum.Enum):
    YES = "yes"
    NO = "no"
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class GraphClass:
    """Isomorphism class on ``k+1`` vertices with a vertex of degree ``k``.

    ``integral`` is the Monte Carlo value of the configuration integral of the
    class indicator (the constant without the density factor).
    """

    canonical: SmallGraph
    q: int
    mu: float = float("nan")
    se: float = float("nan")
    feasible: Feasibility = Feasibility.UNDETERMINED
    integral: float = float("nan")
    integral_se: float = float("nan")
    n_samples: int = 0
    hits: int = 0

    @property
    def j(self) -> int:
        return self.canonical.j

    @property
    def k(self) -> int:
        return self.canonical.j - 1

    @property
    def name(self) -> str:
        return graph_name(self.canonical)


def _classes_on(m: int) -> list[int]:
    """Canonical codes of all graphs on ``m`` vertices, by one-vertex augmentation."""
    if m == 1:
        return [0]
    prev = _classes_on(m - 1)
    src = _slot_index(m - 1)
    dst = _slot_index(m)
    n_src, n_dst = len(src), len(dst)
    codes = []
    for c in prev:
        base = 0
        for (a, b), q in src.items():
            if c >> (n_src - 1 - q) & 1:
                base |= 1 << (n_dst - 1 - dst[(a, b)])
        for mask in range(1 << (m - 1)):
            code = base
            for v in range(m - 1):
                if mask >> v & 1:
                    code |= 1 << (n_dst - 1 - dst[(v, m - 1)])
            codes.append(code)
    return sorted(set(canonical_codes(m, np.array(codes, dtype=np.int64)).tolist()))


def enumerate_candidates(k: int) -> list[GraphClass]:
    """All classes on ``k+1`` vertices containing a vertex adjacent to all others.

    Adding a dominating vertex to each class on ``k`` vertices is a bijection
    onto these classes.  Sorted by canonical code.
    """
    if k < 1:
        raise ValueError("k must be positive")
    if k + 1 > MAX_VERTICES:
        raise ValueError(f"k+1 must be at most {MAX_VERTICES}")
    j = k + 1
    src = _slot_index(k)
    dst = _slot_index(j)
    n_src, n_dst = len(src), len(dst)
    codes = []
    for c in _classes_on(k):
        code = 0
        for (a, b), q in src.items():
            if c >> (n_src - 1 - q) & 1:
                code |= 1 << (n_dst - 1 - dst[(a, b)])
        for v in range(k):
            code |= 1 << (n_dst - 1 - dst[(v, k)])
        codes.append(code)
    canon = sorted(set(canonical_codes(j, np.array(codes, dtype=np.int64)).tolist()))
    out = []
    for c in canon:
        g = SmallGraph(j, c)
        out.append(GraphClass(g, int(np.sum(g.degrees() == k))))
    return out


# -- Monte Carlo integrals --------------------------------------------------------

def sample_ball(gen: np.random.Generator, size: tuple[int, ...], d: int, norm, radius: float) -> np.ndarray:
    """Uniform points in the closed ``norm`` ball of ``radius``; shape ``size + (d,)``."""
    norm = Norm.parse(norm)
    m = int(np.prod(size))
    if norm is Norm.MAX:
        x = (2.0 * gen.random((m, d)) - 1.0) * radius
    elif norm is Norm.EUCLIDEAN:
        g = gen.standard_normal((m, d))
        g /= np.sqrt(np.sum(g * g, axis=1, keepdims=True))
        x = g * (radius * gen.random(m) ** (1.0 / d))[:, None]
    else:
        e = gen.standard_exponential((m, d + 1))
        x = e[:, :d] / e.sum(axis=1, keepdims=True)
        x *= np.where(gen.random((m, d)) < 0.5, -1.0, 1.0) * radius
    return x.reshape(size + (d,))


def configuration_codes(pts: np.ndarray, norm, r: float = 1.0) -> np.ndarray:
    """Labeled adjacency codes of configurations ``pts`` of shape ``(batch, j, d)``."""
    norm = Norm.parse(norm)
    batch, j, d = pts.shape
    slots = pair_slots(j)
    n = len(slots)
    code = np.zeros(batch, dtype=np.int64)
    for q, (a, b) in enumerate(slots):
        s = np.zeros(batch)
        for c in range(d):
            t = pts[:, b, c] - pts[:, a, c]
            if norm is Norm.EUCLIDEAN:
                s += t * t
            elif norm is Norm.MAX:
                np.maximum(s, np.abs(t), out=s)
            else:
                s += np.abs(t)
        if norm is Norm.EUCLIDEAN:
            s = np.sqrt(s)
        code |= (s <= r).astype(np.int64) << (n - 1 - q)
    return code


def sampling_radius(k: int) -> float:
    """Radius around the anchor vertex that contains every configuration of a class.

    A dominating vertex puts all vertices within two hops of each other, so
    radius 2 suffices once ``k >= 2``; never more than ``k``.
    """
    return float(min(k, 2))


def class_hits(k: int, d: int, norm, n_samples: int, rng, batch: int = 1 << 18) -> dict[int, int]:
    """Count configurations ``{0, x_1..x_k}`` (``x`` uniform in the sampling ball) per canonical class."""
    gen = as_generator(rng)
    j = k + 1
    radius = sampling_radius(k)
    counts: dict[int, int] = {}
    done = 0
    while done < n_samples:
        b = min(batch, n_samples - done)
        pts = np.zeros((b, j, d))
        pts[:, 1:, :] = sample_ball(gen, (b, k), d, norm, radius)
        canon = canonical_codes(j, configuration_codes(pts, norm))
        uniq, cnt = np.unique(canon, return_counts=True)
        for u, c in zip(uniq.tolist(), cnt.tolist()):
            counts[u] = counts.get(u, 0) + c
        done += b
    return counts


def _certified_infeasible(g: SmallGraph, d: int) -> bool:
    # in one dimension every norm is |x| and the graphs are exactly unit interval graphs
    return d == 1 and not is_proper_interval(g)


def _finish(cls: GraphClass, hits: int, n_samples: int, k: int, d: int, norm,
            density: Density, region) -> GraphClass:
    j = cls.j
    vol = unit_ball_volume(d, norm) * sampling_radius(k) ** d
    p = hits / n_samples
    integral = vol ** (j - 1) * p
    integral_se = vol ** (j - 1) * math.sqrt(p * (1 - p) / n_samples)
    scale = density.power_integral(j, region) / math.factorial(j)
    mu, se = scale * integral, scale * integral_se
    if _certified_infeasible(cls.canonical, d):
        feasible = Feasibility.NO
    elif hits > 0 and mu > 5 * se:
        feasible = Feasibility.YES
    elif hits == 0 and n_samples >= 10 ** 7:
        feasible = Feasibility.NO
    else:
        feasible = Feasibility.UNDETERMINED
    return replace(cls, mu=mu, se=se, feasible=feasible, integral=integral,
                   integral_se=integral_se, n_samples=n_samples, hits=hits)


def estimate_mu(cls: GraphClass, d: int, norm=Norm.EUCLIDEAN, density: Density | None = None,
                region=None, n_samples: int = 10 ** 6, rng=0) -> tuple[float, float]:
    """Monte Carlo estimate and standard error of the constant of one class.

    Parameters
    ----------
    cls : GraphClass
        Class from :func:`enumerate_candidates`.
    d : int
        Ambient dimension.
    norm : Norm
        Norm defining adjacency.
    density : Density, optional
        Point density; uniform on the cube by default.
    region : (lo, hi), optional
        Box restricting the anchor integral; whole cube when omitted.
    n_samples : int
        Number of configurations drawn.
    rng : RngStream, Generator or seed

    Returns
    -------
    mu, se : float
    """
    if n_samples < 10 ** 4:
        raise ValueError("need at least 10^4 samples")
    density = density or UniformCube(d)
    k = cls.k
    hits = class_hits(k, d, norm, n_samples, rng).get(cls.canonical.code, 0)
    done = _finish(cls, hits, n_samples, k, d, norm, density, region)
    return done.mu, done.se


def estimate_class(cls: GraphClass, d: int, norm=Norm.EUCLIDEAN, density: Density | None = None,
                   region=None, n_samples: int = 10 ** 6, rng=0) -> GraphClass:
    """Like :func:`estimate_mu` but returns the filled-in class including feasibility."""
    density = density or UniformCube(d)
    hits = class_hits(cls.k, d, norm, n_samples, rng).get(cls.canonical.code, 0)
    return _finish(cls, hits, n_samples, cls.k, d, norm, density, region)


# -- atlas ------------------------------------------------------------------------

@dataclass
class Atlas:
    k: int
    d: int
    norm: Norm
    density_tag: str
    classes: list[GraphClass] = field(default_factory=list)

    @property
    def mu_dk(self) -> float:
        return float(sum(c.mu for c in self.classes if c.feasible is not Feasibility.NO))

    @property
    def mu_dk_se(self) -> float:
        # classes share samples; the multinomial variance of the sum
        live = [c for c in self.classes if c.feasible is not Feasibility.NO and c.n_samples]
        if not live:
            return 0.0
        n = live[0].n_samples
        hit = [c for c in live if c.hits]
        if not hit:
            return 0.0
        per_hit = hit[0].mu / hit[0].hits
        p = sum(c.hits for c in live) / n
        return per_hit * math.sqrt(n * p * (1 - p))

    def by_name(self, name: str) -> GraphClass:
        for c in self.classes:
            if c.name == name:
                return c
        raise KeyError(name)

    def save(self, path) -> None:
        cols = ["canonical", "q", "mu", "se", "n_samples", "d", "norm", "k",
                "feasible", "integral", "integral_se", "hits", "density"]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            for c in self.classes:
                w.writerow([c.canonical.bitstring(), c.q, repr(c.mu), repr(c.se), c.n_samples,
                            self.d, self.norm.tag, self.k, c.feasible.value, repr(c.integral),
                            repr(c.integral_se), c.hits, self.density_tag])

    @classmethod
    def load(cls, path) -> "Atlas":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        if not rows:
            raise ValueError("empty atlas file")
        k, d = int(rows[0]["k"]), int(rows[0]["d"])
        atlas = cls(k, d, Norm.parse(rows[0]["norm"]), rows[0]["density"])
        for r in rows:
            g = SmallGraph(k + 1, int(r["canonical"], 2) if r["canonical"] else 0)
            atlas.classes.append(GraphClass(
                g, int(r["q"]), float(r["mu"]), float(r["se"]), Feasibility(r["feasible"]),
                float(r["integral"]), float(r["integral_se"]), int(r["n_samples"]), int(r["hits"])))
        return atlas


def build_atlas(k: int, d: int, norm=Norm.EUCLIDEAN, density: Density | None = None,
                n_samples: int = 10 ** 6, rng=0, region=None, cache=None) -> Atlas:
    """Estimate every candidate class jointly from one stream of configurations.

    ``cache`` names a CSV file that is read if it matches the request and
    written otherwise.
    """
    density = density or UniformCube(d)
    norm = Norm.parse(norm)
    if cache is not None and region is None:
        try:
            atlas = Atlas.load(cache)
            c0 = atlas.classes[0] if atlas.classes else None
            if (atlas.k, atlas.d, atlas.norm, atlas.density_tag) == (k, d, norm, density.tag) \
                    and c0 is not None and c0.n_samples >= n_samples:
                return atlas
        except (OSError, ValueError, KeyError):
            pass
    hits = class_hits(k, d, norm, n_samples, rng)
    classes = [_finish(c, hits.get(c.canonical.code, 0), n_samples, k, d, norm, density, region)
               for c in enumerate_candidates(k)]
    atlas = Atlas(k, d, norm, density.tag, classes)
    if cache is not None and region is None:
        atlas.save(cache)
    return atlas


def lambda_x0(atlas: Atlas, f_at_x0: float) -> float:
    """Intensity of the rescaled extreme-vertex process near a point with density ``f_at_x0``."""
    if f_at_x0 < 0:
        raise ValueError("density value must be nonnegative")
    if f_at_x0 == 0:
        return 0.0
    j = atlas.k + 1
    total = sum(c.integral for c in atlas.classes if c.feasible is not Feasibility.NO)
    return f_at_x0 ** j / math.factorial(j) * total


def weight_law(atlas: Atlas) -> dict[int, float]:
    """Law of the multiplicity attached to each extreme cluster."""
    mass: dict[int, float] = {}
    for c in atlas.classes:
        if c.feasible is not Feasibility.NO and c.mu > 0:
            mass[c.q] = mass.get(c.q, 0.0) + c.mu
    total = sum(mass.values())
    if not total > 0:
        raise ValueError("atlas has no feasible class")
    law = {q: m / total for q, m in sorted(mass.items())}
    # renormalise so the probabilities sum to one in floating point
    last = max(law)
    law[last] = 1.0 - sum(v for q, v in law.items() if q != last)
    return law
