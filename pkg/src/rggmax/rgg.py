"""Degree functionals of the geometric graph on a point cloud."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .geometry import CellGrid, Norm, build_grid
from .graph_atlas import GraphClass, SmallGraph, canonical_codes, pair_slots
from .sampling import PointCloud


def _points(obj) -> np.ndarray:
    if isinstance(obj, (PointCloud, ExtremeSet)):
        return obj.points
    pts = np.asarray(obj, dtype=np.float64)
    return pts.reshape(-1, 1) if pts.ndim == 1 else pts


def grid_for_radius(points, r: float) -> CellGrid:
    """Index with cells of side ``r`` (enlarged automatically for sparse clouds)."""
    return build_grid(points, r)


def grid_for_knn(points, k: int) -> CellGrid:
    """Index sized for nearest-neighbour search: about two points per cell."""
    pts = _points(points)
    n, d = pts.shape
    if n == 0:
        return build_grid(pts, 1.0)
    extent = np.ptp(pts, axis=0)
    extent = np.where(extent > 0, extent, 1.0)
    cell = (2.0 * float(np.prod(extent)) / n) ** (1.0 / d)
    return build_grid(pts, cell)


@dataclass
class DegreeProfile:
    degrees: np.ndarray
    counts: np.ndarray  # counts[j] = number of vertices of degree j
    max_degree: int

    @property
    def n(self) -> int:
        return len(self.degrees)

    def W(self, j: int) -> int:
        return int(self.counts[j]) if 0 <= j < len(self.counts) else 0

    def at_least(self, j: int) -> int:
        """Number of vertices with degree ``>= j``."""
        return int(self.counts[max(j, 0):].sum())

    @property
    def edge_count(self) -> int:
        return int(self.degrees.sum()) // 2


def degree_profile(cloud, r: float, norm=Norm.EUCLIDEAN, grid: CellGrid | None = None) -> DegreeProfile:
    """Degrees of ``G(cloud; r)`` (closed balls) with their histogram and maximum."""
    if not r > 0:
        raise ValueError("radius must be positive")
    pts = _points(cloud)
    if len(pts) == 0:
        return DegreeProfile(np.zeros(0, dtype=np.int64), np.zeros(1, dtype=np.int64), 0)
    grid = grid or grid_for_radius(pts, r)
    deg = grid.degrees(r, norm)
    return DegreeProfile(deg, np.bincount(deg), int(deg.max()))


def threshold_radius(cloud, k: int, norm=Norm.EUCLIDEAN, grid: CellGrid | None = None) -> float:
    """Smallest radius at which some vertex reaches degree ``k``.

    Equals the minimum over points of the distance to their ``k``-th nearest
    neighbour, computed exactly.
    """
    pts = _points(cloud)
    n = len(pts)
    if k < 1:
        raise ValueError("k must be positive")
    if k >= n:
        raise ValueError(f"k={k} needs at least {k + 1} points, have {n}")
    grid = grid or grid_for_knn(pts, k)
    return grid.threshold(k, norm)


# -- extreme vertices -------------------------------------------------------------

@dataclass(frozen=True)
class ExactDegree:
    k: int


@dataclass(frozen=True)
class MaxDegree:
    pass


@dataclass
class ExtremeSet:
    indices: np.ndarray
    points: np.ndarray
    tag: object

    def __len__(self) -> int:
        return len(self.indices)


def extreme_points(cloud, r: float, norm=Norm.EUCLIDEAN, tag=MaxDegree(),
                   profile: DegreeProfile | None = None) -> ExtremeSet:
    """Vertices of degree exactly ``k`` or of maximum degree."""
    pts = _points(cloud)
    prof = profile or degree_profile(pts, r, norm)
    if isinstance(tag, ExactDegree):
        idx = np.flatnonzero(prof.degrees == tag.k)
    elif isinstance(tag, MaxDegree):
        idx = np.flatnonzero(prof.degrees == prof.max_degree) if len(pts) else np.empty(0, np.int64)
    else:
        raise TypeError("tag must be ExactDegree(k) or MaxDegree()")
    return ExtremeSet(idx, pts[idx], tag)


def degree_point_process(cloud, r: float, norm=Norm.EUCLIDEAN, k: int = 1, decompose: bool = False,
                         grid: CellGrid | None = None):
    """Support of the process of degree-``k`` vertices.

    With ``decompose=True`` also returns, per canonical class on ``k+1``
    vertices, the representatives of its induced copies (see
    :func:`cluster_representatives`).
    """
    pts = _points(cloud)
    grid = grid or (grid_for_radius(pts, r) if len(pts) else None)
    prof = degree_profile(pts, r, norm, grid)
    ext = extreme_points(pts, r, norm, ExactDegree(k), prof)
    if not decompose:
        return ext
    return ext, cluster_representatives(pts, r, norm, k, grid)


def scale_translate(obj, a: float, y):
    """Apply ``x -> a (x + y)`` to every point, returning an object of the same kind."""
    if not a > 0:
        raise ValueError("scale must be positive")
    pts = _points(obj)
    out = a * (pts + np.asarray(y, dtype=float).reshape(1, -1))
    if isinstance(obj, PointCloud):
        return PointCloud(out, obj.density_tag, obj.seed, dict(obj.meta))
    if isinstance(obj, ExtremeSet):
        return ExtremeSet(obj.indices.copy(), out, obj.tag)
    return out


# -- induced subgraphs ------------------------------------------------------------

def adjacency_lists(cloud, r: float, norm=Norm.EUCLIDEAN, grid: CellGrid | None = None):
    """Sorted neighbour arrays of ``G(cloud; r)``."""
    pts = _points(cloud)
    n = len(pts)
    if n == 0:
        return []
    grid = grid or grid_for_radius(pts, r)
    ii, jj, _ = grid.pairs(r, norm)
    src = np.concatenate((ii, jj))
    dst = np.concatenate((jj, ii))
    perm = np.lexsort((dst, src))
    src, dst = src[perm], dst[perm]
    bounds = np.searchsorted(src, np.arange(n + 1))
    return [dst[bounds[v]:bounds[v + 1]] for v in range(n)]


def connected_subsets(adj, j: int):
    """Every connected vertex set of size ``j``, each once, rooted at its minimum index."""
    n = len(adj)
    nbr = [set(a.tolist()) for a in adj]

    def extend(sub, ext, closed, root):
        if len(sub) == j:
            yield tuple(sorted(sub))
            return
        ext = list(ext)
        while ext:
            w = ext.pop()
            # exclusive neighbours of w: larger than the root, outside the current closed neighbourhood
            new = [u for u in nbr[w] if u > root and u not in closed]
            yield from extend(sub + [w], ext + new, closed | nbr[w] | {w}, root)

    for v in range(n):
        ext = [u for u in nbr[v] if u > v]
        yield from extend([v], ext, nbr[v] | {v}, v)


def _subset_codes(adjsets, subsets, j):
    slots = pair_slots(j)
    n = len(slots)
    codes = np.zeros(len(subsets), dtype=np.int64)
    for s, sub in enumerate(subsets):
        c = 0
        for q, (a, b) in enumerate(slots):
            if sub[b] in adjsets[sub[a]]:
                c |= 1 << (n - 1 - q)
        codes[s] = c
    return codes


# all j-subsets are scanned with numpy when there are at most this many
DENSE_SUBSET_LIMIT = 1_000_000


def _dense_class_counts(adj, j):
    n = len(adj)
    mat = np.zeros((n, n), dtype=bool)
    for v, nb in enumerate(adj):
        mat[v, nb] = True
    flat = itertools.chain.from_iterable(itertools.combinations(range(n), j))
    subsets = np.fromiter(flat, dtype=np.int64).reshape(-1, j)
    slots = pair_slots(j)
    codes = np.zeros(len(subsets), dtype=np.int64)
    for q, (a, b) in enumerate(slots):
        codes |= mat[subsets[:, a], subsets[:, b]].astype(np.int64) << (len(slots) - 1 - q)
    uniq, cnt = np.unique(canonical_codes(j, codes), return_counts=True)
    return {c: m for c, m in zip(uniq.tolist(), cnt.tolist()) if SmallGraph(j, c).is_connected()}


def induced_class_counts(cloud, r: float, norm=Norm.EUCLIDEAN, j: int = 3,
                         grid: CellGrid | None = None, dense: bool | None = None) -> dict[int, int]:
    """Counts of connected induced ``j``-vertex subgraphs keyed by canonical code.

    ``dense`` forces (True) or forbids (False) the all-subsets scan; by default
    it is used when there are at most ``DENSE_SUBSET_LIMIT`` subsets.
    """
    adj = adjacency_lists(cloud, r, norm, grid)
    if dense is None:
        dense = math.comb(len(adj), j) <= DENSE_SUBSET_LIMIT
    if dense and len(adj) >= j:
        return _dense_class_counts(adj, j)
    subsets = list(connected_subsets(adj, j))
    if not subsets:
        return {}
    adjsets = [set(a.tolist()) for a in adj]
    canon = canonical_codes(j, _subset_codes(adjsets, subsets, j))
    uniq, cnt = np.unique(canon, return_counts=True)
    return dict(zip(uniq.tolist(), cnt.tolist()))


def induced_subgraph_count(cloud, r: float, norm=Norm.EUCLIDEAN, gamma=None,
                           grid: CellGrid | None = None) -> int:
    """Number of vertex subsets whose induced graph is isomorphic to ``gamma``.

    Connected ``gamma`` is counted by rooted expansion over the graph; for a
    disconnected ``gamma`` every subset is examined, which is only practical
    for small clouds.
    """
    g = gamma.canonical if isinstance(gamma, GraphClass) else gamma
    if not isinstance(g, SmallGraph):
        raise TypeError("gamma must be a SmallGraph or GraphClass")
    if g.j > 6:
        raise ValueError("induced subgraph counting supports at most 6 vertices")
    if not r > 0:
        raise ValueError("radius must be positive")
    target = int(canonical_codes(g.j, [g.code])[0])
    pts = _points(cloud)
    if g.j > len(pts):
        return 0
    if g.j == 1:
        return len(pts)
    if g.is_connected():
        return induced_class_counts(pts, r, norm, g.j, grid).get(target, 0)
    if math.comb(len(pts), g.j) > 5_000_000:
        raise ValueError("too many subsets for a disconnected pattern")
    adj = adjacency_lists(pts, r, norm, grid)
    adjsets = [set(a.tolist()) for a in adj]
    subsets = list(itertools.combinations(range(len(pts)), g.j))
    canon = canonical_codes(g.j, _subset_codes(adjsets, subsets, g.j))
    return int(np.sum(canon == target))


def components(cloud, r: float, norm=Norm.EUCLIDEAN, grid: CellGrid | None = None) -> np.ndarray:
    """Connected-component label of every vertex."""
    pts = _points(cloud)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    grid = grid or grid_for_radius(pts, r)
    ii, jj, _ = grid.pairs(r, norm)
    mat = coo_matrix((np.ones(len(ii)), (ii, jj)), shape=(n, n))
    return connected_components(mat, directed=False)[1]


def _lexmin(pts, idx):
    sub = pts[idx]
    return int(idx[np.lexsort(sub.T[::-1])[0]])


def cluster_representatives(cloud, r: float, norm=Norm.EUCLIDEAN, k: int = 1,
                            grid: CellGrid | None = None):
    """Support of the per-class cluster processes.

    For every induced ``(k+1)``-vertex subgraph containing a degree-``k``
    vertex, the lexicographically smallest of its degree-``k`` vertices.
    Returns a dict from canonical code to the sorted array of distinct
    representative indices.
    """
    pts = _points(cloud)
    j = k + 1
    adj = adjacency_lists(pts, r, norm, grid)
    adjsets = [set(a.tolist()) for a in adj]
    out: dict[int, set] = {}
    subsets = list(connected_subsets(adj, j))
    if not subsets:
        return {}
    canon = canonical_codes(j, _subset_codes(adjsets, subsets, j))
    for sub, code in zip(subsets, canon.tolist()):
        sub = np.array(sub)
        deg = np.array([sum(1 for u in sub if u != v and u in adjsets[v]) for v in sub])
        top = sub[deg == k]
        if len(top) == 0:
            continue
        out.setdefault(code, set()).add(_lexmin(pts, top))
    return {c: np.array(sorted(v), dtype=np.int64) for c, v in out.items()}
