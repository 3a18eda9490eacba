"""Norms, unit-ball volumes and a cell-list spatial index."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend


class Norm(enum.Enum):
    """The three supported norms; ``code`` is the integer the kernels expect."""

    EUCLIDEAN = 0
    MAX = 1
    SUMABS = 2

    @property
    def code(self) -> int:
        return self.value

    @classmethod
    def parse(cls, value) -> "Norm":
        if isinstance(value, Norm):
            return value
        if isinstance(value, (int, np.integer)):
            return cls(int(value))
        key = str(value).strip().lower().replace("_", "").replace("-", "")
        aliases = {
            "euclidean": cls.EUCLIDEAN, "l2": cls.EUCLIDEAN,
            "max": cls.MAX, "maxcoordinate": cls.MAX, "linf": cls.MAX, "chebyshev": cls.MAX,
            "sumabs": cls.SUMABS, "l1": cls.SUMABS, "manhattan": cls.SUMABS,
        }
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown norm {value!r}") from None

    @property
    def tag(self) -> str:
        return {Norm.EUCLIDEAN: "euclidean", Norm.MAX: "max", Norm.SUMABS: "sumabs"}[self]


def unit_ball_volume(d: int, norm=Norm.EUCLIDEAN) -> float:
    """Lebesgue measure of the closed unit ball of ``norm`` in dimension ``d``.

    >>> unit_ball_volume(2, "max")
    4.0
    """
    if int(d) != d or d < 1:
        raise ValueError("dimension must be a positive integer")
    d = int(d)
    norm = Norm.parse(norm)
    if norm is Norm.EUCLIDEAN:
        # theta_d = theta_{d-2} 2 pi / d keeps d = 1, 2 exact
        vol = 2.0 if d % 2 else 1.0
        for m in range(2 + d % 2, d + 1, 2):
            vol *= 2 * math.pi / m
        return vol
    if norm is Norm.MAX:
        return float(2 ** d)
    return 2.0 ** d / math.factorial(d)


def norm_of(x, norm=Norm.EUCLIDEAN) -> np.ndarray:
    """Row-wise norm of ``x`` (shape ``(m, d)``), accumulated coordinate by coordinate."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    norm = Norm.parse(norm)
    s = np.zeros(x.shape[0])
    for c in range(x.shape[1]):
        t = x[:, c]
        if norm is Norm.EUCLIDEAN:
            s += t * t
        elif norm is Norm.MAX:
            np.maximum(s, np.abs(t), out=s)
        else:
            s += np.abs(t)
    return np.sqrt(s) if norm is Norm.EUCLIDEAN else s


def brute_force_distances(points, norm=Norm.EUCLIDEAN) -> np.ndarray:
    """Full distance matrix with entry ``[i, j] = ||x_j - x_i||`` in kernel arithmetic."""
    pts = _as_points(points)
    n = pts.shape[0]
    norm = Norm.parse(norm)
    s = np.zeros((n, n))
    for c in range(pts.shape[1]):
        t = pts[None, :, c] - pts[:, None, c]
        if norm is Norm.EUCLIDEAN:
            s += t * t
        elif norm is Norm.MAX:
            np.maximum(s, np.abs(t), out=s)
        else:
            s += np.abs(t)
    return np.sqrt(s) if norm is Norm.EUCLIDEAN else s


def _as_points(points, d: int | None = None) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if d in (None, 1) else pts.reshape(-1, d)
    if pts.ndim != 2:
        raise ValueError("points must be an (n, d) array")
    if pts.size and not np.all(np.isfinite(pts)):
        raise ValueError("non-finite coordinates")
    return np.ascontiguousarray(pts)


@dataclass(frozen=True)
class CellGrid:
    """Immutable uniform-bucket index over a point array.

    Points are sorted by row-major cell key; ``order[start[c]:start[c+1]]``
    lists the indices in cell ``c`` in increasing order.
    """

    points: np.ndarray
    cell_size: float
    cmin: np.ndarray
    dims: np.ndarray
    strides: np.ndarray
    start: np.ndarray
    order: np.ndarray
    requested_cell_size: float = field(default=0.0)
    backend: str = field(default="")

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        if self.n == 0:
            return np.zeros(self.d), np.zeros(self.d)
        return self.points.min(axis=0), self.points.max(axis=0)

    @property
    def buckets(self) -> dict[tuple[int, ...] | int, list[int]]:
        """Nonempty buckets keyed by absolute integer cell coordinates (an int when d=1)."""
        out = {}
        if self.n == 0:
            return out
        counts = np.diff(self.start)
        for key in np.flatnonzero(counts):
            rem = int(key)
            cc = []
            for s, m in zip(self.strides, self.cmin):
                cc.append(rem // int(s) + int(m))
                rem %= int(s)
            label = cc[0] if self.d == 1 else tuple(cc)
            out[label] = self.order[self.start[key]:self.start[key + 1]].tolist()
        return out

    def _args(self):
        return (self.points, self.cell_size, self.cmin, self.dims, self.strides,
                self.start, self.order)

    @property
    def kernels(self):
        return _backend.get(self.backend or None)

    def _check_index(self, i: int) -> int:
        if not 0 <= i < self.n:
            raise IndexError(f"point index {i} out of range for {self.n} points")
        return int(i)

    def range_neighbors(self, i: int, r: float, norm=Norm.EUCLIDEAN) -> np.ndarray:
        """Sorted indices ``j != i`` with ``||x_j - x_i|| <= r``."""
        i = self._check_index(i)
        if not r > 0:
            raise ValueError("radius must be positive")
        return self.kernels.range_query(*self._args(), i, float(r), Norm.parse(norm).code)

    def knn_distance(self, i: int, k: int, norm=Norm.EUCLIDEAN) -> float:
        """k-th smallest distance from point ``i`` to the other points."""
        i = self._check_index(i)
        if k < 1:
            raise ValueError("k must be positive")
        if k >= self.n:
            raise ValueError(f"k={k} needs at least {k + 1} points, have {self.n}")
        return float(self.kernels.knn_distance(*self._args(), i, int(k), Norm.parse(norm).code))

    def degrees(self, r: float, norm=Norm.EUCLIDEAN) -> np.ndarray:
        """Number of other points within distance ``r`` of each point."""
        if self.n == 0:
            return np.zeros(0, dtype=np.int64)
        return self.kernels.range_count(*self._args(), float(r), Norm.parse(norm).code)

    def pairs(self, r: float, norm=Norm.EUCLIDEAN):
        """Edges ``(i, j, distance)`` with ``i < j`` sorted lexicographically."""
        if self.n == 0:
            return np.empty(0, np.int64), np.empty(0, np.int64), np.empty(0)
        return self.kernels.range_pairs(*self._args(), float(r), Norm.parse(norm).code)

    def threshold(self, k: int, norm=Norm.EUCLIDEAN) -> float:
        """Minimum over points of the k-th nearest-neighbour distance."""
        if k < 1:
            raise ValueError("k must be positive")
        if k >= self.n:
            raise ValueError(f"k={k} needs at least {k + 1} points, have {self.n}")
        return float(self.kernels.threshold_radius(*self._args(), int(k), Norm.parse(norm).code))


def build_grid(points, cell_size: float, d: int | None = None, backend: str | None = None,
               max_cells: int | None = None) -> CellGrid:
    """Bucket ``points`` into cubes of side ``cell_size``.

    The side is enlarged when the bounding box would need more than
    ``max(8 n, 4096)`` cells; query results never depend on the side.
    """
    if not cell_size > 0 or not math.isfinite(cell_size):
        raise ValueError("cell_size must be positive and finite")
    pts = _as_points(points, d)
    n, dim = pts.shape
    if dim < 1:
        raise ValueError("points need at least one coordinate")
    if dim > 16:
        raise ValueError("at most 16 dimensions are supported")
    kern = _backend.get(backend)
    name = backend or _backend.BACKEND
    if n == 0:
        zeros = np.zeros(dim, dtype=np.int64)
        return CellGrid(pts, float(cell_size), zeros, zeros.copy(), zeros.copy(),
                        np.zeros(1, dtype=np.int64), np.empty(0, dtype=np.int64),
                        float(cell_size), name)
    limit = max_cells or max(8 * n, 4096)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    cell = float(cell_size)
    while True:
        cmin = np.floor(lo / cell).astype(np.int64)
        dims = np.floor(hi / cell).astype(np.int64) - cmin + 1
        ncells = float(np.prod(dims.astype(np.float64)))
        if ncells <= limit:
            break
        cell *= max((ncells / limit) ** (1.0 / dim), 1.0) * 1.01
    strides = np.ones(dim, dtype=np.int64)
    for c in range(dim - 2, -1, -1):
        strides[c] = strides[c + 1] * dims[c + 1]
    start, order = kern.layout_from_cells(pts, cell, cmin, dims, strides)
    return CellGrid(pts, cell, cmin, dims, strides, np.asarray(start), np.asarray(order),
                    float(cell_size), name)


def range_neighbors(grid: CellGrid, i: int, r: float, norm=Norm.EUCLIDEAN) -> np.ndarray:
    return grid.range_neighbors(i, r, norm)


def knn_distance(grid: CellGrid, i: int, k: int, norm=Norm.EUCLIDEAN) -> float:
    return grid.knn_distance(i, k, norm)
