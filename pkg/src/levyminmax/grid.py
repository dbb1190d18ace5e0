"""Dyadic lattices, grid functions, and pointwise smooth-function data.

The lattice at refinement level ``n`` has spacing ``2**-n`` and carries real
values on the nodes of a centered box.  Node coordinates are stored as exact
integer multi-indices scaled by the spacing, so translation, nesting and
restriction tests are free of float drift.  Reads outside the box return 0,
matching the convention that grid functions vanish outside their box.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np


class GridError(ValueError):
    pass


# desk-scale caps: refinement beyond this is out of contract for each dimension
_LEVEL_CAPS = {1: 6, 2: 4, 3: 3}
# node budgets implied by the level caps at their default boxes
_NODE_CAPS = {1: 2 * 4096 + 1, 2: 513 ** 2, 3: 129 ** 3}

ON_LATTICE_TOL = 1e-13


@dataclass(frozen=True)
class RegularityClass:
    """Smoothness label beta in (0,3), with a strict flag at integer values.

    Non-strict integer exponents mean "derivatives up to beta-1 plus a
    Lipschitz top derivative" (so beta=2 is C^{1,1}); the strict flag instead
    reads an integer beta as "beta continuous derivatives, no seminorm".
    The flag only matters for norm bookkeeping, never for stencil selection.
    """

    exponent: float
    strict: bool = False

    def __post_init__(self):
        if not (0.0 < self.exponent < 3.0):
            raise GridError(f"regularity exponent must lie in (0,3), got {self.exponent}")
        if self.strict and self.exponent != int(self.exponent):
            raise GridError("strict flag is only meaningful at integer exponents")

    @property
    def case(self) -> int:
        """0: constants, 1: affine data (beta>=1), 2: quadratic data (beta>=2)."""
        b = self.exponent
        if b < 1.0:
            return 0
        if b < 2.0:
            return 1
        return 2

    @property
    def derivative_order(self) -> int:
        """Order m of the highest derivative carried by the class."""
        b = self.exponent
        if b == int(b):
            return int(b) if self.strict else int(b) - 1
        return int(math.floor(b))

    @property
    def holder_exponent(self) -> float:
        """Seminorm exponent s of the top derivative; s=1 means Lipschitz."""
        b = self.exponent
        if b == int(b):
            return 0.0 if self.strict else 1.0
        return b - math.floor(b)


class SmoothFn:
    """Pointwise data of a function: value, gradient and Hessian evaluators.

    Parameters
    ----------
    value : callable
        x (shape (d,)) -> float.
    grad : callable or None
        x -> ndarray (d,).  Required when cls.case >= 1.
    hess : callable or None
        x -> ndarray (d,d).  Required when cls.case >= 2.
    cls : RegularityClass
        Declared smoothness of the data.
    """

    def __init__(self, value, grad=None, hess=None,
                 cls: RegularityClass = RegularityClass(2.0),
                 name: str = "", values=None):
        self._value = value
        self._grad = grad
        self._hess = hess
        self._values = values
        self.cls = cls
        self.name = name

    def value(self, x) -> float:
        v = float(self._value(np.asarray(x, dtype=float)))
        return v

    def values(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        if self._values is not None:
            return np.asarray(self._values(pts), dtype=float)
        return np.array([self.value(p) for p in pts], dtype=float)

    def grad(self, x) -> np.ndarray:
        if self._grad is None:
            raise GridError(f"function {self.name!r} carries no gradient data")
        return np.asarray(self._grad(np.asarray(x, dtype=float)), dtype=float)

    def hess(self, x) -> np.ndarray:
        if self._hess is None:
            raise GridError(f"function {self.name!r} carries no Hessian data")
        return np.asarray(self._hess(np.asarray(x, dtype=float)), dtype=float)


@dataclass(frozen=True)
class DyadicGrid:
    """Truncated dyadic lattice: spacing 2**-level, box [-box_radius, box_radius]^dim.

    box_radius defaults to 2**level and must be a positive multiple of the
    spacing so that the box boundary lies on nodes.
    """

    level: int
    dim: int
    box_radius: float = -1.0  # sentinel: default 2**level

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise GridError(f"dim must be 1, 2 or 3, got {self.dim}")
        if not (isinstance(self.level, (int, np.integer)) and 0 <= self.level <= 20):
            raise GridError(f"level must be an integer in [0, 20], got {self.level}")
        if self.box_radius == -1.0:
            if self.level > _LEVEL_CAPS[self.dim]:
                raise GridError(
                    f"level {self.level} with the default box exceeds the "
                    f"desk-scale node budget; cap is {_LEVEL_CAPS[self.dim]} "
                    f"for dim {self.dim} (shrink box_radius to go finer)")
            object.__setattr__(self, "box_radius", float(2 ** self.level))
        r = self.box_radius
        n_half = r / self.spacing
        if not (r > 0 and abs(n_half - round(n_half)) < 1e-9):
            raise GridError(f"box_radius {r} is not a positive multiple of spacing {self.spacing}")
        if self.node_count > _NODE_CAPS[self.dim]:
            raise GridError(
                f"grid would hold {self.node_count} nodes, above the "
                f"desk-scale cap {_NODE_CAPS[self.dim]} for dim {self.dim}")

    @property
    def spacing(self) -> float:
        return 2.0 ** (-self.level)

    @property
    def half_count(self) -> int:
        """N such that node indices run over [-N, N]^dim."""
        return int(round(self.box_radius / self.spacing))

    @property
    def shape(self) -> tuple:
        n = 2 * self.half_count + 1
        return (n,) * self.dim

    @property
    def node_count(self) -> int:
        return (2 * self.half_count + 1) ** self.dim

    def point_of(self, index) -> np.ndarray:
        return np.asarray(index, dtype=float) * self.spacing

    def index_of(self, point, tol: float = 1e-9) -> np.ndarray:
        """Exact lattice index of a point; error if the point is off-lattice."""
        q = np.asarray(point, dtype=float) / self.spacing
        idx = np.rint(q)
        if np.max(np.abs(q - idx)) > tol:
            raise GridError(f"point {point} is not on the level-{self.level} lattice")
        return idx.astype(np.int64)

    def contains_index(self, index) -> bool:
        return bool(np.all(np.abs(np.asarray(index)) <= self.half_count))

    def indices(self) -> np.ndarray:
        """All node indices, shape (node_count, dim), lexicographic order."""
        return _index_array(self.level, self.dim, self.half_count)

    def points(self) -> np.ndarray:
        return self.indices() * self.spacing


@lru_cache(maxsize=32)
def _index_array(level: int, dim: int, half: int) -> np.ndarray:
    ax = np.arange(-half, half + 1, dtype=np.int64)
    grids = np.meshgrid(*([ax] * dim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


class NearestNode(NamedTuple):
    index: np.ndarray
    point: np.ndarray
    distance: float
    tie: bool


def nearest_node(x, g: DyadicGrid) -> NearestNode:
    """Closest in-box node to x; ties within 1e-13 of the best distance are flagged.

    Candidates are the floor/ceil corners per coordinate (clipped to the box),
    which always contain the true minimizer.
    """
    x = np.asarray(x, dtype=float)
    h, n = g.spacing, g.half_count
    q = x / h
    lo = np.clip(np.floor(q).astype(np.int64), -n, n)
    hi = np.clip(np.ceil(q).astype(np.int64), -n, n)
    seen = {}
    for corner in range(2 ** g.dim):
        idx = tuple(int(hi[i]) if (corner >> i) & 1 else int(lo[i]) for i in range(g.dim))
        if idx in seen:
            continue
        node = np.array(idx, dtype=np.int64)
        seen[idx] = math.sqrt(float(np.sum((x - node * h) ** 2)))
    ranked = sorted(seen.items(), key=lambda kv: kv[1])
    best_idx, dist = ranked[0]
    tie = len(ranked) > 1 and ranked[1][1] - dist < ON_LATTICE_TOL
    return NearestNode(np.array(best_idx, dtype=np.int64), np.array(best_idx) * h, dist, tie)


class GridFunction:
    """Real values on the nodes of a DyadicGrid.  Immutable after construction.

    Reads at indices outside the box return 0 (``pad``); the strict accessor
    ``value`` raises instead.  This zero-padding is the declared out-of-box
    policy for translated data.
    """

    def __init__(self, grid: DyadicGrid, values: np.ndarray):
        values = np.asarray(values, dtype=float)
        if values.shape != grid.shape:
            raise GridError(f"values shape {values.shape} != grid shape {grid.shape}")
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0] - grid.half_count
            raise GridError(f"non-finite value at node {tuple(int(b) for b in bad)}")
        self.grid = grid
        self._values = values.copy()
        self._values.setflags(write=False)

    @property
    def values(self) -> np.ndarray:
        return self._values

    def _pos(self, index) -> tuple:
        n = self.grid.half_count
        return tuple(int(i) + n for i in np.atleast_1d(np.asarray(index, dtype=np.int64)))

    def value(self, index) -> float:
        if not self.grid.contains_index(index):
            raise GridError(f"node {index} outside box of half-count {self.grid.half_count}")
        return float(self._values[self._pos(index)])

    def pad(self, index) -> float:
        """Zero-padded read: 0 for indices outside the box."""
        if not self.grid.contains_index(index):
            return 0.0
        return float(self._values[self._pos(index)])

    def flat(self) -> np.ndarray:
        return self._values.ravel()

    # --- algebra (used by the differential-sampling machinery) ---

    def _binary(self, other, op) -> "GridFunction":
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise GridError("grid mismatch")
            return GridFunction(self.grid, op(self._values, other._values))
        return GridFunction(self.grid, op(self._values, other))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        return GridFunction(self.grid, self._values * float(scalar))

    __rmul__ = __mul__

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self._values)))

    # --- serialization ---

    def to_json(self) -> str:
        idx = self.grid.indices()
        vals = self._values.ravel()
        payload = {
            "dim": self.grid.dim,
            "level": self.grid.level,
            "box_radius": self.grid.box_radius,
            "values": [[[int(i) for i in row], float(v)] for row, v in zip(idx, vals)],
        }
        return json.dumps(payload, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "GridFunction":
        payload = json.loads(text)
        g = DyadicGrid(payload["level"], payload["dim"], float(payload["box_radius"]))
        values = np.zeros(g.shape)
        n = g.half_count
        for row, v in payload["values"]:
            pos = tuple(int(i) + n for i in row)
            values[pos] = float(v)
        return GridFunction(g, values)

    def to_csv(self, path) -> None:
        idx = self.grid.indices()
        pts = idx * self.grid.spacing
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow([f"x_{i+1}" for i in range(self.grid.dim)] + ["value"])
            for p, v in zip(pts, self._values.ravel()):
                w.writerow([repr(float(c)) for c in p] + [repr(float(v))])


def grid_function_from_flat(g: DyadicGrid, flat: np.ndarray) -> GridFunction:
    return GridFunction(g, np.asarray(flat, dtype=float).reshape(g.shape))


def basis_indicator(g: DyadicGrid, index) -> GridFunction:
    """Indicator of a single node."""
    values = np.zeros(g.shape)
    n = g.half_count
    values[tuple(int(i) + n for i in np.atleast_1d(index))] = 1.0
    return GridFunction(g, values)


def restrict(u: SmoothFn, g: DyadicGrid) -> GridFunction:
    """Sample a function on every node of the grid."""
    pts = g.points()
    vals = u.values(pts)
    if not np.all(np.isfinite(vals)):
        bad = pts[~np.isfinite(vals)][0]
        raise GridError(f"non-finite sample at node {tuple(bad)}")
    return GridFunction(g, vals.reshape(g.shape))


def truncate(u: GridFunction) -> GridFunction:
    """Zero all values outside [-2**level, 2**level]^dim; inside unchanged."""
    g = u.grid
    cut = float(2 ** g.level)
    if g.box_radius <= cut:
        return GridFunction(g, u.values)
    keep = int(round(cut / g.spacing))
    n = g.half_count
    vals = u.values.copy()
    mask_ax = np.abs(np.arange(-n, n + 1)) > keep
    for axis in range(g.dim):
        sl = [slice(None)] * g.dim
        sl[axis] = mask_ax
        vals[tuple(sl)] = 0.0
    return GridFunction(g, vals)


def translate(u: GridFunction, z) -> GridFunction:
    """Shifted copy: result(x) = u(x + z) with zero padding outside the box.

    z must lie on the lattice (given either as an index vector of ints or as
    a point whose coordinates are multiples of the spacing).
    """
    g = u.grid
    z = np.asarray(z)
    if np.issubdtype(z.dtype, np.integer):
        zidx = z.astype(np.int64)
    else:
        q = z.astype(float) / g.spacing
        zidx = np.rint(q).astype(np.int64)
        if np.max(np.abs(q - zidx)) > 1e-9:
            raise GridError(f"shift {z} is not on the level-{g.level} lattice")
    n = g.half_count
    out = np.zeros(g.shape)
    # destination index i reads source index i + zidx
    src_lo = np.maximum(-n, -n - zidx)
    src_hi = np.minimum(n, n - zidx)
    if np.any(src_lo > src_hi):
        return GridFunction(g, out)
    dst = tuple(slice(int(src_lo[i] + n), int(src_hi[i] + n + 1)) for i in range(g.dim))
    src = tuple(slice(int(src_lo[i] + zidx[i] + n), int(src_hi[i] + zidx[i] + n + 1))
                for i in range(g.dim))
    out[dst] = u.values[src]
    return GridFunction(g, out)
