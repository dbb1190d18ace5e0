"""Generalized differentials of nonsmooth discrete operators.

An operator here is any map on flat node vectors (the lexicographic grid
ordering).  Jacobians are measured by central differences one basis column
at a time; near a kink the two half-step measurements disagree, which is
exactly the detection signal.  Sampling Jacobians near a point (and along
segments) produces a finite stand-in for the generalized differential:
enough for mean-value residuals, min-max evaluation, and row-by-row
coefficient extraction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .courrege import RowFunctional, decompose, reconstruct_residual
from .grid import DyadicGrid, GridError

DEDUP_TOL = 1e-10
KINK_FACTOR = 10.0


class ClarkeError(GridError):
    """Raised for ill-posed differential sampling requests."""


def _apply(op, vec: np.ndarray) -> np.ndarray:
    out = np.asarray(op(np.asarray(vec, dtype=float)), dtype=float)
    if out.shape != vec.shape:
        raise ClarkeError(f"operator returned shape {out.shape}, "
                          f"expected {vec.shape}")
    return out


def default_step(v: np.ndarray) -> float:
    peak = float(np.max(np.abs(v))) if v.size else 0.0
    return 1e-5 * (1.0 + peak)


@dataclass(frozen=True)
class JacobianSample:
    """Central-difference Jacobian at a point, with a kink flag.

    kink is set when halving the step moves the matrix by more than
    KINK_FACTOR * step, which a twice-differentiable map cannot do.
    """

    point: np.ndarray
    matrix: np.ndarray
    step: float
    kink: bool


def jacobian_at(op, v, step: float | None = None) -> JacobianSample:
    v = np.atleast_1d(np.asarray(v, dtype=float))
    s = default_step(v) if step is None else float(step)
    if s <= 0:
        raise ClarkeError(f"step must be positive, got {s}")
    full = _matrix(op, v, s)
    half = _matrix(op, v, 0.5 * s)
    drift = float(np.max(np.abs(full - half)))
    return JacobianSample(point=v, matrix=half, step=s,
                          kink=drift > KINK_FACTOR * s)


def _matrix(op, v: np.ndarray, s: float) -> np.ndarray:
    n = v.size
    cols = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = s
        cols[:, j] = (_apply(op, v + e) - _apply(op, v - e)) / (2.0 * s)
        e[j] = 0.0
    return cols


@dataclass
class ClarkeSet:
    """Deduplicated Jacobian samples standing in for the differential at v."""

    point: np.ndarray
    members: list = field(default_factory=list)
    kinked: bool = False

    def add(self, sample: JacobianSample) -> bool:
        m = sample.matrix
        for other in self.members:
            if float(np.max(np.abs(other - m))) <= DEDUP_TOL:
                return False
        self.members.append(m)
        self.kinked = self.kinked or sample.kink
        return True

    def __len__(self) -> int:
        return len(self.members)

    def stacked(self) -> np.ndarray:
        if not self.members:
            raise ClarkeError("empty differential sample")
        return np.stack(self.members)


def sample_differential(op, v, samples: int = 8, radius: float = 1e-4,
                        seed: int = 0, step: float | None = None) -> ClarkeSet:
    """Jacobians at v and at nearby random points, deduplicated."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    out = ClarkeSet(point=v)
    out.add(jacobian_at(op, v, step))
    rng = np.random.default_rng(seed)
    for _ in range(max(0, samples - 1)):
        d = rng.standard_normal(v.size)
        d *= radius / max(float(np.max(np.abs(d))), 1e-300)
        out.add(jacobian_at(op, v + d, step))
    return out


def segment_differential(op, v, u, count: int = 9,
                         step: float | None = None) -> ClarkeSet:
    """Jacobians sampled along the segment from v to u (both ends included)."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if count < 2:
        raise ClarkeError("segment sampling needs at least the two endpoints")
    out = ClarkeSet(point=v)
    for t in np.linspace(0.0, 1.0, count):
        out.add(jacobian_at(op, (1.0 - t) * v + t * u, step))
    return out


def project_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort based)."""
    y = np.asarray(y, dtype=float)
    u = np.sort(y)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, y.size + 1)
    cond = u - css / ks > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = css[rho] / (rho + 1.0)
    return np.maximum(y - theta, 0.0)


@dataclass(frozen=True)
class MeanValueReport:
    """Best fit of T(u)-T(v) by a convex combination of sampled Jacobians."""

    residual: float
    weights: np.ndarray
    iterations: int
    converged: bool


def mean_value_residual(op, u, v, diff: ClarkeSet | None = None,
                        iters: int = 500, tol: float = 1e-10) -> MeanValueReport:
    """Solve the simplex least squares fit for the mean value identity.

    The increment T(u) - T(v) should lie in the convex hull of the sampled
    Jacobians applied to u - v.  Projected gradient on the simplex; the
    returned residual is the max-norm defect of the best fit.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if diff is None:
        diff = segment_differential(op, v, u)
    rhs = _apply(op, u) - _apply(op, v)
    cols = diff.stacked() @ (u - v)          # (m, n): each row one candidate
    g = cols.T                               # (n, m)
    m = g.shape[1]
    lam = np.full(m, 1.0 / m)
    gtg = g.T @ g
    lip = float(np.linalg.norm(gtg, 2))
    alpha = 1.0 / lip if lip > 0 else 1.0
    it = 0
    converged = False
    for it in range(1, iters + 1):
        grad = gtg @ lam - g.T @ rhs
        nxt = project_simplex(lam - alpha * grad)
        if float(np.max(np.abs(nxt - lam))) < tol:
            lam = nxt
            converged = True
            break
        lam = nxt
    res = float(np.max(np.abs(g @ lam - rhs)))
    return MeanValueReport(residual=res, weights=lam, iterations=it,
                           converged=converged)


@dataclass(frozen=True)
class MinMaxReport:
    """Pointwise min over probes of max over sampled linearizations."""

    values: np.ndarray
    direct: np.ndarray
    gap: float
    argmin: np.ndarray


def minmax_eval(op, u, probes, count: int = 9,
                step: float | None = None) -> MinMaxReport:
    """Evaluate the min-max form of the operator at u.

    For each probe v the inner layer is T(v) plus the componentwise max of
    J (u - v) over Jacobians sampled along the segment from v to u; the
    outer layer is the componentwise min over probes.  With u among the
    probes the result reproduces T(u) up to the sampling defect, reported
    as the max-norm gap.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    if not probes:
        raise ClarkeError("need at least one probe")
    direct = _apply(op, u)
    best = None
    argmin = None
    for p, v in enumerate(probes):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        diff = segment_differential(op, v, u, count=count, step=step)
        inner = _apply(op, v) + np.max(diff.stacked() @ (u - v), axis=0)
        if best is None:
            best = inner
            argmin = np.full(u.size, p)
        else:
            take = inner < best
            best = np.where(take, inner, best)
            argmin = np.where(take, p, argmin)
    gap = float(np.max(np.abs(best - direct)))
    return MinMaxReport(values=best, direct=direct, gap=gap, argmin=argmin)


def upper_directional(op, v, w, diff: ClarkeSet | None = None) -> np.ndarray:
    """Componentwise upper derivative: max over the sampled set of J w."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if diff is None:
        diff = sample_differential(op, v)
    return np.max(diff.stacked() @ w, axis=0)


@dataclass(frozen=True)
class CoefficientFields:
    """Row-by-row normal form of a linearization over the grid."""

    grid: DyadicGrid
    points: np.ndarray
    a_field: np.ndarray
    b_field: np.ndarray
    c_field: np.ndarray
    gcp_field: np.ndarray
    decompositions: list

    @property
    def gcp(self) -> bool:
        return bool(np.all(self.gcp_field))

    def measure_at(self, i: int):
        return self.decompositions[i].levy_measure()


def row_functionals(matrix: np.ndarray, grid: DyadicGrid,
                    drop_tol: float = 1e-12):
    """Interpret each matrix row as a finitely supported functional.

    Entries below drop_tol relative to the largest row entry are dropped;
    the diagonal is always kept so the zero-order part survives.
    """
    pts = grid.points()
    n = pts.shape[0]
    if matrix.shape != (n, n):
        raise ClarkeError(f"matrix shape {matrix.shape} does not match "
                          f"the {n}-node grid")
    rows = []
    for i in range(n):
        w = matrix[i]
        scale = float(np.max(np.abs(w)))
        keep = np.abs(w) > drop_tol * max(scale, 1e-300)
        keep[i] = True
        offs = pts[keep] - pts[i]
        rows.append(RowFunctional(pts[i], offs, w[keep]))
    return rows


def coefficient_fields(op, grid: DyadicGrid, v,
                       drop_tol: float = 1e-12,
                       step: float | None = None) -> CoefficientFields:
    """Linearize at v and decompose every row into local plus jump parts."""
    v = np.atleast_1d(np.asarray(v, dtype=float))
    sample = jacobian_at(op, v, step)
    rows = row_functionals(sample.matrix, grid, drop_tol)
    decs = [decompose(r) for r in rows]
    d = grid.dim
    n = len(rows)
    a = np.stack([dec.a_matrix for dec in decs]) if n else np.zeros((0, d, d))
    b = np.stack([dec.drift for dec in decs]) if n else np.zeros((0, d))
    c = np.array([dec.zero_order for dec in decs])
    g = np.array([dec.gcp for dec in decs], dtype=bool)
    return CoefficientFields(grid=grid, points=grid.points(), a_field=a,
                             b_field=b, c_field=c, gcp_field=g,
                             decompositions=decs)


def representation_residual(op, grid: DyadicGrid, v,
                            fields: CoefficientFields | None = None,
                            seed: int = 0) -> float:
    """Worst row defect of the exact normal-form reconstruction identity.

    Rows are rebuilt from the stored decompositions (center weight is the
    zero-order coefficient minus the jump mass), so no re-linearization
    happens when fields are supplied.
    """
    if fields is None:
        fields = coefficient_fields(op, grid, v)
    worst = 0.0
    for dec in fields.decompositions:
        center = dec.zero_order - float(dec.atom_weights.sum())
        offs = np.vstack([np.zeros((1, dec.dim)), dec.atoms])
        wts = np.concatenate([[center], dec.atom_weights])
        row = RowFunctional(dec.base_point, offs, wts)
        worst = max(worst, reconstruct_residual(row, dec, seed=seed))
    return worst
