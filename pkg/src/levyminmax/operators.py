"""Reference operators: stencils, extremal envelopes, fractional kernels,
and the half-strip Dirichlet-to-Neumann map.

Discretization conventions chosen for sign correctness:
  * second derivatives use centered differences (the one-sided variant has
    a negative near weight and fails the comparison sign test);
  * drift defaults to upwinding, which keeps every off-center weight
    nonnegative; the central alternative is provided for contrast;
  * jump atoms snap to the nearest lattice point and their gradient
    compensation is folded into the drift, so the assembled kernel applies
    the operator exactly on lattice data.

The strip map solves the 5-point Laplace system with periodic lateral
boundary, either directly (sparse), by conjugate gradients, or mode by
mode in the lateral Fourier basis.  The boundary derivative uses the
harmonicity-corrected one-sided difference: the naive 3-point reading of
the same data is several times less accurate at moderate frequencies.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import cg as sparse_cg
from scipy.sparse.linalg import spsolve

from .courrege import RowFunctional
from .grid import DyadicGrid, GridError
from .levy import LevyMeasure, LevyOperator

MONOTONE_TOL = 1e-12


class OperatorError(GridError):
    """Raised for ill-posed operator assembly requests."""


def _shifted(values: np.ndarray, offset) -> np.ndarray:
    """Zero-padded shifted read: out[i] = values[i + offset]."""
    out = np.zeros_like(values)
    src, dst = [], []
    for o, n in zip(offset, values.shape):
        o = int(o)
        if abs(o) >= n:
            return out
        if o >= 0:
            src.append(slice(o, n))
            dst.append(slice(0, n - o))
        else:
            src.append(slice(0, n + o))
            dst.append(slice(-o, n))
    out[tuple(dst)] = values[tuple(src)]
    return out


@dataclass(frozen=True)
class StencilOperator:
    """Constant-coefficient kernel acting on node data with zero padding."""

    grid: DyadicGrid
    kernel: dict

    def __post_init__(self):
        clean = {}
        for off, w in self.kernel.items():
            off = tuple(int(o) for o in off)
            if len(off) != self.grid.dim:
                raise OperatorError(f"offset {off} has wrong width")
            if w != 0.0:
                clean[off] = clean.get(off, 0.0) + float(w)
        object.__setattr__(self, "kernel", clean)

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        vals = v.reshape(self.grid.shape)
        out = np.zeros_like(vals)
        for off, w in self.kernel.items():
            out += w * _shifted(vals, off)
        return out.ravel()

    def is_monotone(self, tol: float = MONOTONE_TOL) -> bool:
        return all(w >= -tol for off, w in self.kernel.items()
                   if any(o != 0 for o in off))

    def matrix(self) -> np.ndarray:
        n = self.grid.node_count
        shape = self.grid.shape
        m = np.zeros((n, n))
        for i, idx in enumerate(np.ndindex(*shape)):
            for off, w in self.kernel.items():
                j = tuple(a + o for a, o in zip(idx, off))
                if all(0 <= c < s for c, s in zip(j, shape)):
                    m[i, int(np.ravel_multi_index(j, shape))] += w
        return m

    def row(self, index) -> RowFunctional:
        """The exact functional applied at a node (outside reads dropped)."""
        index = np.atleast_1d(np.asarray(index, dtype=np.int64))
        h = self.grid.spacing
        offs, wts = [], []
        for off, w in self.kernel.items():
            target = index + np.asarray(off, dtype=np.int64)
            if self.grid.contains_index(target):
                offs.append(np.asarray(off, dtype=float) * h)
                wts.append(w)
        return RowFunctional(self.grid.point_of(index), np.array(offs),
                             np.array(wts))


def levy_stencil(grid: DyadicGrid, op: LevyOperator,
                 drift: str = "upwind") -> StencilOperator:
    """Assemble the lattice kernel of a constant-coefficient operator.

    Centered second differences for the diffusion (cross terms with the
    standard four-corner stencil), upwind or central drift, atoms snapped
    to the nearest lattice point with their compensation moved into the
    drift.  On lattice-aligned atoms the kernel applies the operator
    exactly to quadratic data at interior nodes.
    """
    if drift not in ("upwind", "central"):
        raise OperatorError(f"unknown drift scheme {drift!r}")
    d = grid.dim
    if op.dim != d:
        raise OperatorError(f"operator dimension {op.dim} != grid dimension {d}")
    h = grid.spacing
    ker: dict = {}

    def add(off, w):
        ker[off] = ker.get(off, 0.0) + w

    zero = (0,) * d

    def axis(k, s):
        e = [0] * d
        e[k] = s
        return tuple(e)

    # cross terms ride tilted second differences picked by sign, so the
    # whole diffusion block is monotone exactly when A is diagonally
    # dominant; every piece is a pure second difference, hence exact on
    # quadratic data
    a = op.diffusion
    for k in range(d):
        w = (a[k, k] - np.sum(np.abs(a[k])) + abs(a[k, k])) / h ** 2
        if w != 0.0:
            add(axis(k, 1), w)
            add(axis(k, -1), w)
            add(zero, -2.0 * w)
    for k in range(d):
        for l in range(k + 1, d):
            w = abs(a[k, l]) / h ** 2
            if w == 0.0:
                continue
            off = [0] * d
            off[k] = 1
            off[l] = 1 if a[k, l] > 0 else -1
            add(tuple(off), w)
            add(tuple(-o for o in off), w)
            add(zero, -2.0 * w)

    # atoms first: their compensation feeds the drift
    b_eff = op.drift.astype(float).copy()
    for y, m in zip(op.measure.atoms, op.measure.masses):
        if m == 0.0:
            continue
        idx = np.rint(y / h).astype(np.int64)
        if not np.any(idx):
            raise OperatorError(
                f"atom {y.tolist()} snaps to the origin at spacing {h}")
        snapped = idx * h
        add(tuple(idx), m)
        add(zero, -m)
        if float(np.linalg.norm(snapped)) < 1.0:
            b_eff -= m * snapped

    for k in range(d):
        b = b_eff[k]
        if b == 0.0:
            continue
        if drift == "central":
            add(axis(k, 1), b / (2.0 * h))
            add(axis(k, -1), -b / (2.0 * h))
        elif b > 0:
            add(axis(k, 1), b / h)
            add(zero, -b / h)
        else:
            add(axis(k, -1), -b / h)
            add(zero, b / h)

    add(zero, op.zero_order)
    return StencilOperator(grid=grid, kernel=ker)


@dataclass(frozen=True)
class BellmanOp:
    """Componentwise upper envelope of affine operator terms."""

    terms: tuple

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        vals = [np.asarray(f(v), dtype=float) + s for f, s in self.terms]
        return np.max(np.stack(vals), axis=0)


@dataclass(frozen=True)
class IsaacsOp:
    """Lower envelope of upper envelopes: min over teams, max within."""

    teams: tuple

    def __call__(self, v: np.ndarray) -> np.ndarray:
        vals = [team(v) for team in self.teams]
        return np.min(np.stack(vals), axis=0)


def _as_term(term):
    if isinstance(term, tuple):
        f, s = term
    else:
        f, s = term, 0.0
    if isinstance(f, np.ndarray):
        mat = f
        f = lambda v, _m=mat: _m @ v
    if not callable(f):
        raise OperatorError("each term needs a callable or matrix part")
    return f, s


def bellman(terms) -> BellmanOp:
    terms = [_as_term(t) for t in terms]
    if not terms:
        raise OperatorError("upper envelope of nothing")
    return BellmanOp(terms=tuple(terms))


def isaacs(families) -> IsaacsOp:
    teams = [bellman(fam) for fam in families]
    if not teams:
        raise OperatorError("lower envelope of nothing")
    return IsaacsOp(teams=tuple(teams))


def hessian_field(grid: DyadicGrid, v: np.ndarray) -> np.ndarray:
    """Centered discrete Hessians at every node, shape (*grid.shape, d, d).

    Boundary nodes read zero padding and are only meaningful in the
    interior; callers mask accordingly.
    """
    d = grid.dim
    h = grid.spacing
    vals = np.asarray(v, dtype=float).reshape(grid.shape)
    out = np.zeros(grid.shape + (d, d))

    def sh(off):
        return _shifted(vals, off)

    for k in range(d):
        ek = [0] * d
        ek[k] = 1
        out[..., k, k] = (sh(ek) - 2.0 * vals + sh([-o for o in ek])) / h ** 2
    for k in range(d):
        for l in range(k + 1, d):
            pp = [0] * d; pp[k], pp[l] = 1, 1
            mm = [-o for o in pp]
            pm = [0] * d; pm[k], pm[l] = 1, -1
            mp = [-o for o in pm]
            cross = (sh(pp) + sh(mm) - sh(pm) - sh(mp)) / (4.0 * h ** 2)
            out[..., k, l] = cross
            out[..., l, k] = cross
    return out


def pucci_extremal(eigenvalues: np.ndarray, lam: float, big: float,
                   extremal: str = "max") -> np.ndarray:
    """Extremal trace over matrices with spectrum in [lam, big]."""
    e = np.asarray(eigenvalues, dtype=float)
    pos = np.clip(e, 0.0, None).sum(axis=-1)
    neg = np.clip(e, None, 0.0).sum(axis=-1)
    if extremal == "max":
        return big * pos + lam * neg
    if extremal == "min":
        return lam * pos + big * neg
    raise OperatorError(f"unknown extremal {extremal!r}")


@dataclass(frozen=True)
class PucciOp:
    """Extremal second-order operator from the centered Hessian field."""

    grid: DyadicGrid
    lam: float
    big: float
    extremal: str = "max"

    def __post_init__(self):
        if not (0.0 < self.lam <= self.big):
            raise OperatorError(
                f"ellipticity bounds must satisfy 0 < {self.lam} <= {self.big}")
        if self.extremal not in ("max", "min"):
            raise OperatorError(f"unknown extremal {self.extremal!r}")

    def __call__(self, v: np.ndarray) -> np.ndarray:
        hess = hessian_field(self.grid, v)
        e = np.linalg.eigvalsh(hess)
        return pucci_extremal(e, self.lam, self.big, self.extremal).ravel()


def pucci(grid: DyadicGrid, lam: float, big: float,
          extremal: str = "max") -> PucciOp:
    return PucciOp(grid=grid, lam=lam, big=big, extremal=extremal)


@dataclass(frozen=True)
class MAReport:
    """Infimum of tr(A M) over unit-determinant positive matrices."""

    value: float
    a_star: np.ndarray | None
    sampled: float


def ma_infimum(m, samples: int = 0, seed: int = 0) -> MAReport:
    """Closed-form infimum with an optional sampled upper bound.

    For positive definite M the infimum is d det(M)^(1/d), attained at
    A* = det(M)^(1/d) M^(-1); one negative eigenvalue drives it to -inf.
    Sampled random unit-determinant matrices can only do worse, which the
    report makes checkable.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    d = m.shape[0]
    if m.shape != (d, d) or np.max(np.abs(m - m.T)) > 1e-10:
        raise OperatorError("need a symmetric matrix")
    e = np.linalg.eigvalsh(m)
    if e[0] <= 0.0:
        return MAReport(value=-math.inf, a_star=None, sampled=math.inf)
    det = float(np.prod(e))
    value = d * det ** (1.0 / d)
    a_star = det ** (1.0 / d) * np.linalg.inv(m)
    sampled = float(np.trace(a_star @ m))
    rng = np.random.default_rng(seed)
    for _ in range(samples):
        r = rng.standard_normal((d, d))
        w = r @ r.T + 0.1 * np.eye(d)
        a = w / np.linalg.det(w) ** (1.0 / d)
        sampled = min(sampled, float(np.trace(a @ m)))
    return MAReport(value=value, a_star=a_star, sampled=sampled)


@dataclass(frozen=True)
class MongeAmpereOp:
    """d det(D2 u)^(1/d) on the centered Hessian field; -inf off convexity."""

    grid: DyadicGrid

    def __call__(self, v: np.ndarray) -> np.ndarray:
        hess = hessian_field(self.grid, v)
        e = np.linalg.eigvalsh(hess)
        d = self.grid.dim
        convex = np.all(e > 0.0, axis=-1)
        out = np.full(e.shape[:-1], -math.inf)
        good = np.prod(e[convex], axis=-1)
        out[convex] = d * good ** (1.0 / d)
        return out.ravel()


def monge_ampere(grid: DyadicGrid) -> MongeAmpereOp:
    return MongeAmpereOp(grid=grid)


def fractional_constant(dim: int, alpha: float) -> float:
    """Normalizing constant of the fractional kernel |y|^(-d-alpha)."""
    if not (0.0 < alpha < 2.0):
        raise OperatorError(f"order must lie in (0, 2), got {alpha}")
    num = 2.0 ** alpha * math.gamma((dim + alpha) / 2.0)
    den = math.pi ** (dim / 2.0) * abs(math.gamma(-alpha / 2.0))
    return num / den


def fractional_laplacian(alpha: float, dim: int = 1, spacing: float = 2.0 ** -6,
                         radius: float = 32.0) -> LevyOperator:
    """Quadrature operator for minus the fractional power of the Laplacian.

    Lattice atoms inside the given radius carry C h^d / |y|^(d+alpha); the
    tail integral beyond the radius becomes a negative zero-order term
    (data is assumed to decay).  The omitted ball |y| < h contributes
    O(h^(2-alpha)) on twice-differentiable data.
    """
    if spacing <= 0 or radius <= spacing:
        raise OperatorError("need 0 < spacing < radius")
    c = fractional_constant(dim, alpha)
    n = int(math.floor(radius / spacing))
    rng1 = np.arange(-n, n + 1)
    grids = np.meshgrid(*([rng1 * spacing] * dim), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    r = np.linalg.norm(pts, axis=1)
    keep = (r > 0.0) & (r <= radius)
    atoms = pts[keep]
    masses = c * spacing ** dim / np.linalg.norm(atoms, axis=1) ** (dim + alpha)
    surface = 2.0 * math.pi ** (dim / 2.0) / math.gamma(dim / 2.0)
    tail = c * surface / (alpha * radius ** alpha)
    measure = LevyMeasure(atoms, masses)
    return LevyOperator(np.zeros((dim, dim)), np.zeros(dim), -tail, measure)


# --- half-strip Dirichlet-to-Neumann map -----------------------------------


@dataclass(frozen=True)
class StripProblem:
    """Laplace in a lateral-periodic strip of given width and height.

    Bottom boundary carries the data, the top is grounded.  nx lateral
    nodes (periodic), ny vertical intervals.
    """

    width: float
    height: float
    nx: int
    ny: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise OperatorError("strip dimensions must be positive")
        if self.nx < 4 or self.ny < 2:
            raise OperatorError("need nx >= 4 and ny >= 2")

    @property
    def dx(self) -> float:
        return self.width / self.nx

    @property
    def dy(self) -> float:
        return self.height / self.ny

    def x_nodes(self) -> np.ndarray:
        return np.arange(self.nx) * self.dx


def _mode_rates(p: StripProblem) -> np.ndarray:
    k = np.arange(p.nx // 2 + 1)
    return 2.0 * (1.0 - np.cos(2.0 * math.pi * k / p.nx)) / p.dx ** 2


def _mode_profiles(p: StripProblem) -> np.ndarray:
    """Decay profile per Fourier mode and vertical node, shape (ny+1, modes).

    Solves the vertical three-term recurrence in closed form: the discrete
    rate mu satisfies cosh(mu dy) = 1 + lam dy^2 / 2 and the profile is
    sinh(mu (H - y)) / sinh(mu H), evaluated in overflow-safe form.
    """
    lam = _mode_rates(p)
    y = np.arange(p.ny + 1) * p.dy
    out = np.empty((p.ny + 1, lam.size))
    out[:, 0] = 1.0 - y / p.height
    if lam.size > 1:
        t = 1.0 + lam[1:] * p.dy ** 2 / 2.0
        mu = np.arccosh(t) / p.dy
        a = np.outer(p.height - y, mu)
        b = mu * p.height
        out[:, 1:] = np.exp(a - b) * (-np.expm1(-2.0 * a)) / (-np.expm1(-2.0 * b))
    return out


def dtn_solve(p: StripProblem, g, method: str = "modes") -> np.ndarray:
    """Harmonic extension of bottom data; rows run bottom to top."""
    g = np.asarray(g, dtype=float)
    if g.shape != (p.nx,):
        raise OperatorError(f"boundary data shape {g.shape} != ({p.nx},)")
    if method == "modes":
        ghat = np.fft.rfft(g)
        prof = _mode_profiles(p)
        return np.fft.irfft(prof * ghat[None, :], n=p.nx, axis=1)
    if method in ("direct", "cg"):
        return _dtn_solve_sparse(p, g, method)
    raise OperatorError(f"unknown method {method!r}")


def strip_system(p: StripProblem):
    """Sparse 5-point system for the interior unknowns, and the rhs map.

    Returns (matrix, load) where load(g) builds the right-hand side from
    bottom data.  The matrix is the negative Laplacian: positive diagonal,
    nonpositive off-diagonal, weakly diagonally dominant (an M-matrix),
    which is the discrete form of the comparison property here.
    """
    nx, ny = p.nx, p.ny - 1
    ax = 1.0 / p.dx ** 2
    ay = 1.0 / p.dy ** 2
    ex = sparse.diags([np.full(nx - 1, -ax), np.full(nx, 2.0 * ax),
                       np.full(nx - 1, -ax)], [-1, 0, 1], format="lil")
    ex[0, -1] -= ax
    ex[-1, 0] -= ax
    ix = sparse.identity(nx)
    iy = sparse.identity(ny)
    ey = sparse.diags([np.full(ny - 1, -ay), np.full(ny, 2.0 * ay),
                       np.full(ny - 1, -ay)], [-1, 0, 1])
    mat = (sparse.kron(iy, ex.tocsr()) + sparse.kron(ey, ix)).tocsr()

    def load(g):
        rhs = np.zeros(nx * ny)
        rhs[:nx] = ay * np.asarray(g, dtype=float)
        return rhs

    return mat, load


def _dtn_solve_sparse(p: StripProblem, g: np.ndarray, method: str) -> np.ndarray:
    mat, load = strip_system(p)
    rhs = load(g)
    if method == "cg":
        sol, info = sparse_cg(mat, rhs, rtol=1e-12, atol=0.0, maxiter=20000)
        if info != 0:
            raise OperatorError(f"conjugate gradients stalled (info={info})")
    else:
        sol = spsolve(mat.tocsc(), rhs)
    out = np.zeros((p.ny + 1, p.nx))
    out[0] = g
    out[1:p.ny] = sol.reshape(p.ny - 1, p.nx)
    return out


def boundary_derivative(p: StripProblem, u: np.ndarray) -> np.ndarray:
    """Inward normal derivative at the bottom from the solved field.

    One-sided difference plus the harmonicity correction: the vertical
    curvature at the boundary equals minus the lateral curvature of the
    data, so (u1 - u0)/dy + (dy/2) * d2g/dx2 is second-order accurate.
    """
    if u.shape[1] != p.nx:
        raise OperatorError("field does not match the strip")
    g = u[0]
    lateral = (np.roll(g, -1) - 2.0 * g + np.roll(g, 1)) / p.dx ** 2
    return (u[1] - u[0]) / p.dy + 0.5 * p.dy * lateral


def dtn_kernel(p: StripProblem) -> np.ndarray:
    """First row of the circulant boundary-derivative map.

    Row sum is exactly -1/height (the constant mode), off-center entries
    are nonnegative: the map passes the comparison sign test.
    """
    prof = _mode_profiles(p)
    lam = _mode_rates(p)
    d = (prof[1] - 1.0) / p.dy - 0.5 * p.dy * lam
    return np.fft.irfft(d, n=p.nx)


def dtn_matrix(p: StripProblem) -> np.ndarray:
    row = dtn_kernel(p)
    idx = (np.arange(p.nx)[None, :] - np.arange(p.nx)[:, None]) % p.nx
    return row[idx]


def dtn_apply(p: StripProblem, g) -> np.ndarray:
    g = np.asarray(g, dtype=float)
    if g.shape != (p.nx,):
        raise OperatorError(f"boundary data shape {g.shape} != ({p.nx},)")
    prof = _mode_profiles(p)
    lam = _mode_rates(p)
    d = (prof[1] - 1.0) / p.dy - 0.5 * p.dy * lam
    return np.fft.irfft(d * np.fft.rfft(g), n=p.nx)
