"""Normal-form decomposition of finitely supported row functionals.

A row functional is u -> sum of weights * u(base + offset).  When every
off-center weight is nonnegative the row passes the comparison sign test
and splits into a diffusion matrix, a drift vector, a zero-order
coefficient, and a jump measure:

    <row, u> = C u(x) + B.grad u(x) + tr(A D2u(x))
               + sum_y K(y) [u(x+y) - u(x) - 1_{|y|<1} grad u(x).y
                             - eta(y) (1/2) y.D2u(x) y]

with eta the origin cutoff at the schedule floor.  The identity is exact
for every cutoff choice; the schedule only decides how much of the kernel
is reported as diffusion versus jumps.  The drift uses the open-unit-ball
indicator convention; the shrinking-cutoff schedule must stabilize onto
it, otherwise decompose refuses.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .grid import GridError, RegularityClass, SmoothFn
from .levy import LevyMeasure
from .special import SClassFn

SCHEDULE_START = 3          # delta = 2**-k; 1/4 is outside the admissible window
SCHEDULE_TOL = 1e-10


class CourregeError(GridError):
    """Raised for ill-formed rows or non-stabilizing schedules."""


@dataclass(frozen=True)
class RowFunctional:
    """Finitely supported functional u -> sum w_i u(base + y_i)."""

    base_point: np.ndarray
    offsets: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        base = np.atleast_1d(np.asarray(self.base_point, dtype=float))
        offs = np.atleast_2d(np.asarray(self.offsets, dtype=float))
        wts = np.atleast_1d(np.asarray(self.weights, dtype=float))
        if offs.shape[1] != base.size:
            raise CourregeError(
                f"offset width {offs.shape[1]} does not match base dimension {base.size}")
        if offs.shape[0] != wts.size:
            raise CourregeError(f"{offs.shape[0]} offsets but {wts.size} weights")
        order = np.lexsort(offs.T[::-1])
        offs = offs[order]
        wts = wts[order]
        for i in range(1, offs.shape[0]):
            if np.max(np.abs(offs[i] - offs[i - 1])) < 1e-12:
                raise CourregeError(f"duplicate offset {offs[i].tolist()}")
        base.setflags(write=False)
        offs.setflags(write=False)
        wts.setflags(write=False)
        object.__setattr__(self, "base_point", base)
        object.__setattr__(self, "offsets", offs)
        object.__setattr__(self, "weights", wts)

    @property
    def dim(self) -> int:
        return self.base_point.size

    def _center_mask(self) -> np.ndarray:
        return np.max(np.abs(self.offsets), axis=1) < 1e-15

    @property
    def center_weight(self) -> float:
        mask = self._center_mask()
        return float(self.weights[mask].sum())

    def jump_part(self):
        """Off-center offsets and weights, in canonical order."""
        keep = ~self._center_mask()
        return self.offsets[keep], self.weights[keep]

    @property
    def pitch(self) -> float:
        """Smallest off-center offset in the max norm (inf if none)."""
        offs, _ = self.jump_part()
        if not offs.shape[0]:
            return math.inf
        return float(np.min(np.max(np.abs(offs), axis=1)))

    def apply(self, u) -> float:
        val = u.value if hasattr(u, "value") else u
        return float(sum(w * float(val(self.base_point + y))
                         for y, w in zip(self.offsets, self.weights)))


def is_gcp(row: RowFunctional, tol: float = 1e-12) -> bool:
    """Sign test for comparison: every off-center weight is >= -tol."""
    _, wts = row.jump_part()
    return bool(wts.size == 0 or np.min(wts) >= -tol)


def c_of(row: RowFunctional) -> float:
    """Zero-order coefficient: the row applied to the constant 1."""
    return float(row.weights.sum())


def b_of(row: RowFunctional, cutoff) -> np.ndarray:
    """Cutoff drift: sum of weight * cutoff(y) * y over off-center offsets."""
    offs, wts = row.jump_part()
    if not offs.shape[0]:
        return np.zeros(row.dim)
    c = np.atleast_1d(np.asarray(cutoff(offs), dtype=float))
    return np.asarray((wts * c) @ offs, dtype=float)


def a_of(row: RowFunctional, cutoff) -> np.ndarray:
    """Cutoff diffusion: (1/2) sum of weight * cutoff(y) * y y^T."""
    offs, wts = row.jump_part()
    if not offs.shape[0]:
        return np.zeros((row.dim, row.dim))
    c = np.atleast_1d(np.asarray(cutoff(offs), dtype=float))
    return 0.5 * np.einsum("i,ij,ik->jk", wts * c, offs, offs)


def mu_of(row: RowFunctional) -> LevyMeasure:
    """Jump measure: all off-center atoms.  Requires nonnegative weights."""
    offs, wts = row.jump_part()
    if not offs.shape[0]:
        return LevyMeasure.empty(row.dim)
    return LevyMeasure(offs, wts)


@dataclass(frozen=True)
class CourregeDecomposition:
    """Normal form of a row at the schedule floor; reconstruction is exact."""

    base_point: np.ndarray
    a_matrix: np.ndarray
    drift: np.ndarray
    zero_order: float
    atoms: np.ndarray
    atom_weights: np.ndarray
    gcp: bool
    delta_floor: float
    schedule_deltas: np.ndarray
    schedule_drifts: np.ndarray
    schedule_diffusions: np.ndarray
    converged: bool
    residual: float

    @property
    def dim(self) -> int:
        return self.base_point.size

    def levy_measure(self) -> LevyMeasure:
        if not self.atoms.shape[0]:
            return LevyMeasure.empty(self.dim)
        return LevyMeasure(self.atoms, self.atom_weights)

    def apply(self, u) -> float:
        """Evaluate the normal form on u (exact grad/hess at the base point)."""
        x0 = self.base_point
        u0 = float(u.value(x0))
        g = np.asarray(u.grad(x0), dtype=float)
        h = np.asarray(u.hess(x0), dtype=float)
        out = self.zero_order * u0 + float(self.drift @ g)
        out += float(np.trace(self.a_matrix @ h))
        if self.atoms.shape[0]:
            eta = SClassFn.shrunk_origin(self.delta_floor)
            ev = np.atleast_1d(np.asarray(eta(self.atoms), dtype=float))
            vals = np.array([float(u.value(x0 + y)) for y in self.atoms])
            r = np.linalg.norm(self.atoms, axis=1)
            comp = vals - u0 - (r < 1.0) * (self.atoms @ g)
            comp -= 0.5 * ev * np.einsum("ij,jk,ik->i", self.atoms, h, self.atoms)
            out += float(self.atom_weights @ comp)
        return out

    def to_json(self) -> str:
        payload = {
            "A": [[float(v) for v in r] for r in self.a_matrix],
            "B": [float(v) for v in self.drift],
            "C": float(self.zero_order),
            "mu": [{"mass": float(w), "y": [float(c) for c in y]}
                   for y, w in zip(self.atoms, self.atom_weights)],
            "gcp": bool(self.gcp),
            "residual": float(self.residual),
        }
        return json.dumps(payload, sort_keys=True)


def probe_battery(dim: int, seed: int = 0):
    """Smooth functions with exact derivatives for reconstruction checks."""
    rng = np.random.default_rng(seed)
    p = rng.standard_normal((dim, dim))
    p = 0.5 * (p + p.T)
    q = rng.standard_normal(dim)
    w = rng.standard_normal(dim)
    a = rng.uniform(-0.5, 0.5, size=dim)
    cls = RegularityClass(2.0)

    def quad(x):
        return 0.5 * float(x @ p @ x) + float(q @ x) + 0.7

    probes = [
        SmoothFn(lambda x: 1.0, grad=lambda x: np.zeros(dim),
                 hess=lambda x: np.zeros((dim, dim)), cls=cls, name="one"),
        SmoothFn(lambda x: float(q @ x) - 0.25, grad=lambda x: q,
                 hess=lambda x: np.zeros((dim, dim)), cls=cls, name="affine"),
        SmoothFn(quad, grad=lambda x: p @ x + q, hess=lambda x: p,
                 cls=cls, name="quad"),
        SmoothFn(lambda x: math.sin(float(w @ x) + 0.3),
                 grad=lambda x: math.cos(float(w @ x) + 0.3) * w,
                 hess=lambda x: -math.sin(float(w @ x) + 0.3) * np.outer(w, w),
                 cls=cls, name="wave"),
        SmoothFn(lambda x: math.exp(-0.5 * float(np.sum((x - a) ** 2))),
                 grad=lambda x: -(x - a) * math.exp(-0.5 * float(np.sum((x - a) ** 2))),
                 hess=lambda x: (np.outer(x - a, x - a) - np.eye(dim))
                 * math.exp(-0.5 * float(np.sum((x - a) ** 2))),
                 cls=cls, name="bell"),
        SmoothFn(lambda x: float(w @ x) ** 3,
                 grad=lambda x: 3.0 * float(w @ x) ** 2 * w,
                 hess=lambda x: 6.0 * float(w @ x) * np.outer(w, w),
                 cls=cls, name="cubic"),
    ]
    return probes


def reconstruct_residual(row: RowFunctional, dec: CourregeDecomposition,
                         probes=None, seed: int = 0) -> float:
    """Sup over the probe battery of |<row, u> - normal form applied to u|."""
    if probes is None:
        probes = probe_battery(row.dim, seed)
    worst = 0.0
    for u in probes:
        worst = max(worst, abs(row.apply(u) - dec.apply(u)))
    return worst


def decompose(row: RowFunctional, tol: float = SCHEDULE_TOL) -> CourregeDecomposition:
    """Run the shrinking-cutoff schedule and assemble the normal form.

    The schedule walks delta = 2**-k from 1/8 down to the floor near twice
    the kernel pitch, recording the cutoff drift and diffusion at each
    scale.  The drift must stabilize onto the open-unit-ball indicator sum
    within tol; the diffusion is reported at the floor, where the origin
    cutoff still sees the near atoms.  Jumps keep every off-center atom.
    """
    offs, wts = row.jump_part()
    c = c_of(row)
    gcp = is_gcp(row)
    if not offs.shape[0]:
        dec = CourregeDecomposition(
            base_point=row.base_point,
            a_matrix=np.zeros((row.dim, row.dim)),
            drift=np.zeros(row.dim),
            zero_order=c,
            atoms=offs, atom_weights=wts,
            gcp=gcp, delta_floor=2.0 ** -SCHEDULE_START,
            schedule_deltas=np.zeros(0),
            schedule_drifts=np.zeros((0, row.dim)),
            schedule_diffusions=np.zeros((0, row.dim, row.dim)),
            converged=True, residual=0.0)
        return _with_residual(row, dec)

    # Diffusion floor: delta near twice the pitch, so the origin cutoff is
    # still 1 on the nearest atoms.  Drift floor: delta small enough that the
    # shrinking cutoff has left the collar around the unit sphere.
    pitch = row.pitch
    k_diffusion = max(SCHEDULE_START, math.ceil(math.log2(1.0 / pitch)) - 1) \
        if pitch < 1.0 else SCHEDULE_START
    r = np.linalg.norm(offs, axis=1)
    inside = r < 1.0
    k_drift = SCHEDULE_START
    if np.any(inside):
        closest = float(np.max(r[inside]))
        # floats below 1 are spaced 2^-53, so this never exceeds 54
        k_drift = max(k_drift,
                      min(56, math.ceil(math.log2(2.0 / (1.0 - closest)))))

    # one step past the drift floor, so stabilization shows up as a vanishing
    # successive difference
    deltas, drifts, diffusions = [], [], []
    for k in range(SCHEDULE_START, max(k_diffusion, k_drift + 1) + 1):
        delta = 2.0 ** -k
        deltas.append(delta)
        drifts.append(b_of(row, SClassFn.shrunk_unit(delta)))
        diffusions.append(a_of(row, SClassFn.shrunk_origin(delta)))

    b_exact = np.asarray((wts * inside) @ offs, dtype=float)
    scale = max(1.0, float(np.abs(wts) @ np.max(np.abs(offs), axis=1)))
    gap = float(np.max(np.abs(drifts[-1] - b_exact)))
    converged = gap <= tol * scale
    if len(drifts) >= 2:
        converged = converged and \
            float(np.max(np.abs(drifts[-1] - drifts[-2]))) <= tol * scale
    if not converged:
        raise CourregeError(
            "drift schedule did not stabilize onto the unit-ball convention "
            f"(gap {gap:.3e})")

    floor_index = k_diffusion - SCHEDULE_START
    dec = CourregeDecomposition(
        base_point=row.base_point,
        a_matrix=diffusions[floor_index],
        drift=b_exact,
        zero_order=c,
        atoms=offs, atom_weights=wts,
        gcp=gcp, delta_floor=deltas[floor_index],
        schedule_deltas=np.array(deltas),
        schedule_drifts=np.array(drifts),
        schedule_diffusions=np.array(diffusions),
        converged=True, residual=0.0)
    return _with_residual(row, dec)


def _with_residual(row: RowFunctional, dec: CourregeDecomposition) -> CourregeDecomposition:
    res = reconstruct_residual(row, dec)
    object.__setattr__(dec, "residual", float(res))
    return dec
