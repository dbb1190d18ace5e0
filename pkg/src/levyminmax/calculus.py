"""Discrete first and second derivatives on the lattice, with rate studies.

The gradient is the symmetric two-point quotient per axis; the Hessian entry
(k,l) is the four-point forward quotient built from x, x+h e_k, x+h e_l and
x+h(e_k+e_l).  Both are exact on quadratics, linear in the data, and commute
with lattice translations.  Boundary nodes without a full stencil raise
rather than falling back to one-sided formulas: silent order degradation
would corrupt the rate studies.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .grid import DyadicGrid, GridError, GridFunction, SmoothFn, restrict


def _unit(d: int, k: int) -> np.ndarray:
    e = np.zeros(d, dtype=np.int64)
    e[k] = 1
    return e


def dgrad(u: GridFunction, x_index) -> np.ndarray:
    """Central difference gradient at a node; requires the full +-h stencil in-box."""
    g = u.grid
    x = np.asarray(x_index, dtype=np.int64)
    d, h = g.dim, g.spacing
    out = np.zeros(d)
    for k in range(d):
        e = _unit(d, k)
        if not (g.contains_index(x + e) and g.contains_index(x - e)):
            raise GridError(f"gradient stencil at node {x.tolist()} leaves the box")
        out[k] = (u.value(x + e) - u.value(x - e)) / (2.0 * h)
    return out


def dhess(u: GridFunction, x_index) -> np.ndarray:
    """Forward four-point second difference matrix at a node (raw, unsymmetrized)."""
    g = u.grid
    x = np.asarray(x_index, dtype=np.int64)
    d, h = g.dim, g.spacing
    out = np.zeros((d, d))
    u0 = u.value(x)
    for k in range(d):
        ek = _unit(d, k)
        for l in range(d):
            el = _unit(d, l)
            for node in (x + ek + el, x + ek, x + el):
                if not g.contains_index(node):
                    raise GridError(f"Hessian stencil at node {x.tolist()} leaves the box")
            out[k, l] = (u.value(x + ek + el) - u.value(x + ek)
                         - u.value(x + el) + u0) / h ** 2
    return out


def dgrad_padded(u: GridFunction, x_index) -> np.ndarray:
    """Central gradient with zero-padded out-of-box reads (whole-lattice data)."""
    g = u.grid
    x = np.asarray(x_index, dtype=np.int64)
    d, h = g.dim, g.spacing
    out = np.zeros(d)
    for k in range(d):
        e = _unit(d, k)
        out[k] = (u.pad(x + e) - u.pad(x - e)) / (2.0 * h)
    return out


def dhess_padded(u: GridFunction, x_index) -> np.ndarray:
    g = u.grid
    x = np.asarray(x_index, dtype=np.int64)
    d, h = g.dim, g.spacing
    out = np.zeros((d, d))
    u0 = u.pad(x)
    for k in range(d):
        ek = _unit(d, k)
        for l in range(d):
            el = _unit(d, l)
            out[k, l] = (u.pad(x + ek + el) - u.pad(x + ek) - u.pad(x + el) + u0) / h ** 2
    return out


@dataclass(frozen=True)
class StencilDerivatives:
    """Discrete derivative bundle at one node: gradient, raw and symmetrized Hessian."""

    grad: np.ndarray
    hess_raw: np.ndarray
    hess_sym: np.ndarray


def stencil_derivatives(u: GridFunction, x_index) -> StencilDerivatives:
    raw = dhess(u, x_index)
    return StencilDerivatives(dgrad(u, x_index), raw, 0.5 * (raw + raw.T))


@dataclass
class ConvergenceStudy:
    """Log-log rate fit of a per-level error sequence."""

    levels: List[int]
    spacings: List[float]
    errors: List[float]
    order: Optional[float]
    exact: bool

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["level", "h", "error", "fitted_order"])
            tag = "exact" if self.exact else repr(self.order)
            for n, h, e in zip(self.levels, self.spacings, self.errors):
                w.writerow([n, repr(h), repr(e), tag])


def fit_order(spacings: Sequence[float], errors: Sequence[float],
              floor: float = 1e-14):
    """Least-squares slope of log error against log spacing.

    Returns (order, exact): exact=True when every error sits at the float
    floor, in which case no slope is reported.
    """
    e = np.asarray(errors, dtype=float)
    h = np.asarray(spacings, dtype=float)
    if np.all(e < floor):
        return None, True
    keep = e > floor
    if np.count_nonzero(keep) < 2:
        return None, True
    slope = np.polyfit(np.log(h[keep]), np.log(e[keep]), 1)[0]
    return float(slope), False


def convergence_order(u: SmoothFn, which: str, levels: Sequence[int], x,
                      dim: int = 1, box_radius: float = 2.0) -> ConvergenceStudy:
    """Measure the stencil's empirical order against the exact derivative fields.

    x must be a node of every level in the sweep.  A fixed small box_radius is
    used across levels (recorded in the study) so the point stencil never
    feels the boundary.
    """
    if which not in ("grad", "hess"):
        raise GridError(f"unknown derivative kind {which!r}")
    if len(levels) < 3:
        raise GridError("need at least 3 levels for a rate fit")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    spacings, errors = [], []
    for n in levels:
        g = DyadicGrid(n, dim, box_radius)
        idx = g.index_of(x)
        un = restrict(u, g)
        if which == "grad":
            err = float(np.max(np.abs(dgrad(un, idx) - u.grad(x))))
        else:
            err = float(np.max(np.abs(dhess(un, idx) - u.hess(x))))
        spacings.append(g.spacing)
        errors.append(err)
    order, exact = fit_order(spacings, errors)
    return ConvergenceStudy(list(levels), spacings, errors, order, exact)
