"""Smooth cutoff profiles and cutoff-compensated Taylor test functions.

The base profile ``phi0`` is the classic exponential ramp
q(t)/(q(t)+q(1-t)) with q(t)=exp(-1/t): smooth, nondecreasing, 0 below 0 and
1 above 1.  Everything else is built from it: radial ramps ``phi_rR``/
``psi``, the shrinking pairs ``phi_delta``/``eta_delta``, the linear-to-flat
profile ``eta0``, the admissible cutoff class (values in [0,1], equal to 1
near 0, supported in the ball of radius 2), and the cutoff-compensated
Taylor polynomials used to split a kernel into local and jump parts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grid import GridError, GridFunction, RegularityClass, SmoothFn


def phi0(t):
    """Smooth nondecreasing ramp: 0 for t<=0, 1 for t>=1."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    qa = np.zeros_like(t)
    qb = np.zeros_like(t)
    pos = t > 0.0
    lt1 = t < 1.0
    with np.errstate(over="ignore", under="ignore"):
        qa[pos] = np.exp(-1.0 / t[pos])
        qb[lt1] = np.exp(-1.0 / (1.0 - t[lt1]))
    out = qa / (qa + qb)
    return float(out[0]) if scalar else out


def phi_rR(r: float, R: float, y):
    """Radial ramp phi0((|y|-R)/r): 0 on the ball of radius R, 1 outside R+r."""
    if r <= 0 or R <= 0:
        raise GridError(f"ramp parameters must be positive, got r={r}, R={R}")
    y = np.asarray(y, dtype=float)
    norm = np.sqrt(np.sum(np.atleast_2d(y) ** 2, axis=-1)) if y.ndim > 1 \
        else float(np.sqrt(np.sum(y ** 2)))
    return phi0((norm - R) / r)


def psi(r: float, R: float, y):
    """Reverse ramp 1 - phi_rR: equal to 1 on B_R, 0 outside B_{R+r}."""
    return 1.0 - phi_rR(r, R, y)


def phi_delta(delta: float, y):
    """Cutoff equal to 1 inside B_{1-2 delta} and 0 outside B_{1-delta}."""
    if not (0.0 < delta < 0.25):
        raise GridError(f"delta must lie in (0, 1/4), got {delta}")
    return psi(delta, 1.0 - 2.0 * delta, y)


def eta_delta(delta: float, y):
    """Cutoff equal to 1 inside B_delta and 0 outside B_{2 delta}; monotone in delta."""
    if not (0.0 < delta < 0.25):
        raise GridError(f"delta must lie in (0, 1/4), got {delta}")
    return psi(delta, delta, y)


def eta0(t):
    """Smooth monotone profile: identity below 1/2, constant 1 above 1."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise GridError("eta0 is only defined for t >= 0")
    blend = phi0((t - 0.5) * 2.0)
    return t * (1.0 - blend) + blend


@dataclass(frozen=True)
class SClassFn:
    """Admissible radial cutoff: smooth, in [0,1], 1 on B_plateau, 0 outside B_support.

    support_radius must not exceed 2; plateau_radius must be positive.
    """

    profile: Callable[[np.ndarray], np.ndarray]
    plateau_radius: float
    support_radius: float
    label: str = ""

    def __post_init__(self):
        if not (0.0 < self.plateau_radius <= self.support_radius <= 2.0):
            raise GridError(
                f"cutoff radii out of range: plateau={self.plateau_radius}, "
                f"support={self.support_radius}")

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if y.ndim <= 1:
            r = float(np.sqrt(np.sum(y ** 2)))
            return float(self.profile(np.asarray(r)))
        r = np.sqrt(np.sum(y ** 2, axis=-1))
        return np.asarray(self.profile(r), dtype=float)

    @staticmethod
    def from_psi(r: float, R: float, label: str = "") -> "SClassFn":
        if R + r > 2.0:
            raise GridError(f"support radius {R + r} exceeds 2")
        return SClassFn(lambda t: 1.0 - phi0((t - R) / r), R, R + r,
                        label or f"psi({r},{R})")

    @staticmethod
    def shrunk_unit(delta: float) -> "SClassFn":
        """The pair member with plateau B_{1-2 delta}, support B_{1-delta}."""
        if not (0.0 < delta < 0.25):
            raise GridError(f"delta must lie in (0, 1/4), got {delta}")
        return SClassFn.from_psi(delta, 1.0 - 2.0 * delta, f"phi_delta({delta})")

    @staticmethod
    def shrunk_origin(delta: float) -> "SClassFn":
        """The pair member with plateau B_delta, support B_{2 delta}."""
        if not (0.0 < delta < 0.25):
            raise GridError(f"delta must lie in (0, 1/4), got {delta}")
        return SClassFn.from_psi(delta, delta, f"eta_delta({delta})")


DEFAULT_PHI = SClassFn.from_psi(0.5, 1.0, "psi(1/2,1)")
DEFAULT_ETA = SClassFn.from_psi(0.5, 1.0, "psi(1/2,1)")


def validate_s_member(f: SClassFn, samples: int = 256, seed: int = 0, dim: int = 3) -> None:
    """Spot-check class membership: range, plateau, and support."""
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-2.5, 2.5, size=(samples, dim))
    vals = f(pts)
    if np.any(vals < -1e-12) or np.any(vals > 1 + 1e-12):
        raise GridError(f"cutoff {f.label!r} leaves [0,1]")
    radii = np.sqrt(np.sum(pts ** 2, axis=-1))
    on_plateau = radii <= f.plateau_radius * (1 - 1e-9)
    if np.any(np.abs(vals[on_plateau] - 1.0) > 1e-12):
        raise GridError(f"cutoff {f.label!r} is not 1 on its plateau")
    outside = radii >= f.support_radius * (1 + 1e-9)
    if np.any(np.abs(vals[outside]) > 1e-12):
        raise GridError(f"cutoff {f.label!r} does not vanish outside its support")


@dataclass(frozen=True)
class CutoffPair:
    """A pair (phi, eta) of admissible cutoffs used to split kernels."""

    phi: SClassFn
    eta: SClassFn

    def validated(self) -> "CutoffPair":
        validate_s_member(self.phi)
        validate_s_member(self.eta)
        return self


DEFAULT_PAIR = CutoffPair(DEFAULT_PHI, DEFAULT_ETA)


def _fd_grad(value, x, step=1e-6):
    x = np.asarray(x, dtype=float)
    d = x.size
    g = np.zeros(d)
    for k in range(d):
        e = np.zeros(d)
        e[k] = step
        g[k] = (value(x + e) - value(x - e)) / (2 * step)
    return g


def _fd_hess(value, x, step=1e-4):
    x = np.asarray(x, dtype=float)
    d = x.size
    hmat = np.zeros((d, d))
    base = value(x)
    for k in range(d):
        for l in range(d):
            ek = np.zeros(d); ek[k] = step
            el = np.zeros(d); el[l] = step
            hmat[k, l] = (value(x + ek + el) - value(x + ek) - value(x + el) + base) / step ** 2
    return hmat


def _cutoff_poly(u0: float, grad, hess, pair: CutoffPair,
                 beta: RegularityClass, name: str) -> SmoothFn:
    """Assemble the offset function y -> cutoff-compensated Taylor value."""
    case = beta.case

    def value(y):
        y = np.asarray(y, dtype=float)
        out = u0
        if case >= 1:
            out = out + pair.phi(y) * float(np.dot(grad, y))
        if case >= 2:
            out = out + pair.eta(y) * 0.5 * float(y @ hess @ y)
        return out

    def values(pts):
        pts = np.asarray(pts, dtype=float)
        out = np.full(pts.shape[0], u0)
        if case >= 1:
            out = out + pair.phi(pts) * (pts @ grad)
        if case >= 2:
            out = out + pair.eta(pts) * 0.5 * np.einsum("ij,jk,ik->i", pts, hess, pts)
        return out

    return SmoothFn(value, grad=lambda y: _fd_grad(value, y),
                    hess=lambda y: _fd_hess(value, y),
                    cls=beta, name=name, values=values)


def taylor_cutoff(u: SmoothFn, x, pair: CutoffPair,
                  beta: RegularityClass) -> SmoothFn:
    """Cutoff-compensated Taylor data of u at x, as a function of the offset y.

    Three regimes: below 1 the value alone; in [1,2) value plus a cutoff
    gradient term; in [2,3) additionally a cutoff quadratic term.  On the
    common plateau of the pair the result agrees with the Taylor polynomial
    of the matching order.  Derivatives of the returned function are finite
    difference measurements.
    """
    x = np.asarray(x, dtype=float)
    case = beta.case
    u0 = u.value(x)
    grad = u.grad(x) if case >= 1 else np.zeros(x.size)
    hess = u.hess(x) if case >= 2 else np.zeros((x.size, x.size))
    return _cutoff_poly(u0, grad, hess, pair, beta, f"P[{u.name}@{x.tolist()}]")


def taylor_cutoff_discrete(u: GridFunction, x_index, pair: CutoffPair,
                           beta: RegularityClass) -> SmoothFn:
    """Same as taylor_cutoff but with grid data and stencil derivatives."""
    from .calculus import dgrad, dhess  # local import: calculus builds on grid only

    x_index = np.asarray(x_index, dtype=np.int64)
    case = beta.case
    u0 = u.value(x_index)
    d = u.grid.dim
    grad = dgrad(u, x_index) if case >= 1 else np.zeros(d)
    hess = dhess(u, x_index) if case >= 2 else np.zeros((d, d))
    return _cutoff_poly(u0, grad, hess, pair, beta,
                        f"Pn[node {x_index.tolist()}]")
