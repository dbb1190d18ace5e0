import numpy as np
import pytest

from levyminmax.calculus import dgrad_padded, dhess_padded
from levyminmax.grid import (DyadicGrid, GridError, RegularityClass, SmoothFn,
                             grid_function_from_flat, restrict)
from levyminmax.whitney import (discrete_min_gradient_bound, extend,
                                holder_norm, interp_poly,
                                order_preservation_defect, project)

QUAD = RegularityClass(2.5)


def _quad_fn():
    a = np.array([[1.5, -0.4], [-0.4, 0.8]])
    b = np.array([0.2, -0.3])
    return SmoothFn(lambda x: float(0.5 * x @ a @ x + b @ x + 0.7),
                    grad=lambda x: a @ x + b, hess=lambda x: a,
                    cls=QUAD, name="quad")


def test_extension_reproduces_node_values():
    rng = np.random.default_rng(21)
    for d in (1, 2, 3):
        g = DyadicGrid(level=2, dim=d, box_radius=1.0)
        u = grid_function_from_flat(g, rng.standard_normal(g.node_count))
        E = extend(u, QUAD)
        for idx in [(0,) * d, (1,) * d, (-g.half_count,) * d]:
            assert E(g.point_of(idx)) == u.value(idx)


def test_extension_exact_on_quadratics_inside():
    # stencils are exact on quadratics, so every anchored polynomial is the
    # quadratic itself and the blend reproduces it wherever no anchor pads
    f = _quad_fn()
    g = DyadicGrid(level=3, dim=2, box_radius=1.0)
    E = extend(restrict(f, g), QUAD)
    rng = np.random.default_rng(22)
    pts = rng.uniform(-0.5, 0.5, size=(200, 2))
    vals = E.values(pts)
    want = np.array([f.value(p) for p in pts])
    assert np.max(np.abs(vals - want)) < 1e-12


def test_extension_exact_on_affine_case_one():
    f = SmoothFn(lambda x: float(1.3 * x[0] - 0.7 * x[1] + 0.1),
                 grad=lambda x: np.array([1.3, -0.7]))
    g = DyadicGrid(level=2, dim=2, box_radius=1.0)
    E = extend(restrict(f, g), RegularityClass(1.5))
    rng = np.random.default_rng(23)
    for _ in range(60):
        x = rng.uniform(-0.5, 0.5, size=2)
        assert E(x) == pytest.approx(f.value(x), abs=1e-13)


def test_extension_constant_case_zero():
    f = SmoothFn(lambda x: 4.25 + 0.0 * x[0])
    g = DyadicGrid(level=2, dim=1, box_radius=1.0)
    E = extend(restrict(f, g), RegularityClass(0.5))
    rng = np.random.default_rng(24)
    xs = rng.uniform(-0.5, 0.5, size=30)
    for x in xs:
        assert E(float(x)) == pytest.approx(4.25, abs=1e-14)


def test_extension_error_decays_with_level():
    f = SmoothFn(lambda x: float(np.sin(x[0]) * np.cos(x[1])), cls=QUAD)
    rng = np.random.default_rng(25)
    pts = rng.uniform(-0.45, 0.45, size=(300, 2))
    want = np.array([f.value(p) for p in pts])
    errs = {}
    for lev in (3, 5):
        g = DyadicGrid(level=lev, dim=2, box_radius=1.0)
        E = extend(restrict(f, g), QUAD)
        errs[lev] = float(np.max(np.abs(E.values(pts) - want)))
    assert errs[5] < errs[3] / 8.0


def test_extension_continuous_across_nodes():
    f = _quad_fn()
    g = DyadicGrid(level=3, dim=2, box_radius=1.0)
    E = extend(restrict(f, g), QUAD)
    node = g.point_of((2, -1))
    base = E(node)
    for eps in (1e-7, 3e-8):
        for sgn in (1.0, -1.0):
            x = node + sgn * eps * np.array([1.0, 0.7])
            assert abs(E(x) - base) < 1e-5


def test_extension_snap_region_is_consistent():
    f = _quad_fn()
    g = DyadicGrid(level=2, dim=2, box_radius=1.0)
    E = extend(restrict(f, g), QUAD)
    node = g.point_of((1, 1))
    inside = node + 2.0 ** -28 * g.spacing
    outside = node + 2.0 ** -24 * g.spacing
    assert E(inside) == E(node)
    assert abs(E(outside) - E(node)) < 1e-6


def test_extension_input_shapes():
    g1 = DyadicGrid(level=2, dim=1, box_radius=1.0)
    u1 = restrict(SmoothFn(lambda x: float(x[0])), g1)
    E1 = extend(u1, RegularityClass(1.5))
    assert E1(0.31) == pytest.approx(0.31, abs=1e-13)
    batch = E1(np.array([0.31, -0.12, 0.07]))
    assert batch.shape == (3,)
    g2 = DyadicGrid(level=2, dim=2, box_radius=1.0)
    u2 = restrict(SmoothFn(lambda x: float(x[0])), g2)
    E2 = extend(u2, RegularityClass(1.5))
    assert np.isscalar(E2(np.array([0.31, 0.2])))
    with pytest.raises(GridError):
        E2.values(np.zeros((4, 3)))


def test_interp_poly_matches_manual_formula():
    g = DyadicGrid(level=2, dim=2, box_radius=1.0)
    rng = np.random.default_rng(26)
    u = grid_function_from_flat(g, rng.standard_normal(g.node_count))
    idx = (1, -1)
    p = interp_poly(u, idx, QUAD)
    x = np.array([0.3, -0.2])
    dx = x - g.point_of(idx)
    want = u.value(idx) + dgrad_padded(u, idx) @ dx \
        + 0.5 * dx @ dhess_padded(u, idx) @ dx
    assert p(x) == pytest.approx(want, abs=1e-13)
    p0 = interp_poly(u, idx, RegularityClass(0.5))
    assert p0(x) == u.value(idx)


def test_projection_exposes_stencils_at_nodes():
    f = SmoothFn(lambda x: float(np.sin(x[0] + 0.5 * x[1])), cls=QUAD)
    g = DyadicGrid(level=3, dim=2, box_radius=1.0)
    P = project(f, g)
    u = restrict(f, g)
    idx = (2, 2)
    x = g.point_of(idx)
    assert P.value(x) == u.value(idx)
    assert np.array_equal(P.grad(x), dgrad_padded(u, idx))
    assert np.array_equal(P.hess(x), dhess_padded(u, idx))


def test_projection_idempotent_on_quadratics():
    f = _quad_fn()
    g = DyadicGrid(level=3, dim=2, box_radius=1.0)
    P = project(f, g)
    P2 = project(P, g)
    rng = np.random.default_rng(27)
    for _ in range(20):
        x = rng.uniform(-0.5, 0.5, size=2)
        assert P2.value(x) == pytest.approx(P.value(x), abs=1e-11)


def test_projection_offnode_derivatives_are_reasonable():
    f = _quad_fn()
    g = DyadicGrid(level=4, dim=2, box_radius=1.0)
    P = project(f, g)
    x = np.array([0.21, -0.13])
    assert np.allclose(P.grad(x), f.grad(x), atol=1e-6)
    assert np.allclose(P.hess(x), f.hess(x), atol=1e-4)


def test_order_preservation_defect_decays():
    # extending sqrt-rough data with quadratic polynomials dips below zero
    # near the kink (curvature stencil ~ h^-1.5), so the defect against the
    # zero function is positive and shrinks like h^0.5
    low = SmoothFn(lambda x: 0.0 * x[0], name="low")
    high = SmoothFn(lambda x: float(np.abs(x[0]) ** 0.5), name="high")
    cls = QUAD
    d3 = order_preservation_defect(low, high, DyadicGrid(3, 2, 1.0), cls)
    d5 = order_preservation_defect(low, high, DyadicGrid(5, 2, 1.0), cls)
    assert d3 > 1e-4
    assert d5 < d3
    assert d5 < 0.1


def test_order_preservation_rejects_bad_ordering():
    low = SmoothFn(lambda x: float(np.sum(x ** 2)))
    high = SmoothFn(lambda x: float(-1.0 + 0.0 * x[0]))
    with pytest.raises(GridError):
        order_preservation_defect(low, high, DyadicGrid(3, 1, 1.0),
                                  RegularityClass(1.5))


def test_holder_norm_brackets_known_function():
    f = SmoothFn(lambda x: float(np.sin(x[0])))
    est = holder_norm(f, RegularityClass(1.0), dim=1, box_radius=1.0,
                      samples=200, seed=4)
    assert est.sup_norm <= 1.0 + 1e-9
    assert est.seminorm <= 1.0 + 1e-3   # |sin|_{Lip} = 1, FD noise allowed
    assert est.value >= 0.8             # sampled lower bound is not trivial


def test_holder_norm_exact_hessian_has_no_seminorm():
    f = _quad_fn()
    est = holder_norm(f, QUAD, dim=2, box_radius=1.0, samples=100, seed=5)
    assert est.derivative_order == 2
    assert est.seminorm == 0.0


def test_holder_norm_strict_class_skips_seminorm():
    f = SmoothFn(lambda x: float(np.cos(x[0])))
    est = holder_norm(f, RegularityClass(1.0, strict=True), dim=1, samples=50)
    assert est.seminorm == 0.0
    assert est.exponent == 0.0


def test_discrete_min_gradient_bound_scales_with_spacing():
    f = SmoothFn(lambda x: float(np.sum((x - 0.11) ** 2)))
    ratios = []
    for lev in (3, 4, 5):
        g = DyadicGrid(level=lev, dim=2, box_radius=1.0)
        rep = discrete_min_gradient_bound(restrict(f, g))
        assert abs(rep.point[0] - 0.11) <= g.spacing
        ratios.append(rep.ratio)
    assert max(ratios) <= 2.0 + 1e-12
