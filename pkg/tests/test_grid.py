import json

import numpy as np
import pytest

from levyminmax.grid import (DyadicGrid, GridError, GridFunction,
                             RegularityClass, SmoothFn, basis_indicator,
                             grid_function_from_flat, nearest_node, restrict,
                             translate, truncate)


def test_grid_basic_geometry():
    g = DyadicGrid(level=2, dim=2, box_radius=1.0)
    assert g.spacing == 0.25
    assert g.half_count == 4
    assert g.shape == (9, 9)
    assert g.node_count == 81
    assert np.allclose(g.point_of((3, -4)), [0.75, -1.0])
    assert tuple(g.index_of([0.75, -1.0])) == (3, -4)


def test_grid_default_box_is_power_of_two():
    g = DyadicGrid(level=3, dim=1)
    assert g.box_radius == 8.0
    assert g.half_count == 64


def test_grid_rejects_bad_shapes():
    with pytest.raises(GridError):
        DyadicGrid(level=2, dim=4)
    with pytest.raises(GridError):
        DyadicGrid(level=-1, dim=1)
    with pytest.raises(GridError):
        DyadicGrid(level=2, dim=1, box_radius=0.3)   # not a spacing multiple
    with pytest.raises(GridError):
        DyadicGrid(level=5, dim=2)                   # default box too large
    # small box at the same level is fine
    DyadicGrid(level=5, dim=2, box_radius=1.0)


def test_grid_node_budget_cap():
    with pytest.raises(GridError):
        DyadicGrid(level=8, dim=3, box_radius=4.0)


def test_indices_cover_box_lexicographically():
    g = DyadicGrid(level=1, dim=2, box_radius=0.5)
    idx = g.indices()
    assert idx.shape == (9, 2)
    assert tuple(idx[0]) == (-1, -1)
    assert tuple(idx[-1]) == (1, 1)
    pts = g.points()
    assert np.allclose(pts[0], [-0.5, -0.5])


def test_nearest_node_matches_brute_force():
    rng = np.random.default_rng(7)
    g = DyadicGrid(level=2, dim=2, box_radius=1.0)
    nodes = g.points()
    for _ in range(50):
        x = rng.uniform(-1.3, 1.3, size=2)
        res = nearest_node(x, g)
        d2 = np.sum((nodes - x) ** 2, axis=1)
        assert res.distance == pytest.approx(np.sqrt(d2.min()), abs=1e-12)


def test_nearest_node_frozen_case():
    # nearest level-1 node to (0.3, 0.1) is (0.5, 0.0) at distance sqrt(0.05)
    g = DyadicGrid(level=1, dim=2, box_radius=1.0)
    res = nearest_node([0.3, 0.1], g)
    assert tuple(res.index) == (1, 0)
    assert res.distance == pytest.approx(0.22360679774997896, abs=1e-15)
    assert not res.tie


def test_nearest_node_reports_ties():
    g = DyadicGrid(level=1, dim=1, box_radius=1.0)
    res = nearest_node([0.25], g)
    assert res.tie
    # midpoints in 2d tie across four nodes
    g2 = DyadicGrid(level=1, dim=2, box_radius=1.0)
    assert nearest_node([0.25, 0.25], g2).tie


def test_grid_function_value_and_pad():
    g = DyadicGrid(level=1, dim=1, box_radius=1.0)
    u = grid_function_from_flat(g, np.arange(5, dtype=float))
    assert u.value((-2,)) == 0.0
    assert u.value((2,)) == 4.0
    with pytest.raises(GridError):
        u.value((3,))
    assert u.pad((3,)) == 0.0
    assert u.pad((-2,)) == 0.0


def test_grid_function_algebra_and_norm():
    g = DyadicGrid(level=1, dim=2, box_radius=1.0)
    a = restrict(SmoothFn(lambda x: x[0]), g)
    b = restrict(SmoothFn(lambda x: x[1]), g)
    s = a + b
    assert s.value((2, -2)) == pytest.approx(0.0)
    assert (a - a).sup_norm() == 0.0
    assert (a * 3.0).value((2, 0)) == pytest.approx(3.0)


def test_restrict_rejects_nonfinite():
    g = DyadicGrid(level=1, dim=1, box_radius=1.0)
    with np.errstate(divide="ignore"):
        bad = SmoothFn(lambda x: float(np.divide(1.0, x[0])))
        with pytest.raises(GridError):
            restrict(bad, g)


def test_json_round_trip_is_exact():
    g = DyadicGrid(level=2, dim=2, box_radius=1.0)
    rng = np.random.default_rng(3)
    u = grid_function_from_flat(g, rng.standard_normal(g.node_count))
    text = u.to_json()
    v = GridFunction.from_json(text)
    assert v.grid == u.grid
    assert np.array_equal(v.values, u.values)
    # serialization is canonical: keys sorted, repr floats
    obj = json.loads(text)
    assert list(obj.keys()) == sorted(obj.keys())


def test_json_is_deterministic():
    g = DyadicGrid(level=1, dim=1, box_radius=1.0)
    u = grid_function_from_flat(g, np.linspace(-1, 1, 5))
    assert u.to_json() == u.to_json()


def test_csv_dump(tmp_path):
    g = DyadicGrid(level=1, dim=2, box_radius=0.5)
    u = restrict(SmoothFn(lambda x: x[0] + 2 * x[1]), g)
    path = tmp_path / "u.csv"
    u.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "x_1,x_2,value"
    assert len(lines) == 1 + g.node_count


def test_truncate_zeroes_outside_unit_dyadic_box():
    g = DyadicGrid(level=1, dim=1, box_radius=4.0)
    u = restrict(SmoothFn(lambda x: 1.0 + 0.0 * x[0]), g)
    t = truncate(u)
    assert t.value((8,)) == 0.0        # x=4 lies outside [-2, 2]
    assert t.value((4,)) == 1.0        # x=2 on the boundary survives
    assert t.value((0,)) == 1.0


def test_translate_shifts_samples():
    g = DyadicGrid(level=2, dim=1, box_radius=1.0)
    u = restrict(SmoothFn(lambda x: x[0]), g)
    v = translate(u, [0.25])
    # v(x) = u(x + 0.25) where defined, zero-padded past the box
    assert v.value((0,)) == pytest.approx(0.25)
    assert v.value((4,)) == 0.0
    with pytest.raises(GridError):
        translate(u, [0.1])            # off-lattice shift


def test_basis_indicator():
    g = DyadicGrid(level=1, dim=2, box_radius=1.0)
    e = basis_indicator(g, (1, -1))
    assert e.value((1, -1)) == 1.0
    assert e.flat().sum() == 1.0


def test_regularity_class_cases():
    assert RegularityClass(0.5).case == 0
    assert RegularityClass(1.0).case == 1
    assert RegularityClass(1.7).case == 1
    assert RegularityClass(2.0).case == 2
    assert RegularityClass(2.9).case == 2
    with pytest.raises(GridError):
        RegularityClass(3.0)
    with pytest.raises(GridError):
        RegularityClass(0.0)


def test_regularity_class_integer_semantics():
    c11 = RegularityClass(2.0)
    assert c11.derivative_order == 1 and c11.holder_exponent == 1.0
    c2 = RegularityClass(2.0, strict=True)
    assert c2.derivative_order == 2 and c2.holder_exponent == 0.0
    frac = RegularityClass(2.5)
    assert frac.derivative_order == 2 and frac.holder_exponent == 0.5
    with pytest.raises(GridError):
        RegularityClass(2.5, strict=True)


def test_smooth_fn_missing_derivatives_raise():
    f = SmoothFn(lambda x: float(x[0]))
    assert f.value([2.0]) == 2.0
    with pytest.raises(GridError):
        f.grad([0.0])
    with pytest.raises(GridError):
        f.hess([0.0])
