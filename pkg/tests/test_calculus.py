import numpy as np
import pytest

from levyminmax.calculus import (ConvergenceStudy, convergence_order, dgrad,
                                 dgrad_padded, dhess, dhess_padded, fit_order,
                                 stencil_derivatives)
from levyminmax.grid import (DyadicGrid, GridError, RegularityClass, SmoothFn,
                             restrict)


def _sin():
    return SmoothFn(lambda x: float(np.sin(x[0])),
                    grad=lambda x: np.cos(x),
                    hess=lambda x: -np.sin(x).reshape(1, 1),
                    cls=RegularityClass(2.5), name="sin")


def test_dgrad_frozen_value():
    # central difference of sin at 0.25 with h=1/16
    g = DyadicGrid(level=4, dim=1, box_radius=1.0)
    u = restrict(_sin(), g)
    val = dgrad(u, (4,))[0]
    assert val == pytest.approx(0.9682817425448877, abs=1e-14)


def test_dhess_frozen_value():
    # forward second difference of exp at 0 with h=1/16
    g = DyadicGrid(level=4, dim=1, box_radius=1.0)
    u = restrict(SmoothFn(lambda x: float(np.exp(x[0]))), g)
    val = dhess(u, (0,))[0, 0]
    assert val == pytest.approx(1.0648410191635662, abs=1e-12)


def test_stencils_exact_on_quadratics():
    a = np.array([[2.0, -1.0], [-1.0, 3.0]])
    b = np.array([0.5, 0.25])
    f = SmoothFn(lambda x: float(0.5 * x @ a @ x + b @ x))
    g = DyadicGrid(level=2, dim=2, box_radius=1.0)
    u = restrict(f, g)
    idx = (1, -1)
    x = g.point_of(idx)
    assert np.allclose(dgrad(u, idx), a @ x + b, atol=1e-12)
    assert np.allclose(dhess(u, idx), a, atol=1e-10)


def test_dgrad_linearity_and_translation_covariance():
    rng = np.random.default_rng(5)
    g = DyadicGrid(level=2, dim=2, box_radius=1.0)
    from levyminmax.grid import grid_function_from_flat, translate
    u = grid_function_from_flat(g, rng.standard_normal(g.node_count))
    v = grid_function_from_flat(g, rng.standard_normal(g.node_count))
    idx = (1, 0)
    assert np.allclose(dgrad(u + v, idx), dgrad(u, idx) + dgrad(v, idx), atol=1e-12)
    shifted = translate(u, (1, -1))
    assert np.allclose(dgrad(shifted, (0, 0)), dgrad(u, (1, -1)), atol=1e-12)


def test_boundary_stencils_raise():
    g = DyadicGrid(level=1, dim=1, box_radius=1.0)
    u = restrict(SmoothFn(lambda x: float(x[0])), g)
    with pytest.raises(GridError):
        dgrad(u, (2,))
    with pytest.raises(GridError):
        dhess(u, (1,))   # forward stencil needs index+2
    # padded variants read zeros instead
    assert dgrad_padded(u, (2,))[0] == pytest.approx((0.0 - 0.5) / 1.0)
    dhess_padded(u, (1,))


def test_hessian_raw_is_symmetric_and_sym_equals_raw():
    rng = np.random.default_rng(6)
    g = DyadicGrid(level=2, dim=3, box_radius=0.5)
    from levyminmax.grid import grid_function_from_flat
    u = grid_function_from_flat(g, rng.standard_normal(g.node_count))
    sd = stencil_derivatives(u, (0, 0, 0))
    assert np.allclose(sd.hess_raw, sd.hess_raw.T, atol=1e-12)
    assert np.allclose(sd.hess_sym, sd.hess_raw, atol=1e-12)


def test_gradient_order_two_on_smooth_data():
    study = convergence_order(_sin(), "grad", [3, 4, 5, 6], x=0.25)
    assert study.order == pytest.approx(2.0, abs=0.05)
    assert not study.exact


def test_hessian_order_one_on_smooth_data():
    f = SmoothFn(lambda x: float(np.exp(x[0])),
                 grad=lambda x: np.exp(x),
                 hess=lambda x: np.exp(x).reshape(1, 1))
    study = convergence_order(f, "hess", [3, 4, 5, 6], x=0.0)
    assert study.order == pytest.approx(1.0, abs=0.05)


def test_hessian_half_order_on_rough_data():
    # |x|^2.5 at the kink: the forward stencil error is exactly (2^2.5-2) h^0.5
    f = SmoothFn(lambda x: float(np.abs(x[0]) ** 2.5),
                 grad=lambda x: np.zeros(1),
                 hess=lambda x: np.zeros((1, 1)),
                 cls=RegularityClass(2.5), name="rough")
    study = convergence_order(f, "hess", [3, 4, 5, 6], x=0.0)
    assert study.order == pytest.approx(0.5, abs=1e-6)
    for h, err in zip(study.spacings, study.errors):
        assert err == pytest.approx((2 ** 2.5 - 2.0) * h ** 0.5, rel=1e-10)


def test_gradient_rate_on_rough_data():
    # x|x|^1.5 has gradient 0 at the origin; the central stencil error there
    # is exactly h^1.5
    f = SmoothFn(lambda x: float(x[0] * np.abs(x[0]) ** 1.5),
                 grad=lambda x: np.zeros(1))
    study = convergence_order(f, "grad", [3, 4, 5], x=0.0)
    assert study.order == pytest.approx(1.5, abs=1e-6)


def test_fit_order_exact_floor():
    order, exact = fit_order([0.5, 0.25, 0.125], [0.0, 1e-16, 0.0])
    assert exact and order is None


def test_convergence_study_csv(tmp_path):
    study = convergence_order(_sin(), "grad", [3, 4, 5], x=0.25)
    path = tmp_path / "rates.csv"
    study.write_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "level,h,error,fitted_order"
    assert len(lines) == 4


def test_convergence_order_rejects_bad_input():
    with pytest.raises(GridError):
        convergence_order(_sin(), "jet", [3, 4, 5], x=0.0)
    with pytest.raises(GridError):
        convergence_order(_sin(), "grad", [3, 4], x=0.0)
    with pytest.raises(GridError):
        convergence_order(_sin(), "grad", [3, 4, 5], x=0.3)   # off-lattice x
