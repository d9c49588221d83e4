import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from g2soliton import fields as F
from g2soliton.fields import Grid2, GridField, OutOfDomainError

t1, t2 = F.coordinates(2)


def test_closed_form_cube():
    j = (t1**3).eval_jet(np.array([2.0, 0.0]))
    assert (float(j.value), j.grad[0], j.hess[0, 0]) == (8, 12, 12)


def test_grid_cube_hessian():
    grid = Grid2.from_window((0.8, 1.2, 0.0, 0.4), 41)
    gf = GridField.sample(t1**3, grid)
    j = gf.eval_jet(np.array([1.0, 0.2]))
    assert abs(j.hess[0, 0] - 6.0) <= 1e-3
    assert abs(j.grad[0] - 3.0) <= 1e-3


@pytest.mark.parametrize("node", [(0, 5), (1, 5), (40, 5), (5, 39)])
def test_grid_boundary_is_out_of_domain(node):
    grid = Grid2.from_window((0, 1, 0, 1), 41)
    gf = GridField.sample(t1 * t2, grid)
    with pytest.raises(OutOfDomainError):
        gf.eval_jet(grid.nodes()[node])


def test_grid_off_node_is_out_of_domain():
    grid = Grid2.from_window((0, 1, 0, 1), 11)
    with pytest.raises(OutOfDomainError):
        GridField.sample(t1, grid).eval_jet(np.array([0.55, 0.5]))


def test_grid_masked_neighbourhood_rejected():
    grid = Grid2.from_window((0, 1, 0, 1), 11)
    mask = np.zeros((11, 11), bool)
    mask[5, 5] = True
    gf = GridField(grid.with_mask(mask), np.zeros((11, 11)))
    with pytest.raises(OutOfDomainError):
        gf.eval_jet(grid.nodes()[6, 6])
    gf.eval_jet(grid.nodes()[3, 3])


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2(4, 10, 0.1, 0.1)
    with pytest.raises(ValueError):
        Grid2(10, 10, 0.0, 0.1)


def test_grid_second_derivatives_converge():
    u = F.exp(t1 * t2) * F.sin(t1 + 2 * t2)
    p = np.array([0.5, 0.25])
    exact = u.eval_jet(p)
    errs, hs = [], []
    for n in (17, 33, 65):
        g = Grid2.from_window((0, 1, 0, 0.5), n, (n - 1) // 2 + 1)
        j = GridField.sample(u, g).eval_jet(p)
        errs.append(np.max(np.abs(j.hess - exact.hess)))
        hs.append(g.h1)
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert order >= 1.9


def test_richardson_order_without_exact_solution():
    from g2soliton.pde import richardson_order

    u = F.cos(3 * t1) * F.exp(t2)
    p = np.array([0.5, 0.5])
    vals = [GridField.sample(u, Grid2.from_window((0, 1, 0, 1), n)).eval_jet(p).hess[0, 0] for n in (17, 33, 65)]
    assert richardson_order(*vals) >= 1.9


def test_singular_mask_margin():
    grid = Grid2.from_window((-1, 1, 0, 1), 21)
    m = F.singular_mask(grid, [lambda a, b: a], margin=3)
    cols = np.where(m.any(axis=1))[0]
    # t1 = 0 is node 10; three cells either side
    assert cols.min() == 7 and cols.max() == 13


def test_antiderivative_matches_closed_form():
    integ = F.exp(-2.0 * t1 * t2)
    A = F.AntiderivativeT2(integ, base=0.5)
    # int_{0.5}^{t2} e^{-2 t1 s} ds = (e^{-t1} - e^{-2 t1 t2}) / (2 t1)
    exact = (F.exp(-1.0 * t1) - F.exp(-2.0 * t1 * t2)) / (2.0 * t1)
    p = np.array([[1.2, 0.9], [1.7, 0.3], [1.0, 2.0]])
    ja, je = A.eval_jet(p), exact.eval_jet(p)
    np.testing.assert_allclose(ja.value, je.value, atol=1e-13)
    np.testing.assert_allclose(ja.grad, je.grad, atol=1e-12)
    np.testing.assert_allclose(ja.hess, je.hess, atol=1e-11)


def test_trapezoid_antiderivative_second_order():
    errs = []
    for n in (17, 33, 65):
        g = Grid2.from_window((1, 2, 0, 1), n)
        Fg = F.trapezoid_antiderivative_t2(np.exp(-g.nodes()[..., 1] * g.nodes()[..., 0]), g)
        T1, T2 = g.nodes()[..., 0], g.nodes()[..., 1]
        errs.append(np.max(np.abs(Fg.values - (1 - np.exp(-T1 * T2)) / T1)))
    assert errs[0] / errs[1] > 3.6 and errs[1] / errs[2] > 3.6


def test_partial_field():
    u = t1**3 * t2**2
    d1 = F.Partial(u, 0)
    j = d1.eval_jet(np.array([1.5, 2.0]))
    assert float(j.value) == pytest.approx(3 * 1.5**2 * 4)
    np.testing.assert_allclose(j.grad, [6 * 1.5 * 4, 3 * 1.5**2 * 4])
    np.testing.assert_allclose(j.hess, [[24, 24 * 1.5], [24 * 1.5, 6 * 1.5**2]], rtol=1e-7)


def test_lifted_has_zero_z_derivatives():
    f = F.Lifted(F.exp(t1) * t2)
    j = f.eval_jet(np.array([0.3, 0.7, 5.0, -2.0]))
    assert np.all(j.grad[2:] == 0) and np.all(j.hess[2:, :] == 0) and np.all(j.hess[:, 2:] == 0)


def test_grid_file_round_trip(tmp_path):
    grid = Grid2.from_window((1, 2, -0.5, 0.5), 9, 7)
    mask = np.zeros((9, 7), bool)
    mask[0, 0] = True
    vals = np.random.default_rng(3).normal(size=(9, 7))
    F.write_grid(tmp_path / "u.grid", grid.with_mask(mask), vals)
    back = F.read_grid(tmp_path / "u.grid")
    assert (back.grid.n1, back.grid.n2) == (9, 7)
    assert back.grid.window == pytest.approx(grid.window, abs=1e-15)
    assert back.grid.mask[0, 0] and back.grid.mask.sum() == 1
    np.testing.assert_array_equal(back.values[~mask], vals[~mask])


def test_grid_file_rejects_bad_header(tmp_path):
    (tmp_path / "x").write_text("hello\n")
    with pytest.raises(ValueError):
        F.read_grid(tmp_path / "x")


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(0.5, 3))
def test_field_algebra_matches_values(x, y, a):
    f = (t1 * a + t2) ** 2 - F.cos(t1 * t2) / (1.0 + t1 * t1)
    p = np.array([x, y])
    assert float(f(p)) == pytest.approx((a * x + y) ** 2 - np.cos(x * y) / (1 + x * x), rel=1e-12, abs=1e-12)
