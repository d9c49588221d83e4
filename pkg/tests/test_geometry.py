import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from g2soliton import catalog as C
from g2soliton import fields as F
from g2soliton import geometry as G
from g2soliton.fields import Constant, Grid2

t1, t2 = F.coordinates(2)
ZERO, ONE = Constant(0.0), Constant(1.0)


def generic_metric():
    b = [[2.0 + t1 * t1, 0.3 * t1 * t2], [0.3 * t1 * t2, 3.0 + t2 * t2]]
    f = [[F.sin(t1), t2], [t1 * t2, F.cos(t2)]]
    h = [[1.0 + t1 * t1, 0.5 + 0.1 * t2], [0.5 + 0.1 * t2, -1.0 - 0.2 * t1]]
    return G.AdaptedMetric(b, f, h)


def pts4(rng, n=10, lo=0.5, hi=1.5):
    return np.column_stack([rng.uniform(lo, hi, (n, 2)), rng.uniform(-1, 1, (n, 2))])


# -- connection and curvature -----------------------------------------------------


def test_flat_metric_has_zero_christoffel_and_ricci(rng):
    g = G.AdaptedMetric([[ONE, ZERO], [ZERO, ONE]], [[ZERO, ZERO], [ZERO, ZERO]], [[ONE, ZERO], [ZERO, -1.0 * ONE]])
    p = pts4(rng)
    assert np.all(G.christoffel(g, p) == 0)
    assert np.all(G.ricci(g, p) == 0)


def test_polar_christoffel():
    g = G.ComponentMetric([[ONE, ZERO], [ZERO, t1 * t1]])
    gam = G.christoffel(g, np.array([1.7, 0.3]))
    expected = np.zeros((2, 2, 2))
    expected[0, 1, 1] = -1.7
    expected[1, 0, 1] = expected[1, 1, 0] = 1 / 1.7
    np.testing.assert_allclose(gam, expected, atol=1e-15)


def test_round_sphere_block_has_ric_equal_g(rng):
    s = F.sin(t1)
    g = G.AdaptedMetric([[ONE, ZERO], [ZERO, s * s]], [[ZERO, ZERO], [ZERO, ZERO]], [[ONE, ZERO], [ZERO, ONE]])
    p = pts4(rng)
    ric = G.ricci(g, p)
    gv = g.values(p)
    np.testing.assert_allclose(ric[:, :2, :2], gv[:, :2, :2], atol=1e-13)
    np.testing.assert_allclose(ric[:, 2:, :], 0, atol=1e-13)
    K = G.gauss_curvature_2d([[ONE, ZERO], [ZERO, s * s]], p[:, :2])
    np.testing.assert_allclose(K, 1.0, atol=1e-13)


def test_ricci_symmetric(rng):
    ric = G.ricci(generic_metric(), pts4(rng))
    assert np.max(np.abs(ric - np.swapaxes(ric, -1, -2))) <= 1e-12


@pytest.mark.parametrize("lam", [2.0, 10.0])
def test_ricci_scale_invariant(rng, lam):
    g = generic_metric()
    b, f, h = g.blocks()
    sc = lambda m: [[lam * x for x in row] for row in m]  # noqa: E731
    gs = G.AdaptedMetric(sc(b), sc(f), sc(h))
    p = pts4(rng)
    r, rs = G.ricci(g, p), G.ricci(gs, p)
    assert np.max(np.abs(rs - r)) <= 1e-10 * max(1.0, np.max(np.abs(r)))


def test_degenerate_metric_rejected():
    g = G.ComponentMetric([[ONE, ONE], [ONE, ONE]])
    with pytest.raises(G.DegenerateMetricError):
        G.ricci(g, np.array([0.5, 0.5]))


def test_two_dimensional_ricci_is_K_times_g(rng):
    g2 = [[F.exp(t1 * t2), 0.2 * t1], [0.2 * t1, 1.0 + t2 * t2]]
    p = rng.uniform(0.2, 1.0, (10, 2))
    m = G.ComponentMetric(g2)
    K = G.gauss_curvature_2d(m, p)
    np.testing.assert_allclose(G.ricci(m, p), K[:, None, None] * m.values(p), atol=1e-9)


def test_gauss_curvature_type_b_orbit():
    # -3/(Lambda t1^2) (dt1^2 + dt2^2), Lambda = -3
    c = 1.0 / (t1 * t1)
    K = G.gauss_curvature_2d([[c, ZERO], [ZERO, c]], np.array([[1.3, 0.2], [1.9, 1.7]]))
    np.testing.assert_allclose(K, -1.0, atol=1e-13)


def test_gauss_curvature_case_ii2_orbit():
    c = t1**-0.5
    K = G.gauss_curvature_2d([[c, ZERO], [ZERO, c]], np.array([4.0, 0.0]))
    assert float(K) == pytest.approx(-1 / 32, abs=1e-14)


def test_gauss_curvature_flat():
    assert float(G.gauss_curvature_2d([[ONE, ZERO], [ZERO, -1.0 * ONE]], np.array([0.1, 0.2]))) == 0.0


# -- Lie derivative -------------------------------------------------------------


@pytest.mark.parametrize("k", [0, 1])
def test_killing_fields(rng, k):
    L = G.lie_derivative_metric(generic_metric(), G.SolitonVectorField.killing(k), pts4(rng))
    assert np.all(L == 0)


def test_lie_derivative_affine_shear(rng):
    a2 = 0.7
    g = generic_metric()
    X = G.SolitonVectorField(lin=[[0, 0], [a2, 0]])
    p = pts4(rng)
    L = G.lie_derivative_metric(g, X, p)
    gv = g.values(p)
    np.testing.assert_allclose(L[:, 2, 2], 2 * a2 * gv[:, 2, 3], rtol=1e-14)
    np.testing.assert_allclose(L[:, 0, 2], a2 * gv[:, 0, 3], rtol=1e-14)
    np.testing.assert_allclose(L[:, 1, 2], a2 * gv[:, 1, 3], rtol=1e-14)
    np.testing.assert_allclose(L[:, 2, 3], a2 * gv[:, 3, 3], rtol=1e-14)
    assert np.all(L[:, :2, :2] == 0) and np.all(L[:, :2, 3] == 0) and np.all(L[:, 3, 3] == 0)


def test_A_slot_enters_through_its_derivative():
    A = F.ClosedForm(lambda z: z * z, arity=1)
    X = G.SolitonVectorField(A=A)
    D = X.jacobian(np.array([0.0, 0.0, 1.5, 0.0]))
    assert D[3, 2] == pytest.approx(3.0)


# -- submersion data -------------------------------------------------------------


@given(st.floats(0.5, 1.5), st.floats(0.5, 1.5))
def test_geroch_reconstruction(x, y):
    g = generic_metric()
    back = G.geroch_decompose(g).assemble()
    p = np.array([x, y, 0.0, 0.0])
    a, b = g.values(p), back.values(p)
    assert np.max(np.abs(a - b)) <= 1e-12 * np.max(np.abs(a))


def test_geroch_without_cross_terms():
    g = generic_metric()
    b, _, h = g.blocks()
    gd = G.geroch_decompose(G.AdaptedMetric(b, [[ZERO, ZERO], [ZERO, ZERO]], h))
    p = np.array([0.7, 1.1])
    for i in range(2):
        for j in range(2):
            assert float(gd.fup[i][j](p)) == 0.0
            assert float(gd.gt[i][j](p)) == float(b[i][j](p))


@pytest.mark.parametrize("c", [1.0, -2.5])
def test_geroch_case_i_flat(c):
    spec = C.FamilySpec("CaseI", {"Lambda": 0.0, "c": c}, {"P": Constant(0.0)})
    gd = G.geroch_decompose(C.build_family(spec).metric)
    for p in [np.array([1.3, 1.6]), np.array([1.8, 1.1])]:
        F_ = p[1] - spec.params["t2_base"]
        assert float(gd.fup[0][0](p)) == pytest.approx(F_)
        assert float(gd.fup[0][1](p)) == pytest.approx(c * F_)
        assert float(gd.fup[1][0](p)) == 0 and float(gd.fup[1][1](p)) == 0
        np.testing.assert_allclose(gd.orbit_metric().values(p), np.eye(2), atol=1e-14)


def test_geroch_case_ii3_flat():
    spec, _ = C.fixture("CaseII3_flat")
    gd = G.geroch_decompose(C.build_family(spec).metric)
    p = np.array([1.4, 1.7])
    F_ = p[1] - spec.params["t2_base"]
    assert float(gd.fup[0][0](p)) == pytest.approx(0.0, abs=1e-15)
    assert float(gd.fup[0][1](p)) == pytest.approx(spec.params["c"] * F_)


def test_curvature_vector_case_i():
    c = 1.5
    spec = C.FamilySpec("CaseI", {"Lambda": 0.0, "c": c}, {"P": Constant(0.0)})
    gd = G.geroch_decompose(C.build_family(spec).metric)
    p = np.array([[1.2, 1.3], [1.9, 1.9]])
    C1, C2 = G.curvature_vector(gd, p)
    np.testing.assert_allclose(C1, 1.0)
    np.testing.assert_allclose(C2, c)
    np.testing.assert_allclose(G.c_norm_squared(gd, p), 0.0, atol=1e-14)


def test_curvature_vector_case_ii3():
    spec, _ = C.fixture("CaseII3_flat")
    gd = G.geroch_decompose(C.build_family(spec).metric)
    C1, C2 = G.curvature_vector(gd, np.array([1.5, 1.5]))
    assert float(C1) == pytest.approx(0.0, abs=1e-14)
    assert float(C2) == pytest.approx(spec.params["c"])
    assert float(G.c_norm_squared(gd, np.array([1.5, 1.5]))) == pytest.approx(0.0, abs=1e-14)


def test_curvature_vector_vanishes_for_gradient_fup(rng):
    # f_j^k = d_j Phi^k
    fup = [[2.0 * t1 * t2, F.cos(t1) * t2], [t1 * t1, F.sin(t1)]]
    gd = G.GerochData([[ONE, ZERO], [ZERO, ONE]], fup, [[ONE, ZERO], [ZERO, -1.0 * ONE]])
    C1, C2 = G.curvature_vector(gd, rng.uniform(0, 1, (10, 2)))
    assert np.max(np.abs(C1)) <= 1e-14 and np.max(np.abs(C2)) <= 1e-14


def test_curvature_vector_zero_for_constant_fup():
    gd = G.GerochData([[ONE, ZERO], [ZERO, ONE]], [[Constant(0.3), ONE], [ZERO, ONE]], [[ONE, ONE], [ONE, ZERO]])
    C1, C2 = G.curvature_vector(gd, np.array([0.5, 0.5]))
    assert C1 == 0 and C2 == 0


# -- residuals and assumption checks ------------------------------------------------


def test_case_i_flat_residual_and_assumptions():
    spec, window = C.fixture("CaseI_flat")
    inst = C.build_family(spec)
    grid = Grid2.from_window(window, 21)
    rep = G.residual_scan(inst, grid)
    assert rep.sup_norm <= 1e-9
    assert rep.sup_norm == float(rep.per_component.max())
    assert G.validate_assumptions(inst, grid).passed


def test_type_b_perturbed_residual_grows():
    spec, window = C.fixture("TypeB_a2_0")
    grid = Grid2.from_window(window, 21)
    assert G.residual_scan(C.build_family(spec), grid).sup_norm <= 1e-9
    bad = spec.with_slots(psi=spec.slots["psi"] + 0.1 * t2 * t2)
    assert G.residual_scan(C.build_family(bad), grid).sup_norm >= 0.01


@pytest.mark.xfail(strict=True, reason="the literal Type B psi solves the printed psi-equation but not the soliton equation")
def test_type_b_literal_psi_residual():
    spec, window = C.fixture("TypeB_literal_a2_0")
    assert G.residual_scan(C.build_family(spec), Grid2.from_window(window, 21)).sup_norm <= 1e-9


def _swap_h(inst, h):
    b, f, _ = inst.metric.blocks()
    return G.SolitonInstance(G.AdaptedMetric(b, f, h), inst.X, inst.Lambda, inst.eps0, inst.loci)


def test_definite_leaf_metric_fails_null_check():
    spec, window = C.fixture("CaseI_flat")
    inst = C.build_family(spec)
    inst2 = _swap_h(inst, [[Constant(2.0), ZERO], [ZERO, ONE]])
    rep = G.validate_assumptions(inst2, Grid2.from_window(window, 11))
    assert not rep["N_null_vector"].passed and not rep["N_h22_zero"].passed


def test_constant_fup_fails_intransitivity():
    spec, window = C.fixture("CaseI_flat")
    inst = C.build_family(spec)
    b, _, h = inst.metric.blocks()
    f = [[Constant(0.3), Constant(-0.2)], [ZERO, ZERO]]
    inst2 = G.SolitonInstance(G.AdaptedMetric(b, f, h), inst.X, inst.Lambda)
    rep = G.validate_assumptions(inst2, Grid2.from_window(window, 11))
    assert not rep["C1_intransitive"].passed
    assert rep["C0_null_curvature_vector"].passed


def test_empty_scan():
    spec, _ = C.fixture("TypeB_a2_0")
    inst = C.build_family(spec)
    grid = Grid2.from_window((-0.01, 0.01, 1, 2), 5)  # straddles t1 = 0
    with pytest.raises(G.EmptyScanError):
        G.residual_scan(inst, grid)


def test_inverse_guard():
    with pytest.raises(G.DegenerateMetricError):
        G.inverse(np.diag([1.0, 1.0, 1.0, 1e-20]))
    a = np.array([[2.0, 1.0], [1.0, -3.0]])
    np.testing.assert_allclose(G.inverse(a) @ a, np.eye(2), atol=1e-15)
