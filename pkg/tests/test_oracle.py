import numpy as np
import pytest

from g2soliton import catalog as C
from g2soliton import fields as F
from g2soliton import geometry as G
from g2soliton import oracle
from g2soliton.fields import Constant


def test_flat_metric():
    one, zero = Constant(1.0), Constant(0.0)
    g = G.AdaptedMetric([[one, zero], [zero, one]], [[zero, zero], [zero, zero]], [[one, zero], [zero, -1.0 * one]])
    r = oracle.fd_ricci(g.values, np.array([0.3, 0.4, 0.0, 0.0]), 1e-3)
    assert np.max(np.abs(r)) <= 1e-6


def test_case_i_agrees_with_jets():
    spec, _ = C.fixture("CaseI_flat")
    g = C.build_family(spec).metric
    p = np.array([1.0, 1.0, 0.0, 0.0])
    assert np.max(np.abs(oracle.fd_ricci(g.values, p, 1e-3) - G.ricci(g, p))) <= 1e-6


def test_halving_step_gives_second_order():
    spec, _ = C.fixture("TypeB_a2_1")
    g = C.build_family(spec).metric
    p = np.array([[1.3, 1.4, 0.2, -0.1], [1.7, 1.2, 0.0, 0.0]])
    steps = (1e-2, 5e-3, 2.5e-3)
    d = oracle.dual_path_disagreement(g.values, G.ricci(g, p), p, steps)
    assert np.polyfit(np.log(steps), np.log(d), 1)[0] >= 1.9


def test_lie_derivative_agrees_with_jets():
    spec, _ = C.fixture("TypeB_a2_1")
    inst = C.build_family(spec)
    p = np.array([[1.3, 1.4, 0.2, -0.1], [1.7, 1.2, 0.5, 0.3]])
    fd = oracle.fd_lie(inst.metric.values, inst.X.values, p, 1e-3)
    assert np.max(np.abs(fd - G.lie_derivative_metric(inst.metric, inst.X, p))) <= 1e-7


def test_default_step_scales_with_point():
    assert oracle.default_step(np.array([0.1, 0.2])) == pytest.approx(1e-4)
    assert oracle.default_step(np.array([50.0, 0.0])) == pytest.approx(5e-3)


def test_fd_christoffel_polar():
    one, zero = Constant(1.0), Constant(0.0)
    t1, _ = F.coordinates(2)
    m = G.ComponentMetric([[one, zero], [zero, t1 * t1]])
    p = np.array([1.5, 0.2])
    np.testing.assert_allclose(oracle.fd_christoffel(m.values, p, 1e-4), G.christoffel(m, p), atol=1e-8)
