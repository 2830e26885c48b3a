import numpy as np
import pytest

from hprelu.catalog import analytic_fn, corner_singular
from hprelu.mesh import TensorMesh
from hprelu.metrics import ErrorReport, as_field, fit_rate, h1_error
from hprelu.network import Layer, NeuralNetwork
from hprelu.projector import hp_interpolate


def test_pinned_1d():
    # f = x^2, g = x on (0,1): l2^2 = 1/30, semi^2 = 1/3
    f = (lambda p: p[:, 0] ** 2, lambda p: 2 * p[:, 0:1])
    g = (lambda p: p[:, 0], lambda p: np.ones_like(p[:, 0:1]))
    rep = h1_error(f, g, [np.array([0.0, 1.0])])
    assert rep.h1_error == pytest.approx(np.sqrt(11 / 30), rel=1e-6)
    assert rep.h1_error == pytest.approx(0.60553, abs=5e-6)
    assert rep.l2_error == pytest.approx(np.sqrt(1 / 30), rel=1e-6)
    assert rep.h1_seminorm_error == pytest.approx(np.sqrt(1 / 3), rel=1e-6)
    assert rep.certified and rep.richardson_gap < 1e-6
    assert rep.linf_error == pytest.approx(0.25, abs=1e-4)


def test_pinned_2d():
    u = analytic_fn(2, "polynomial", {"axis_coeffs": [[0.0, 1.0], [0.0, 1.0]]})
    z = analytic_fn(2, "constant", {"value": 0.0})
    rep = h1_error(u, z, [np.array([0, 0.5, 1.0]), np.array([0, 0.5, 1.0])])
    assert rep.h1_error == pytest.approx(np.sqrt(1 / 9 + 2 / 3), rel=1e-6)
    assert rep.linf_error <= 1.0


def test_identity_report_invariant():
    with pytest.raises(AssertionError):
        ErrorReport(1.0, 1.0, 1.0, 1.0, 4, 0.0, True)


def test_network_field():
    # y = 3x through a relu pair; compare against the same affine function
    l1 = Layer.from_dense(np.array([[1.0], [-1.0]]), np.zeros(2))
    l2 = Layer.from_dense(np.array([[3.0, -3.0]]), np.zeros(1))
    net = NeuralNetwork(1, [l1, l2])
    f = (lambda p: 3 * p[:, 0], lambda p: 3 * np.ones_like(p[:, 0:1]))
    rep = h1_error(net, f, [np.array([0.0, 1.0])], n_q=1, max_doublings=1)
    assert rep.h1_error < 1e-12
    assert rep.certified


def test_interp_vs_function_decreases():
    u = corner_singular(2, 0.5)
    errs = []
    for ell in (1, 3):
        it = hp_interpolate(u, TensorMesh.cube(0.5, ell, 2), max(ell, 1))
        rep = h1_error(u, it, [it.mesh.axes[0].nodes] * 2, q=8, n_q=1,
                       max_doublings=2)
        errs.append(rep.h1_error)
    assert errs[1] < errs[0]
    assert errs[1] < 0.15


def test_no_refinement_uncertified():
    f = (lambda p: np.abs(p[:, 0] - 0.37), lambda p: np.sign(p[:, 0] - 0.37)[:, None])
    g = (lambda p: np.zeros(len(p)), lambda p: np.zeros((len(p), 1)))
    rep = h1_error(f, g, [np.array([0.0, 1.0])], max_doublings=0)
    assert not rep.certified
    assert np.isnan(rep.richardson_gap)


def test_jitter_determinism():
    f = (lambda p: p[:, 0] ** 3, lambda p: 3 * p[:, 0:1] ** 2)
    g = (lambda p: np.zeros(len(p)), lambda p: np.zeros((len(p), 1)))
    r1 = h1_error(f, g, [np.array([0.0, 1.0])])
    r2 = h1_error(f, g, [np.array([0.0, 1.0])])
    assert r1.h1_error == r2.h1_error


def test_fit_exp():
    n = np.arange(1, 9)
    y = 3.5 * np.exp(-0.7 * n)
    fit = fit_rate(list(zip(n, y)), "exp_in_n")
    assert fit.C == pytest.approx(3.5, rel=1e-10)
    assert fit.rate == pytest.approx(0.7, rel=1e-10)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_exp_root():
    n = np.array([10, 50, 200, 1000, 5000])
    y = 2.0 * np.exp(-1.3 * n ** 0.25)
    fit = fit_rate(list(zip(n, y)), "exp_in_root", k=4)
    assert fit.rate == pytest.approx(1.3, rel=1e-10)
    assert fit.r2 > 0.999999


def test_fit_poly():
    x = np.array([1.0, 2.0, 4.0, 8.0])
    y = 7.0 * x ** 3
    fit = fit_rate(list(zip(x, y)), "poly_in_logeps")
    assert fit.C == pytest.approx(7.0, rel=1e-10)
    assert fit.rate == pytest.approx(3.0, rel=1e-10)


def test_fit_validation():
    with pytest.raises(ValueError):
        fit_rate([(1, 1.0), (2, 0.5)], "exp_in_n")
    with pytest.raises(ValueError):
        fit_rate([(1, 1.0), (2, -0.5), (3, 0.2)], "exp_in_n")
    with pytest.raises(ValueError):
        fit_rate([(1, 1.0), (2, 0.5), (3, 0.2)], "exp_in_root")
    with pytest.raises(ValueError):
        fit_rate([(1, 1.0), (2, 0.5), (3, 0.2)], "nope")


def test_as_field_rejects():
    with pytest.raises(TypeError):
        as_field(42)
