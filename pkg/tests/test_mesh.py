import itertools

import numpy as np
import pytest

from hprelu.mesh import (
    TensorMesh,
    element_distances,
    geometric_mesh,
    multipatch_axis,
)


def test_geometric_nodes():
    ax = geometric_mesh(0.5, 3)
    np.testing.assert_allclose(ax.nodes, [0, 0.125, 0.25, 0.5, 1.0], atol=0)
    assert list(ax.singular) == [True, False, False, False]

    ax = geometric_mesh(0.25, 2)
    np.testing.assert_allclose(ax.nodes, [0, 0.0625, 0.25, 1.0], atol=0)

    ax = geometric_mesh(0.5, 0)
    np.testing.assert_allclose(ax.nodes, [0, 1.0], atol=0)
    assert list(ax.singular) == [True]


@pytest.mark.parametrize("sigma", [0.0, -0.1, 0.51, 1.0])
def test_sigma_rejected(sigma):
    with pytest.raises(ValueError):
        geometric_mesh(sigma, 2)


def test_ell_rejected():
    with pytest.raises(ValueError):
        geometric_mesh(0.5, -1)


def test_find_and_maps():
    ax = geometric_mesh(0.5, 2)
    # interior nodes belong to the right interval, the last node to the last
    assert ax.find(0.25) == 1
    assert ax.find(1.0) == 2
    assert ax.find(0.1) == 0
    k = 1
    x = ax.from_ref(k, np.array([-1.0, 0.0, 1.0]))
    np.testing.assert_allclose(x, [0.25, 0.375, 0.5], atol=1e-16)
    np.testing.assert_allclose(ax.to_ref(k, x), [-1, 0, 1], atol=1e-14)


def test_multipatch_axis():
    ax = multipatch_axis(0.5, 1, halfwidth=1.0)
    np.testing.assert_allclose(
        ax.nodes, [-1, -0.75, -0.5, -0.25, 0, 0.25, 0.5, 0.75, 1], atol=0)
    assert ax.patches == 4
    sing = np.flatnonzero(ax.singular)
    np.testing.assert_array_equal(sing, [0, 3, 4, 7])
    # singular intervals are exactly those touching -a, 0, a
    for k in sing:
        assert ax.nodes[k] in (-1.0, 0.0) or ax.nodes[k + 1] in (0.0, 1.0)
    with pytest.raises(ValueError):
        multipatch_axis(0.5, 1, halfwidth=0.0)


def test_multipatch_width_ratio():
    ax = multipatch_axis(0.4, 3, halfwidth=2.0)
    assert len(ax.nodes) == 4 * 4 + 1
    # geometric width progression inside each patch
    w = ax.widths
    np.testing.assert_allclose(w[1] / w[2], 0.4, rtol=1e-12)


def test_tensor_mesh():
    m = TensorMesh.cube(0.5, 1, 2)
    assert m.dim == 2
    assert m.n_elements == 4
    assert list(m.elements()) == [(0, 0), (1, 0), (0, 1), (1, 1)]
    with pytest.raises(ValueError):
        TensorMesh([geometric_mesh(0.5, 1), geometric_mesh(0.5, 2)])


def test_corner_distance_pinned():
    m = TensorMesh.cube(0.5, 2, 2)
    d_c, d_e = element_distances(m, (1, 1))
    assert d_c == pytest.approx(np.sqrt(2 * 0.5 ** 4), abs=1e-15)
    assert d_c == pytest.approx(0.3536, abs=5e-5)
    assert d_e is None


def test_edge_distance_oracle():
    m = TensorMesh.cube(0.5, 2, 3)
    sig, ell = 0.5, 2
    for K in [(1, 1, 2), (0, 2, 1), (2, 2, 2)]:
        d_c, d_e = element_distances(m, K)
        terms = [sig ** (2 * (ell - k + 1)) for k in K]
        brute = min(np.sqrt(terms[i] + terms[j])
                    for i, j in itertools.combinations(range(3), 2))
        assert d_e == pytest.approx(brute, rel=1e-15)
    with pytest.raises(ValueError):
        element_distances(TensorMesh.cube(0.5, 2, 2), (0, 0), include_edge=True)


def test_distances_need_single_patch():
    m = TensorMesh.sym_cube(0.5, 1, 2)
    with pytest.raises(ValueError):
        element_distances(m, (0, 0))
