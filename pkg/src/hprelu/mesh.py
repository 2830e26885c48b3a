"""Graded 1d meshes and their tensor products.

An axis mesh is a sorted node array plus a per-interval flag marking the
intervals that touch a grading center (where polynomial degree is forced
down to 1).  Two constructors: a single geometric grading toward the left
endpoint of (0,1), and a four-patch symmetric grading on (-a,a) toward
{-a, 0, a}.
"""

import itertools

import numpy as np

__all__ = [
    "Axis1D",
    "geometric_mesh",
    "multipatch_axis",
    "TensorMesh",
    "element_distances",
]


class Axis1D:
    """One mesh axis: nodes, singular-interval flags, grading parameters."""

    def __init__(self, nodes, singular, sigma, ell, patches=1, halfwidth=None):
        self.nodes = np.asarray(nodes, dtype=np.float64)
        self.singular = np.asarray(singular, dtype=bool)
        if self.nodes.ndim != 1 or len(self.nodes) < 2:
            raise ValueError("need at least two nodes")
        if np.any(np.diff(self.nodes) <= 0):
            raise ValueError("nodes must be strictly increasing")
        if len(self.singular) != len(self.nodes) - 1:
            raise ValueError("one singular flag per interval")
        self.sigma = float(sigma)
        self.ell = int(ell)
        self.patches = int(patches)
        self.halfwidth = halfwidth

    @property
    def n_intervals(self):
        return len(self.nodes) - 1

    @property
    def widths(self):
        return np.diff(self.nodes)

    @property
    def lo(self):
        return self.nodes[0]

    @property
    def hi(self):
        return self.nodes[-1]

    def find(self, x):
        """Interval index per point; interior nodes go to the right piece,
        the last node to the last piece."""
        k = np.searchsorted(self.nodes, np.asarray(x, dtype=np.float64), side="right") - 1
        return np.clip(k, 0, self.n_intervals - 1)

    def to_ref(self, k, x):
        """Map physical x in interval k to t in (-1,1)."""
        a, b = self.nodes[k], self.nodes[k + 1]
        return (2.0 * np.asarray(x) - (a + b)) / (b - a)

    def from_ref(self, k, t):
        a, b = self.nodes[k], self.nodes[k + 1]
        return 0.5 * ((b - a) * np.asarray(t) + (a + b))


def geometric_mesh(sigma, ell):
    """Geometric grading of (0,1) toward 0: nodes 0, sigma^ell, ..., sigma, 1."""
    if not 0.0 < sigma <= 0.5:
        raise ValueError(f"grading ratio must lie in (0, 1/2], got {sigma}")
    if ell < 0:
        raise ValueError("refinement level must be >= 0")
    nodes = np.concatenate(([0.0], sigma ** np.arange(ell, -1, -1, dtype=np.float64)))
    singular = np.zeros(ell + 1, dtype=bool)
    singular[0] = True
    return Axis1D(nodes, singular, sigma, ell)


def multipatch_axis(sigma, ell, halfwidth=1.0):
    """Symmetric axis on (-a,a): four geometric patches graded toward -a, 0, a.

    Patch images are (-a,-a/2), (-a/2,0), (0,a/2), (a/2,a); each contributes
    ell+1 intervals with the one touching a grading center flagged singular.
    """
    a = float(halfwidth)
    if a <= 0:
        raise ValueError("halfwidth must be positive")
    base = geometric_mesh(sigma, ell).nodes  # 0, sigma^ell, ..., 1
    h = 0.5 * a
    neg_outer = -a + h * base          # graded toward -a
    neg_inner = np.sort(-h * base)     # graded toward 0 from the left
    pos_inner = h * base               # graded toward 0 from the right
    pos_outer = np.sort(a - h * base)  # graded toward a
    nodes = np.concatenate((neg_outer, neg_inner[1:], pos_inner[1:], pos_outer[1:]))
    n = ell + 1
    singular = np.zeros(4 * n, dtype=bool)
    singular[[0, 2 * n - 1, 2 * n, 4 * n - 1]] = True
    return Axis1D(nodes, singular, sigma, ell, patches=4, halfwidth=a)


class TensorMesh:
    """Tensor product of d identical axis meshes."""

    def __init__(self, axes):
        axes = list(axes)
        if not 1 <= len(axes) <= 3:
            raise ValueError("supported dimensions: 1, 2, 3")
        a0 = axes[0]
        for ax in axes[1:]:
            if len(ax.nodes) != len(a0.nodes) or not np.array_equal(ax.nodes, a0.nodes):
                raise ValueError("axes must be identical")
        self.axes = axes

    @classmethod
    def cube(cls, sigma, ell, dim):
        return cls([geometric_mesh(sigma, ell) for _ in range(dim)])

    @classmethod
    def sym_cube(cls, sigma, ell, dim, halfwidth=1.0):
        return cls([multipatch_axis(sigma, ell, halfwidth) for _ in range(dim)])

    @property
    def dim(self):
        return len(self.axes)

    @property
    def n_elements(self):
        return self.axes[0].n_intervals ** self.dim

    def elements(self):
        """Iterate element multi-indices, first axis fastest."""
        n = self.axes[0].n_intervals
        for rev in itertools.product(range(n), repeat=self.dim):
            yield rev[::-1]


def element_distances(mesh, K, include_edge=None):
    """(corner distance, edge distance) for element K of a single-patch mesh.

    Corner distance uses the closed form sqrt(sum_i sigma^{2(ell-k_i+1)});
    the edge distance (3d only) minimizes the same expression over distinct
    axis pairs.
    """
    ax = mesh.axes[0]
    if ax.patches != 1:
        raise ValueError("element distances are defined on single-patch meshes")
    d = mesh.dim
    K = tuple(int(k) for k in K)
    if len(K) != d:
        raise ValueError("element index length must match dimension")
    if include_edge is None:
        include_edge = d == 3
    if include_edge and d != 3:
        raise ValueError("edge distance is defined only in dimension 3")
    sig, ell = ax.sigma, ax.ell
    terms = [sig ** (2 * (ell - k + 1)) for k in K]
    d_c = float(np.sqrt(sum(terms)))
    d_e = None
    if include_edge:
        d_e = float(np.sqrt(min(terms[i] + terms[j]
                                for i in range(3) for j in range(i + 1, 3))))
    return d_c, d_e
