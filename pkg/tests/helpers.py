"""Shared test utilities: random network generation and brute-force oracles.

Everything here is deliberately independent of the library's fast paths:
finite differences for jacobians, dense matmul loops for realizations,
trapezoid refinement for integrals.
"""

import numpy as np

from hprelu.basis import PiecewisePolynomial
from hprelu.network import Layer, NeuralNetwork


def random_net(rng, input_dim=None, depth=None, width_hi=6, density=0.7):
    """Random sparse network with bounded dims, for property tests."""
    if input_dim is None:
        input_dim = int(rng.integers(1, 5))
    if depth is None:
        depth = int(rng.integers(1, 5))
    widths = [input_dim] + [int(rng.integers(1, width_hi + 1)) for _ in range(depth)]
    layers = []
    for k in range(depth):
        rows, cols = widths[k + 1], widths[k]
        mask = rng.random((rows, cols)) < density
        if not mask.any():
            mask[rng.integers(rows), rng.integers(cols)] = True
        a = np.where(mask, rng.standard_normal((rows, cols)), 0.0)
        b = np.where(rng.random(rows) < 0.8, rng.standard_normal(rows), 0.0)
        layers.append(Layer.from_dense(a, b))
    return NeuralNetwork(input_dim, layers)


def random_continuous_pwpoly(rng, n_pieces, degree):
    """Continuous piecewise polynomial with exact node agreement."""
    nodes = np.sort(rng.uniform(-1.0, 1.0, n_pieces + 1))
    while np.min(np.diff(nodes)) < 0.05:
        nodes = np.sort(rng.uniform(-1.0, 1.0, n_pieces + 1))
    pieces = []
    left = rng.uniform(-2.0, 2.0)
    for _ in range(n_pieces):
        c = rng.uniform(-1.0, 1.0, degree + 1)
        # shift so the left endpoint matches the running trace
        at_left = np.polynomial.polynomial.polyval(-1.0, c)
        c[0] += left - at_left
        left = np.polynomial.polynomial.polyval(1.0, c)
        pieces.append(c)
    return PiecewisePolynomial(nodes, pieces)


def dense_realize(net, x):
    """Reference realization: dense matrices, explicit loop."""
    y = np.asarray(x, dtype=np.float64)
    for k, lay in enumerate(net.layers):
        y = lay.dense() @ y + lay.bias
        if k < net.depth - 1:
            y = np.maximum(y, 0.0)
    return y


def fd_jacobian(f, x, h=1e-6):
    """Central finite-difference jacobian of f at x."""
    x = np.asarray(x, dtype=np.float64)
    cols = []
    for i in range(len(x)):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        cols.append((np.asarray(f(xp)) - np.asarray(f(xm))) / (2 * h))
    return np.stack(cols, axis=-1)


def trapz_refine(f, a, b, tol=1e-10, max_doublings=22):
    """1D integral by trapezoid refinement with Richardson stop."""
    n = 64
    x = np.linspace(a, b, n + 1)
    val = np.trapezoid(f(x), x)
    for _ in range(max_doublings):
        n *= 2
        x = np.linspace(a, b, n + 1)
        new = np.trapezoid(f(x), x)
        if abs(new - val) <= tol * max(1.0, abs(new)):
            return new
        val = new
    return val
