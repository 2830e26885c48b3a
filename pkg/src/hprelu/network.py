"""Sparse ReLU networks as explicit weight tuples.

A network is a finite list of affine layers (A_l, b_l); the realization
applies ReLU between layers and leaves the final layer affine.  Weights are
stored as row-major sorted triplets so that serialization is canonical and
the size statistic counts exactly the nonzero entries.
"""

import json
from dataclasses import dataclass

import numpy as np

from . import backends


class Layer:
    """One affine layer A x + b with triplet-stored A.

    Triplets are canonicalized to row-major (i, j) order; duplicate entries
    are rejected.  Explicitly stored zeros are kept but never counted by
    size statistics.
    """

    __slots__ = ("rows", "cols", "row_idx", "col_idx", "vals", "bias", "_indptr")

    def __init__(self, rows, cols, row_idx, col_idx, vals, bias):
        rows = int(rows)
        cols = int(cols)
        if rows < 1 or cols < 1:
            raise ValueError("layer dimensions must be positive")
        row_idx = np.asarray(row_idx, dtype=np.int64).ravel()
        col_idx = np.asarray(col_idx, dtype=np.int64).ravel()
        vals = np.asarray(vals, dtype=np.float64).ravel()
        if not (len(row_idx) == len(col_idx) == len(vals)):
            raise ValueError("triplet arrays must have equal length")
        if len(row_idx) and (
            row_idx.min() < 0 or row_idx.max() >= rows or col_idx.min() < 0 or col_idx.max() >= cols
        ):
            raise ValueError("triplet index out of range")
        order = np.lexsort((col_idx, row_idx))
        row_idx = row_idx[order]
        col_idx = col_idx[order]
        vals = vals[order]
        if len(row_idx) > 1:
            same = (np.diff(row_idx) == 0) & (np.diff(col_idx) == 0)
            if same.any():
                raise ValueError("duplicate triplet entry")
        bias = np.asarray(bias, dtype=np.float64).ravel()
        if len(bias) != rows:
            raise ValueError(f"bias length {len(bias)} != rows {rows}")
        self.rows = rows
        self.cols = cols
        self.row_idx = row_idx
        self.col_idx = col_idx
        self.vals = vals
        self.bias = bias
        self._indptr = None

    @classmethod
    def from_dense(cls, a, b=None):
        a = np.asarray(a, dtype=np.float64)
        if a.ndim != 2:
            raise ValueError("dense layer matrix must be 2d")
        if b is None:
            b = np.zeros(a.shape[0])
        i, j = np.nonzero(a)
        return cls(a.shape[0], a.shape[1], i, j, a[i, j], b)

    @property
    def indptr(self):
        if self._indptr is None:
            self._indptr = np.searchsorted(self.row_idx, np.arange(self.rows + 1)).astype(np.int64)
        return self._indptr

    @property
    def nnz_weights(self):
        return int(np.count_nonzero(self.vals))

    @property
    def nnz_bias(self):
        return int(np.count_nonzero(self.bias))

    def dense(self):
        a = np.zeros((self.rows, self.cols))
        a[self.row_idx, self.col_idx] = self.vals
        return a

    def density(self):
        return len(self.vals) / (self.rows * self.cols)


@dataclass(frozen=True)
class NetworkStats:
    depth: int
    size: int
    neurons: int
    input_dim: int
    output_dim: int
    widths: tuple


class NeuralNetwork:
    """Immutable weight tuple ((A_1, b_1), ..., (A_L, b_L))."""

    __slots__ = ("input_dim", "layers", "meta", "_packed")

    def __init__(self, input_dim, layers, meta=None):
        input_dim = int(input_dim)
        if input_dim < 1:
            raise ValueError("input_dim must be positive")
        layers = tuple(layers)
        if not layers:
            raise ValueError("a network needs at least one layer")
        prev = input_dim
        for k, lay in enumerate(layers):
            if lay.cols != prev:
                raise ValueError(
                    f"layer {k}: expects {lay.cols} inputs but previous width is {prev}"
                )
            prev = lay.rows
        self.input_dim = input_dim
        self.layers = layers
        self.meta = dict(meta) if meta else {}
        self._packed = None

    @property
    def depth(self):
        return len(self.layers)

    @property
    def output_dim(self):
        return self.layers[-1].rows

    @property
    def size(self):
        return sum(lay.nnz_weights + lay.nnz_bias for lay in self.layers)

    @property
    def neurons(self):
        return self.input_dim + sum(lay.rows for lay in self.layers)

    def packed(self):
        if self._packed is None:
            self._packed = [
                (lay.indptr, lay.col_idx, lay.vals, lay.bias) for lay in self.layers
            ]
        return self._packed


def stats(net):
    """Depth, nonzero count, neuron count and per-layer widths."""
    return NetworkStats(
        depth=net.depth,
        size=net.size,
        neurons=net.neurons,
        input_dim=net.input_dim,
        output_dim=net.output_dim,
        widths=tuple(lay.rows for lay in net.layers),
    )


def realize_batch(net, pts, backend=None):
    """Evaluate the network on an (n, input_dim) point array -> (n, out)."""
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.shape[1] != net.input_dim:
        raise ValueError(f"points have dim {pts.shape[1]}, network expects {net.input_dim}")
    y = backends.run_forward(net.packed(), pts.T, backend=backend)
    return y.T


def realize(net, x, backend=None):
    """Evaluate the network on a single input vector."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    return realize_batch(net, x[None, :], backend=backend)[0]


def grad_realize_batch(net, pts, backend=None, chunk=None, seed=None):
    """Values and jacobians on a batch: returns (vals (n, out), jac (n, out, nd)).

    The jacobian is the a.e. forward-mode derivative with relu'(0) = 0.
    nd equals input_dim unless a per-point (n, input_dim, nd) seed matrix is
    given, in which case only those nd directions are propagated (chain rule
    against an upstream jacobian).  Work is chunked so the
    (width * chunk * nd) jacobian buffer stays bounded.
    """
    pts = np.asarray(pts, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    n, d = pts.shape
    if d != net.input_dim:
        raise ValueError(f"points have dim {d}, network expects {net.input_dim}")
    if seed is None:
        nd = d
    else:
        seed = np.asarray(seed, dtype=np.float64)
        if seed.ndim != 3 or seed.shape[0] != n or seed.shape[1] != d:
            raise ValueError("seed must have shape (n, input_dim, nd)")
        nd = seed.shape[2]
    if chunk is None:
        width = max(lay.rows for lay in net.layers)
        chunk = max(64, min(n, int(1e7 / max(1, width * nd))))
    vals = np.empty((n, net.output_dim))
    jac = np.empty((n, net.output_dim, nd))
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        s = None if seed is None else np.ascontiguousarray(
            np.moveaxis(seed[lo:hi], 0, 1))
        y, j = backends.run_forward_grad(net.packed(), pts[lo:hi].T,
                                         backend=backend, seed=s)
        vals[lo:hi] = y.T
        jac[lo:hi] = np.moveaxis(j, 1, 0)
    return vals, jac


def grad_realize(net, x, backend=None):
    """Jacobian (out_dim, input_dim) of the realization at one point."""
    x = np.atleast_1d(np.asarray(x, dtype=np.float64))
    _, jac = grad_realize_batch(net, x[None, :], backend=backend)
    return jac[0]


def _fmt(x):
    # 17 significant digits round-trips binary64 exactly.
    return format(float(x), ".17g")


def serialize(net):
    """Canonical JSON text for a network; weights ordered row-major."""
    parts = ['{"input_dim": %d, "layers": [' % net.input_dim]
    for k, lay in enumerate(net.layers):
        if k:
            parts.append(", ")
        trips = ", ".join(
            "[%d, %d, %s]" % (i, j, _fmt(v))
            for i, j, v in zip(lay.row_idx, lay.col_idx, lay.vals)
        )
        bias = ", ".join(_fmt(b) for b in lay.bias)
        parts.append(
            '{"rows": %d, "cols": %d, "weights": [%s], "bias": [%s]}'
            % (lay.rows, lay.cols, trips, bias)
        )
    parts.append("]}")
    return "".join(parts)


def deserialize(text):
    """Parse serialized JSON back into a NeuralNetwork (bit-exact weights)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValueError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict) or "input_dim" not in doc or "layers" not in doc:
        raise ValueError("document must carry input_dim and layers")
    raw_layers = doc["layers"]
    if not isinstance(raw_layers, list) or not raw_layers:
        raise ValueError("layers must be a non-empty list")
    layers = []
    for k, entry in enumerate(raw_layers):
        try:
            rows = entry["rows"]
            cols = entry["cols"]
            weights = entry["weights"]
            bias = entry["bias"]
            if weights:
                w = np.asarray(weights, dtype=np.float64)
                if w.ndim != 2 or w.shape[1] != 3:
                    raise ValueError("weights must be [i, j, value] triplets")
                ri, ci, vv = w[:, 0].astype(np.int64), w[:, 1].astype(np.int64), w[:, 2]
            else:
                ri = ci = vv = np.empty(0)
            layers.append(Layer(rows, cols, ri, ci, vv, bias))
        except (KeyError, TypeError, ValueError) as e:
            raise ValueError(f"layer {k}: {e}") from e
    try:
        return NeuralNetwork(doc["input_dim"], layers)
    except ValueError as e:
        raise ValueError(f"inconsistent layer chain: {e}") from e
