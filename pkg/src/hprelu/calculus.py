"""Composition rules for sparse ReLU networks.

The operations here are exact on realizations: composition via a doubled
interface (x = relu(x) - relu(-x)), parallelization with shared or distinct
inputs, identity networks, and depth padding.  Size and depth bookkeeping
follows the usual calculus bounds; parallelization is exactly additive,
composition at most doubles the sizes of the two factors.
"""

import numpy as np

from .network import Layer, NeuralNetwork


def _stack_rows(layers):
    """Block-stack layers sharing the same input width."""
    cols = layers[0].cols
    roff = np.cumsum([0] + [lay.rows for lay in layers])
    row_idx = np.concatenate([lay.row_idx + o for lay, o in zip(layers, roff)])
    col_idx = np.concatenate([lay.col_idx for lay in layers])
    vals = np.concatenate([lay.vals for lay in layers])
    bias = np.concatenate([lay.bias for lay in layers])
    return Layer(roff[-1], cols, row_idx, col_idx, vals, bias)


def _block_diag(layers):
    roff = np.cumsum([0] + [lay.rows for lay in layers])
    coff = np.cumsum([0] + [lay.cols for lay in layers])
    row_idx = np.concatenate([lay.row_idx + o for lay, o in zip(layers, roff)])
    col_idx = np.concatenate([lay.col_idx + o for lay, o in zip(layers, coff)])
    vals = np.concatenate([lay.vals for lay in layers])
    bias = np.concatenate([lay.bias for lay in layers])
    return Layer(roff[-1], coff[-1], row_idx, col_idx, vals, bias)


def identity_net(dim, depth):
    """Network of the given depth realizing x -> x on R^dim; size <= 2*dim*depth."""
    if dim < 1 or depth < 1:
        raise ValueError("dim and depth must be positive")
    eye = np.arange(dim)
    if depth == 1:
        lay = Layer(dim, dim, eye, eye, np.ones(dim), np.zeros(dim))
        return NeuralNetwork(dim, [lay])
    split = Layer(
        2 * dim,
        dim,
        np.concatenate([eye, eye + dim]),
        np.concatenate([eye, eye]),
        np.concatenate([np.ones(dim), -np.ones(dim)]),
        np.zeros(2 * dim),
    )
    eye2 = np.arange(2 * dim)
    carry = Layer(2 * dim, 2 * dim, eye2, eye2, np.ones(2 * dim), np.zeros(2 * dim))
    merge = Layer(
        dim,
        2 * dim,
        np.concatenate([eye, eye]),
        np.concatenate([eye, eye + dim]),
        np.concatenate([np.ones(dim), -np.ones(dim)]),
        np.zeros(dim),
    )
    return NeuralNetwork(dim, [split] + [carry] * (depth - 2) + [merge])


def concat(outer, inner):
    """Sparse composition: realize(concat(outer, inner)) = outer after inner.

    The interface is doubled: the last layer of `inner` is replaced by its
    (+,-) stacking and the first layer of `outer` reads the difference of the
    two halves.  depth = depth(outer) + depth(inner); size is at most
    2 size(outer) + 2 size(inner).
    """
    if inner.output_dim != outer.input_dim:
        raise ValueError(
            f"cannot compose: inner outputs {inner.output_dim}, outer expects {outer.input_dim}"
        )
    m = inner.output_dim
    last = inner.layers[-1]
    stacked = Layer(
        2 * m,
        last.cols,
        np.concatenate([last.row_idx, last.row_idx + m]),
        np.concatenate([last.col_idx, last.col_idx]),
        np.concatenate([last.vals, -last.vals]),
        np.concatenate([last.bias, -last.bias]),
    )
    first = outer.layers[0]
    doubled = Layer(
        first.rows,
        2 * m,
        np.concatenate([first.row_idx, first.row_idx]),
        np.concatenate([first.col_idx, first.col_idx + m]),
        np.concatenate([first.vals, -first.vals]),
        first.bias,
    )
    layers = list(inner.layers[:-1]) + [stacked, doubled] + list(outer.layers[1:])
    return NeuralNetwork(inner.input_dim, layers)


def parallel(nets):
    """Parallelize networks of equal depth on a shared input; size adds exactly."""
    nets = list(nets)
    if not nets:
        raise ValueError("need at least one network")
    d = nets[0].input_dim
    L = nets[0].depth
    for k, net in enumerate(nets):
        if net.input_dim != d:
            raise ValueError(f"net {k}: input_dim {net.input_dim} != {d}")
        if net.depth != L:
            raise ValueError(f"net {k}: depth {net.depth} != {L} (depth_align first)")
    layers = [_stack_rows([net.layers[0] for net in nets])]
    for j in range(1, L):
        layers.append(_block_diag([net.layers[j] for net in nets]))
    return NeuralNetwork(d, layers)


def full_parallel(nets):
    """Parallelize networks of equal depth on concatenated (distinct) inputs."""
    nets = list(nets)
    if not nets:
        raise ValueError("need at least one network")
    L = nets[0].depth
    for k, net in enumerate(nets):
        if net.depth != L:
            raise ValueError(f"net {k}: depth {net.depth} != {L} (depth_align first)")
    layers = [_block_diag([net.layers[j] for net in nets]) for j in range(L)]
    return NeuralNetwork(sum(net.input_dim for net in nets), layers)


def depth_align(nets, target=None):
    """Pad networks with identities at the output side to a common depth."""
    nets = list(nets)
    if target is None:
        target = max(net.depth for net in nets)
    out = []
    for net in nets:
        if net.depth > target:
            raise ValueError(f"depth {net.depth} exceeds target {target}")
        if net.depth == target:
            out.append(net)
        else:
            out.append(concat(identity_net(net.output_dim, target - net.depth), net))
    return out
