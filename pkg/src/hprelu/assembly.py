"""Compilation of hp interpolants into ReLU networks.

The compiled net is a three-stage composition: per-axis basis networks in
full parallel (d inputs, d*N outputs), one product subnet per coefficient
tuple fed through a d-nonzero selector, and a final affine row carrying
the flattened coefficients.  The tuple stage is emitted as tiled triplet
arrays rather than by folding the calculus ops one tuple at a time; the
result is bit-identical to the calculus path (a test asserts this) but
builds in O(T) vectorized steps.

Budget split: coefficient mass ‖c‖_1 times the basis accuracy eps1 (raised
to the tensor rank) must cover half the target, the product accuracy eps2
the other half.  Both are asserted on every build.
"""

import itertools
import math
import time
from dataclasses import dataclass

import numpy as np

from .calculus import concat, depth_align, full_parallel, parallel
from .emulation import ToleranceBudget, basis_net, product_net
from .metrics import h1_error
from .mesh import TensorMesh
from .network import Layer, NeuralNetwork, grad_realize_batch, realize_batch
from .projector import HpInterpolant, hp_interpolate, multipatch_interpolate

__all__ = [
    "AssemblyPlan",
    "NetConfig",
    "BuildReport",
    "plan_assembly",
    "build_phi_eps_c",
    "build_phi_eps_f",
    "build_vector",
    "quad_cells",
    "compiled_field",
]


@dataclass(frozen=True)
class AssemblyPlan:
    """Resolved tolerance split for one compilation."""

    epsilon: float
    epsilon1: float
    epsilon2: float
    M_times: float
    c_v_max: float
    c_l1: float


@dataclass(frozen=True)
class NetConfig:
    """Knobs for the end-to-end builders."""

    sigma: float = 0.5
    c_p: float = 1.0
    ell_max: int = 12
    domain: str = "unit"
    halfwidth: float = 1.0
    q_cal: int = 10
    nq_cal: int = 1
    cal_doublings: int = 2
    q_net: int = 8
    nq_net: int = 1
    cert_doublings: int = 0
    cert_grade: int = 8
    grid_check: int = 0
    jobs: int = 1

    @classmethod
    def for_dim(cls, dim):
        """Defaults per dimension; 3d trims the measurement grids so the
        tensor quadrature stays affordable."""
        if dim >= 3:
            return cls(q_cal=6, q_net=4, cert_grade=5)
        return cls()


@dataclass
class BuildReport:
    """Outcome of one end-to-end build.

    ``h1_error`` and ``linf_error`` are certified upper bounds: the settled
    hp interpolation measurement plus the measured network-vs-interpolant
    distance.  ``hp_h1_error`` keeps the first term alone."""

    dim: int
    sigma: float
    ell: int
    p: int
    N1d: int
    coeff_l1: float
    nn_size: int
    nn_depth: int
    h1_error: float
    linf_error: float
    certified: bool
    seconds: float
    hp_h1_error: float = float("nan")
    levels: int = 0
    plan: AssemblyPlan = None


def plan_assembly(interp, epsilon, cl1=None):
    """Tolerance split for compiling ``interp`` to accuracy ``epsilon``.

    ``cl1`` overrides the coefficient mass (used by the vector build,
    which must cover the worst row)."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    d = interp.dim
    cv = max(bf.h1_norm for bf in interp.basis)
    if cl1 is None:
        cl1 = interp.coeff_l1()
    if cl1 == 0.0:
        return AssemblyPlan(epsilon, 0.5, 0.5, 2.0, cv, 0.0)
    eps1 = min(epsilon / (2.0 * d * (cv + 1.0) ** d * cl1),
               0.5,
               1.0 / (math.sqrt(2.0) * cv))
    eps2 = min(epsilon / (2.0 * (math.sqrt(d) + 1.0) * (cv + 1.0) * cl1), 0.5)
    if eps1 < 1e-12 or eps2 < 1e-12:
        raise ValueError(
            f"tolerance split underflow (eps1={eps1:.3e}, eps2={eps2:.3e}); "
            "raise epsilon or reduce the coefficient mass")
    return AssemblyPlan(epsilon, eps1, eps2, 2.0, cv, cl1)


def _tuple_selectors(N, d, T):
    """Column index (axis-block offset + basis index) per tuple and axis,
    first axis fastest to match the coefficient flattening."""
    idx = np.stack(np.unravel_index(np.arange(T), (N,) * d, order="F"), axis=1)
    return idx + (np.arange(d) * N)[None, :]


def _tiled_tuple_stage(pi, sel, cols_in):
    """Selector-fed copies of the product net, one per row of ``sel``, laid
    out exactly as parallel(concat(pi, selector_t) for t) would produce."""
    T, d = sel.shape
    t_arange = np.arange(T)

    # selector interface: (E; -E) per tuple
    rows = (t_arange[:, None] * 2 * d + np.arange(2 * d)[None, :]).ravel()
    cols = np.hstack([sel, sel]).ravel()
    vals = np.tile(np.concatenate([np.ones(d), -np.ones(d)]), T)
    bias = np.tile(np.concatenate([np.zeros(d), -np.zeros(d)]), T)
    layers = [Layer(2 * d * T, cols_in, rows, cols, vals, bias)]

    # product first layer with doubled columns
    lay = pi.layers[0]
    h1 = lay.rows
    r = lay.row_idx
    c = lay.col_idx
    v = lay.vals
    rows_t = (t_arange[:, None] * h1 + r[None, :])
    cols_p = (t_arange[:, None] * 2 * d + c[None, :])
    rows = np.hstack([rows_t, rows_t]).ravel()
    cols = np.hstack([cols_p, cols_p + d]).ravel()
    vals = np.hstack([np.tile(v, (T, 1)), np.tile(-v, (T, 1))]).ravel()
    layers.append(Layer(h1 * T, 2 * d * T, rows, cols, vals, np.tile(lay.bias, T)))

    w_prev = h1
    for lay in pi.layers[1:]:
        rows = ((t_arange[:, None] * lay.rows) + lay.row_idx[None, :]).ravel()
        cols = ((t_arange[:, None] * w_prev) + lay.col_idx[None, :]).ravel()
        layers.append(Layer(lay.rows * T, w_prev * T, rows, cols,
                            np.tile(lay.vals, T), np.tile(lay.bias, T)))
        w_prev = lay.rows
    return NeuralNetwork(cols_in, layers)


def _coeff_row_net(vvec, T):
    nz = np.nonzero(vvec)[0]
    return NeuralNetwork(T, [Layer(1, T, np.zeros(len(nz), dtype=np.int64),
                                   nz, vvec[nz], np.zeros(1))])


def _build_phi_eps(interp, plan):
    """Shared part of the compilation: basis stage, product stage, checks.
    Returns (phi_eps, structure dict, parts for the cellwise evaluator)."""
    d, N = interp.dim, interp.N1d
    for bf in interp.basis:
        vmax, _ = bf.sup_bounds()
        if vmax > 1.0 + 1e-9:
            raise ValueError("basis function exceeds the unit sup bound")
    nets = [basis_net(bf, plan.epsilon1) for bf in interp.basis]
    sup_slack = max(n.meta["measured_sup"] for n in nets)
    if 1.0 + sup_slack > plan.M_times:
        raise AssertionError("basis outputs leave the product box")
    axis_net = parallel(depth_align(nets))
    phi_basis = full_parallel([axis_net] * d)

    budget = ToleranceBudget(epsilon=plan.epsilon2, M=plan.M_times)
    pi = product_net(d, budget)
    T = N ** d
    p_all = _tiled_tuple_stage(pi, _tuple_selectors(N, d, T), d * N)
    phi_eps = concat(p_all, phi_basis)

    structure = {
        "tuples": T,
        "selector_nnz": d,
        "levels": pi.meta["levels"],
        "depth_basis": phi_basis.depth,
        "depth_product": pi.depth,
        "size_basis": phi_basis.size,
        "size_product": pi.size,
        "basis_sup_slack": sup_slack,
    }
    return phi_eps, structure, {"nets": nets, "pi": pi}


def _structural_asserts(net, phi_structure, n_rows_nnz):
    d_basis = phi_structure["depth_basis"]
    d_prod = phi_structure["depth_product"]
    # one layer for the selectors, one for the coefficient row
    assert net.depth == d_basis + d_prod + 2, (net.depth, d_basis, d_prod)
    T = phi_structure["tuples"]
    pi_size = phi_structure["size_product"]
    bound = 2 * n_rows_nnz + 2 * (
        2 * T * (pi_size + phi_structure["selector_nnz"])
        + 2 * phi_structure["size_basis"])
    assert net.size <= bound, (net.size, bound)
    net.meta["size_bound"] = bound


def build_phi_eps_c(interp, epsilon):
    """Compile one interpolant into a d-input scalar network whose
    realization tracks sum_t c_t prod_j v_{i_j}(x_j) within epsilon."""
    plan = plan_assembly(interp, epsilon)
    check = (plan.epsilon1 * interp.dim * (plan.c_v_max + 1.0) ** interp.dim
             * plan.c_l1
             + plan.epsilon2 * (math.sqrt(interp.dim) + 1.0)
             * (plan.c_v_max + 1.0) * plan.c_l1)
    assert check <= epsilon + 1e-15, (check, epsilon)
    phi_eps, structure, parts = _build_phi_eps(interp, plan)
    vvec = interp.vvec()
    row = _coeff_row_net(vvec, len(vvec))
    net = concat(row, phi_eps)
    _structural_asserts(net, structure, row.size)
    parts.update(interp=interp, vmat=vvec[None, :])
    net.meta.update(kind="hp_compiled", dim=interp.dim, N1d=interp.N1d,
                    plan=plan, compiled_parts=parts, **structure)
    return net


# ratio of the geometric sub-refinement used for measurement cells
_QUAD_RATIO = 0.25


def quad_cells(interp, grade=8):
    """Per-axis quadrature partitions: the mesh nodes with every singular
    interval geometrically sub-refined toward its grading center.

    Plain Gauss panels settle slowly against the derivative blowup in the
    singular cells; grading the measurement cells (the mesh itself is
    untouched) restores a fast Richardson check."""
    out = []
    for ax in interp.mesh.axes:
        pieces = [ax.nodes]
        for k in np.nonzero(ax.singular)[0]:
            xl, xr = ax.nodes[k], ax.nodes[k + 1]
            steps = (xr - xl) * _QUAD_RATIO ** np.arange(1, grade + 1)
            if k == 0 or xl == 0.0:
                pieces.append(xl + steps)
            else:
                pieces.append(xr - steps)
        out.append(np.unique(np.concatenate(pieces)))
    return out


class _CompiledField:
    """Tensor-grid evaluation of a compiled net that skips dead blocks.

    At any point the product block of a tuple with some basis factor
    outside its support is exactly zero, so per mesh cell only the live
    tuples need to run.  The per-cell subnetwork is assembled by the same
    tiling and concat ops as the full net and fed the raw basis outputs;
    under the strict in-order backend its values match the full realization
    bit for bit.  Gradients chain the subnet jacobian against the per-axis
    basis derivatives through a seeded forward pass.
    """

    tensor = True
    _CACHE_MAX = 128

    def __init__(self, interp, nets, pi, vmat, row=0):
        self.interp = interp
        self.nets = nets
        self.pi = pi
        self.vmat = np.atleast_2d(np.asarray(vmat, dtype=np.float64))
        self.row = int(row)
        self.d = interp.dim
        self.N = interp.N1d
        live = [[] for _ in range(interp.mesh.axes[0].n_intervals)]
        for i, bf in enumerate(interp.basis):
            for k in bf.support:
                live[k].append(i)
        self._live = [np.asarray(v, dtype=np.int64) for v in live]
        self._subs = {}
        self._last = None

    def _subnet(self, kcell):
        hit = self._subs.get(kcell)
        if hit is not None:
            return hit
        d, N = self.d, self.N
        live = [self._live[k] for k in kcell]
        las = [len(v) for v in live]
        offs = np.concatenate(([0], np.cumsum(las)))
        m = int(offs[-1])
        t_live = int(np.prod(las))
        loc = np.stack(np.unravel_index(np.arange(t_live), las, order="F"),
                       axis=1)
        stage = _tiled_tuple_stage(self.pi, loc + offs[:-1][None, :], m)
        gidx = np.zeros(t_live, dtype=np.int64)
        stride = 1
        for a in range(d):
            gidx += live[a][loc[:, a]] * stride
            stride *= N
        rv = self.vmat[self.row, gidx]
        nz = np.nonzero(rv)[0]
        head = NeuralNetwork(t_live, [Layer(
            1, t_live, np.zeros(len(nz), dtype=np.int64), nz, rv[nz],
            np.zeros(1))])
        entry = (concat(head, stage), live, las, m)
        if len(self._subs) >= self._CACHE_MAX:
            self._subs.pop(next(iter(self._subs)))
        self._subs[kcell] = entry
        return entry

    def _tables(self, axes):
        """Values and derivatives of every 1d basis net on each axis'
        point set; entries outside a support are exact zeros."""
        zv, zd = [], []
        for a in range(self.d):
            x1 = np.asarray(axes[a], dtype=np.float64)[:, None]
            vv = np.empty((self.N, len(x1)))
            dd = np.empty_like(vv)
            for i, bnet in enumerate(self.nets):
                v, j = grad_realize_batch(bnet, x1)
                vv[i] = v[:, 0]
                dd[i] = j[:, 0, 0]
            zv.append(vv)
            zd.append(dd)
        return zv, zd

    def _eval_axes(self, axes):
        last = self._last
        if last is not None and len(last[0]) == len(axes) and all(
                a is b for a, b in zip(last[0], axes)):
            return last[1], last[2]
        d = self.d
        maxes = self.interp.mesh.axes
        segs = []
        for ax, a in zip(maxes, axes):
            ks = ax.find(np.asarray(a))
            bounds = np.concatenate(
                ([0], np.nonzero(np.diff(ks))[0] + 1, [len(ks)]))
            segs.append([(int(ks[lo]), slice(int(lo), int(hi)))
                         for lo, hi in zip(bounds[:-1], bounds[1:])])
        zv, zd = self._tables(axes)
        shape = tuple(len(a) for a in axes)
        out = np.empty(shape)
        grad = np.empty(shape + (d,))
        for cell in itertools.product(*segs):
            kcell = tuple(c[0] for c in cell)
            sls = tuple(c[1] for c in cell)
            net, live, las, m = self._subnet(kcell)
            ns = [s.stop - s.start for s in sls]
            nblk = int(np.prod(ns))
            grids = np.meshgrid(*[np.arange(n) for n in ns], indexing="ij")
            flat = [g.ravel() for g in grids]
            zin = np.empty((nblk, m))
            sd = np.zeros((nblk, m, d))
            c0 = 0
            for a in range(d):
                zin[:, c0:c0 + las[a]] = zv[a][live[a]][:, sls[a]][:, flat[a]].T
                sd[:, c0:c0 + las[a], a] = zd[a][live[a]][:, sls[a]][:, flat[a]].T
                c0 += las[a]
            vals, jac = grad_realize_batch(net, zin, seed=sd)
            out[sls] = vals[:, 0].reshape(ns)
            grad[sls] = jac[:, 0, :].reshape(ns + [d])
        self._last = (list(axes), out, grad)
        return out, grad

    def value_axes(self, axes):
        return self._eval_axes(axes)[0]

    def gradient_axes(self, axes):
        return self._eval_axes(axes)[1]

    def _eval_points(self, pts):
        d = self.d
        if len(pts) == 0:
            return np.empty(0), np.empty((0, d))
        maxes = self.interp.mesh.axes
        ks = np.stack([ax.find(pts[:, a]) for a, ax in enumerate(maxes)],
                      axis=1)
        zv, zd = self._tables([pts[:, a] for a in range(d)])
        out = np.empty(len(pts))
        grad = np.empty((len(pts), d))
        order = np.lexsort(ks.T)
        ks_s = ks[order]
        breaks = np.nonzero(np.any(np.diff(ks_s, axis=0) != 0, axis=1))[0] + 1
        bounds = np.concatenate(([0], breaks, [len(pts)]))
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            idx = order[lo:hi]
            net, live, las, m = self._subnet(tuple(int(k) for k in ks_s[lo]))
            zin = np.empty((len(idx), m))
            sd = np.zeros((len(idx), m, d))
            c0 = 0
            for a in range(d):
                zin[:, c0:c0 + las[a]] = zv[a][live[a]][:, idx].T
                sd[:, c0:c0 + las[a], a] = zd[a][live[a]][:, idx].T
                c0 += las[a]
            vals, jac = grad_realize_batch(net, zin, seed=sd)
            out[idx] = vals[:, 0]
            grad[idx] = jac[:, 0, :]
        return out, grad

    def value(self, pts):
        return self._eval_points(np.asarray(pts, dtype=np.float64))[0]

    def gradient(self, pts):
        return self._eval_points(np.asarray(pts, dtype=np.float64))[1]


def compiled_field(net, row=0):
    """Cellwise evaluation view of one output row of a compiled network."""
    parts = net.meta.get("compiled_parts")
    if parts is None:
        raise ValueError("network carries no compilation structure")
    return _CompiledField(parts["interp"], parts["nets"], parts["pi"],
                          parts["vmat"], row=row)


def _linf_grid_check(net, interp, plan, npts):
    """Realization stays inside the structural L-infinity envelope."""
    d = interp.dim
    lo = interp.mesh.axes[0].lo + 1e-9
    hi = interp.mesh.axes[0].hi - 1e-9
    axis = np.linspace(lo, hi, npts)
    grids = np.meshgrid(*([axis] * d), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    vals = realize_batch(net, pts)[:, 0]
    bound = (2.0 ** d + 1.0) * max(plan.c_l1, 1e-30) * 1.05
    peak = float(np.max(np.abs(vals)))
    assert peak <= bound, (peak, bound)
    return peak


def _interpolate(u, dim, ell, p, cfg):
    if cfg.domain == "unit":
        mesh = TensorMesh.cube(cfg.sigma, ell, dim)
        return hp_interpolate(u, mesh, p)
    if cfg.domain == "sym":
        return multipatch_interpolate(u, ell, p, sigma=cfg.sigma,
                                      halfwidth=cfg.halfwidth)
    raise ValueError(f"unknown domain {cfg.domain!r}")


def _p_for(ell, cfg):
    return max(1, math.ceil(cfg.c_p * max(ell, 1)))


def build_phi_eps_f(u, dim, epsilon, config=None):
    """Calibrate (ell, p), compile, and certify one catalog function.

    Grows ell until the measured hp H1 error drops below epsilon/2, then
    compiles the interpolant with the remaining budget.  The reported H1
    number is a certified upper bound by the triangle inequality: the
    Richardson-settled hp measurement plus a direct measurement of the
    compile error (network vs interpolant).  The compile term is orders of
    magnitude below its epsilon/2 budget in practice, so the bound is
    tight; ``certified`` additionally demands it stays below epsilon/4 so
    its coarser quadrature cannot threaten the total.
    """
    cfg = config or NetConfig.for_dim(dim)
    t0 = time.perf_counter()
    best = (math.inf, None, None)
    interp = None
    for ell in range(cfg.ell_max + 1):
        p = _p_for(ell, cfg)
        cand = _interpolate(u, dim, ell, p, cfg)
        rep = h1_error(u, cand, quad_cells(cand, cfg.cert_grade), q=cfg.q_cal,
                       n_q=cfg.nq_cal, max_doublings=cfg.cal_doublings)
        if rep.h1_error < best[0]:
            best = (rep.h1_error, ell, p)
        if rep.h1_error <= 0.5 * epsilon:
            interp = cand
            hp_rep = rep
            break
    else:
        raise RuntimeError(
            f"calibration failed: best hp H1 error {best[0]:.3e} at "
            f"ell={best[1]}, p={best[2]} (cap ell_max={cfg.ell_max})")
    net = build_phi_eps_c(interp, 0.5 * epsilon)
    dust = h1_error(interp, compiled_field(net),
                    quad_cells(interp, cfg.cert_grade), q=cfg.q_net,
                    n_q=cfg.nq_net, max_doublings=cfg.cert_doublings)
    if cfg.grid_check:
        _linf_grid_check(net, interp, net.meta["plan"], cfg.grid_check)
    report = BuildReport(
        dim=dim, sigma=cfg.sigma, ell=interp.ell, p=interp.p,
        N1d=interp.N1d, coeff_l1=interp.coeff_l1(),
        nn_size=net.size, nn_depth=net.depth,
        h1_error=hp_rep.h1_error + dust.h1_error,
        linf_error=hp_rep.linf_error + dust.linf_error,
        certified=hp_rep.certified and dust.h1_error <= 0.25 * epsilon,
        seconds=time.perf_counter() - t0,
        hp_h1_error=hp_rep.h1_error, levels=net.meta["levels"],
        plan=net.meta["plan"])
    return net, report


def build_vector(us, dim, epsilon, config=None):
    """One shared compilation for several functions on a common grid.

    The basis and product stages are built once; each function only adds
    its own coefficient row.  Returns (net, reports) with one output row
    and one report per function.
    """
    cfg = config or NetConfig.for_dim(dim)
    if not us:
        raise ValueError("need at least one function")
    t0 = time.perf_counter()
    interps = None
    for ell in range(cfg.ell_max + 1):
        p = _p_for(ell, cfg)
        cands = [_interpolate(u, dim, ell, p, cfg) for u in us]
        reps = [h1_error(u, c, quad_cells(c, cfg.cert_grade), q=cfg.q_cal,
                         n_q=cfg.nq_cal, max_doublings=cfg.cal_doublings)
                for u, c in zip(us, cands)]
        worst = max(r.h1_error for r in reps)
        if worst <= 0.5 * epsilon:
            interps = cands
            hp_reps = reps
            break
    else:
        raise RuntimeError(
            f"calibration failed for the vector build (cap ell_max={cfg.ell_max})")

    base = interps[0]
    # plan against the worst coefficient mass so every row is covered
    plan = plan_assembly(base, 0.5 * epsilon,
                         cl1=max(c.coeff_l1() for c in interps))
    phi_eps, structure, parts = _build_phi_eps(base, plan)
    T = structure["tuples"]
    vmat = np.stack([interp.vvec() for interp in interps])
    ridx, cidx = np.nonzero(vmat)
    row_net = NeuralNetwork(T, [Layer(len(us), T, ridx, cidx,
                                      vmat[ridx, cidx], np.zeros(len(us)))])
    net = concat(row_net, phi_eps)
    _structural_asserts(net, structure, row_net.size)
    parts.update(interp=base, vmat=vmat)
    net.meta.update(kind="hp_compiled_vector", dim=base.dim, N1d=base.N1d,
                    plan=plan, compiled_parts=parts, **structure)

    reports = []
    for i, (u, interp) in enumerate(zip(us, interps)):
        dust = h1_error(interp, compiled_field(net, row=i),
                        quad_cells(interp, cfg.cert_grade), q=cfg.q_net,
                        n_q=cfg.nq_net, max_doublings=cfg.cert_doublings)
        reports.append(BuildReport(
            dim=base.dim, sigma=cfg.sigma, ell=base.ell, p=base.p,
            N1d=base.N1d, coeff_l1=interp.coeff_l1(),
            nn_size=net.size, nn_depth=net.depth,
            h1_error=hp_reps[i].h1_error + dust.h1_error,
            linf_error=hp_reps[i].linf_error + dust.linf_error,
            certified=hp_reps[i].certified and dust.h1_error <= 0.25 * epsilon,
            seconds=time.perf_counter() - t0,
            hp_h1_error=hp_reps[i].h1_error, levels=net.meta["levels"],
            plan=plan))
    return net, reports


