"""Certified H1/L-infinity error measurement and rate fitting.

Quadrature is composite Gauss on the tensor product of per-axis cell
partitions, each cell split into n_q equal subcells whose point groups get
a tiny seeded jitter so breakpoints of piecewise linear networks never
coincide with sample points.  The subcell count is doubled until the H1
number settles; the relative gap between the last two levels is reported
and gates the ``certified`` flag.
"""

from dataclasses import dataclass

import numpy as np

from .catalog import WeightedFunction
from .legendre import gauss_rule
from .network import NeuralNetwork, grad_realize_batch, realize_batch

__all__ = ["ErrorReport", "FitResult", "h1_error", "fit_rate", "as_field"]

_SEED = 0x5EED


@dataclass
class ErrorReport:
    l2_error: float
    h1_seminorm_error: float
    h1_error: float
    linf_error: float
    quadrature_cells: int
    richardson_gap: float
    certified: bool

    def __post_init__(self):
        lhs = self.h1_error ** 2
        rhs = self.l2_error ** 2 + self.h1_seminorm_error ** 2
        if abs(lhs - rhs) > 1e-12 * max(lhs, rhs, 1e-300):
            raise AssertionError("h1^2 != l2^2 + seminorm^2")


class _Field:
    """Uniform evaluation interface: scattered always, tensor when cheap."""

    tensor = False

    def value(self, pts):
        raise NotImplementedError

    def gradient(self, pts):
        raise NotImplementedError


class _NetField(_Field):
    def __init__(self, net):
        self.net = net

    def value(self, pts):
        return realize_batch(self.net, pts)[:, 0]

    def gradient(self, pts):
        return grad_realize_batch(self.net, pts)[1][:, 0, :]


class _FnField(_Field):
    tensor = True

    def __init__(self, u):
        self.u = u

    def value(self, pts):
        return self.u.value(*[pts[:, j] for j in range(self.u.dim)])

    def gradient(self, pts):
        return self.u.gradient(pts)

    def value_axes(self, axes):
        d = len(axes)
        grids = [a.reshape([-1 if i == j else 1 for i in range(d)])
                 for j, a in enumerate(axes)]
        shape = tuple(len(a) for a in axes)
        return np.broadcast_to(self.u.value(*grids), shape)

    def gradient_axes(self, axes):
        d = len(axes)
        grids = [a.reshape([-1 if i == j else 1 for i in range(d)])
                 for j, a in enumerate(axes)]
        shape = tuple(len(a) for a in axes)
        comps = []
        for j in range(d):
            alpha = tuple(1 if i == j else 0 for i in range(d))
            comps.append(np.broadcast_to(self.u.deriv(alpha, *grids), shape))
        return np.stack(comps, axis=-1)


class _InterpField(_Field):
    tensor = True

    def __init__(self, it):
        self.it = it

    def value(self, pts):
        return self.it.value(pts)

    def gradient(self, pts):
        return self.it.gradient(pts)

    def value_axes(self, axes):
        return self.it.value_axes(axes)

    def gradient_axes(self, axes):
        return self.it.gradient_axes(axes)


class _PairField(_Field):
    def __init__(self, pair):
        self.f, self.g = pair

    def value(self, pts):
        return np.asarray(self.f(pts), dtype=np.float64)

    def gradient(self, pts):
        return np.asarray(self.g(pts), dtype=np.float64)


def as_field(obj):
    if isinstance(obj, _Field):
        return obj
    if isinstance(obj, NeuralNetwork):
        return _NetField(obj)
    if isinstance(obj, WeightedFunction):
        return _FnField(obj)
    if hasattr(obj, "value_axes"):
        return _InterpField(obj)
    if isinstance(obj, tuple) and len(obj) == 2:
        return _PairField(obj)
    raise TypeError(f"no field adapter for {type(obj).__name__}")


def _axis_quad(cells, n_q, q, rng, jitter):
    t, w = gauss_rule(q)
    pts, wts = [], []
    for lo, hi in zip(cells[:-1], cells[1:]):
        sub = np.linspace(lo, hi, n_q + 1)
        for a, b in zip(sub[:-1], sub[1:]):
            h = b - a
            off = jitter * h * (2.0 * rng.random() - 1.0)
            x = 0.5 * ((b - a) * t + (a + b)) + off
            pts.append(np.clip(x, a + 1e-14 * h, b - 1e-14 * h))
            wts.append(0.5 * h * w)
    return np.concatenate(pts), np.concatenate(wts)


def _sq_errors(ff, gg, axes_pts, axes_wts, chunk=200_000):
    """(l2^2, semi^2, linf) over the tensor grid of axes_pts."""
    d = len(axes_pts)
    shape = tuple(len(a) for a in axes_pts)
    if ff.tensor and gg.tensor:
        # slab along the first axis so the error tensors stay bounded
        n0 = shape[0]
        rest = int(np.prod(shape[1:], dtype=np.int64)) if d > 1 else 1
        slab = max(1, min(n0, 4_000_000 // max(1, rest)))
        wt_rest = np.ones(shape[1:])
        for j, w in enumerate(axes_wts[1:]):
            wt_rest = wt_rest * w.reshape([-1 if i == j else 1 for i in range(d - 1)])
        l2 = semi = linf = 0.0
        for lo in range(0, n0, slab):
            sl = slice(lo, min(n0, lo + slab))
            axes_sl = [axes_pts[0][sl]] + list(axes_pts[1:])
            dv = ff.value_axes(axes_sl) - gg.value_axes(axes_sl)
            dg = ff.gradient_axes(axes_sl) - gg.gradient_axes(axes_sl)
            wt = axes_wts[0][sl].reshape((-1,) + (1,) * (d - 1)) * wt_rest
            l2 += float(np.sum(wt * dv * dv))
            semi += float(np.sum(wt * np.sum(dg * dg, axis=-1)))
            linf = max(linf, float(np.max(np.abs(dv))))
        return l2, semi, linf
    mesh = np.meshgrid(*axes_pts, indexing="ij")
    pts = np.column_stack([m.ravel() for m in mesh])
    wmesh = np.meshgrid(*axes_wts, indexing="ij")
    wts = wmesh[0].ravel().copy()
    for wm in wmesh[1:]:
        wts *= wm.ravel()
    l2 = semi = 0.0
    linf = 0.0
    for lo in range(0, len(pts), chunk):
        sl = slice(lo, lo + chunk)
        dv = ff.value(pts[sl]) - gg.value(pts[sl])
        dg = ff.gradient(pts[sl]) - gg.gradient(pts[sl])
        l2 += float(np.dot(wts[sl], dv * dv))
        semi += float(np.dot(wts[sl], np.sum(dg * dg, axis=1)))
        linf = max(linf, float(np.max(np.abs(dv))))
    return l2, semi, linf


def h1_error(f, g, cells, q=10, n_q=2, jitter=1e-7, seed=_SEED,
             rtol=1e-3, atol=1e-14, max_doublings=3):
    """Certified H1 (and L-infinity) distance between two fields.

    ``cells`` is a list of per-axis cell boundary arrays (typically the
    graded mesh nodes), so the subdivision is anisotropic in exactly the
    way the integrand demands.  ``atol`` keeps the Richardson stop
    meaningful when the distance sits at rounding-noise scale, where the
    relative gap never settles.
    """
    ff, gg = as_field(f), as_field(g)
    cells = [np.asarray(c, dtype=np.float64) for c in cells]
    d = len(cells)

    def level(nq):
        rng = np.random.default_rng(seed)
        axes = [_axis_quad(c, nq, q, rng, jitter) for c in cells]
        pts = [a[0] for a in axes]
        wts = [a[1] for a in axes]
        return _sq_errors(ff, gg, pts, wts)

    nq = n_q
    l2s, semis, linf = level(nq)
    h1 = float(np.sqrt(l2s + semis))
    gap = np.inf
    certified = False
    for _ in range(max_doublings):
        nq *= 2
        l2s2, semis2, linf2 = level(nq)
        h1_new = float(np.sqrt(l2s2 + semis2))
        diff = abs(h1_new - h1)
        gap = diff / max(h1_new, 1e-300)
        l2s, semis, linf = l2s2, semis2, max(linf, linf2)
        h1 = h1_new
        if diff <= rtol * h1_new + atol:
            certified = True
            break
    if max_doublings == 0:
        gap = np.nan
    n_cells_final = int(np.prod([(len(c) - 1) * nq for c in cells]))
    return ErrorReport(
        l2_error=float(np.sqrt(l2s)),
        h1_seminorm_error=float(np.sqrt(semis)),
        h1_error=h1,
        linf_error=float(linf),
        quadrature_cells=n_cells_final,
        richardson_gap=float(gap),
        certified=certified,
    )


@dataclass
class FitResult:
    C: float
    rate: float
    r2: float
    model: str


def fit_rate(pairs, model, k=None):
    """Least-squares fit of a decay/growth law on log scale.

    exp_in_n:      y = C exp(-rate n)
    exp_in_root:   y = C exp(-rate n^(1/k)), k required
    poly_in_logeps: y = C x^rate  (callers pass x = 1 + log(1/eps))
    """
    pairs = [(float(x), float(y)) for x, y in pairs]
    if len(pairs) < 3:
        raise ValueError("need at least 3 points to fit")
    xs = np.array([p[0] for p in pairs])
    ys = np.array([p[1] for p in pairs])
    if np.any(ys <= 0) or not np.all(np.isfinite(ys)):
        raise ValueError("fit requires positive finite values")
    if model == "exp_in_n":
        t = xs
        sign = -1.0
    elif model == "exp_in_root":
        if k is None:
            raise ValueError("exp_in_root needs the root order k")
        t = xs ** (1.0 / k)
        sign = -1.0
    elif model == "poly_in_logeps":
        if np.any(xs <= 0):
            raise ValueError("poly fit requires positive abscissae")
        t = np.log(xs)
        sign = 1.0
    else:
        raise ValueError(f"unknown fit model {model!r}")
    ly = np.log(ys)
    slope, intercept = np.polyfit(t, ly, 1)
    pred = slope * t + intercept
    ss_res = float(np.sum((ly - pred) ** 2))
    ss_tot = float(np.sum((ly - np.mean(ly)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return FitResult(C=float(np.exp(intercept)), rate=float(sign * slope),
                     r2=float(r2), model=model)
