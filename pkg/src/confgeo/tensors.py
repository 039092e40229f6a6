"""Curvature of a metric chart: connection, Riemann tensor, Ricci pieces,
covariant derivatives, orthonormal frames.

Index conventions (frozen; see conventions.py for the full ledger):

    R(X,Y)Z  = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z
    R31[l,i,j,k]: R(d_i, d_j) d_k = R31[l,i,j,k] d_l
    R40[i,j,k,l] = g_{lm} R31[m,i,j,k] = <R(d_i,d_j) d_k, d_l>
    Ric[j,k] = R31[i,i,j,k]        (unit sphere gets positive Ricci)

Everything is computed in jet arithmetic, so any output is itself available
with partial derivatives up to the remaining order; covariant derivatives of
computed fields come for free.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np

from .charts import MetricChart
from .errors import (
    DegenerateFlag,
    DegenerateMetric,
    FrameNotOrthonormal,
    NullSeed,
    VarianceMismatch,
)
from .jets import Jet, jet_einsum, jet_space, stack

FRAME_TOL = 1e-10


def inverse_metric(g: Jet) -> Jet:
    """Jet of g^{-1} by Newton refinement of the pointwise inverse."""
    g0 = g.data[..., 0]
    try:
        x0 = np.linalg.inv(g0)
    except np.linalg.LinAlgError as exc:
        raise DegenerateMetric(str(exc)) from exc
    x = Jet.constant(g.space, x0)
    eye = Jet.constant(g.space, np.eye(g0.shape[0], dtype=g0.dtype))
    # each step doubles the correct jet order
    steps = max(1, int(np.ceil(np.log2(g.space.order + 1))))
    for _ in range(steps):
        x = x + jet_einsum("ij,jk->ik", x, eye - jet_einsum("ij,jk->ik", g, x))
    return x


def metric_derivatives(g: Jet) -> Jet:
    """dg[d,i,j] = partial_d g_{ij}, one order lower."""
    return stack([g.derivative(v) for v in range(g.space.nvars)])


def christoffel(g: Jet, ginv: Optional[Jet] = None) -> Jet:
    """Gamma[k,i,j] = 1/2 g^{kl} (d_i g_{jl} + d_j g_{il} - d_l g_{ij})."""
    if ginv is None:
        ginv = inverse_metric(g)
    dg = metric_derivatives(g)
    # S[i,j,l] = d_i g_{jl} + d_j g_{il} - d_l g_{ij}
    s = Jet(dg.space, dg.data + dg.data.transpose(1, 0, 2, 3)
            - dg.data.transpose(1, 2, 0, 3))
    return 0.5 * jet_einsum("kl,ijl->kij", ginv.truncate(s.space.order), s)


def riemann31(gamma: Jet) -> Jet:
    """R31[l,i,j,k] = d_i G[l,j,k] - d_j G[l,i,k] + G[l,i,m]G[m,j,k] - G[l,j,m]G[m,i,k]."""
    dgamma = stack([gamma.derivative(v) for v in range(gamma.space.nvars)])  # [d,l,i,j]
    order = dgamma.space.order
    gg = jet_einsum("lim,mjk->lijk", gamma.truncate(order), gamma.truncate(order))
    d = dgamma.data
    curl = d.transpose(1, 0, 2, 3, 4) - d.transpose(1, 2, 0, 3, 4)  # [l,i,j,k]
    return Jet(dgamma.space, curl + gg.data - gg.data.transpose(0, 2, 1, 3, 4))


def lower_first(r31: Jet, g: Jet) -> Jet:
    """R40[i,j,k,l] = g_{lm} R31[m,i,j,k]."""
    return jet_einsum("lm,mijk->ijkl", g, r31)


def ricci(r31: Jet) -> Jet:
    """Ric[j,k] = R31[i,i,j,k]."""
    order = r31.space.order
    sp = r31.space
    n = r31.data.shape[0]
    return Jet(sp, np.einsum("iijkL->jkL", r31.data))


def raise_index(t: Jet, ginv: Jet, axis: int) -> Jet:
    letters = "abcdef"
    nd = t.data.ndim - 1
    src = letters[:nd]
    dst = src.replace(src[axis], "z")
    return jet_einsum(f"z{src[axis]},{src}->{dst}", ginv, t)


def scalar_curvature(ric: Jet, ginv: Jet) -> Jet:
    return jet_einsum("jk,jk->", ginv, ric)


def covariant_derivative(t: Jet, variance: str, gamma: Jet) -> Jet:
    """Covariant derivative; the new (down) slot comes first.

    variance is a string of 'u'/'d' per tensor slot, e.g. R31 is 'uddd'.
    """
    nd = t.data.ndim - 1
    if len(variance) != nd:
        raise VarianceMismatch(f"variance {variance!r} does not match rank-{nd} tensor")
    n = t.space.nvars
    dt = stack([t.derivative(v) for v in range(n)])
    order = dt.space.order
    tt = t.truncate(order)
    gm = gamma.truncate(order)
    out = dt.data.copy()
    letters = "abcdef"[:nd]
    for slot, kind in enumerate(variance):
        a = letters[slot]
        if kind == "u":
            corr = jet_einsum(f"{a}dm,{letters.replace(a, 'm')}->d{letters}", gm, tt)
            out += corr.data
        elif kind == "d":
            corr = jet_einsum(f"md{a},{letters.replace(a, 'm')}->d{letters}", gm, tt)
            out -= corr.data
        else:
            raise VarianceMismatch(f"bad variance letter {kind!r}")
    return Jet(dt.space, out)


# --- point-level containers ---

@dataclass
class PointFrame:
    """A basis at a point; rows of `basis` are the vectors."""

    point: tuple
    basis: np.ndarray
    eps: np.ndarray  # g(e_i, e_i) for orthonormal frames (+-1; 1 in complex mode)
    kind: str  # "coordinate" | "orthonormal"
    gram: np.ndarray

    @property
    def dim(self):
        return self.basis.shape[0]

    def require_orthonormal(self, tol=FRAME_TOL):
        target = np.diag(self.eps.astype(self.gram.dtype))
        if np.max(np.abs(self.gram - target)) > tol:
            raise FrameNotOrthonormal("frame Gram matrix is not diag(eps)")


@dataclass
class TensorAtPoint:
    components: np.ndarray
    variance: str
    frame: Optional[PointFrame] = None  # None = coordinate basis


def coordinate_frame(chart: MetricChart, point) -> PointFrame:
    g = chart.metric_values(point)
    n = chart.dim
    return PointFrame(tuple(point), np.eye(n, dtype=g.dtype), np.diag(g).copy(), "coordinate", g)


def orthonormal_frame(chart_or_g, point=None, seeds=None, rng=None) -> PointFrame:
    """Gram-Schmidt with greedy pivoting on |g(v,v)|.

    Accepts a chart (metric evaluated at `point`) or a plain metric matrix.
    Seed vectors, if given, are orthonormalized first, in order, and the
    resulting frame starts with vectors spanning the same flag.  A seed that
    becomes isotropic raises NullSeed; in the unseeded case isotropic pivots
    are skipped in favour of the next-best candidate.
    """
    if isinstance(chart_or_g, MetricChart):
        g = chart_or_g.metric_values(point)
        complex_mode = chart_or_g.mode == "complex"
    else:
        g = np.asarray(chart_or_g)
        complex_mode = np.iscomplexobj(g)
    n = g.shape[0]
    frame = []
    eps = []

    def gdot(a, b):
        return a @ g @ b

    def project_out(v):
        w = v.astype(complex if complex_mode else float)
        for e, s in zip(frame, eps):
            w = w - (gdot(e, w) / s) * e
        return w

    def push(w, *, from_seed):
        norm2 = gdot(w, w)
        scale = float(np.linalg.norm(w)) ** 2 or 1.0
        if abs(norm2) < FRAME_TOL * scale:
            if from_seed:
                raise NullSeed("seed vector is isotropic after projection")
            return False
        root = np.sqrt(norm2) if complex_mode else np.sqrt(abs(norm2))
        frame.append(w / root)
        eps.append(1.0 if complex_mode else float(np.sign(np.real(norm2))))
        return True

    for s in seeds if seeds is not None else ():
        w = project_out(np.asarray(s, dtype=complex if complex_mode else float))
        if float(np.linalg.norm(w)) < 1e-12 * max(1.0, float(np.linalg.norm(s))):
            raise DegenerateFlag("seed vectors are linearly dependent")
        push(w, from_seed=True)

    basis_pool = [np.eye(n, dtype=g.dtype)[k] for k in range(n)]
    if rng is not None:
        basis_pool += [rng.standard_normal(n) for _ in range(n)]
    while len(frame) < n:
        candidates = [project_out(v) for v in basis_pool]
        norms = [abs(gdot(w, w)) / (float(np.linalg.norm(w)) ** 2 + 1e-300) for w in candidates]
        best = int(np.argmax(norms))
        if not push(candidates[best], from_seed=False):
            raise DegenerateMetric("no non-isotropic pivot found; metric degenerate?")

    basis = np.array(frame)
    eps = np.array(eps)
    if seeds is None or len(list(seeds)) == 0:
        # canonical ordering: positive-norm vectors first
        order = np.argsort(-eps, kind="stable")
        basis = basis[order]
        eps = eps[order]
    gram = basis @ g @ basis.T
    pf = PointFrame(tuple(point) if point is not None else (), basis, eps, "orthonormal", gram)
    pf.require_orthonormal()
    return pf


# --- the curvature pack ---

class CurvaturePack:
    """All pointwise curvature data for (chart, point), computed lazily.

    Jets are exposed with a `_jets` suffix; the plain attributes are the
    order-0 component arrays in the coordinate basis.
    """

    def __init__(self, chart: MetricChart, point, order=3):
        self.chart = chart
        self.point = tuple(point)
        self.order = order
        chart.check_point(point)

    @cached_property
    def g_jets(self) -> Jet:
        return self.chart.metric_jets(self.point, self.order)

    @cached_property
    def ginv_jets(self) -> Jet:
        return inverse_metric(self.g_jets)

    @cached_property
    def gamma_jets(self) -> Jet:
        return christoffel(self.g_jets, self.ginv_jets)

    @cached_property
    def r31_jets(self) -> Jet:
        return riemann31(self.gamma_jets)

    @cached_property
    def r40_jets(self) -> Jet:
        return lower_first(self.r31_jets, self.g_jets)

    @cached_property
    def ricci_jets(self) -> Jet:
        return ricci(self.r31_jets)

    @cached_property
    def scal_jets(self) -> Jet:
        return scalar_curvature(self.ricci_jets, self.ginv_jets)

    # plain arrays

    @property
    def n(self):
        return self.chart.dim

    @cached_property
    def g(self):
        return self.g_jets.value

    @cached_property
    def ginv(self):
        return self.ginv_jets.value

    @cached_property
    def gamma(self):
        return self.gamma_jets.value

    @cached_property
    def r31(self):
        return self.r31_jets.value

    @cached_property
    def r40(self):
        return self.r40_jets.value

    @cached_property
    def ric(self):
        return self.ricci_jets.value

    @cached_property
    def scal(self):
        return complex(self.scal_jets.value) if self.chart.mode == "complex" else float(self.scal_jets.value)

    @cached_property
    def ric0(self):
        return self.ric - (self.scal / self.n) * self.g
