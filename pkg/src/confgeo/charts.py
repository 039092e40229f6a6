"""Coordinate charts carrying a metric given by analytic expressions.

A chart is immutable after construction; everything downstream is a pure
function of (chart, point), so concurrent evaluation across points is safe.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import exprlang
from .errors import DegenerateMetric, SignatureMismatch
from .exprlang import Expr, parse, to_source
from .jets import Jet, jet_space, stack

NONDEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class MetricChart:
    name: str
    coords: tuple[str, ...]
    metric: tuple[tuple[Expr, ...], ...]  # full symmetric matrix of ASTs
    mode: str = "real"  # real | complex
    signature: Optional[tuple[int, int]] = None  # (p, q), real mode
    parameters: dict = field(default_factory=dict)
    domain: dict = field(default_factory=dict)  # coord -> (lo, hi)
    sample_points: tuple = ()
    orientation: int = 1

    @property
    def dim(self):
        return len(self.coords)

    @property
    def dtype(self):
        return complex if self.mode == "complex" else float

    def scope(self, point, order):
        return exprlang.Scope(
            jet_space(self.dim, order), self.coords, point, self.mode, self.parameters
        )

    def metric_jets(self, point, order) -> Jet:
        """Metric components as jets, shape (n, n, L)."""
        scope = self.scope(point, order)
        n = self.dim
        rows = []
        cache = {}
        for i in range(n):
            row = []
            for j in range(n):
                key = (min(i, j), max(i, j))
                if key not in cache:
                    cache[key] = exprlang.evaluate_jet(self.metric[key[0]][key[1]], scope)
                row.append(cache[key])
            rows.append(stack(row))
        return stack(rows)

    def metric_values(self, point) -> np.ndarray:
        """Plain matrix of metric values (no jets)."""
        n = self.dim
        g = np.zeros((n, n), dtype=self.dtype)
        for i in range(n):
            for j in range(i, n):
                v = exprlang.evaluate_value(
                    self.metric[i][j], self.coords, point, self.mode, self.parameters
                )
                g[i, j] = v
                g[j, i] = v
        return g

    def check_point(self, point):
        """Nondegeneracy (and, in real mode, signature) at one point."""
        g = self.metric_values(point)
        scale = np.prod(np.linalg.norm(g, axis=1)) or 1.0
        det = np.linalg.det(g)
        if abs(det) <= NONDEGENERACY_TOL * abs(scale):
            raise DegenerateMetric(f"metric of chart {self.name!r} is degenerate at {point}")
        if self.mode == "real" and self.signature is not None:
            eig = np.linalg.eigvalsh(g)
            pos = int(np.sum(eig > 0))
            neg = int(np.sum(eig < 0))
            if (pos, neg) != tuple(self.signature):
                raise SignatureMismatch(
                    f"chart {self.name!r}: eigenvalue signs {(pos, neg)} at {point} "
                    f"do not match declared signature {tuple(self.signature)}"
                )
        return g

    def domain_box(self):
        return [self.domain.get(c, (-1.0, 1.0)) for c in self.coords]

    def contains(self, point, margin=0.0):
        for x, (lo, hi) in zip(np.real(np.asarray(point)), self.domain_box()):
            if not (lo + margin <= x <= hi - margin):
                return False
        return True

    def random_points(self, count, rng, margin=0.0):
        box = self.domain_box()
        pts = []
        for _ in range(count):
            p = [rng.uniform(lo + margin, hi - margin) for lo, hi in box]
            pts.append(tuple(p))
        return pts


def chart_from_strings(name, coords, rows, mode="real", signature=None, parameters=None,
                       domain=None, sample_points=(), orientation=1) -> MetricChart:
    """Build a chart from a matrix of expression strings.

    `rows` is a full n x n matrix; entries below the diagonal may be None,
    otherwise they must pretty-print identically to their mirror entry.
    """
    n = len(coords)
    if len(rows) != n or any(len(r) != n for r in rows):
        raise ValueError("metric matrix shape does not match coordinates")
    parsed = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            cell = rows[i][j]
            if cell is None:
                continue
            parsed[i][j] = parse(cell) if isinstance(cell, str) else cell
    for i in range(n):
        for j in range(n):
            a, b = parsed[i][j], parsed[j][i]
            if a is None and b is None:
                raise ValueError(f"metric entry ({i},{j}) missing")
            if a is not None and b is not None and a != b:
                raise ValueError(f"metric entries ({i},{j}) and ({j},{i}) differ")
            if a is None:
                parsed[i][j] = b
    return MetricChart(
        name=name,
        coords=tuple(coords),
        metric=tuple(tuple(row) for row in parsed),
        mode=mode,
        signature=tuple(signature) if signature else None,
        parameters=dict(parameters or {}),
        domain=dict(domain or {}),
        sample_points=tuple(tuple(p) for p in sample_points),
        orientation=int(orientation),
    )


def flat_chart(n, signature=None, mode="real", name=None) -> MetricChart:
    eps = [1.0] * n
    if signature:
        p, q = signature
        eps = [1.0] * p + [-1.0] * q
    coords = tuple("xyztuv"[:n]) if n <= 6 else tuple(f"x{i}" for i in range(n))
    rows = [[("1" if eps[i] > 0 else "-1") if i == j else "0" for j in range(n)] for i in range(n)]
    return chart_from_strings(
        name or f"flat_{n}d", coords, rows, mode=mode,
        signature=signature if mode == "real" else None,
    )


def random_polynomial_chart(n, seed, signature=None, mode="real", amplitude=0.08,
                            degree=3, box=0.35, name=None) -> MetricChart:
    """Seeded random analytic metric: diag(signature) + amplitude * Q(x) with Q
    a symmetric matrix of random polynomials.  Nondegenerate on the domain box
    for the default amplitude."""
    rng = np.random.default_rng(seed)
    coords = tuple("xyztuv"[:n])
    eps = [1.0] * n
    if signature:
        p, q = signature
        eps = [1.0] * p + [-1.0] * q

    def rand_poly():
        # a handful of monomials of degree 1..degree with rounded coefficients
        terms = None
        for _ in range(rng.integers(2, 5)):
            deg = int(rng.integers(1, degree + 1))
            coeff = float(np.round(rng.uniform(-1, 1), 3))
            if coeff == 0.0:
                coeff = 0.5
            mono = exprlang.num(coeff)
            for _ in range(deg):
                v = exprlang.var(coords[int(rng.integers(0, n))])
                mono = exprlang.mul(mono, v)
            terms = mono if terms is None else exprlang.add(terms, mono)
        return terms

    rows = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(i, n):
            base = exprlang.num(eps[i]) if i == j else exprlang.num(0.0)
            pert = exprlang.mul(exprlang.num(amplitude), rand_poly())
            entry = exprlang.add(base, pert)
            rows[i][j] = to_source(entry)
            rows[j][i] = rows[i][j]
    return chart_from_strings(
        name or f"random_{n}d_seed{seed}",
        coords,
        rows,
        mode=mode,
        signature=signature if mode == "real" else None,
        domain={c: (-box, box) for c in coords},
    )
