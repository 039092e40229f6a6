"""Truncated multivariate Taylor (jet) arithmetic.

A jet stores the Taylor coefficients of an analytic function at a point, for
all multi-indices alpha with |alpha| <= order, in a dense vector.  Tensors of
jets keep the coefficient axis last, so a metric evaluated to order 3 in 4
variables is an ndarray of shape (4, 4, 35).

Coefficients are Taylor coefficients (derivative / alpha!), which makes the
product a plain truncated convolution over multi-indices.  Partial derivatives
are recovered by multiplying with alpha!.

Orders are capped at 4: third derivatives of the metric are the deepest needed
by any identity in the suite, plus one spare order for cross-checks.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .errors import DomainError

MAX_ORDER = 4
MAX_VARS = 6


@lru_cache(maxsize=None)
def jet_space(nvars: int, order: int) -> "JetSpace":
    return JetSpace(nvars, order)


def _multi_indices(nvars, order):
    """All alpha with |alpha| <= order, graded lexicographic."""
    out = []
    for total in range(order + 1):
        stack = [((), total)]
        level = []

        def rec(prefix, rem, depth):
            if depth == nvars - 1:
                level.append(prefix + (rem,))
                return
            for k in range(rem, -1, -1):
                rec(prefix + (k,), rem - k, depth + 1)

        rec((), total, 0)
        out.extend(sorted(level, reverse=True))
    return out


class JetSpace:
    """Index bookkeeping for jets with a fixed (nvars, order).

    Holds the multi-index table, the sorted multiplication table (consumed by
    add.reduceat so a jet product is a single vectorized pass), and the shift
    tables used to read off partial derivatives.
    """

    def __init__(self, nvars: int, order: int):
        if not (1 <= nvars <= MAX_VARS):
            raise ValueError(f"nvars must be in 1..{MAX_VARS}, got {nvars}")
        if not (0 <= order <= MAX_ORDER):
            raise ValueError(f"order must be in 0..{MAX_ORDER}, got {order}")
        self.nvars = nvars
        self.order = order
        self.alphas = _multi_indices(nvars, order)
        self.size = len(self.alphas)
        self.index = {a: i for i, a in enumerate(self.alphas)}
        self.degrees = np.array([sum(a) for a in self.alphas])
        self.factorials = np.array(
            [math.prod(math.factorial(k) for k in a) for a in self.alphas], dtype=float
        )

        # multiplication table: (ia, ib) pairs grouped by output index ic
        pairs = [[] for _ in range(self.size)]
        for ia, a in enumerate(self.alphas):
            for ib, b in enumerate(self.alphas):
                if sum(a) + sum(b) <= order:
                    c = tuple(x + y for x, y in zip(a, b))
                    pairs[self.index[c]].append((ia, ib))
        flat_a, flat_b, starts = [], [], []
        for group in pairs:
            starts.append(len(flat_a))
            for ia, ib in group:
                flat_a.append(ia)
                flat_b.append(ib)
        self._mul_a = np.array(flat_a)
        self._mul_b = np.array(flat_b)
        self._mul_starts = np.array(starts)

        # derivative tables: positions of alpha + e_v and the factor alpha_v + 1
        self._shift = np.zeros((nvars, self.size), dtype=int)
        self._shift_ok = np.zeros((nvars, self.size), dtype=bool)
        self._shift_factor = np.zeros((nvars, self.size))
        for v in range(nvars):
            for i, a in enumerate(self.alphas):
                if sum(a) + 1 <= order:
                    up = tuple(x + (1 if k == v else 0) for k, x in enumerate(a))
                    self._shift[v, i] = self.index[up]
                    self._shift_ok[v, i] = True
                    self._shift_factor[v, i] = a[v] + 1

    def lower(self, order: int) -> "JetSpace":
        return jet_space(self.nvars, order)


class Jet:
    """Array of jets: `data` has shape (*tensor_shape, space.size)."""

    __slots__ = ("space", "data")

    def __init__(self, space: JetSpace, data: np.ndarray):
        self.space = space
        self.data = np.asarray(data)
        if self.data.shape[-1] != space.size:
            raise ValueError("jet data does not match space size")

    # --- constructors ---

    @staticmethod
    def constant(space, value, dtype=None):
        value = np.asarray(value)
        data = np.zeros(value.shape + (space.size,), dtype=dtype or value.dtype)
        data[..., 0] = value
        return Jet(space, data)

    @staticmethod
    def variable(space, which, value, dtype=float):
        data = np.zeros(space.size, dtype=dtype)
        data[0] = value
        if space.order >= 1:
            data[space.index[tuple(1 if k == which else 0 for k in range(space.nvars))]] = 1.0
        return Jet(space, data)

    # --- views ---

    @property
    def shape(self):
        return self.data.shape[:-1]

    @property
    def value(self):
        """Order-0 part, as a plain ndarray (or scalar for scalar jets)."""
        v = self.data[..., 0]
        return v if v.shape else v[()]

    def coeff(self, alpha):
        return self.data[..., self.space.index[tuple(alpha)]]

    def partial(self, alpha):
        """Exact partial derivative for the given multi-index."""
        i = self.space.index[tuple(alpha)]
        return self.data[..., i] * self.space.factorials[i]

    def gradient(self):
        """Stack of first partials, shape (nvars, *tensor_shape)."""
        sp = self.space
        unit = [tuple(1 if k == v else 0 for k in range(sp.nvars)) for v in range(sp.nvars)]
        return np.stack([self.partial(u) for u in unit], axis=0)

    def truncate(self, order):
        if order == self.space.order:
            return self
        if order > self.space.order:
            raise ValueError("cannot raise jet order")
        lo = self.space.lower(order)
        return Jet(lo, np.ascontiguousarray(self.data[..., : lo.size]))

    def __getitem__(self, item):
        return Jet(self.space, self.data[item])

    def reshape(self, *shape):
        return Jet(self.space, self.data.reshape(*shape, self.space.size))

    # --- arithmetic ---

    def _coerce(self, other):
        if isinstance(other, Jet):
            if other.space.nvars != self.space.nvars:
                raise ValueError("jets from incompatible spaces")
            order = min(self.space.order, other.space.order)
            return self.truncate(order), other.truncate(order)
        return self, Jet.constant(self.space, np.asarray(other))

    def __add__(self, other):
        a, b = self._coerce(other)
        return Jet(a.space, a.data + b.data)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.space, -self.data)

    def __sub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.space, a.data - b.data)

    def __rsub__(self, other):
        a, b = self._coerce(other)
        return Jet(a.space, b.data - a.data)

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.data * np.asarray(other)[..., None])
        a, b = self._coerce(other)
        sp = a.space
        prod = a.data[..., sp._mul_a] * b.data[..., sp._mul_b]
        return Jet(sp, np.add.reduceat(prod, sp._mul_starts, axis=-1))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.space, self.data / np.asarray(other)[..., None])
        a, b = self._coerce(other)
        return a * b.reciprocal()

    def __rtruediv__(self, other):
        return Jet.constant(self.space, np.asarray(other)) * self.reciprocal()

    def __pow__(self, expo):
        if isinstance(expo, Jet):
            # b^e with jet exponent: exp(e*log b)
            return (expo * self.log()).exp()
        if isinstance(expo, (int, np.integer)) or (
            isinstance(expo, float) and expo == int(expo) and abs(expo) <= 64
        ):
            k = int(expo)
            if k == 0:
                return Jet.constant(self.space, np.ones_like(self.data[..., 0]))
            base = self if k > 0 else self.reciprocal()
            k = abs(k)
            # repeated squaring avoids branch cuts in complex mode
            result = None
            sq = base
            while k:
                if k & 1:
                    result = sq if result is None else result * sq
                k >>= 1
                if k:
                    sq = sq * sq
            return result
        return (self.log() * expo).exp()

    # --- analytic primitives ---

    def _series(self, coeffs):
        """Compose with a univariate series: coeffs[m] = f^(m)(value)/m!."""
        sp = self.space
        du = self.data.copy()
        du[..., 0] = 0
        dj = Jet(sp, du)
        out = Jet.constant(sp, np.broadcast_to(coeffs[0], self.shape).copy())
        power = None
        for m in range(1, sp.order + 1):
            power = dj if power is None else power * dj
            out = out + Jet(sp, power.data * np.asarray(coeffs[m])[..., None])
        return out

    def reciprocal(self):
        u0 = self.data[..., 0]
        if np.any(u0 == 0):
            raise DomainError("division by zero")
        inv = 1.0 / u0
        coeffs = [inv]
        for m in range(1, self.space.order + 1):
            coeffs.append(-coeffs[-1] * inv)
        return self._series(coeffs)

    def exp(self):
        e = np.exp(self.data[..., 0])
        return self._series([e / math.factorial(m) for m in range(self.space.order + 1)])

    def log(self):
        u0 = self.data[..., 0]
        real = not np.iscomplexobj(self.data)
        if real and np.any(u0 <= 0):
            raise DomainError("log of nonpositive real")
        if not real and np.any(u0 == 0):
            raise DomainError("log of zero")
        coeffs = [np.log(u0)]
        inv = 1.0 / u0
        p = inv.copy()
        for m in range(1, self.space.order + 1):
            coeffs.append(((-1) ** (m - 1)) * p / m)
            p = p * inv
        return self._series(coeffs)

    def sqrt(self):
        u0 = self.data[..., 0]
        real = not np.iscomplexobj(self.data)
        if real and np.any(u0 < 0):
            raise DomainError("sqrt of negative real")
        if np.any(u0 == 0):
            raise DomainError("sqrt at zero is not differentiable")
        s = np.sqrt(u0)
        inv = 1.0 / u0
        # binomial(1/2, m) * s / u0^m
        coeffs, binom = [s], 1.0
        for m in range(1, self.space.order + 1):
            binom *= (0.5 - (m - 1)) / m
            coeffs.append(binom * s * inv**m)
        return self._series(coeffs)

    def _trig(self, f0, f1, f2, f3):
        cycle = [f0, f1, f2, f3]
        return self._series(
            [cycle[m % 4] / math.factorial(m) for m in range(self.space.order + 1)]
        )

    def sin(self):
        u0 = self.data[..., 0]
        s, c = np.sin(u0), np.cos(u0)
        return self._trig(s, c, -s, -c)

    def cos(self):
        u0 = self.data[..., 0]
        s, c = np.sin(u0), np.cos(u0)
        return self._trig(c, -s, -c, s)

    def tan(self):
        return self.sin() / self.cos()

    def sinh(self):
        u0 = self.data[..., 0]
        s, c = np.sinh(u0), np.cosh(u0)
        return self._series(
            [(s if m % 2 == 0 else c) / math.factorial(m) for m in range(self.space.order + 1)]
        )

    def cosh(self):
        u0 = self.data[..., 0]
        s, c = np.sinh(u0), np.cosh(u0)
        return self._series(
            [(c if m % 2 == 0 else s) / math.factorial(m) for m in range(self.space.order + 1)]
        )

    def tanh(self):
        return self.sinh() / self.cosh()

    def atan(self):
        u0 = self.data[..., 0]
        q = 1.0 / (1.0 + u0**2)
        # f^(m)/m! for f = atan, m = 0..4
        coeffs = [
            np.arctan(u0),
            q,
            -u0 * q**2,
            (3 * u0**2 - 1) / 3.0 * q**3,
            (u0 - u0**3) * q**4,
        ]
        return self._series(coeffs[: self.space.order + 1])

    # --- calculus ---

    def derivative(self, var):
        """Jet of the partial derivative with respect to variable `var`.

        The result lives one order lower; its coefficients are exact.
        """
        sp = self.space
        if sp.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        lo = sp.lower(sp.order - 1)
        ok = sp._shift_ok[var]
        src = sp._shift[var][ok]
        out = self.data[..., src] * sp._shift_factor[var][ok]
        return Jet(lo, out)


def stack(jets, axis=0):
    """Stack jets sharing a space along a new leading tensor axis."""
    space = jets[0].space
    order = min(j.space.order for j in jets)
    space = space.lower(order)
    return Jet(space, np.stack([j.truncate(order).data for j in jets], axis=axis))


def jet_einsum(spec: str, a: Jet, b: Jet) -> Jet:
    """einsum over tensor axes combined with the jet product on the last axis.

    `spec` addresses only the tensor axes, e.g. 'kl,ijl->kij'.
    """
    order = min(a.space.order, b.space.order)
    a = a.truncate(order)
    b = b.truncate(order)
    sp = a.space
    ins, out = spec.split("->")
    sa, sb = ins.split(",")
    pa = a.data[..., sp._mul_a]
    pb = b.data[..., sp._mul_b]
    prod = np.einsum(f"{sa}P,{sb}P->{out}P", pa, pb)
    return Jet(sp, np.add.reduceat(prod, sp._mul_starts, axis=-1))


def compose(f: Jet, args: list[Jet]) -> Jet:
    """Substitute jets into a jet: f is a jet in m variables, args are m jets
    in a common space whose values equal the expansion point of f.

    Returns the jet of the composite in the args' space.  Used for pulling
    metrics back through embeddings.
    """
    m = f.space.nvars
    if len(args) != m:
        raise ValueError("wrong number of substitution arguments")
    target = args[0].space
    order = min(target.order, f.space.order)
    target = target.lower(order)
    deltas = []
    for a in args:
        d = a.truncate(order).data.copy()
        d[..., 0] = 0
        deltas.append(Jet(target, d))

    dtype = np.result_type(f.data.dtype, *(a.data.dtype for a in args))
    out = np.zeros(f.shape + (target.size,), dtype=dtype)
    out[..., 0] = f.data[..., 0]

    # power products of the deltas, built incrementally along graded order
    cache = {tuple([0] * m): None}
    for i, alpha in enumerate(f.space.alphas):
        if sum(alpha) == 0 or sum(alpha) > order:
            continue
        # find alpha - e_v with v = first nonzero slot
        v = next(k for k, x in enumerate(alpha) if x > 0)
        prev = tuple(x - (1 if k == v else 0) for k, x in enumerate(alpha))
        base = cache[prev]
        power = deltas[v] if base is None else base * deltas[v]
        cache[alpha] = power
        out += f.data[..., i, None] * power.data
    return Jet(target, out)
