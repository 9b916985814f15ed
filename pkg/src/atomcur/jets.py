"""Truncated multivariate Taylor (jet) arithmetic.

A jet holds the Taylor coefficients (1/T!) * d^T f(p) of a smooth scalar
function at a base point, for every n-dimensional multi-index T with
|T| <= order.  Coefficients are laid out densely in graded-lexicographic
order: multi-indices sorted by total degree first, then lexicographically
ascending within a degree.  This layout makes truncation to a lower order
a prefix slice.

Two scalar modes exist and are never mixed inside one computation:

* ``rational``: coefficients are ``fractions.Fraction``; exact, available
  for polynomial/rational expressions only.
* ``float``: 64-bit floats; the general mode.

Float-mode products run through a kernel selected at import time: the
compiled extension ``atomcur._jetcore`` when present, otherwise the pure
fallback ``atomcur._jetpure``.  Set ``ATOMCUR_JET_BACKEND=pure`` to force
the fallback.
"""

from __future__ import annotations

import math
import os
from array import array
from fractions import Fraction
from functools import lru_cache

RATIONAL = "rational"
FLOAT = "float"

if os.environ.get("ATOMCUR_JET_BACKEND", "") == "pure":
    from . import _jetpure as _backend
else:
    try:
        from . import _jetcore as _backend  # type: ignore[attr-defined]
    except ImportError:
        from . import _jetpure as _backend

BACKEND_COMPILED = bool(getattr(_backend, "COMPILED", False))


class ExactModeError(ValueError):
    """Raised when an operation cannot be carried out exactly in rational mode."""


class EvalDomainError(ValueError):
    """Raised when evaluation leaves the domain of an elementary function."""


def _gradlex_indices(n: int, order: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for deg in range(order + 1):
        out.extend(sorted(_compositions(n, deg)))
    return tuple(out)


def _compositions(n: int, deg: int):
    if n == 1:
        yield (deg,)
        return
    for first in range(deg + 1):
        for rest in _compositions(n - 1, deg - first):
            yield (first,) + rest


@lru_cache(maxsize=None)
class JetSpace:
    """Shared immutable tables for jets of a fixed (dimension, order).

    Instances are interned per (n, order); construction cost is paid once.
    """

    def __init__(self, n: int, order: int):
        if n < 1 or order < 0:
            raise ValueError("need n >= 1, order >= 0")
        self.n = n
        self.order = order
        self.indices = _gradlex_indices(n, order)
        self.size = len(self.indices)
        self.index_of = {T: i for i, T in enumerate(self.indices)}
        oi, ai, bi = [], [], []
        for ia, Ta in enumerate(self.indices):
            da = sum(Ta)
            for ib, Tb in enumerate(self.indices):
                if da + sum(Tb) > order:
                    continue
                T = tuple(x + y for x, y in zip(Ta, Tb))
                oi.append(self.index_of[T])
                ai.append(ia)
                bi.append(ib)
        self.mul_oi = array("i", oi)
        self.mul_ai = array("i", ai)
        self.mul_bi = array("i", bi)
        # diff_tables[i]: (dst, src, multiplier) triples realizing d/dx_i
        # into the order-1 space (empty at order 0).
        self.diff_tables = []
        if order >= 1:
            lower = JetSpace(n, order - 1)
            for i in range(n):
                tab = []
                for dst, T in enumerate(lower.indices):
                    src_T = tuple(t + (1 if k == i else 0) for k, t in enumerate(T))
                    tab.append((dst, self.index_of[src_T], T[i] + 1))
                self.diff_tables.append(tuple(tab))
        self.lower = JetSpace(n, order - 1) if order >= 1 else None

    def __repr__(self):
        return f"JetSpace(n={self.n}, order={self.order})"


def _zero_coeffs(space: JetSpace, mode: str):
    if mode == FLOAT:
        return array("d", bytes(8 * space.size))
    return [Fraction(0)] * space.size


def as_scalar(x, mode: str):
    """Coerce a number into the scalar type of the given mode."""
    if mode == FLOAT:
        return float(x)
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        if not x.is_integer():
            raise ExactModeError(f"non-integral float {x!r} in rational mode")
        return Fraction(int(x))
    if isinstance(x, str):
        return Fraction(x)
    raise ExactModeError(f"cannot coerce {x!r} to a rational scalar")


def as_point(p, mode: str) -> tuple:
    return tuple(as_scalar(x, mode) for x in p)


class Jet:
    """Dense truncated Taylor expansion at a point (the point itself is
    carried by the caller; a Jet is pure coefficient data)."""

    __slots__ = ("space", "mode", "coeffs")

    def __init__(self, space: JetSpace, mode: str, coeffs):
        self.space = space
        self.mode = mode
        self.coeffs = coeffs

    # -- constructors -------------------------------------------------
    @staticmethod
    def zero(space: JetSpace, mode: str) -> "Jet":
        return Jet(space, mode, _zero_coeffs(space, mode))

    @staticmethod
    def const(space: JetSpace, mode: str, value) -> "Jet":
        c = _zero_coeffs(space, mode)
        c[0] = as_scalar(value, mode)
        return Jet(space, mode, c)

    @staticmethod
    def variable(space: JetSpace, mode: str, i: int, base_value) -> "Jet":
        """Jet of the coordinate function x_i at a point with x_i = base_value."""
        c = _zero_coeffs(space, mode)
        c[0] = as_scalar(base_value, mode)
        if space.order >= 1:
            unit = tuple(1 if k == i else 0 for k in range(space.n))
            c[space.index_of[unit]] = as_scalar(1, mode)
        return Jet(space, mode, c)

    # -- basic queries ------------------------------------------------
    @property
    def value(self):
        return self.coeffs[0]

    def coeff(self, T: tuple) -> object:
        """Taylor coefficient at multi-index T, i.e. (1/T!) d^T f."""
        return self.coeffs[self.space.index_of[tuple(T)]]

    def partial(self, T: tuple):
        """Plain partial derivative d^T f at the base point (T! * coeff)."""
        fact = 1
        for t in T:
            fact *= math.factorial(t)
        return self.coeff(T) * fact

    # -- arithmetic ---------------------------------------------------
    def _check(self, other: "Jet"):
        if self.space is not other.space or self.mode != other.mode:
            raise ValueError("jet space/mode mismatch")

    def _like(self, iterable):
        if self.mode == FLOAT:
            return array("d", iterable)
        return list(iterable)

    def __add__(self, other):
        if not isinstance(other, Jet):
            return self + Jet.const(self.space, self.mode, other)
        self._check(other)
        return Jet(self.space, self.mode,
                   self._like(a + b for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Jet):
            return self - Jet.const(self.space, self.mode, other)
        self._check(other)
        return Jet(self.space, self.mode,
                   self._like(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __rsub__(self, other):
        return Jet.const(self.space, self.mode, other) - self

    def __neg__(self):
        return Jet(self.space, self.mode, self._like(-a for a in self.coeffs))

    def scale(self, alpha) -> "Jet":
        a = as_scalar(alpha, self.mode)
        return Jet(self.space, self.mode, self._like(a * c for c in self.coeffs))

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(other)
        self._check(other)
        sp = self.space
        out = _zero_coeffs(sp, self.mode)
        if self.mode == FLOAT:
            _backend.cauchy_mul_f64(self.coeffs, other.coeffs, out,
                                    sp.mul_oi, sp.mul_ai, sp.mul_bi)
        else:
            a, b = self.coeffs, other.coeffs
            for oi, ai, bi in zip(sp.mul_oi, sp.mul_ai, sp.mul_bi):
                out[oi] += a[ai] * b[bi]
        return Jet(sp, self.mode, out)

    __rmul__ = __mul__

    def power(self, k: int) -> "Jet":
        if k < 0:
            return self.reciprocal().power(-k)
        result = Jet.const(self.space, self.mode, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base if k > 1 else base
            k >>= 1
        return result

    def reciprocal(self) -> "Jet":
        u0 = self.value
        if u0 == 0:
            raise EvalDomainError("division by a function vanishing at the base point")
        R = self.space.order
        one = as_scalar(1, self.mode)
        series = []
        inv = one / u0
        acc = inv
        for _ in range(R + 1):
            series.append(acc)
            acc = -acc * inv
        return self.compose_series(series)

    def compose_series(self, series) -> "Jet":
        """Evaluate sum_j series[j] * (self - self.value)^j, truncated.

        ``series`` must hold at least order+1 univariate Taylor
        coefficients of the outer function at self.value.
        """
        sp, mode = self.space, self.mode
        du = self - Jet.const(sp, mode, self.value)
        acc = Jet.const(sp, mode, series[sp.order])
        for j in range(sp.order - 1, -1, -1):
            acc = acc * du + Jet.const(sp, mode, series[j])
        return acc

    def derivative(self, i: int) -> "Jet":
        """Jet of d(self)/dx_i, one order lower."""
        sp = self.space
        if sp.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        lower = sp.lower
        out = _zero_coeffs(lower, self.mode)
        for dst, src, mult in sp.diff_tables[i]:
            out[dst] = self.coeffs[src] * mult
        return Jet(lower, self.mode, out)

    def truncate(self, order: int) -> "Jet":
        if order == self.space.order:
            return self
        if order > self.space.order:
            raise ValueError("cannot raise jet order by truncation")
        sp = JetSpace(self.space.n, order)
        return Jet(sp, self.mode, self.coeffs[: sp.size])

    def __repr__(self):
        return f"Jet(order={self.space.order}, value={self.value!r})"


def jet_float(j: Jet) -> Jet:
    """Copy of a jet with coefficients coerced to float mode."""
    if j.mode == FLOAT:
        return j
    return Jet(j.space, FLOAT, array("d", (float(c) for c in j.coeffs)))


# ---------------------------------------------------------------------------
# Elementary function composition tables.

def _series_exp(u0, R, mode):
    e = math.exp(u0)
    out, f = [], 1.0
    for j in range(R + 1):
        out.append(e / f)
        f *= j + 1
    return out


def _series_log(u0, R, mode):
    if u0 <= 0:
        raise EvalDomainError("log of non-positive base value")
    out = [math.log(u0)]
    for j in range(1, R + 1):
        out.append((-1) ** (j - 1) / (j * u0 ** j))
    return out


def _series_sqrt(u0, R, mode):
    if u0 <= 0:
        raise EvalDomainError("sqrt of non-positive base value")
    out = [math.sqrt(u0)]
    c = out[0]
    for j in range(1, R + 1):
        c = c * (Fraction(1, 2) - (j - 1)) / (j * u0)
        out.append(float(c))
    return out


def _series_trig(fn0, fn1, sign):
    # derivative cycle (f, f', -f, -f') for sin/cos; no sign for sinh/cosh
    def gen(u0, R, mode):
        cycle = [fn0(u0), fn1(u0), sign * fn0(u0), sign * fn1(u0)]
        out, f = [], 1.0
        for j in range(R + 1):
            out.append(cycle[j % 4] / f)
            f *= j + 1
        return out

    return gen


_SERIES = {
    "exp": _series_exp,
    "log": _series_log,
    "sqrt": _series_sqrt,
    "sin": _series_trig(math.sin, math.cos, -1),
    "cos": _series_trig(math.cos, lambda u: -math.sin(u), -1),
    "sinh": _series_trig(math.sinh, math.cosh, +1),
    "cosh": _series_trig(math.cosh, math.sinh, +1),
}

ELEMENTARY_FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "sqrt", "sinh", "cosh")


def apply_elementary(name: str, u: Jet) -> Jet:
    """Compose an elementary function with a jet (float mode only)."""
    if u.mode != FLOAT:
        raise ExactModeError(
            f"elementary function {name!r} is not exactly representable in rational mode")
    if name == "tan":
        c = apply_elementary("cos", u)
        if c.value == 0:
            raise EvalDomainError("tan at a pole")
        return apply_elementary("sin", u) * c.reciprocal()
    series = _SERIES[name](u.value, u.space.order, u.mode)
    return u.compose_series(series)
