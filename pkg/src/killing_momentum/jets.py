"""Truncated multivariate Taylor arithmetic ("jets").

A :class:`Jet` holds the Taylor coefficients ``c_alpha = d^alpha f / alpha!``
of a function of ``nvars`` chart coordinates, truncated at total degree
``order``, for a whole batch of base points at once.  Monomials are stored
in graded order, so the coefficients of a lower-order truncation are a
prefix of the coefficient array.

Fields are written once as ordinary expressions over jets (see the
``sin``/``cos``/... helpers, which also accept plain floats and arrays) and
evaluated to any derivative order with machine-precision partials.
"""

from __future__ import annotations

import math
from functools import lru_cache
from itertools import combinations_with_replacement

import numpy as np

MAX_ORDER = 12


@lru_cache(maxsize=None)
def _monomials(nvars: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for deg in range(MAX_ORDER + 1):
        block = []
        for combo in combinations_with_replacement(range(nvars), deg):
            alpha = [0] * nvars
            for v in combo:
                alpha[v] += 1
            block.append(tuple(alpha))
        # descending lexicographic: x^d first
        block.sort(reverse=True)
        out.extend(block)
    return tuple(out)


@lru_cache(maxsize=None)
def _index(nvars: int) -> dict[tuple[int, ...], int]:
    return {alpha: i for i, alpha in enumerate(_monomials(nvars))}


def n_coeffs(nvars: int, order: int) -> int:
    """Number of monomials of total degree <= ``order``."""
    return math.comb(order + nvars, nvars)


@lru_cache(maxsize=None)
def _degrees(nvars: int) -> np.ndarray:
    return np.array([sum(a) for a in _monomials(nvars)], dtype=int)


@lru_cache(maxsize=None)
def _shift_table(nvars: int, i: int) -> np.ndarray:
    """Target index of ``alpha_i + alpha_j`` for every ``j`` that stays in range."""
    mons = _monomials(nvars)
    idx = _index(nvars)
    ai = mons[i]
    limit = n_coeffs(nvars, MAX_ORDER - sum(ai))
    return np.array(
        [idx[tuple(x + y for x, y in zip(ai, mons[j]))] for j in range(limit)],
        dtype=np.intp,
    )


@lru_cache(maxsize=None)
def _diff_table(nvars: int, var: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Source indices and factors for d/dx_var mapping order -> order-1."""
    mons = _monomials(nvars)
    idx = _index(nvars)
    n = n_coeffs(nvars, order - 1)
    src = np.empty(n, dtype=np.intp)
    fac = np.empty(n)
    for t in range(n):
        alpha = list(mons[t])
        alpha[var] += 1
        src[t] = idx[tuple(alpha)]
        fac[t] = alpha[var]
    return src, fac


class Jet:
    """Batch of truncated Taylor series in ``nvars`` variables."""

    __slots__ = ("coeffs", "nvars", "order", "support")
    __array_ufunc__ = None

    def __init__(self, coeffs: np.ndarray, nvars: int, order: int, support: int | None = None):
        if order > MAX_ORDER:
            raise ValueError(f"jet order {order} exceeds MAX_ORDER={MAX_ORDER}")
        self.coeffs = coeffs
        self.nvars = nvars
        self.order = order
        # bitmask of variables the series may depend on; zero for constants
        self.support = (1 << nvars) - 1 if support is None else support

    # -- construction -----------------------------------------------------
    @classmethod
    def constant(cls, value, nvars: int, order: int, batch_shape=()) -> "Jet":
        value = np.asarray(value)
        shape = np.broadcast_shapes(value.shape, tuple(batch_shape))
        dtype = np.result_type(value.dtype, np.float64)
        c = np.zeros((n_coeffs(nvars, order),) + shape, dtype=dtype)
        c[0] = value
        return cls(c, nvars, order, 0)

    @classmethod
    def variable(cls, value, var: int, nvars: int, order: int) -> "Jet":
        j = cls.constant(np.asarray(value, dtype=float), nvars, order)
        if order >= 1:
            unit = [0] * nvars
            unit[var] = 1
            j.coeffs[_index(nvars)[tuple(unit)]] = 1.0
        j.support = 1 << var
        return j

    @classmethod
    def seed(cls, points: np.ndarray, order: int) -> list["Jet"]:
        """Coordinate jets for an ``(B, nvars)`` batch of base points."""
        points = np.asarray(points, dtype=float)
        nvars = points.shape[-1]
        return [cls.variable(points[..., a], a, nvars, order) for a in range(nvars)]

    # -- accessors ----------------------------------------------------------
    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    @property
    def batch_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[1:]

    def coeff(self, alpha) -> np.ndarray:
        return self.coeffs[_index(self.nvars)[tuple(alpha)]]

    def partial(self, alpha) -> np.ndarray:
        """The mixed partial derivative ``d^alpha f`` at the base points."""
        alpha = tuple(alpha)
        if sum(alpha) > self.order:
            raise ValueError(f"partial of degree {sum(alpha)} needs jet order >= {sum(alpha)}")
        scale = math.prod(math.factorial(a) for a in alpha)
        return scale * self.coeff(alpha)

    def gradient(self) -> np.ndarray:
        """First partials, shape ``(nvars, *batch)``."""
        out = []
        for a in range(self.nvars):
            e = [0] * self.nvars
            e[a] = 1
            out.append(self.partial(e))
        return np.stack(out)

    def hessian(self) -> np.ndarray:
        """Second partials, shape ``(nvars, nvars, *batch)``."""
        n = self.nvars
        h = np.empty((n, n) + self.batch_shape, dtype=self.coeffs.dtype)
        for a in range(n):
            for b in range(n):
                e = [0] * n
                e[a] += 1
                e[b] += 1
                h[a, b] = self.partial(e)
        return h

    def truncate(self, order: int) -> "Jet":
        if order > self.order:
            raise ValueError(f"cannot raise jet order {self.order} to {order}")
        if order == self.order:
            return self
        return Jet(self.coeffs[: n_coeffs(self.nvars, order)], self.nvars, order, self.support)

    def diff(self, var: int) -> "Jet":
        """Exact partial derivative; the result has order ``order - 1``."""
        if self.order == 0:
            raise ValueError("cannot differentiate an order-0 jet")
        src, fac = _diff_table(self.nvars, var, self.order)
        fac = fac.reshape((-1,) + (1,) * len(self.batch_shape))
        return Jet(self.coeffs[src] * fac, self.nvars, self.order - 1, self.support)

    def conj(self) -> "Jet":
        return Jet(np.conj(self.coeffs), self.nvars, self.order, self.support)

    @property
    def real(self) -> "Jet":
        return Jet(self.coeffs.real.copy(), self.nvars, self.order, self.support)

    @property
    def imag(self) -> "Jet":
        return Jet(self.coeffs.imag.copy(), self.nvars, self.order, self.support)

    # -- arithmetic ---------------------------------------------------------
    def _coerce(self, other) -> "Jet | None":
        if isinstance(other, Jet):
            if other.nvars != self.nvars:
                raise ValueError("jets over different numbers of variables")
            return other
        return None

    def _align(self, other: "Jet") -> tuple["Jet", "Jet"]:
        k = min(self.order, other.order)
        return self.truncate(k), other.truncate(k)

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            c = self.coeffs.astype(np.result_type(self.coeffs, np.asarray(other)), copy=True)
            c[0] = c[0] + other
            return Jet(c, self.nvars, self.order, self.support)
        a, b = self._align(o)
        return Jet(a.coeffs + b.coeffs, self.nvars, a.order, a.support | b.support)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.coeffs, self.nvars, self.order, self.support)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            other = np.asarray(other)
            return Jet(self.coeffs * other, self.nvars, self.order, self.support)
        a, b = self._align(o)
        return Jet(_mul_coeffs(a, b), self.nvars, a.order, a.support | b.support)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return Jet(self.coeffs / np.asarray(other), self.nvars, self.order, self.support)
        return self * o.reciprocal()

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, exponent):
        if isinstance(exponent, (int, np.integer)) and exponent >= 0:
            return _int_power(self, int(exponent))
        return _compose(self, _power_series(float(exponent)))

    def reciprocal(self) -> "Jet":
        return _compose(self, _power_series(-1.0))

    def __repr__(self) -> str:
        return f"Jet(nvars={self.nvars}, order={self.order}, batch={self.batch_shape})"


@lru_cache(maxsize=None)
def _support_rows(nvars: int, support: int, order: int) -> np.ndarray:
    """Monomials of degree <= order built only from variables in ``support``."""
    mons = _monomials(nvars)
    return np.array(
        [i for i in range(n_coeffs(nvars, order)) if all(e == 0 or support >> v & 1 for v, e in enumerate(mons[i]))],
        dtype=np.intp,
    )


def _mul_coeffs(x: Jet, y: Jet) -> np.ndarray:
    nvars, order = x.nvars, x.order
    n = n_coeffs(nvars, order)
    a, b = x.coeffs, y.coeffs
    out = np.zeros((n,) + np.broadcast_shapes(a.shape[1:], b.shape[1:]), dtype=np.result_type(a, b))
    rows_a = _support_rows(nvars, x.support, order)
    rows_b = _support_rows(nvars, y.support, order)
    # loop over the sparser factor (univariate functions and seeds are common)
    if len(rows_b) < len(rows_a):
        a, b, rows_a, rows_b = b, a, rows_b, rows_a
    dense_b = len(rows_b) == n
    degs = _degrees(nvars)
    for i in rows_a:
        m = n_coeffs(nvars, order - degs[i])
        shift = _shift_table(nvars, i)
        if dense_b:
            out[shift[:m]] += a[i] * b[:m]
        else:
            js = rows_b[: np.searchsorted(rows_b, m)]
            out[shift[js]] += a[i] * b[js]
    return out


def _int_power(x: Jet, n: int) -> Jet:
    # binomial expansion around the base value; safe when the base value is zero
    c0 = x.value
    derivs = [math.comb(n, j) * c0 ** (n - j) if j <= n else np.zeros_like(c0) for j in range(x.order + 1)]
    return _horner(x, derivs)


def _power_series(a: float):
    def coeffs(c0, order):
        out = []
        binom = 1.0
        term = c0**a
        inv = 1.0 / c0
        for j in range(order + 1):
            out.append(binom * term)
            binom *= (a - j) / (j + 1)
            term = term * inv
        return out

    return coeffs


def _horner(x: Jet, taylor: list) -> Jet:
    """Evaluate sum_j taylor[j] * h**j with h the nilpotent part of ``x``."""
    h = Jet(x.coeffs.copy(), x.nvars, x.order, x.support)
    h.coeffs[0] = 0
    k = x.order
    result = Jet.constant(taylor[k], x.nvars, x.order, x.batch_shape)
    if k == 0:
        return result
    for j in range(k - 1, -1, -1):
        result = result * h
        t = np.asarray(taylor[j])
        if np.iscomplexobj(t) and not np.iscomplexobj(result.coeffs):
            result.coeffs = result.coeffs.astype(complex)
        result.coeffs[0] += t  # fresh product array, safe to update in place
    result.support = x.support
    return result


def _compose(x: Jet, series) -> Jet:
    return _horner(x, series(x.value, x.order))


def _unary(name: str, np_func, series):
    def func(x):
        if isinstance(x, Jet):
            return _compose(x, series)
        return np_func(x)

    func.__name__ = name
    func.__doc__ = f"Jet-aware ``{name}``; falls back to numpy for plain values."
    return func


def _sin_series(c0, order):
    s, c = np.sin(c0), np.cos(c0)
    cycle = (s, c, -s, -c)
    return [cycle[j % 4] / math.factorial(j) for j in range(order + 1)]


def _cos_series(c0, order):
    s, c = np.sin(c0), np.cos(c0)
    cycle = (c, -s, -c, s)
    return [cycle[j % 4] / math.factorial(j) for j in range(order + 1)]


def _exp_series(c0, order):
    e = np.exp(c0)
    return [e / math.factorial(j) for j in range(order + 1)]


def _log_series(c0, order):
    out = [np.log(c0)]
    for j in range(1, order + 1):
        out.append((-1) ** (j + 1) / (j * c0**j))
    return out


sin = _unary("sin", np.sin, _sin_series)
cos = _unary("cos", np.cos, _cos_series)
exp = _unary("exp", np.exp, _exp_series)
log = _unary("log", np.log, _log_series)
sqrt = _unary("sqrt", np.sqrt, _power_series(0.5))


def cot(x):
    return cos(x) / sin(x)


def csc(x):
    return 1.0 / sin(x)


def as_jet(value, nvars: int, order: int, batch_shape=()) -> Jet:
    """Promote constants returned by field expressions to jets."""
    if isinstance(value, Jet):
        return value
    return Jet.constant(value, nvars, order, batch_shape)
