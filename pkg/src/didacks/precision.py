"""Working-precision backends.

Two backends share one arithmetic contract (``+ - * /``, ``sqrt``,
comparisons, conversion to and from float64, machine epsilon):

* ``double``   -- plain float64 numpy arrays.
* ``extended`` -- :class:`DoubleDouble`, a vectorized unevaluated sum of
  two float64 arrays giving roughly 31-32 significant digits.

Numerical code in this package is written against the operators only, so
the same routine runs in either precision (and on dual numbers).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Any

import numpy as np

_SPLITTER = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _quick_two_sum(a, b):
    s = a + b
    err = b - (s - a)
    return s, err


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    p = a * b
    ahi, alo = _split(a)
    bhi, blo = _split(b)
    err = ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo
    return p, err


class DoubleDouble:
    """Array of double-double numbers, value = hi + lo with |lo| <= ulp(hi)/2.

    Behaves like a small subset of a numpy array: elementwise arithmetic
    with broadcasting, indexing, slicing assignment, ``sum`` and ``T``.
    A 0-d instance doubles as the scalar type.
    """

    __slots__ = ("hi", "lo")
    __array_ufunc__ = None  # ndarray operands defer to our reflected ops

    def __init__(self, hi, lo=None):
        hi = np.asarray(hi, dtype=np.float64)
        if lo is None:
            lo = np.zeros_like(hi)
        else:
            lo = np.asarray(lo, dtype=np.float64)
        self.hi = hi
        self.lo = lo

    # -- construction -----------------------------------------------------
    @classmethod
    def from_fraction(cls, value: Fraction | int) -> "DoubleDouble":
        """Exact rational rounded to double-double."""
        value = Fraction(value)
        hi = float(value)
        lo = float(value - Fraction(hi))
        return cls(hi, lo)

    @staticmethod
    def _coerce(other) -> "DoubleDouble":
        if isinstance(other, DoubleDouble):
            return other
        if isinstance(other, Fraction):
            return DoubleDouble.from_fraction(other)
        return DoubleDouble(other)

    # -- numpy-ish surface ------------------------------------------------
    @property
    def shape(self):
        return self.hi.shape

    @property
    def ndim(self):
        return self.hi.ndim

    @property
    def size(self):
        return self.hi.size

    def __len__(self):
        return len(self.hi)

    @property
    def T(self) -> "DoubleDouble":
        return DoubleDouble(self.hi.T, self.lo.T)

    def __getitem__(self, idx) -> "DoubleDouble":
        return DoubleDouble(self.hi[idx], self.lo[idx])

    def __setitem__(self, idx, value) -> None:
        value = self._coerce(value)
        self.hi[idx] = value.hi
        self.lo[idx] = value.lo

    def copy(self) -> "DoubleDouble":
        return DoubleDouble(self.hi.copy(), self.lo.copy())

    def reshape(self, *shape) -> "DoubleDouble":
        return DoubleDouble(self.hi.reshape(*shape), self.lo.reshape(*shape))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __float__(self) -> float:
        return float(self.hi + self.lo)

    def to_float(self) -> np.ndarray:
        return self.hi + self.lo

    def __repr__(self) -> str:
        return f"DoubleDouble(hi={self.hi!r}, lo={self.lo!r})"

    # -- arithmetic -------------------------------------------------------
    def __neg__(self) -> "DoubleDouble":
        return DoubleDouble(-self.hi, -self.lo)

    def __pos__(self) -> "DoubleDouble":
        return self

    def __abs__(self) -> "DoubleDouble":
        neg = self.hi < 0
        return DoubleDouble(np.where(neg, -self.hi, self.hi), np.where(neg, -self.lo, self.lo))

    def __add__(self, other) -> "DoubleDouble":
        if not isinstance(other, DoubleDouble):
            if _is_foreign(other):
                return NotImplemented
            other = self._coerce(other)
        s, e = _two_sum(self.hi, other.hi)
        t, f = _two_sum(self.lo, other.lo)
        e = e + t
        s, e = _quick_two_sum(s, e)
        e = e + f
        s, e = _quick_two_sum(s, e)
        return DoubleDouble(s, e)

    __radd__ = __add__

    def __sub__(self, other) -> "DoubleDouble":
        if not isinstance(other, DoubleDouble):
            if _is_foreign(other):
                return NotImplemented
            other = self._coerce(other)
        return self + (-other)

    def __rsub__(self, other) -> "DoubleDouble":
        if _is_foreign(other):
            return NotImplemented
        return self._coerce(other) + (-self)

    def __mul__(self, other) -> "DoubleDouble":
        if not isinstance(other, DoubleDouble):
            if _is_foreign(other):
                return NotImplemented
            other = self._coerce(other)
        p, e = _two_prod(self.hi, other.hi)
        e = e + (self.hi * other.lo + self.lo * other.hi)
        p, e = _quick_two_sum(p, e)
        return DoubleDouble(p, e)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "DoubleDouble":
        if not isinstance(other, DoubleDouble):
            if _is_foreign(other):
                return NotImplemented
            other = self._coerce(other)
        with np.errstate(divide="ignore", invalid="ignore"):
            q1 = self.hi / other.hi
            r = self - other * DoubleDouble(q1)
            q2 = r.hi / other.hi
            r = r - other * DoubleDouble(q2)
            q3 = r.hi / other.hi
        q1, q2 = _quick_two_sum(q1, q2)
        return DoubleDouble(q1, q2) + DoubleDouble(q3)

    def __rtruediv__(self, other) -> "DoubleDouble":
        if _is_foreign(other):
            return NotImplemented
        return self._coerce(other) / self

    def __pow__(self, n: int) -> "DoubleDouble":
        if not isinstance(n, (int, np.integer)) or n < 0:
            return NotImplemented
        result = DoubleDouble(np.ones_like(self.hi))
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def sqrt(self) -> "DoubleDouble":
        hi = self.hi
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.sqrt(hi)
            y = DoubleDouble(s)
            # one Newton step doubles the ~53 correct bits
            y = y + (self - y * y) / (y * 2.0)
        zero = hi == 0.0
        if np.any(zero):
            y = DoubleDouble(np.where(zero, 0.0, y.hi), np.where(zero, 0.0, y.lo))
        return y

    # -- comparisons (lexicographic on hi, lo) ------------------------------
    def _cmp_parts(self, other):
        other = self._coerce(other)
        return self.hi, self.lo, other.hi, other.lo

    def __lt__(self, other):
        a, b, c, d = self._cmp_parts(other)
        return (a < c) | ((a == c) & (b < d))

    def __le__(self, other):
        a, b, c, d = self._cmp_parts(other)
        return (a < c) | ((a == c) & (b <= d))

    def __gt__(self, other):
        a, b, c, d = self._cmp_parts(other)
        return (a > c) | ((a == c) & (b > d))

    def __ge__(self, other):
        a, b, c, d = self._cmp_parts(other)
        return (a > c) | ((a == c) & (b >= d))

    def __eq__(self, other):
        if _is_foreign(other):
            return NotImplemented
        a, b, c, d = self._cmp_parts(other)
        return (a == c) & (b == d)

    __hash__ = None

    # -- reductions ---------------------------------------------------------
    def sum(self, axis=None) -> "DoubleDouble":
        """Pairwise (tree) summation along ``axis``; all axes when None."""
        if axis is None:
            return self.reshape(-1).sum(axis=0)
        x = DoubleDouble(np.moveaxis(self.hi, axis, 0), np.moveaxis(self.lo, axis, 0))
        if x.shape[0] == 0:
            return DoubleDouble(np.zeros(x.shape[1:]))
        while x.shape[0] > 1:
            n = x.shape[0]
            half = n // 2
            head = x[:half] + x[half : 2 * half]
            if n % 2:
                head = DoubleDouble(
                    np.concatenate([head.hi, x.hi[-1:]]), np.concatenate([head.lo, x.lo[-1:]])
                )
            x = head
        return x[0]


def _is_foreign(other) -> bool:
    """True for operand types that must take precedence (e.g. dual numbers)."""
    return hasattr(other, "_is_dual")


def dd_array(values) -> DoubleDouble:
    """Promote float64 data (exactly) to a :class:`DoubleDouble` array."""
    if isinstance(values, DoubleDouble):
        return values.copy()
    return DoubleDouble(np.array(values, dtype=np.float64))


def sqrt(x):
    """Precision-generic square root."""
    if hasattr(x, "sqrt"):
        return x.sqrt()
    return np.sqrt(x)


def to_float(x):
    """Round any backend value (or dual number's value part) to float64."""
    if isinstance(x, DoubleDouble):
        out = x.to_float()
        return float(out) if out.ndim == 0 else out
    if isinstance(x, np.ndarray):
        return x.astype(np.float64)
    return float(x)


class Backend:
    """One working precision: array constructors plus its epsilon."""

    def __init__(self, name: str, eps: float, digits: int):
        self.name = name
        self.eps = eps
        self.digits = digits

    def asarray(self, values) -> Any:
        raise NotImplementedError

    def zeros(self, shape) -> Any:
        return self.asarray(np.zeros(shape))

    def to_float(self, x):
        return to_float(x)

    def __repr__(self) -> str:
        return f"Backend({self.name!r}, digits={self.digits})"


class _DoubleBackend(Backend):
    def asarray(self, values):
        if isinstance(values, DoubleDouble):
            return values.to_float()
        return np.array(values, dtype=np.float64)


class _ExtendedBackend(Backend):
    def asarray(self, values):
        return dd_array(values)


DOUBLE = _DoubleBackend("double", eps=float(np.finfo(np.float64).eps), digits=15)
EXTENDED = _ExtendedBackend("extended", eps=2.0**-104, digits=31)

_BACKENDS = {"double": DOUBLE, "extended": EXTENDED}


def get_backend(name: str | Backend) -> Backend:
    if isinstance(name, Backend):
        return name
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown precision backend {name!r}; expected one of {sorted(_BACKENDS)}") from None
