"""Forward-mode dual numbers.

``Dual(value, deriv, level)`` carries one infinitesimal.  Nesting duals of
different ``level`` gives independent infinitesimals (a hyper-dual number),
which is how mixed second derivatives such as dipole-dipole Gram entries
are obtained.  Components may be floats, numpy arrays or
:class:`~didacks.precision.DoubleDouble` arrays.
"""

from __future__ import annotations

from . import precision


class Dual:
    __slots__ = ("value", "deriv", "level")
    __array_ufunc__ = None
    _is_dual = True

    def __init__(self, value, deriv=0.0, level: int = 1):
        self.value = value
        self.deriv = deriv
        self.level = level

    def _outranks(self, other) -> bool:
        # operand with the higher level is the outer one; the other is a constant to it
        return isinstance(other, Dual) and other.level > self.level

    def __neg__(self):
        return Dual(-self.value, -self.deriv, self.level)

    def __pos__(self):
        return self

    def __add__(self, other):
        if self._outranks(other):
            return other.__radd__(self)
        if isinstance(other, Dual) and other.level == self.level:
            return Dual(self.value + other.value, self.deriv + other.deriv, self.level)
        return Dual(self.value + other, self.deriv, self.level)

    def __radd__(self, other):
        return Dual(other + self.value, self.deriv, self.level)

    def __sub__(self, other):
        if self._outranks(other):
            return other.__rsub__(self)
        if isinstance(other, Dual) and other.level == self.level:
            return Dual(self.value - other.value, self.deriv - other.deriv, self.level)
        return Dual(self.value - other, self.deriv, self.level)

    def __rsub__(self, other):
        return Dual(other - self.value, -self.deriv, self.level)

    def __mul__(self, other):
        if self._outranks(other):
            return other.__rmul__(self)
        if isinstance(other, Dual) and other.level == self.level:
            return Dual(
                self.value * other.value,
                self.deriv * other.value + self.value * other.deriv,
                self.level,
            )
        return Dual(self.value * other, self.deriv * other, self.level)

    def __rmul__(self, other):
        return Dual(other * self.value, other * self.deriv, self.level)

    def __truediv__(self, other):
        if self._outranks(other):
            return other.__rtruediv__(self)
        if isinstance(other, Dual) and other.level == self.level:
            q = self.value / other.value
            return Dual(q, (self.deriv - q * other.deriv) / other.value, self.level)
        return Dual(self.value / other, self.deriv / other, self.level)

    def __rtruediv__(self, other):
        q = other / self.value
        return Dual(q, -(q * self.deriv) / self.value, self.level)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            return NotImplemented
        if n == 0:
            return Dual(self.value * 0.0 + 1.0, self.deriv * 0.0, self.level)
        result = self
        for _ in range(n - 1):
            result = result * self
        return result

    def sqrt(self):
        s = precision.sqrt(self.value)
        return Dual(s, self.deriv / (s * 2.0), self.level)

    def __repr__(self) -> str:
        return f"Dual({self.value!r}, {self.deriv!r}, level={self.level})"


def value_of(x):
    """Strip every dual layer, leaving the plain value."""
    while isinstance(x, Dual):
        x = x.value
    return x


def deriv_of(x, level: int = 1):
    """Derivative part for the infinitesimal of ``level`` (0 when absent)."""
    if isinstance(x, Dual):
        if x.level == level:
            return x.deriv
        if x.level > level:
            return deriv_of(x.value, level)
    return 0.0


def seed(point, direction, level: int = 1):
    """Lift a 3-vector ``point`` to duals moving along ``direction``."""
    return tuple(Dual(p, d, level) for p, d in zip(point, direction))
