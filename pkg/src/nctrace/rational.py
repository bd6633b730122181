"""Exact complex-rational scalars for the symbolic layer.

Symbolic identities are decided by canonical-form equality, so coefficients
must never round.  A coefficient is a pair of ``fractions.Fraction`` values
(real and imaginary part).
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (Rational, str)):
        return Fraction(x)
    if isinstance(x, float):
        # floats only appear from user input; keep them exact as given
        return Fraction(x).limit_denominator(10**12)
    raise TypeError(f"cannot build an exact rational from {x!r}")


class QC:
    """A complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", _as_fraction(re))
        object.__setattr__(self, "im", _as_fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("QC is immutable")

    @classmethod
    def from_value(cls, v) -> "QC":
        if isinstance(v, QC):
            return v
        if isinstance(v, complex):
            return cls(_as_fraction(v.real), _as_fraction(v.imag))
        return cls(v, 0)

    def __add__(self, other):
        other = QC.from_value(other)
        return QC(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __sub__(self, other):
        other = QC.from_value(other)
        return QC(self.re - other.re, self.im - other.im)

    def __rsub__(self, other):
        return QC.from_value(other) - self

    def __mul__(self, other):
        other = QC.from_value(other)
        return QC(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = QC.from_value(other)
        d = other.re * other.re + other.im * other.im
        if d == 0:
            raise ZeroDivisionError("division by zero coefficient")
        return QC(
            (self.re * other.re + self.im * other.im) / d,
            (self.im * other.re - self.re * other.im) / d,
        )

    def __neg__(self):
        return QC(-self.re, -self.im)

    def conjugate(self) -> "QC":
        return QC(self.re, -self.im)

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __bool__(self):
        return not self.is_zero()

    def __eq__(self, other):
        if not isinstance(other, (QC, int, Fraction, complex)):
            return NotImplemented
        other = QC.from_value(other)
        return self.re == other.re and self.im == other.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"QC({self.re}, {self.im})"


QC_ZERO = QC(0, 0)
QC_ONE = QC(1, 0)
QC_I = QC(0, 1)
