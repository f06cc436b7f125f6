"""Exact Laurent polynomials in N with Gaussian-rational coefficients."""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, Iterable, Mapping, Tuple, Union

GaussianRational = Tuple[Fraction, Fraction]
Scalar = Union[int, Fraction, "Coefficient"]

_ZERO = Fraction(0)


def _gauss(value) -> GaussianRational:
    if isinstance(value, tuple):
        return Fraction(value[0]), Fraction(value[1])
    if isinstance(value, complex):
        raise TypeError("floating complex values are not exact")
    return Fraction(value), _ZERO


class Coefficient:
    """Immutable element of Q(i)[N, 1/N].

    Terms are stored as ``{power: (re, im)}`` with no zero entries, so the
    zero coefficient has an empty term map.
    """

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[int, object] | None = None):
        clean: Dict[int, GaussianRational] = {}
        for power, value in (terms or {}).items():
            re, im = _gauss(value)
            if re or im:
                clean[int(power)] = (re, im)
        self._terms = clean
        self._hash = None

    # -- constructors -------------------------------------------------
    @classmethod
    def const(cls, re=0, im=0) -> "Coefficient":
        return cls({0: (re, im)})

    @classmethod
    def monomial(cls, power: int, re=1, im=0) -> "Coefficient":
        return cls({power: (re, im)})

    @classmethod
    def coerce(cls, value: Scalar) -> "Coefficient":
        if isinstance(value, Coefficient):
            return value
        return cls.const(value)

    # -- accessors ------------------------------------------------------
    @property
    def terms(self) -> Dict[int, GaussianRational]:
        return dict(self._terms)

    def items(self) -> Iterable[Tuple[int, GaussianRational]]:
        return sorted(self._terms.items(), reverse=True)

    def is_zero(self) -> bool:
        return not self._terms

    def is_real(self) -> bool:
        return all(im == 0 for _, im in self._terms.values())

    def is_unit_monomial(self) -> bool:
        return len(self._terms) == 1

    def as_fraction(self) -> Fraction | None:
        """The value as a rational number if constant and real, else None."""
        if not self._terms:
            return Fraction(0)
        if set(self._terms) == {0} and self._terms[0][1] == 0:
            return self._terms[0][0]
        return None

    def conjugate(self) -> "Coefficient":
        return Coefficient({p: (re, -im) for p, (re, im) in self._terms.items()})

    # -- arithmetic -----------------------------------------------------
    def __add__(self, other: Scalar) -> "Coefficient":
        other = Coefficient.coerce(other)
        out = dict(self._terms)
        for p, (re, im) in other._terms.items():
            r0, i0 = out.get(p, (_ZERO, _ZERO))
            out[p] = (r0 + re, i0 + im)
        return Coefficient(out)

    __radd__ = __add__

    def __neg__(self) -> "Coefficient":
        return Coefficient({p: (-re, -im) for p, (re, im) in self._terms.items()})

    def __sub__(self, other: Scalar) -> "Coefficient":
        return self + (-Coefficient.coerce(other))

    def __rsub__(self, other: Scalar) -> "Coefficient":
        return Coefficient.coerce(other) - self

    def __mul__(self, other: Scalar) -> "Coefficient":
        other = Coefficient.coerce(other)
        out: Dict[int, list] = {}
        for p1, (a, b) in self._terms.items():
            for p2, (c, d) in other._terms.items():
                acc = out.setdefault(p1 + p2, [_ZERO, _ZERO])
                acc[0] += a * c - b * d
                acc[1] += a * d + b * c
        return Coefficient({p: tuple(v) for p, v in out.items()})

    __rmul__ = __mul__

    def __truediv__(self, other: Scalar) -> "Coefficient":
        return self * Coefficient.coerce(other).inverse()

    def __rtruediv__(self, other: Scalar) -> "Coefficient":
        return Coefficient.coerce(other) * self.inverse()

    def inverse(self) -> "Coefficient":
        """Inverse of a single-term coefficient (the only units of the ring)."""
        if len(self._terms) != 1:
            raise ZeroDivisionError(f"{self!r} is not a unit in the Laurent ring")
        (p, (a, b)), = self._terms.items()
        norm = a * a + b * b
        return Coefficient({-p: (a / norm, -b / norm)})

    def __pow__(self, exponent: int) -> "Coefficient":
        if exponent < 0:
            return self.inverse() ** (-exponent)
        result = Coefficient.const(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    # -- evaluation -----------------------------------------------------
    def evaluate(self, n: int) -> complex:
        """Substitute N exactly, then convert to a floating complex number."""
        n = Fraction(n)
        re = sum((r * n ** p for p, (r, _) in self._terms.items()), _ZERO)
        im = sum((i * n ** p for p, (_, i) in self._terms.items()), _ZERO)
        return complex(float(re), float(im))

    # -- comparison -----------------------------------------------------
    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Coefficient.const(other)
        if not isinstance(other, Coefficient):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __repr__(self) -> str:
        return f"Coefficient({format_coefficient(self)})"


def _format_rational(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


def _format_monomial(power: int, value: Fraction, imaginary: bool, first: bool) -> str:
    sign = "-" if value < 0 else "+"
    mag = abs(value)
    npow = "N" if abs(power) == 1 else f"N^{abs(power)}"
    if power >= 0:
        factors = []
        if mag != 1 or (power == 0 and not imaginary):
            factors.append(_format_rational(mag))
        if imaginary:
            factors.append("I")
        if power > 0:
            factors.append(npow)
        body = "*".join(factors)
    else:
        num = str(mag.numerator)
        if imaginary:
            num = "I" if mag.numerator == 1 else f"{num}*I"
        den = npow if mag.denominator == 1 else f"({mag.denominator}*{npow})"
        body = f"{num}/{den}"
    if first:
        return body if sign == "+" else f"-{body}"
    return f" {sign} {body}"


def format_coefficient(c: Coefficient) -> str:
    """Render as a reparseable Laurent polynomial, highest power first."""
    pieces = []
    for power, (re, im) in c.items():
        if re:
            pieces.append((power, re, False))
        if im:
            pieces.append((power, im, True))
    if not pieces:
        return "0"
    return "".join(_format_monomial(p, v, imag, i == 0) for i, (p, v, imag) in enumerate(pieces))


ONE = Coefficient.const(1)
ZERO = Coefficient()
I = Coefficient.const(0, 1)
N = Coefficient.monomial(1)
ADJOINT_DIM = N * N - 1
