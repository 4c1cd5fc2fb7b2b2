"""
Fractal Lq Toolkit - Exact Reals
Version: 1.0.0

Real parameters arrive as text ("1/3", "0.7", "(sqrt(5)-1)/2", "sqrt(2)").
Rationals are kept as Fractions; real algebraic numbers become generators
of a number field whose elements are exact coordinate vectors in the power
basis, so coincidences such as x^2 + x - 1 = 0 are decided without rounding.
"""

from dataclasses import dataclass, field as dataclass_field
from fractions import Fraction
from functools import lru_cache
from typing import Optional, Tuple, Union

import gmpy2
import sympy

from utils.errors import ArgumentError

WORK_PRECISION = 256
MAX_FIELD_DEGREE = 12

Rational = Union[int, Fraction]

# Names accepted wherever a real parameter is read
NAMED_REALS = {
    'sqrt2': 'sqrt(2)',
    'sqrt5': 'sqrt(5)',
    'golden': '(sqrt(5)-1)/2',
}


def to_mpfr(value, precision: int = WORK_PRECISION):
    """Round a rational (or FieldElement) to an mpfr at the given precision"""
    if isinstance(value, FieldElement):
        return value.to_mpfr(precision)
    value = Fraction(value)
    with gmpy2.context(precision=precision):
        return gmpy2.mpfr(gmpy2.mpq(value.numerator, value.denominator))


class NumberField:
    """Q(theta) for a real algebraic theta"""

    def __init__(self, expr):
        x = sympy.Symbol('x')
        poly = sympy.Poly(sympy.minimal_polynomial(expr, x), x)
        coeffs = [Fraction(int(sympy.Rational(c).p), int(sympy.Rational(c).q))
                  for c in reversed(poly.all_coeffs())]
        lead = coeffs[-1]
        # monic, lowest degree first
        self.minpoly: Tuple[Fraction, ...] = tuple(c / lead for c in coeffs)
        self.degree = len(self.minpoly) - 1
        self.expr = expr
        self._theta_text = str(sympy.N(expr, WORK_PRECISION // 3 + 10))
        self._power_cache = {}

    def __repr__(self):
        return f"NumberField({self.expr})"

    def theta_powers(self, precision: int):
        """theta^0 .. theta^(d-1) as mpfr values"""
        cached = self._power_cache.get(precision)
        if cached is None:
            with gmpy2.context(precision=precision + 16):
                theta = gmpy2.mpfr(self._theta_text)
                cached = [gmpy2.mpfr(1)]
                for _ in range(1, self.degree):
                    cached.append(cached[-1] * theta)
            self._power_cache[precision] = cached
        return cached

    def element(self, coords) -> 'FieldElement':
        coords = tuple(Fraction(c) for c in coords)
        if len(coords) < self.degree:
            coords = coords + (Fraction(0),) * (self.degree - len(coords))
        return FieldElement(self, coords)

    def rational(self, value: Rational) -> 'FieldElement':
        return self.element((Fraction(value),))

    def generator(self) -> 'FieldElement':
        if self.degree == 1:
            return self.rational(-self.minpoly[0])
        return self.element((0, 1))

    def multiply(self, a: Tuple[Fraction, ...], b: Tuple[Fraction, ...]) -> Tuple[Fraction, ...]:
        d = self.degree
        prod = [Fraction(0)] * (2 * d - 1)
        for i, ai in enumerate(a):
            if ai:
                for j, bj in enumerate(b):
                    if bj:
                        prod[i + j] += ai * bj
        # reduce with theta^d = -sum(minpoly[i] * theta^i)
        for k in range(2 * d - 2, d - 1, -1):
            c = prod[k]
            if c:
                for i in range(d):
                    prod[k - d + i] -= c * self.minpoly[i]
                prod[k] = Fraction(0)
        return tuple(prod[:d])


class FieldElement:
    """Exact element of a NumberField"""

    __slots__ = ('field', 'coords')

    def __init__(self, field: NumberField, coords: Tuple[Fraction, ...]):
        self.field = field
        self.coords = coords

    def _coerce(self, other) -> Optional['FieldElement']:
        if isinstance(other, FieldElement):
            if other.field is not self.field:
                raise ArgumentError("cannot mix elements of different number fields")
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.rational(other)
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return FieldElement(self.field, tuple(a + b for a, b in zip(self.coords, other.coords)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, tuple(-a for a in self.coords))

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return FieldElement(self.field, tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return FieldElement(self.field, tuple(a * other for a in self.coords))
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return FieldElement(self.field, self.field.multiply(self.coords, other.coords))

    __rmul__ = __mul__

    def __pow__(self, exponent: int):
        if exponent < 0:
            raise ArgumentError("negative powers are not supported")
        result = self.field.rational(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def is_zero(self) -> bool:
        return not any(self.coords)

    def is_rational(self) -> bool:
        return not any(self.coords[1:])

    def __eq__(self, other):
        other = self._coerce(other) if not isinstance(other, float) else None
        if other is None:
            return NotImplemented
        return self.coords == other.coords

    def __hash__(self):
        if self.is_rational():
            return hash(self.coords[0])
        return hash(('field-element', self.coords))

    def to_mpfr(self, precision: int = WORK_PRECISION):
        powers = self.field.theta_powers(precision)
        with gmpy2.context(precision=precision):
            total = gmpy2.mpfr(0)
            for c, p in zip(self.coords, powers):
                if c:
                    total += gmpy2.mpq(c.numerator, c.denominator) * p
            return total

    def __float__(self):
        if self.is_rational():
            return float(self.coords[0])
        return float(self.to_mpfr())

    def sign(self) -> int:
        if self.is_zero():
            return 0
        value = self.to_mpfr()
        if value == 0:
            value = self.to_mpfr(4 * WORK_PRECISION)
        return 1 if value > 0 else -1

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __lt__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() < 0

    def __le__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() <= 0

    def __gt__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() > 0

    def __ge__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return (self - other).sign() >= 0

    def __repr__(self):
        return f"FieldElement({[str(c) for c in self.coords]} over {self.field.expr})"


@dataclass(frozen=True)
class ExactReal:
    """A parsed real parameter with its exact representation when one exists"""

    text: str
    value: float
    rational: Optional[Fraction] = None
    field: Optional[NumberField] = dataclass_field(default=None, compare=False)

    @property
    def is_rational(self) -> bool:
        return self.rational is not None

    @property
    def is_algebraic(self) -> bool:
        return self.field is not None

    @property
    def is_exact(self) -> bool:
        return self.is_rational or self.is_algebraic

    def exact(self):
        """Fraction, FieldElement, or None for float-only values"""
        if self.rational is not None:
            return self.rational
        if self.field is not None:
            return self.field.generator()
        return None

    def __float__(self):
        return self.value


@lru_cache(maxsize=256)
def _parse_text(text: str) -> ExactReal:
    if text in NAMED_REALS:
        parsed = _parse_text(NAMED_REALS[text])
        return ExactReal(text=text, value=parsed.value, rational=parsed.rational, field=parsed.field)
    try:
        rational = Fraction(text)
        return ExactReal(text=text, value=float(rational), rational=rational)
    except (ValueError, ZeroDivisionError):
        pass

    try:
        expr = sympy.sympify(text)
    except (sympy.SympifyError, SyntaxError, TypeError) as e:
        raise ArgumentError(f"cannot parse real number {text!r}: {e}")

    if expr.is_Rational:
        rational = Fraction(int(expr.p), int(expr.q))
        return ExactReal(text=text, value=float(rational), rational=rational)
    if expr.is_real is not True:
        raise ArgumentError(f"{text!r} is not a real number")

    value = float(sympy.N(expr, 30))
    if expr.is_algebraic:
        number_field = NumberField(expr)
        if number_field.degree <= MAX_FIELD_DEGREE:
            return ExactReal(text=text, value=value, field=number_field)
    return ExactReal(text=text, value=value)


def parse_real(value) -> ExactReal:
    """Parse an int, Fraction, float or expression text into an ExactReal"""
    if isinstance(value, ExactReal):
        return value
    if isinstance(value, bool):
        raise ArgumentError("boolean is not a real number")
    if isinstance(value, (int, Fraction)):
        rational = Fraction(value)
        return ExactReal(text=str(rational), value=float(rational), rational=rational)
    if isinstance(value, float):
        # the decimal as written, not the binary expansion of the float
        return _parse_text(repr(value))
    if isinstance(value, str):
        return _parse_text(value.strip())
    raise ArgumentError(f"unsupported real number {value!r}")


def is_exact_number(value) -> bool:
    return isinstance(value, (int, Fraction, FieldElement))
