"""
Exact arithmetic substrate.

- ``Poly``: dense polynomials over the prime field F_p, backed by sympy's galoistools
  (coefficients stored high-to-low, the galoistools convention).
- ``SqrtQInt``: numbers a + b*sqrt(q) with arbitrary-precision integer parts.
- ``CycInt``: cyclotomic integers in Z[zeta_p] on the power basis 1, zeta, ..., zeta^(p-2).
- ``RationalSeries``: coefficient extraction from a quotient of polynomials.

Field elements of the base field are plain ints in [0, p).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import total_ordering
from itertools import product
from math import isqrt
from typing import Iterator, Sequence, Union

import mpmath
from sympy import isprime
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import (
    gf_add,
    gf_div,
    gf_factor,
    gf_from_int_poly,
    gf_gcd,
    gf_gcdex,
    gf_irreducible_p,
    gf_mul,
    gf_neg,
    gf_pow,
    gf_rem,
    gf_sub,
    gf_monic,
    gf_mul_ground,
    gf_eval,
)

from .errors import FfsnError

FqElem = int


def fp_inv(x: int, p: int) -> int:
    if x % p == 0:
        raise ZeroDivisionError(f"0 has no inverse mod {p}")
    return pow(x, -1, p)


# --------------------------------------------------------------------------- Poly

@dataclass(frozen=True)
class Poly:
    """Polynomial over F_p in the variable T. ``c`` is high-to-low, stripped."""

    c: tuple[int, ...]
    p: int

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(int(x) for x in gf_from_int_poly(list(self.c), self.p)))

    # construction
    @classmethod
    def from_low(cls, coeffs: Sequence[int], p: int) -> Poly:
        return cls(tuple(reversed(list(coeffs))), p)

    @classmethod
    def const(cls, a: int, p: int) -> Poly:
        return cls((a,), p)

    @classmethod
    def zero(cls, p: int) -> Poly:
        return cls((), p)

    @classmethod
    def one(cls, p: int) -> Poly:
        return cls((1,), p)

    @classmethod
    def T(cls, p: int) -> Poly:
        return cls((1, 0), p)

    @classmethod
    def monomial(cls, k: int, p: int, a: int = 1) -> Poly:
        return cls((a,) + (0,) * k, p)

    # inspection
    @property
    def degree(self) -> int:
        return len(self.c) - 1 if self.c else -1

    @property
    def lc(self) -> int:
        return self.c[0] if self.c else 0

    def is_zero(self) -> bool:
        return not self.c

    def is_monic(self) -> bool:
        return bool(self.c) and self.c[0] == 1

    def low(self) -> list[int]:
        """Coefficients low-to-high."""
        return list(reversed(self.c))

    def coeff(self, k: int) -> int:
        if k < 0 or k > self.degree:
            return 0
        return self.c[self.degree - k]

    def valuation_at_zero(self) -> int:
        low = self.low()
        for i, x in enumerate(low):
            if x:
                return i
        raise FfsnError("divisor-of-zero", "valuation of the zero polynomial")

    # arithmetic
    def _wrap(self, coeffs) -> Poly:
        return Poly(tuple(int(x) for x in coeffs), self.p)

    def _lift(self, other) -> Poly:
        if isinstance(other, Poly):
            return other
        return Poly.const(int(other) % self.p, self.p)

    def __add__(self, other) -> Poly:
        other = self._lift(other)
        return self._wrap(gf_add(list(self.c), list(other.c), self.p, ZZ))

    __radd__ = __add__

    def __sub__(self, other) -> Poly:
        other = self._lift(other)
        return self._wrap(gf_sub(list(self.c), list(other.c), self.p, ZZ))

    def __rsub__(self, other) -> Poly:
        return self._lift(other) - self

    def __neg__(self) -> Poly:
        return self._wrap(gf_neg(list(self.c), self.p, ZZ))

    def __mul__(self, other) -> Poly:
        if isinstance(other, Poly):
            return self._wrap(gf_mul(list(self.c), list(other.c), self.p, ZZ))
        return self._wrap(gf_mul_ground(list(self.c), int(other) % self.p, self.p, ZZ))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> Poly:
        return self._wrap(gf_pow(list(self.c), k, self.p, ZZ))

    def __divmod__(self, other: Poly) -> tuple[Poly, Poly]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        q, r = gf_div(list(self.c), list(other.c), self.p, ZZ)
        return self._wrap(q), self._wrap(r)

    def __floordiv__(self, other: Poly) -> Poly:
        return divmod(self, other)[0]

    def __mod__(self, other: Poly) -> Poly:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        return self._wrap(gf_rem(list(self.c), list(other.c), self.p, ZZ))

    def monic(self) -> Poly:
        if self.is_zero():
            return self
        return self._wrap(gf_monic(list(self.c), self.p, ZZ)[1])

    def gcd(self, other: Poly) -> Poly:
        return self._wrap(gf_gcd(list(self.c), list(other.c), self.p, ZZ))

    def inverse_mod(self, modulus: Poly) -> Poly:
        """Inverse of self modulo ``modulus``; self must be coprime to it."""
        s, _, g = gf_gcdex(list(self.c), list(modulus.c), self.p, ZZ)
        if len(g) != 1:
            raise ZeroDivisionError("not invertible modulo the given polynomial")
        return self._wrap(s) % modulus

    def reverse(self, width: int | None = None) -> Poly:
        """T^width * self(1/T); ``width`` defaults to the degree."""
        width = self.degree if width is None else width
        low = self.low() + [0] * max(0, width + 1 - len(self.c))
        return Poly(tuple(low[: width + 1]), self.p)

    def __call__(self, x: int) -> int:
        return int(gf_eval(list(self.c), x % self.p, self.p, ZZ))

    def is_irreducible(self) -> bool:
        return self.degree >= 1 and bool(gf_irreducible_p(list(self.monic().c), self.p, ZZ))

    def sort_key(self) -> tuple:
        return (self.degree, self.low()[::-1])

    def __str__(self) -> str:
        if self.is_zero():
            return "0"
        terms = []
        for k in range(self.degree, -1, -1):
            a = self.coeff(k)
            if not a:
                continue
            mono = "" if k == 0 else ("T" if k == 1 else f"T^{k}")
            if k == 0:
                terms.append(str(a))
            elif a == 1:
                terms.append(mono)
            else:
                terms.append(f"{a}*{mono}")
        return "+".join(terms)

    def __repr__(self) -> str:
        return f"Poly({self}, p={self.p})"


def monic_polys(d: int, p: int) -> Iterator[Poly]:
    """All monic polynomials of degree d, ordered by their low coefficients as base-p digits."""
    for digits in product(range(p), repeat=d):
        # product() varies the last digit fastest; that digit is the constant term
        yield Poly.from_low(list(digits[::-1]) + [1], p)


def poly_code(f: Poly) -> int:
    """Index of a monic polynomial among ``monic_polys(deg f)``: low coefficients as base-p digits."""
    code = 0
    for k in range(f.degree - 1, -1, -1):
        code = code * f.p + f.coeff(k)
    return code


def poly_factor(f: Poly) -> tuple[int, list[tuple[Poly, int]]]:
    """Factor f into (leading coefficient, [(monic irreducible, multiplicity), ...])."""
    if f.is_zero():
        raise FfsnError("factor-of-zero", "cannot factor the zero polynomial")
    lc, factors = gf_factor(list(f.c), f.p, ZZ)
    out = sorted(((Poly(tuple(int(x) for x in g), f.p), int(k)) for g, k in factors),
                 key=lambda t: t[0].sort_key())
    check = Poly.const(int(lc), f.p)
    for g, k in out:
        if not g.is_irreducible():
            raise FfsnError("factor-failed", f"factor {g} of {f} is reducible")
        check = check * g ** k
    if check != f:
        raise FfsnError("factor-failed", f"factorization of {f} does not multiply back")
    return int(lc), out


# ----------------------------------------------------------------------- SqrtQInt

@total_ordering
class SqrtQInt:
    """a + b*sqrt(q) with integer a, b and q > 0; a perfect-square q is allowed."""

    __slots__ = ("a", "b", "q")

    def __init__(self, a: int, b: int, q: int):
        self.a = int(a)
        self.b = int(b)
        self.q = int(q)

    @classmethod
    def sqrt_q(cls, q: int) -> SqrtQInt:
        return cls(0, 1, q)

    def _lift(self, other) -> SqrtQInt:
        if isinstance(other, SqrtQInt):
            if other.q != self.q:
                raise FfsnError("size-mismatch", f"sqrt({self.q}) vs sqrt({other.q})")
            return other
        if isinstance(other, int):
            return SqrtQInt(other, 0, self.q)
        return NotImplemented

    def __add__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return SqrtQInt(self.a + other.a, self.b + other.b, self.q)

    __radd__ = __add__

    def __neg__(self):
        return SqrtQInt(-self.a, -self.b, self.q)

    def __sub__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._lift(other)
        if other is NotImplemented:
            return other
        return SqrtQInt(self.a * other.a + self.b * other.b * self.q,
                        self.a * other.b + self.b * other.a, self.q)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        out = SqrtQInt(1, 0, self.q)
        base = self
        while k > 0:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sign(self) -> int:
        """Exact sign of a + b*sqrt(q)."""
        a, b = self.a, self.b
        if a >= 0 and b >= 0:
            return 0 if a == 0 and b == 0 else 1
        if a <= 0 and b <= 0:
            return -1
        # opposite signs: compare a^2 with q b^2
        lhs, rhs = a * a, self.q * b * b
        if lhs == rhs:
            return 0
        return (1 if a > 0 else -1) if lhs > rhs else (1 if b > 0 else -1)

    def __eq__(self, other) -> bool:
        other = self._lift(other)
        if other is NotImplemented:
            return False
        return (self - other).sign() == 0

    def __lt__(self, other) -> bool:
        other = self._lift(other)
        if other is NotImplemented:
            return NotImplemented
        return (self - other).sign() < 0

    def __hash__(self) -> int:
        r = isqrt(self.q)
        if r * r == self.q:
            # sqrt(q) is an integer: a + b*sqrt(q) collapses to one int
            return hash((self.a + self.b * r, 0, self.q))
        return hash((self.a, self.b, self.q))

    def to_mpf(self, dps: int = 50):
        with mpmath.workdps(dps):
            return mpmath.mpf(self.a) + mpmath.mpf(self.b) * mpmath.sqrt(self.q)

    def __float__(self) -> float:
        return float(self.to_mpf())

    def __str__(self) -> str:
        return f"{self.a}{self.b:+d}*sqrt({self.q})"

    def __repr__(self) -> str:
        return f"SqrtQInt({self.a}, {self.b}, q={self.q})"


# ------------------------------------------------------------------------ CycInt

class CycInt:
    """Element of Z[zeta_p] as coordinates on 1, zeta, ..., zeta^(p-2)."""

    __slots__ = ("coords", "p")

    def __init__(self, coords: Sequence[int], p: int):
        if len(coords) != p - 1:
            raise FfsnError("size-mismatch", f"CycInt over p={p} needs {p - 1} coordinates")
        self.coords = tuple(int(x) for x in coords)
        self.p = p

    @classmethod
    def from_int(cls, a: int, p: int) -> CycInt:
        return cls([a] + [0] * (p - 2), p)

    @classmethod
    def zeta(cls, k: int, p: int) -> CycInt:
        buckets = [0] * p
        buckets[k % p] = 1
        return cls.from_buckets(buckets, p)

    @classmethod
    def from_buckets(cls, buckets: Sequence[int], p: int) -> CycInt:
        """sum_k buckets[k] * zeta^k for k in 0..p-1, reduced with zeta^(p-1) = -(1 + ... + zeta^(p-2))."""
        top = int(buckets[p - 1])
        return cls([int(buckets[i]) - top for i in range(p - 1)], p)

    def buckets(self) -> list[int]:
        return list(self.coords) + [0]

    def _lift(self, other) -> CycInt:
        if isinstance(other, CycInt):
            if other.p != self.p:
                raise FfsnError("size-mismatch", f"zeta_{self.p} vs zeta_{other.p}")
            return other
        return CycInt.from_int(int(other), self.p)

    def __add__(self, other) -> CycInt:
        other = self._lift(other)
        return CycInt([x + y for x, y in zip(self.coords, other.coords)], self.p)

    __radd__ = __add__

    def __neg__(self) -> CycInt:
        return CycInt([-x for x in self.coords], self.p)

    def __sub__(self, other) -> CycInt:
        return self + (-self._lift(other))

    def __mul__(self, other) -> CycInt:
        other = self._lift(other)
        p = self.p
        acc = [0] * p
        for i, x in enumerate(self.coords):
            if not x:
                continue
            for j, y in enumerate(other.coords):
                if y:
                    acc[(i + j) % p] += x * y
        return CycInt.from_buckets(acc, p)

    __rmul__ = __mul__

    def conj(self) -> CycInt:
        acc = [0] * self.p
        for i, x in enumerate(self.coords):
            acc[(-i) % self.p] += x
        return CycInt.from_buckets(acc, self.p)

    def is_rational(self) -> bool:
        return not any(self.coords[1:])

    def to_int(self) -> int:
        if not self.is_rational():
            raise FfsnError("unsupported", f"{self} is not a rational integer")
        return self.coords[0]

    def __eq__(self, other) -> bool:
        if isinstance(other, (CycInt, int)):
            other = self._lift(other)
            return self.coords == other.coords
        return False

    def __hash__(self) -> int:
        return hash((self.coords, self.p))

    def embed(self, k: int = 1, dps: int = 50):
        """Complex value under zeta -> exp(2 pi i k / p)."""
        with mpmath.workdps(dps):
            w = mpmath.expjpi(mpmath.mpf(2 * k) / self.p)
            return mpmath.fsum(x * w ** i for i, x in enumerate(self.coords) if x)

    def abs_squared_embeddings(self, dps: int = 50) -> list:
        """|sigma_k(x)|^2 for every embedding k = 1..p-1."""
        with mpmath.workdps(dps):
            return [abs(self.embed(k, dps)) ** 2 for k in range(1, self.p)]

    def __str__(self) -> str:
        terms = []
        for i, x in enumerate(self.coords):
            if not x:
                continue
            if i == 0:
                terms.append(str(x))
            else:
                mono = "z" if i == 1 else f"z^{i}"
                terms.append(f"{x}*{mono}")
        return "+".join(terms).replace("+-", "-") or "0"

    def __repr__(self) -> str:
        return f"CycInt({self}, p={self.p})"


def cyc_abs(x: CycInt) -> float:
    """|x| under zeta -> exp(2 pi i/p)."""
    if x.is_rational():
        return float(abs(x.coords[0]))
    with mpmath.workdps(40):
        return float(abs(x.embed(1, 40)))


# ----------------------------------------------------------------- RationalSeries

Coeff = Union[int, SqrtQInt]


def poly_mul_generic(f: Sequence[Coeff], g: Sequence[Coeff]) -> list[Coeff]:
    """Product of low-to-high coefficient lists over any ring with + and *."""
    if not f or not g:
        return []
    out: list[Coeff] = [0] * (len(f) + len(g) - 1)
    for i, x in enumerate(f):
        for j, y in enumerate(g):
            out[i + j] = out[i + j] + x * y
    return out


def poly_pow_generic(f: Sequence[Coeff], k: int) -> list[Coeff]:
    out: list[Coeff] = [1]
    for _ in range(k):
        out = poly_mul_generic(out, f)
    return out


@dataclass(frozen=True)
class RationalSeries:
    """numerator/denominator as low-to-high coefficient lists over int or SqrtQInt."""

    numerator: tuple
    denominator: tuple

    @classmethod
    def from_factors(cls, numerator: Sequence[Sequence[Coeff]],
                     denominator: Sequence[Sequence[Coeff]]) -> RationalSeries:
        num: list[Coeff] = [1]
        for f in numerator:
            num = poly_mul_generic(num, f)
        den: list[Coeff] = [1]
        for f in denominator:
            den = poly_mul_generic(den, f)
        return cls(tuple(num), tuple(den))

    def _unit_inverse(self) -> int:
        d0 = self.denominator[0] if self.denominator else 0
        if isinstance(d0, SqrtQInt):
            if d0.b != 0:
                raise FfsnError("non-invertible-series", f"constant term {d0} is not a unit")
            d0 = d0.a
        if d0 not in (1, -1):
            raise FfsnError("non-invertible-series", f"constant term {d0} is not a unit")
        return d0

    def coefficients(self, n: int) -> list[Coeff]:
        """u^0 .. u^n coefficients, from the recurrence den * series = num."""
        d0 = self._unit_inverse()
        den = self.denominator
        out: list[Coeff] = []
        for k in range(n + 1):
            acc = self.numerator[k] if k < len(self.numerator) else 0
            for j in range(1, min(k, len(den) - 1) + 1):
                acc = acc - den[j] * out[k - j]
            out.append(acc * d0)
        return out


def series_coeff(s: RationalSeries, n: int) -> Coeff:
    """Exact u^n coefficient of the power-series expansion of ``s``."""
    if n < 0:
        return 0
    return s.coefficients(n)[n]


def check_prime_base(p: int) -> None:
    if not isprime(p) or p < 5:
        raise FfsnError("config-error", f"q={p} must be a prime >= 5")
