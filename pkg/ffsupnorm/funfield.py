"""
Places, divisors, adeles and the residue pairing on F_p(T), with omega_0 = dT.

A finite place is a monic irreducible polynomial; the place at infinity uses the
uniformizer s = 1/T. Local elements are stored as pi^val * unit with the unit known
modulo pi^prec (relative precision).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Union

from sympy import Poly as SymPoly
from sympy import Symbol, fraction, together
from sympy.parsing.sympy_parser import parse_expr

from .errors import FfsnError, PrecisionExhausted
from .exactalg import CycInt, FqElem, Poly, poly_factor

T_SYMBOL = Symbol("T")


# -------------------------------------------------------------------------- Place

@dataclass(frozen=True)
class Place:
    """``poly`` is None for the place at infinity."""

    p: int
    poly: Poly | None = None

    @classmethod
    def infinity(cls, p: int) -> Place:
        return cls(p, None)

    @classmethod
    def finite(cls, poly: Poly) -> Place:
        if not poly.is_monic() or not poly.is_irreducible():
            raise FfsnError("unsupported", f"{poly} is not monic irreducible")
        return cls(poly.p, poly)

    @classmethod
    def rational(cls, x: int, p: int) -> Place:
        """The degree-one place T - x."""
        return cls(p, Poly((1, (-x) % p), p))

    @property
    def is_infinite(self) -> bool:
        return self.poly is None

    @property
    def degree(self) -> int:
        return 1 if self.poly is None else self.poly.degree

    @property
    def uniformizer(self) -> Poly:
        """pi_v as a polynomial: the irreducible itself, or s = [1, 0] in the chart at infinity."""
        return Poly.T(self.p) if self.poly is None else self.poly

    def root(self) -> int:
        """The F_p-point of a degree-one finite place."""
        if self.poly is None or self.poly.degree != 1:
            raise FfsnError("unsupported", f"{self} is not a rational finite place")
        return (-self.poly.coeff(0)) % self.p

    def sort_key(self) -> tuple:
        if self.poly is None:
            return (1, 0, ())
        return (0,) + self.poly.sort_key()

    def __lt__(self, other: Place) -> bool:
        return self.sort_key() < other.sort_key()

    def __str__(self) -> str:
        return "inf" if self.poly is None else str(self.poly)


def _mod_p(c, p: int) -> int:
    """Reduce a sympy rational coefficient into F_p."""
    num, den = fraction(c)
    if int(den) % p == 0:
        raise FfsnError("config-error", f"coefficient {c} has a denominator divisible by {p}")
    return int(num) * pow(int(den), -1, p) % p


def parse_poly(text: str, p: int) -> Poly:
    expr = parse_expr(text.replace("^", "**"), local_dict={"T": T_SYMBOL})
    coeffs = SymPoly(expr, T_SYMBOL).all_coeffs()
    return Poly(tuple(_mod_p(c, p) for c in coeffs), p)


def parse_place(text: str, p: int) -> Place:
    text = text.strip()
    if text in ("inf", "oo", "infinity"):
        return Place.infinity(p)
    return Place.finite(parse_poly(text, p).monic())


# ----------------------------------------------------------------------- Divisor

class Divisor:
    """Finitely supported map Place -> int."""

    __slots__ = ("_m",)

    def __init__(self, mults: Mapping[Place, int] | None = None):
        self._m = {v: int(k) for v, k in (mults or {}).items() if k}

    @classmethod
    def point(cls, v: Place, k: int = 1) -> Divisor:
        return cls({v: k})

    def items(self):
        return sorted(self._m.items(), key=lambda t: t[0].sort_key())

    def support(self) -> list[Place]:
        return [v for v, _ in self.items()]

    def __getitem__(self, v: Place) -> int:
        return self._m.get(v, 0)

    def __add__(self, other: Divisor) -> Divisor:
        out = dict(self._m)
        for v, k in other._m.items():
            out[v] = out.get(v, 0) + k
        return Divisor(out)

    def __neg__(self) -> Divisor:
        return Divisor({v: -k for v, k in self._m.items()})

    def __sub__(self, other: Divisor) -> Divisor:
        return self + (-other)

    def __eq__(self, other) -> bool:
        return isinstance(other, Divisor) and self._m == other._m

    def __hash__(self) -> int:
        return hash(frozenset(self._m.items()))

    @property
    def degree(self) -> int:
        return sum(v.degree * k for v, k in self._m.items())

    def is_effective(self) -> bool:
        return all(k >= 0 for k in self._m.values())

    def is_squarefree(self) -> bool:
        return all(k == 1 for k in self._m.values())

    def __str__(self) -> str:
        if not self._m:
            return "0"
        parts = [f"{k}*[{v}]" for v, k in self.items()]
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"Divisor({self})"


_DIVISOR_TERM = re.compile(r"([+-]?\s*\d*)\s*\*?\s*\[([^\]]+)\]")


def parse_divisor(text: str, p: int) -> Divisor:
    """Parse "k1*[v1] + k2*[v2]" with "[inf]" for infinity."""
    out: dict[Place, int] = {}
    for coeff, place in _DIVISOR_TERM.findall(text):
        coeff = coeff.replace(" ", "")
        k = int(coeff) if coeff not in ("", "+", "-") else (-1 if coeff == "-" else 1)
        v = parse_place(place, p)
        out[v] = out.get(v, 0) + k
    return Divisor(out)


# -------------------------------------------------------------- RationalFunction

@dataclass(frozen=True)
class RationalFunction:
    """num/den in lowest terms with den monic."""

    num: Poly
    den: Poly

    def __post_init__(self):
        if self.den.is_zero():
            raise ZeroDivisionError("zero denominator")
        num, den = self.num, self.den
        if num.is_zero():
            den = Poly.one(num.p)
        else:
            g = num.gcd(den)
            if g.degree > 0:
                num, den = num // g, den // g
        lc = den.lc
        if lc != 1:
            inv = pow(lc, -1, num.p)
            num, den = num * inv, den * inv
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @property
    def p(self) -> int:
        return self.num.p

    @classmethod
    def from_poly(cls, f: Poly) -> RationalFunction:
        return cls(f, Poly.one(f.p))

    @classmethod
    def const(cls, a: int, p: int) -> RationalFunction:
        return cls.from_poly(Poly.const(a, p))

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def __add__(self, other) -> RationalFunction:
        other = _as_rational(other, self.p)
        return RationalFunction(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self) -> RationalFunction:
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other) -> RationalFunction:
        return self + (-_as_rational(other, self.p))

    def __rsub__(self, other) -> RationalFunction:
        return _as_rational(other, self.p) - self

    def __mul__(self, other) -> RationalFunction:
        other = _as_rational(other, self.p)
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def inverse(self) -> RationalFunction:
        if self.is_zero():
            raise ZeroDivisionError("inverse of zero")
        return RationalFunction(self.den, self.num)

    def __truediv__(self, other) -> RationalFunction:
        return self * _as_rational(other, self.p).inverse()

    def valuation(self, v: Place) -> int:
        if self.is_zero():
            raise FfsnError("divisor-of-zero", "valuation of zero")
        if v.is_infinite:
            return self.den.degree - self.num.degree
        return _poly_valuation(self.num, v.poly) - _poly_valuation(self.den, v.poly)

    def __str__(self) -> str:
        if self.den.degree == 0:
            return f"{self.num}"
        return f"({self.num})/({self.den})"


def _as_rational(x, p: int) -> RationalFunction:
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, Poly):
        return RationalFunction.from_poly(x)
    return RationalFunction.const(int(x) % p, p)


def _poly_valuation(f: Poly, pi: Poly) -> int:
    k = 0
    while True:
        q, r = divmod(f, pi)
        if not r.is_zero():
            return k
        f, k = q, k + 1


def parse_rational(text: str, p: int) -> RationalFunction:
    expr = together(parse_expr(text.replace("^", "**"), local_dict={"T": T_SYMBOL}))
    num, den = fraction(expr)
    num_p = Poly(tuple(_mod_p(c, p) for c in SymPoly(num, T_SYMBOL).all_coeffs()), p)
    den_p = Poly(tuple(_mod_p(c, p) for c in SymPoly(den, T_SYMBOL).all_coeffs()), p)
    if den_p.is_zero():
        raise FfsnError("config-error", f"denominator of {text} vanishes mod {p}")
    return RationalFunction(num_p, den_p)


def divisor_of(r: RationalFunction) -> Divisor:
    """div(r) over P^1; v_inf(r) = deg(den) - deg(num)."""
    if r.is_zero():
        raise FfsnError("divisor-of-zero", "the zero function has no divisor")
    p = r.p
    out: dict[Place, int] = {}
    for poly, sign in ((r.num, 1), (r.den, -1)):
        if poly.degree <= 0:
            continue
        _, factors = poly_factor(poly)
        for g, k in factors:
            v = Place(p, g)
            out[v] = out.get(v, 0) + sign * k
    out[Place.infinity(p)] = r.den.degree - r.num.degree
    return Divisor(out)


# -------------------------------------------------------------------- LocalElement

@dataclass(frozen=True)
class LocalElement:
    """pi^val * unit in F_v, unit known modulo pi^prec.

    Exact zero: val is None and prec is None. Inexact zero (cancelled within the
    available precision): val is None and ``prec`` holds the absolute precision.
    """

    place: Place
    val: int | None
    unit: Poly
    prec: int | None

    @classmethod
    def zero(cls, place: Place) -> LocalElement:
        return cls(place, None, Poly.zero(place.p), None)

    @classmethod
    def from_rational(cls, r: RationalFunction, place: Place, prec: int) -> LocalElement:
        if r.is_zero():
            return cls.zero(place)
        pi = place.uniformizer
        if place.is_infinite:
            num, den = r.num.reverse(), r.den.reverse()
            val = r.den.degree - r.num.degree
        else:
            a, b = _poly_valuation(r.num, pi), _poly_valuation(r.den, pi)
            num, den = r.num // pi ** a, r.den // pi ** b
            val = a - b
        mod = pi ** prec
        unit = (num * den.inverse_mod(mod)) % mod
        return cls(place, val, unit, prec)

    @classmethod
    def from_poly(cls, f: Poly, place: Place, prec: int) -> LocalElement:
        return cls.from_rational(RationalFunction.from_poly(f), place, prec)

    @classmethod
    def uniformizer_power(cls, place: Place, k: int, prec: int) -> LocalElement:
        return cls(place, k, Poly.one(place.p), prec)

    def is_exact_zero(self) -> bool:
        return self.val is None and self.prec is None

    def is_zero(self) -> bool:
        return self.val is None

    @property
    def abs_prec(self) -> float:
        if self.prec is None:
            return float("inf")
        if self.val is None:
            return self.prec
        return self.val + self.prec

    @property
    def valuation(self) -> float:
        """Exact valuation; +inf for exact zero."""
        if self.val is not None:
            return self.val
        if self.prec is None:
            return float("inf")
        raise PrecisionExhausted(f"element of {self.place} vanishes to precision {self.prec}")

    def _normalize(self, val: int, unit: Poly, abs_prec: int | None) -> LocalElement:
        pi = self.place.uniformizer
        if abs_prec is None:
            raise FfsnError("unsupported", "normalisation of an unbounded expansion")
        rel = abs_prec - val
        if rel <= 0:
            return LocalElement(self.place, None, Poly.zero(self.place.p), abs_prec)
        unit = unit % pi ** rel
        while not unit.is_zero():
            q, r = divmod(unit, pi)
            if not r.is_zero():
                break
            unit, val, rel = q, val + 1, rel - 1
        if unit.is_zero() or rel <= 0:
            return LocalElement(self.place, None, Poly.zero(self.place.p), abs_prec)
        return LocalElement(self.place, val, unit % pi ** rel, rel)

    def __add__(self, other: LocalElement) -> LocalElement:
        if self.is_exact_zero():
            return other
        if other.is_exact_zero():
            return self
        abs_prec = int(min(self.abs_prec, other.abs_prec))
        if self.val is None and other.val is None:
            return LocalElement(self.place, None, Poly.zero(self.place.p), abs_prec)
        vals = [x.val for x in (self, other) if x.val is not None]
        m = min(vals)
        pi = self.place.uniformizer
        acc = Poly.zero(self.place.p)
        for x in (self, other):
            if x.val is not None:
                acc = acc + x.unit * pi ** (x.val - m)
        return self._normalize(m, acc, abs_prec)

    def __neg__(self) -> LocalElement:
        return LocalElement(self.place, self.val, -self.unit, self.prec)

    def __sub__(self, other: LocalElement) -> LocalElement:
        return self + (-other)

    def __mul__(self, other: LocalElement) -> LocalElement:
        if self.is_exact_zero() or other.is_exact_zero():
            return LocalElement.zero(self.place)
        if self.val is None and other.val is None:
            return LocalElement(self.place, None, Poly.zero(self.place.p), self.prec + other.prec)
        if self.val is None or other.val is None:
            known = self if self.val is not None else other
            unknown = other if known is self else self
            v = known.val if known.val is not None else 0
            return LocalElement(self.place, None, Poly.zero(self.place.p), int(unknown.prec + v))
        rel = min(self.prec, other.prec)
        mod = self.place.uniformizer ** rel
        return LocalElement(self.place, self.val + other.val, (self.unit * other.unit) % mod, rel)

    def inverse(self) -> LocalElement:
        if self.val is None:
            raise ZeroDivisionError(f"inverse of zero at {self.place}")
        mod = self.place.uniformizer ** self.prec
        return LocalElement(self.place, -self.val, self.unit.inverse_mod(mod), self.prec)

    def shift(self, k: int) -> LocalElement:
        """Multiply by pi^k exactly."""
        if self.val is None:
            if self.prec is None:
                return self
            return LocalElement(self.place, None, self.unit, self.prec + k)
        return LocalElement(self.place, self.val + k, self.unit, self.prec)

    def digits(self) -> list[Poly]:
        """pi-adic digits of the unit (each of degree < deg pi)."""
        pi = self.place.uniformizer
        out, u = [], self.unit
        for _ in range(self.prec or 0):
            u, r = divmod(u, pi)
            out.append(r)
        return out

    def principal_part(self) -> RationalFunction:
        """Polar part at a finite place as B/pi^j with deg B < j*deg(pi); at infinity the
        polynomial part (terms T^k, k >= 0). Zero when integral."""
        p = self.place.p
        if self.val is None or self.val > 0 or (self.val == 0 and not self.place.is_infinite):
            return RationalFunction.const(0, p)
        j = -self.val
        if self.prec < j + (1 if self.place.is_infinite else 0):
            raise PrecisionExhausted(f"principal part at {self.place} needs precision {j}")
        if self.place.is_infinite:
            # s^(-j) * sum u_k s^k, keep k <= j:  sum u_k T^(j-k)
            low = self.unit.low()[: j + 1]
            low += [0] * (j + 1 - len(low))
            return RationalFunction.from_poly(Poly(tuple(low), p))
        pi_j = self.place.uniformizer ** j
        return RationalFunction(self.unit % pi_j, pi_j)

    def __str__(self) -> str:
        if self.val is None:
            return "0" if self.prec is None else f"O(pi^{self.prec})"
        return f"pi^{self.val}*({self.unit}) + O(pi^{self.val + self.prec})"


# ------------------------------------------------------------------------ residue

def local_residue(x: LocalElement) -> FqElem:
    """res_v(x dT), traced down to F_p."""
    p = x.place.p
    if x.val is None:
        if x.prec is None:
            return 0
        if x.place.is_infinite and x.prec >= 2:
            return 0
        if not x.place.is_infinite and x.prec >= 0:
            return 0
        raise PrecisionExhausted(f"residue at {x.place} undetermined")
    if x.place.is_infinite:
        # T = 1/s, dT = -ds/s^2: residue is minus the s^1 coefficient of x
        k = 1 - x.val
        if k < 0:
            return 0
        if k >= x.prec:
            raise PrecisionExhausted(f"residue at inf needs relative precision {k + 1}")
        return (-x.unit.coeff(k)) % p
    if x.val >= 0:
        return 0
    j = -x.val
    if x.prec < j:
        raise PrecisionExhausted(f"residue at {x.place} needs relative precision {j}")
    # B/pi^j with deg B < j*d: the residue sum is minus the one at infinity, the T^(jd-1) coefficient
    d = x.place.degree
    b = x.unit % x.place.uniformizer ** j
    return b.coeff(j * d - 1) % p


def residue(r: RationalFunction, v: Place) -> FqElem:
    """res_v(r dT)."""
    if r.is_zero():
        return 0
    val = r.valuation(v)
    prec = max(1, 2 - val) if v.is_infinite else max(1, -val)
    return local_residue(LocalElement.from_rational(r, v, prec))


def psi0(x: FqElem, p: int) -> CycInt:
    """zeta_p^x (the base field is prime, so the trace is the identity)."""
    return CycInt.zeta(x, p)


# ------------------------------------------------------------------------- Adele

LocalValue = Union[RationalFunction, LocalElement]


def as_local(x: LocalValue, v: Place, prec: int) -> LocalElement:
    if isinstance(x, LocalElement):
        return x
    return LocalElement.from_rational(x, v, prec)


def local_is_zero(x: LocalValue) -> bool:
    return x.is_zero() if isinstance(x, RationalFunction) else x.is_exact_zero()


def local_valuation(x: LocalValue, v: Place) -> float:
    """Exact valuation at v; +inf for zero."""
    if isinstance(x, RationalFunction):
        return float("inf") if x.is_zero() else x.valuation(v)
    return x.valuation


def local_add(x: LocalValue, y: LocalValue, v: Place, prec: int) -> LocalValue:
    if isinstance(x, RationalFunction) and isinstance(y, RationalFunction):
        return x + y
    return as_local(x, v, prec) + as_local(y, v, prec)


def local_mul(x: LocalValue, y: LocalValue, v: Place, prec: int) -> LocalValue:
    if isinstance(x, RationalFunction) and isinstance(y, RationalFunction):
        return x * y
    return as_local(x, v, prec) * as_local(y, v, prec)


def uniformizer_rational(v: Place, k: int) -> RationalFunction:
    """pi_v^k as a global function: v^k, or T^{-k} at infinity (pi = 1/T)."""
    p = v.p
    base = RationalFunction(Poly.one(p), Poly.T(p)) if v.is_infinite else RationalFunction.from_poly(v.poly)
    out = RationalFunction.const(1, p)
    for _ in range(abs(k)):
        out = out * base
    return out if k >= 0 else out.inverse()


@dataclass(frozen=True)
class Adele:
    """Finitely supported additive adele; components off the support are 0.

    A component is either an exact rational function (its expansion at the place) or a
    truncated ``LocalElement``.
    """

    p: int
    components: Mapping[Place, LocalValue] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "components", dict(sorted(
            ((v, x) for v, x in self.components.items() if not local_is_zero(x)),
            key=lambda t: t[0].sort_key())))

    def support(self) -> list[Place]:
        return list(self.components)

    def __getitem__(self, v: Place) -> LocalValue:
        return self.components.get(v, RationalFunction.const(0, self.p))

    def local(self, v: Place, prec: int) -> LocalElement:
        return as_local(self[v], v, prec)

    def __add__(self, other: Adele) -> Adele:
        out = dict(self.components)
        for v, x in other.components.items():
            out[v] = local_add(out[v], x, v, _prec_of(out[v], x)) if v in out else x
        return Adele(self.p, out)

    def scale(self, r: RationalFunction) -> Adele:
        if r.is_zero():
            return Adele(self.p, {})
        return Adele(self.p, {v: local_mul(x, r, v, _prec_of(x)) for v, x in self.components.items()})

    @classmethod
    def diagonal(cls, r: RationalFunction, places: Iterable[Place]) -> Adele:
        """r placed at each listed place (a restriction of the diagonal embedding)."""
        return cls(r.p, {v: r for v in places})

    def to_json(self, prec: int) -> dict:
        out = {}
        for v, x in self.components.items():
            loc = as_local(x, v, prec)
            out[str(v)] = {"val": loc.val, "prec": loc.prec, "digits": [d.low() for d in loc.digits()]}
        return out

    def __str__(self) -> str:
        return ";".join(f"{v}:{x}" for v, x in self.components.items()) or "0"


def _prec_of(*xs: LocalValue) -> int:
    precs = [x.prec for x in xs if isinstance(x, LocalElement) and x.prec is not None]
    return min(precs) if precs else 1


def parse_adele(text: str, p: int) -> Adele:
    """Parse "T:1/T^2;inf:1/T": each component is a rational function taken at its place."""
    comps: dict[Place, LocalValue] = {}
    text = text.strip()
    if text in ("", "0"):
        return Adele(p, {})
    for item in text.split(";"):
        if not item.strip():
            continue
        place_text, _, expr = item.partition(":")
        v = parse_place(place_text, p)
        r = parse_rational(expr, p)
        comps[v] = comps[v] + r if v in comps else r
    return Adele(p, comps)


def residue_pairing(z: Adele, w: RationalFunction) -> FqElem:
    """sum over supp(z) of res_v(w * z_v * dT)."""
    if w.is_zero():
        return 0
    total = 0
    for v, zv in z.components.items():
        if isinstance(zv, RationalFunction):
            total += residue(w * zv, v)
        else:
            prec = zv.prec if zv.prec is not None else 1
            total += local_residue(LocalElement.from_rational(w, v, max(prec, 1)) * zv)
    return total % z.p
