"""
Heights of cusps on adelic matrices.

For g = ((a, b), (c, d)) in GL2(A), a cusp (f1 : f2) in P^1(F) and an e-tuple on the
level places,

    h(g, (f1:f2), e) = 2 deg min(div(a f1 + c f2), div(b f1 + d f2) + sum e_x [x])
                       - deg(div(ad - bc) + sum e_x [x])

Each matrix entry is a global rational function with finitely many local overrides, so
every valuation is read off either a factorisation or an exact local computation.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from typing import Iterator

import numpy as np
from sympy.polys.domains import GF
from sympy.polys.matrices import DomainMatrix

from .errors import FfsnError
from .exactalg import Poly, monic_polys
from .funfield import (
    Adele,
    Divisor,
    LocalElement,
    LocalValue,
    Place,
    RationalFunction,
    divisor_of,
    local_add,
    local_mul,
    local_valuation,
    parse_poly,
    parse_rational,
    uniformizer_rational,
)
from .tracefn import residue_field
from .utils.logger import logger
from .whittaker import EvalPoint, LinearForm, linear_form_of

INF = float("inf")


# ---------------------------------------------------------------------- ETuple

@dataclass(frozen=True)
class ETuple:
    """e_x for each level place x, aligned with ``places``."""

    places: tuple[Place, ...]
    values: tuple[int, ...]

    def __getitem__(self, v: Place) -> int:
        try:
            return self.values[self.places.index(v)]
        except ValueError:
            return 0

    @property
    def total(self) -> int:
        return sum(self.values)

    def replace(self, v: Place, k: int) -> ETuple:
        i = self.places.index(v)
        return ETuple(self.places, self.values[:i] + (k,) + self.values[i + 1:])

    def distance(self, other: ETuple) -> int:
        return sum(abs(a - b) for a, b in zip(self.values, other.values))

    def to_dict(self) -> dict:
        return {str(v): k for v, k in zip(self.places, self.values)}

    def __str__(self) -> str:
        return "(" + ",".join(str(k) for k in self.values) + ")"


def etuple_zero(level: Divisor) -> ETuple:
    places = tuple(level.support())
    return ETuple(places, (0,) * len(places))


def etuple_full(level: Divisor) -> ETuple:
    places = tuple(level.support())
    return ETuple(places, tuple(level[v] for v in places))


def all_etuples(level: Divisor) -> Iterator[ETuple]:
    places = tuple(level.support())
    for values in itertools.product(*(range(level[v] + 1) for v in places)):
        yield ETuple(places, tuple(values))


def e_switch(e: ETuple, v: Place, level: Divisor) -> ETuple:
    """e_v -> c_v - e_v at v, unchanged elsewhere."""
    if not level[v]:
        raise FfsnError("not-a-level-place", f"{v} is not in the support of N")
    return e.replace(v, level[v] - e[v])


# ------------------------------------------------------------------------ Cusp

@dataclass(frozen=True)
class Cusp:
    """(f1 : f2) with coprime polynomials; f1 monic, or f1 = 0 and f2 = 1."""

    f1: Poly
    f2: Poly

    def __post_init__(self):
        f1, f2 = self.f1, self.f2
        if f1.is_zero() and f2.is_zero():
            raise FfsnError("degenerate-combination", "(0 : 0) is not a cusp")
        g = f1.gcd(f2)
        if g.degree > 0:
            f1, f2 = f1 // g, f2 // g
        lead = f1.lc if not f1.is_zero() else f2.lc
        inv = pow(lead, -1, f1.p)
        object.__setattr__(self, "f1", f1 * inv)
        object.__setattr__(self, "f2", f2 * inv)

    @classmethod
    def from_rationals(cls, r1: RationalFunction, r2: RationalFunction) -> Cusp:
        return cls(r1.num * r2.den, r2.num * r1.den)

    @property
    def degree(self) -> int:
        return max(self.f1.degree, self.f2.degree)

    def sort_key(self) -> tuple:
        return (self.degree, self.f1.sort_key(), self.f2.sort_key())

    def __str__(self) -> str:
        return f"({self.f1}:{self.f2})"


def parse_cusp(text: str, p: int) -> Cusp:
    """"f1:f2" or the ratio "f1/f2"."""
    if ":" in text:
        a, b = text.split(":", 1)
        return Cusp(parse_poly(a, p), parse_poly(b, p))
    r = parse_rational(text, p)
    return Cusp(r.num, r.den)


# --------------------------------------------------------------- AdelicMatrix

@dataclass(frozen=True)
class AdelicEntry:
    """A global rational function, replaced by ``local[v]`` at finitely many places."""

    global_part: RationalFunction
    local: dict = field(default_factory=dict)

    def at(self, v: Place) -> LocalValue:
        return self.local.get(v, self.global_part)

    @classmethod
    def const(cls, a: int, p: int) -> AdelicEntry:
        return cls(RationalFunction.const(a, p), {})

    @classmethod
    def from_adele(cls, z: Adele) -> AdelicEntry:
        return cls(RationalFunction.const(0, z.p), dict(z.components))


@dataclass(frozen=True)
class CanonicalFrame:
    n: int
    z: Adele
    alpha: LinearForm


@dataclass(frozen=True)
class AdelicMatrix:
    a: AdelicEntry
    b: AdelicEntry
    c: AdelicEntry
    d: AdelicEntry
    level: Divisor
    prec: int = 24
    frame: CanonicalFrame | None = None

    @property
    def p(self) -> int:
        return self.a.global_part.p

    def override_places(self) -> list[Place]:
        places = set()
        for entry in (self.a, self.b, self.c, self.d):
            places.update(entry.local)
        return sorted(places, key=lambda v: v.sort_key())

    def local_entries(self, v: Place) -> tuple[LocalValue, LocalValue, LocalValue, LocalValue]:
        return self.a.at(v), self.b.at(v), self.c.at(v), self.d.at(v)

    def with_local(self, v: Place, entries) -> AdelicMatrix:
        new = []
        for entry, x in zip((self.a, self.b, self.c, self.d), entries):
            local = dict(entry.local)
            local[v] = x
            new.append(AdelicEntry(entry.global_part, local))
        return replace(self, a=new[0], b=new[1], c=new[2], d=new[3], frame=None)


def canonical_matrix(point: EvalPoint, level: Divisor, prec: int = 24) -> AdelicMatrix:
    """((a, z), (0, 1)) with div(a) = (n+2)[inf]."""
    p = point.p
    inf = Place.infinity(p)
    a = AdelicEntry(RationalFunction.const(1, p), {inf: uniformizer_rational(inf, point.n + 2)})
    frame = CanonicalFrame(point.n, point.z, linear_form_of(point))
    return AdelicMatrix(a, AdelicEntry.from_adele(point.z), AdelicEntry.const(0, p),
                        AdelicEntry.const(1, p), level, prec, frame)


# --------------------------------------------------------------------- heights

@lru_cache(maxsize=4096)
def _support(r: RationalFunction) -> tuple[Place, ...]:
    if r.is_zero():
        return ()
    return tuple(divisor_of(r).support())


@dataclass
class CuspValuations:
    """(v1, v2, vdet) at every place where any of them can be nonzero."""

    places: dict[Place, tuple[float, float, float]]
    level: Divisor

    def height(self, e: ETuple) -> int:
        total = 0
        for v, (v1, v2, vdet) in self.places.items():
            ev = e[v]
            m = min(v1, v2 + ev)
            total += v.degree * (2 * m - vdet - ev)
        return int(total)

    def local_gain(self, v: Place, k: int) -> float:
        v1, v2, _ = self.places[v]
        return 2 * min(v1, v2 + k) - k


def cusp_valuations(m: AdelicMatrix, cusp: Cusp) -> CuspValuations:
    f1 = RationalFunction.from_poly(cusp.f1)
    f2 = RationalFunction.from_poly(cusp.f2)
    g = (m.a.global_part, m.b.global_part, m.c.global_part, m.d.global_part)
    r1 = g[0] * f1 + g[2] * f2
    r2 = g[1] * f1 + g[3] * f2
    det = g[0] * g[3] - g[1] * g[2]
    if r1.is_zero() and r2.is_zero():
        raise FfsnError("degenerate-combination", f"{cusp} annihilates both columns")
    if det.is_zero():
        raise FfsnError("degenerate-combination", "singular matrix")
    overrides = set(m.override_places())
    places = set(overrides) | set(m.level.support()) | {Place.infinity(m.p)}
    for r in (r1, r2, det):
        places.update(_support(r))
    out: dict[Place, tuple[float, float, float]] = {}
    for v in sorted(places, key=lambda v: v.sort_key()):
        if v in overrides:
            a, b, c, d = m.local_entries(v)
            lr1 = local_add(local_mul(a, f1, v, m.prec), local_mul(c, f2, v, m.prec), v, m.prec)
            lr2 = local_add(local_mul(b, f1, v, m.prec), local_mul(d, f2, v, m.prec), v, m.prec)
            ldet = local_add(local_mul(a, d, v, m.prec),
                             local_mul(local_mul(b, c, v, m.prec), RationalFunction.const(-1, m.p), v, m.prec),
                             v, m.prec)
            vals = (local_valuation(lr1, v), local_valuation(lr2, v), local_valuation(ldet, v))
        else:
            vals = (local_valuation(r1, v), local_valuation(r2, v), local_valuation(det, v))
        if vals[0] == INF and vals[1] == INF:
            raise FfsnError("degenerate-combination", f"{cusp} annihilates both columns at {v}")
        if vals[2] == INF:
            raise FfsnError("degenerate-combination", f"singular matrix at {v}")
        out[v] = vals
    return CuspValuations(out, m.level)


def height(m: AdelicMatrix, cusp: Cusp, e: ETuple) -> int:
    return cusp_valuations(m, cusp).height(e)


@dataclass(frozen=True)
class HeightProfile:
    hstar: int
    epeak: ETuple

    def to_dict(self) -> dict:
        return {"hstar": self.hstar, "epeak": self.epeak.to_dict()}


def profile_from(vals: CuspValuations) -> HeightProfile:
    """Per-place argmax over 0 <= e_x <= c_x (the slopes are +1 then -1)."""
    level = vals.level
    places = tuple(level.support())
    best = []
    for x in places:
        gains = [vals.local_gain(x, k) for k in range(level[x] + 1)]
        best.append(max(range(len(gains)), key=lambda k: (gains[k], -k)))
    epeak = ETuple(places, tuple(best))
    return HeightProfile(vals.height(epeak), epeak)


def height_profile(m: AdelicMatrix, cusp: Cusp) -> HeightProfile:
    return profile_from(cusp_valuations(m, cusp))


# ----------------------------------------------------------- splitting invariant

def _rank_and_kernel(rows: list[list[int]], p: int) -> tuple[int, list[int] | None]:
    """Rank over F_p and one left-kernel vector (or None)."""
    K = GF(p)
    M = DomainMatrix([[K(x) for x in row] for row in rows], (len(rows), len(rows[0])), K)
    rank = M.rank()
    if rank == len(rows):
        return rank, None
    basis = M.transpose().nullspace().to_list()
    return rank, [int(x) % p for x in basis[0]]


def _level_poly(e: ETuple, p: int) -> Poly:
    """prod over finite level places of (T - x)^{e_x}; infinity only shifts degree."""
    out = Poly.one(p)
    for v, k in zip(e.places, e.values):
        if not v.is_infinite and k:
            out = out * v.poly ** k
    return out


def splitting_rows(n: int, alpha: LinearForm, e: ETuple, m: int) -> list[list[int]]:
    """B_m[i][j] = alpha(T^i L T^j), 0 <= i <= m, 0 <= j <= n - m - sum e."""
    p = alpha.p
    L = _level_poly(e, p)
    cols = n - m - e.total
    return [[alpha(Poly.monomial(i + j, p) * L) for j in range(cols + 1)] for i in range(m + 1)]


def splitting_kernel(n: int, alpha: LinearForm, e: ETuple) -> tuple[int | None, Poly | None]:
    """Minimal m with rank(B_m) <= m and a kernel section f of degree <= m."""
    p = alpha.p
    if e.total > n:
        return None, None
    for m in range(n - e.total + 1):
        rows = splitting_rows(n, alpha, e, m)
        rank, kernel = _rank_and_kernel(rows, p)
        if rank <= m:
            return m, Poly.from_low(kernel, p)
    return None, None


def d_alpha(n: int, alpha: LinearForm, e: ETuple) -> int:
    """n - 2m - sum e for the minimal splitting degree m."""
    if e.total > n:
        raise FfsnError("unsupported", f"sum e = {e.total} exceeds n = {n}")
    m, _ = splitting_kernel(n, alpha, e)
    if m is None:
        m = n - e.total + 1
    return n - 2 * m - e.total


def rank_over_extension(n: int, alpha: LinearForm, e: ETuple, m: int, degree: int = 2) -> int:
    """rank(B_m) recomputed inside F_{p^degree}."""
    field_ = residue_field(alpha.p, degree)
    return field_.rank(splitting_rows(n, alpha, e, m))


# ------------------------------------------------------------ cusp enumeration

@dataclass(frozen=True)
class CuspProfile:
    cusp: Cusp
    profile: HeightProfile

    def to_dict(self) -> dict:
        return {"cusp": str(self.cusp), **self.profile.to_dict()}


def _polar_part(x: LocalValue, v: Place) -> RationalFunction:
    """Principal part at a finite place; the polynomial part (constant term included) at infinity."""
    if isinstance(x, LocalElement):
        return x.principal_part()
    if x.is_zero():
        return x
    val = x.valuation(v)
    if val > 0:
        return RationalFunction.const(0, x.p)
    return LocalElement.from_rational(x, v, 1 - val).principal_part()


def constructed_cusp(frame: CanonicalFrame, e: ETuple, prec: int = 24) -> Cusp:
    """The cusp spanned by the splitting section for e: f1 = f * L and f2 cancels the
    polar parts of z * f1, so b f1 + d f2 is as integral as possible."""
    p = frame.alpha.p
    _, f = splitting_kernel(frame.n, frame.alpha, e)
    f1 = (f if f is not None else Poly.one(p)) * _level_poly(e, p)
    r1 = RationalFunction.from_poly(f1)
    polar = RationalFunction.const(0, p)
    for v, zv in frame.z.components.items():
        polar = polar + _polar_part(local_mul(zv, r1, v, prec), v)
    return Cusp.from_rationals(r1, -polar)


def candidate_cusps(m: AdelicMatrix, brute_degree: int = 1) -> list[Cusp]:
    """(0:1), (1:0), every pair of degree <= brute_degree, and in the canonical frame the
    constructed cusp of each e-tuple."""
    p = m.p
    out = {Cusp(Poly.zero(p), Poly.one(p)), Cusp(Poly.one(p), Poly.zero(p))}
    polys = [Poly.from_low(list(c), p) for c in itertools.product(range(p), repeat=brute_degree + 1)]
    monics = [g for d in range(brute_degree + 1) for g in monic_polys(d, p)]
    for f1 in monics:
        for f2 in polys:
            out.add(Cusp(f1, f2))
    if m.frame is not None:
        for e in all_etuples(m.level):
            if e.total <= m.frame.n:
                out.add(constructed_cusp(m.frame, e, m.prec))
    return sorted(out, key=lambda c: c.sort_key())


def profile_cusps(m: AdelicMatrix, cusps: list[Cusp]) -> list[CuspProfile]:
    out = []
    for c in cusps:
        try:
            out.append(CuspProfile(c, height_profile(m, c)))
        except FfsnError as exc:
            if exc.code != "degenerate-combination":
                raise
    return out


def enumerate_cusps(m: AdelicMatrix, threshold: int, deg_bound: int,
                    brute_degree: int = 1) -> list[CuspProfile]:
    """Rational cusps of degree <= deg_bound with h* >= threshold, ordered by (deg, coefficients)."""
    if threshold < 1:
        raise FfsnError("unsupported", "threshold must be >= 1")
    profiled = profile_cusps(m, candidate_cusps(m, brute_degree))
    return [cp for cp in profiled if cp.profile.hstar >= threshold and cp.cusp.degree <= deg_bound]


@dataclass
class VolumeCheck:
    complete: bool
    violations: list[dict]
    gaps: list[dict]

    def to_dict(self) -> dict:
        return {"complete": self.complete, "violations": self.violations, "gaps": self.gaps}


def volume_comparison(m: AdelicMatrix, profiles: list[CuspProfile] | None = None,
                      brute_degree: int = 1) -> VolumeCheck:
    """max over cusps of h(e) against d_alpha(e) + 2 for every e with sum e <= n."""
    if m.frame is None:
        return VolumeCheck(False, [], [{"reason": "non-canonical matrix"}])
    if profiles is None:
        profiles = profile_cusps(m, candidate_cusps(m, brute_degree))
    vals = [cusp_valuations(m, cp.cusp) for cp in profiles]
    violations, gaps = [], []
    for e in all_etuples(m.level):
        if e.total > m.frame.n:
            continue
        best = max(v.height(e) for v in vals)
        d = d_alpha(m.frame.n, m.frame.alpha, e)
        record = {"e": e.to_dict(), "max_h": best, "d_alpha": d}
        if best > d + 2:
            violations.append(record)
        elif best < d + 2:
            gaps.append(record)
    if gaps:
        logger.debug(f"cusp enumeration incomplete at {len(gaps)} e-tuples")
    return VolumeCheck(not gaps and not violations, violations, gaps)


# ---------------------------------------------------------------- group actions

def atkin_lehner_action(m: AdelicMatrix, v: Place) -> AdelicMatrix:
    """Right multiplication by ((0, pi_v^{-c_v}), (1, 0)) at v."""
    c = m.level[v]
    if not c:
        raise FfsnError("not-a-level-place", f"{v} is not in the support of N")
    a, b, cc, d = m.local_entries(v)
    pinv = uniformizer_rational(v, -c)
    return m.with_local(v, (b, local_mul(a, pinv, v, m.prec), d, local_mul(cc, pinv, v, m.prec)))


def unipotent_action(m: AdelicMatrix, v: Place, u: RationalFunction) -> AdelicMatrix:
    """Right multiplication by ((1, 0), (pi_v^{c_v} u, 1)) at v; u must be integral at v."""
    if not u.is_zero() and u.valuation(v) < 0:
        raise FfsnError("unsupported", f"u is not integral at {v}")
    t = uniformizer_rational(v, m.level[v]) * u
    a, b, c, d = m.local_entries(v)
    prec = m.prec
    return m.with_local(v, (local_add(a, local_mul(b, t, v, prec), v, prec), b,
                            local_add(c, local_mul(d, t, v, prec), v, prec), d))


Gamma = tuple[RationalFunction, RationalFunction, RationalFunction, RationalFunction]


def left_action(m: AdelicMatrix, gamma: Gamma) -> AdelicMatrix:
    """gamma * m for gamma = (alpha, beta, gamma', delta) in GL2(F)."""
    al, be, ga, de = gamma
    prec = m.prec

    def combine(x, y, s, t, v=None):
        if v is None:
            return x * s + y * t
        return local_add(local_mul(x, s, v, prec), local_mul(y, t, v, prec), v, prec)

    g = (m.a.global_part, m.b.global_part, m.c.global_part, m.d.global_part)
    new_global = (combine(g[0], g[2], al, be), combine(g[1], g[3], al, be),
                  combine(g[0], g[2], ga, de), combine(g[1], g[3], ga, de))
    locals_ = ({}, {}, {}, {})
    for v in m.override_places():
        a, b, c, d = m.local_entries(v)
        vals = (combine(a, c, al, be, v), combine(b, d, al, be, v),
                combine(a, c, ga, de, v), combine(b, d, ga, de, v))
        for store, x in zip(locals_, vals):
            store[v] = x
    entries = [AdelicEntry(gp, lp) for gp, lp in zip(new_global, locals_)]
    return replace(m, a=entries[0], b=entries[1], c=entries[2], d=entries[3], frame=None)


def cusp_transform(cusp: Cusp, gamma: Gamma) -> Cusp:
    """(f1, f2) * gamma^{-1}, up to the scalar det(gamma)."""
    al, be, ga, de = gamma
    f1 = RationalFunction.from_poly(cusp.f1)
    f2 = RationalFunction.from_poly(cusp.f2)
    return Cusp.from_rationals(f1 * de - f2 * ga, f2 * al - f1 * be)



def right_action(m: AdelicMatrix, v: Place, k: Gamma) -> AdelicMatrix:
    """Right multiplication by ((k11, k12), (k21, k22)) at v only."""
    k11, k12, k21, k22 = k
    a, b, c, d = m.local_entries(v)
    prec = m.prec

    def mix(x, y, s, t):
        return local_add(local_mul(x, s, v, prec), local_mul(y, t, v, prec), v, prec)

    return m.with_local(v, (mix(a, b, k11, k21), mix(a, b, k12, k22),
                            mix(c, d, k11, k21), mix(c, d, k12, k22)))


def _integral_sample(v: Place, rng: np.random.Generator, p: int) -> RationalFunction:
    """c0 + c1 T at a finite place, c0 + c1 / T at infinity."""
    c0, c1 = (int(x) for x in rng.integers(0, p, size=2))
    t = RationalFunction.from_poly(Poly.T(p))
    if v.is_infinite:
        t = t.inverse()
    return RationalFunction.const(c0, p) + RationalFunction.const(c1, p) * t


def random_gamma(rng: np.random.Generator, p: int) -> Gamma:
    """Entries of degree <= 1 with a nonzero lower-left entry and nonzero determinant."""
    while True:
        gamma = tuple(RationalFunction.from_poly(Poly.from_low([int(c) for c in rng.integers(0, p, size=2)], p))
                      for _ in range(4))
        al, be, ga, de = gamma
        if not ga.is_zero() and not (al * de - be * ga).is_zero():
            return gamma


@dataclass(frozen=True)
class MovedMatrix:
    """gamma * m * k, carrying the frame of m.

    k is a product of height-preserving factors at single places, so the heights of the
    moved matrix at cusp_transform(c, gamma) are those of m at c and the volume
    comparison of the frame still applies."""

    matrix: AdelicMatrix
    base: AdelicMatrix
    gamma: Gamma
    label: str = ""

    def cusps(self, brute_degree: int = 1) -> list[Cusp]:
        return [cusp_transform(c, self.gamma) for c in candidate_cusps(self.base, brute_degree)]


def random_matrix(m: AdelicMatrix, rng: np.random.Generator, places: list[Place],
                  label: str = "") -> MovedMatrix:
    """A random point of the double coset of m.

    At every place of ``places`` the right factor is a constant diagonal unit, an upper
    unipotent with integral entry and a lower unipotent in pi^{c_v} O_v; off the level
    the columns are also swapped half of the time."""
    p = m.p
    zero, one = RationalFunction.const(0, p), RationalFunction.const(1, p)
    moved = m
    for v in places:
        lam, mu = (int(x) for x in rng.integers(1, p, size=2))
        moved = right_action(moved, v, (RationalFunction.const(lam, p), zero, zero, RationalFunction.const(mu, p)))
        moved = right_action(moved, v, (one, _integral_sample(v, rng, p), zero, one))
        moved = unipotent_action(moved, v, _integral_sample(v, rng, p))
        if not m.level[v] and rng.integers(0, 2):
            moved = right_action(moved, v, (zero, one, one, zero))
    gamma = random_gamma(rng, p)
    moved = replace(left_action(moved, gamma), frame=m.frame)
    return MovedMatrix(moved, m, gamma, label)


# ----------------------------------------------------------------- suites

@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail}


def mountain_shape_check(m: AdelicMatrix, cusp: Cusp) -> CheckResult:
    vals = cusp_valuations(m, cusp)
    prof = profile_from(vals)
    for e in all_etuples(m.level):
        h = vals.height(e)
        if h != prof.hstar - prof.epeak.distance(e) or h > prof.hstar:
            return CheckResult("mountain-shape", False, f"{cusp} e={e}: h={h}, profile {prof.hstar}@{prof.epeak}")
    return CheckResult("mountain-shape", True, str(cusp))


def uniqueness_check(m: AdelicMatrix, profiles: list[CuspProfile]) -> CheckResult:
    vals = [(cp.cusp, cusp_valuations(m, cp.cusp)) for cp in profiles]
    es = list(all_etuples(m.level))
    for (c1, v1), (c2, v2) in itertools.combinations(vals, 2):
        for e in es:
            s = v1.height(e) + v2.height(e)
            if s > 0:
                return CheckResult("unique-cusp", False, f"{c1}, {c2} at e={e}: sum {s}")
    return CheckResult("unique-cusp", True, f"{len(vals)} cusps")


def packing_check(m: AdelicMatrix, profiles: list[CuspProfile]) -> CheckResult:
    es = list(all_etuples(m.level))
    total = 0
    for cp in profiles:
        vals = cusp_valuations(m, cp.cusp)
        total += sum(1 for e in es if vals.height(e) > 0)
    bound = math.prod(m.level[v] + 1 for v in m.level.support())
    return CheckResult("packing", total <= bound, f"{total} <= {bound}")


def invariance_suite(m: AdelicMatrix, cusps: list[Cusp], gammas: list[Gamma],
                     unipotents: list[tuple[Place, RationalFunction]]) -> list[CheckResult]:
    """h(gamma m g, gamma^{-T} c, e) = h(m, c, e) on the supplied samples."""
    results = []
    es = list(all_etuples(m.level))
    base = {}
    for c in cusps:
        try:
            base[c] = cusp_valuations(m, c)
        except FfsnError:
            continue
    for gamma in gammas:
        moved = left_action(m, gamma)
        ok, detail = True, ""
        for c, vals in base.items():
            other = cusp_valuations(moved, cusp_transform(c, gamma))
            bad = [e for e in es if other.height(e) != vals.height(e)]
            if bad:
                ok, detail = False, f"{c} at e={bad[0]}"
                break
        results.append(CheckResult("F-invariance", ok, detail or f"gamma={[str(x) for x in gamma]}"))
    for v, u in unipotents:
        moved = unipotent_action(m, v, u)
        ok, detail = True, ""
        for c, vals in base.items():
            other = cusp_valuations(moved, c)
            bad = [e for e in es if other.height(e) != vals.height(e)]
            if bad:
                ok, detail = False, f"{c} at e={bad[0]}"
                break
        results.append(CheckResult("compact-invariance", ok, detail or f"v={v}, u={u}"))
    return results


def e_switch_check(m: AdelicMatrix, cusps: list[Cusp], v: Place) -> CheckResult:
    """h(m W_v, c, e) = h(m, c, e_switch(e, v))."""
    moved = atkin_lehner_action(m, v)
    for c in cusps:
        try:
            before = cusp_valuations(m, c)
        except FfsnError:
            continue
        after = cusp_valuations(moved, c)
        for e in all_etuples(m.level):
            if after.height(e) != before.height(e_switch(e, v, m.level)):
                return CheckResult("e-switch", False, f"{c} at e={e}, v={v}")
    return CheckResult("e-switch", True, f"v={v}")
