"""
Trace function of an elliptic surface over P^1_{F_p}.

Given y^2 = x^3 + a4(T) x + a6(T), this module finds the conductor, counts points on
every fibre of small degree and extends the Frobenius traces multiplicatively to
effective divisors (the integer Hecke convention r(n[v]) = a r(n-1) - q_v r(n-2)).

Residue fields F_{p^d} are tabulated once per degree with numpy (exp/log tables over a
primitive modulus), so a fibre count is a handful of vectorised lookups.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from sympy import factorint, legendre_symbol
from sympy.polys.domains import ZZ
from sympy.polys.galoistools import gf_irreducible_p, gf_mul, gf_pow_mod
from tqdm import tqdm

from .errors import ConfigError, FfsnError
from .exactalg import Poly, monic_polys, poly_code, poly_factor
from .funfield import Divisor, Place
from .utils.logger import logger


# ------------------------------------------------------------------ ResidueField

class ResidueField:
    """F_{p^d} = F_p[X]/(mu) with mu primitive. Elements are integer codes sum c_j p^j."""

    def __init__(self, p: int, d: int):
        self.p, self.d = p, d
        self.Q = p ** d
        self.modulus = self._primitive_modulus()
        self.powers = p ** np.arange(d, dtype=np.int64)
        codes = np.arange(self.Q, dtype=np.int64)
        self.digit_table = (codes[:, None] // self.powers[None, :]) % p
        self.exp, self.log = self._tables()
        self._places: list[tuple[Poly, int]] | None = None
        self._roots: dict[Poly, int] = {}

    def _primitive_modulus(self) -> Poly:
        order = self.Q - 1
        primes = list(factorint(order)) if order > 1 else []
        x = [1, 0]
        for mu in monic_polys(self.d, self.p):
            if self.d > 1 and not gf_irreducible_p(list(mu.c), self.p, ZZ):
                continue
            if self.d == 1 and mu.coeff(0) == 0:
                continue
            if all(gf_pow_mod(x, order // ell, list(mu.c), self.p, ZZ) != [1] for ell in primes):
                return mu
        raise FfsnError("unsupported", f"no primitive modulus of degree {self.d} over F_{self.p}")

    def _tables(self) -> tuple[np.ndarray, np.ndarray]:
        p, d = self.p, self.d
        # X^d = -sum mu_k X^k
        tail = [(-self.modulus.coeff(k)) % p for k in range(d)]
        exp = np.zeros(self.Q - 1, dtype=np.int64)
        log = np.full(self.Q, -1, dtype=np.int64)
        state = [1] + [0] * (d - 1)
        for i in range(self.Q - 1):
            code = sum(c * p ** j for j, c in enumerate(state))
            exp[i] = code
            log[code] = i
            top = state[-1]
            state = [0] + state[:-1]
            state = [(s + top * t) % p for s, t in zip(state, tail)]
        return exp, log

    # vectorised arithmetic on codes
    def add(self, a, b):
        return ((self.digit_table[a] + self.digit_table[b]) % self.p) @ self.powers

    def neg(self, a):
        return ((-self.digit_table[a]) % self.p) @ self.powers

    def mul(self, a, b):
        a, b = np.asarray(a), np.asarray(b)
        la, lb = self.log[a], self.log[b]
        out = self.exp[(la + lb) % (self.Q - 1)]
        return np.where((la < 0) | (lb < 0), 0, out)

    def inv(self, a: int) -> int:
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in a residue field")
        return int(self.exp[(-self.log[a]) % (self.Q - 1)])

    def frobenius(self, a):
        a = np.asarray(a)
        out = self.exp[(self.log[a] * self.p) % (self.Q - 1)]
        return np.where(a == 0, 0, out)

    def chi(self, a) -> np.ndarray:
        """Quadratic character: 0 at 0, +1 on squares, -1 otherwise."""
        la = self.log[np.asarray(a)]
        return np.where(la < 0, 0, np.where(la % 2 == 0, 1, -1))

    def eval_poly(self, f: Poly, x: int) -> int:
        acc = 0
        for c in f.c:
            acc = int(self.add(self.mul(acc, x), c))
        return acc

    def places(self) -> list[tuple[Poly, int]]:
        """(minimal polynomial, root code) for every Frobenius orbit of size exactly d."""
        if self._places is not None:
            return self._places
        frob = self.frobenius(np.arange(self.Q, dtype=np.int64)).tolist()
        seen = [False] * self.Q
        out = []
        for theta in range(self.Q):
            if seen[theta]:
                continue
            orbit = [theta]
            nxt = frob[theta]
            while nxt != theta:
                orbit.append(nxt)
                nxt = frob[nxt]
            for x in orbit:
                seen[x] = True
            if len(orbit) != self.d:
                continue
            out.append((self._minimal_polynomial(orbit), theta))
        out.sort(key=lambda t: t[0].sort_key())
        self._places = out
        self._roots = {mu: theta for mu, theta in out}
        return out

    def root_of(self, f: Poly) -> int:
        """A root of the monic irreducible f of degree d."""
        self.places()
        if f not in self._roots:
            raise FfsnError("unsupported", f"{f} is not a place of degree {self.d}")
        return self._roots[f]

    def _minimal_polynomial(self, orbit: list[int]) -> Poly:
        # prod (X - theta_i), coefficient codes low-to-high
        coeffs = [1]
        for theta in orbit:
            shifted = [0] + coeffs
            scaled = [int(self.mul(c, self.neg(theta))) for c in coeffs] + [0]
            coeffs = [int(self.add(a, b)) for a, b in zip(shifted, scaled)]
        if any(c >= self.p for c in coeffs):
            raise FfsnError("unsupported", "minimal polynomial left the prime field")
        return Poly.from_low(coeffs, self.p)

    def rank(self, rows: list[list[int]]) -> int:
        """Rank of a matrix with entries in this field (Gaussian elimination on codes)."""
        m = [list(r) for r in rows]
        rank, col = 0, 0
        ncols = len(m[0]) if m else 0
        while rank < len(m) and col < ncols:
            pivot = next((i for i in range(rank, len(m)) if m[i][col]), None)
            if pivot is None:
                col += 1
                continue
            m[rank], m[pivot] = m[pivot], m[rank]
            inv = self.inv(m[rank][col])
            m[rank] = [int(self.mul(x, inv)) for x in m[rank]]
            for i in range(len(m)):
                if i != rank and m[i][col]:
                    factor = self.neg(m[i][col])
                    m[i] = [int(self.add(x, self.mul(factor, y))) for x, y in zip(m[i], m[rank])]
            rank += 1
            col += 1
        return rank


@lru_cache(maxsize=None)
def residue_field(p: int, d: int) -> ResidueField:
    return ResidueField(p, d)


# -------------------------------------------------------------- EllipticSurface

@dataclass(frozen=True)
class EllipticSurface:
    """y^2 = x^3 + a4(T) x + a6(T) over F_p(T), p >= 5."""

    a4: Poly
    a6: Poly

    @property
    def p(self) -> int:
        return self.a4.p

    def discriminant(self) -> Poly:
        return (self.a4 ** 3 * 4 + self.a6 ** 2 * 27) * (-16)

    def is_isotrivial(self) -> bool:
        """j constant: a4 = 0, a6 = 0, or a4^3 / a6^2 constant."""
        if self.a4.is_zero() or self.a6.is_zero():
            return True
        f, g = self.a4 ** 3, self.a6 ** 2
        return f * g.lc == g * f.lc

    def validate(self) -> None:
        if self.p < 5:
            raise ConfigError(f"p={self.p} < 5 is not supported for short Weierstrass models")
        if self.discriminant().is_zero():
            raise FfsnError("unsupported", "singular generic fibre")
        if self.is_isotrivial():
            raise FfsnError("unsupported", "isotrivial surface (constant j-invariant)")

    def minimal(self) -> EllipticSurface:
        """Divide out v^4 | a4, v^6 | a6 at every finite place."""
        a4, a6 = self.a4, self.a6
        g = a4.gcd(a6)
        if g.degree <= 0:
            return self
        _, factors = poly_factor(g)
        for v, _ in factors:
            while (a4 % v ** 4).is_zero() and (a6 % v ** 6).is_zero():
                a4, a6 = a4 // v ** 4, a6 // v ** 6
        return EllipticSurface(a4, a6)

    def infinity_chart(self) -> tuple[Poly, Poly]:
        """(a4', a6') in s = 1/T: a4'(s) = s^{4k} a4(1/s), a6'(s) = s^{6k} a6(1/s)."""
        k = max(-(-max(self.a4.degree, 0) // 4), -(-max(self.a6.degree, 0) // 6))
        return self.a4.reverse(4 * k), self.a6.reverse(6 * k)

    def fibre(self, v: Place) -> tuple[ResidueField, int, int]:
        """Residue field and the reduced coefficients (A, B) at a root of v."""
        if v.is_infinite:
            a4, a6 = self.infinity_chart()
            return residue_field(self.p, 1), a4.coeff(0), a6.coeff(0)
        field_ = residue_field(self.p, v.degree)
        theta = field_.root_of(v.poly)
        return field_, field_.eval_poly(self.a4, theta), field_.eval_poly(self.a6, theta)

    def reduction_type(self, v: Place) -> str:
        """'good', 'multiplicative' or 'additive' for the minimal model."""
        field_, A, B = self.fibre(v)
        four_a3 = field_.mul(4, field_.mul(A, field_.mul(A, A)))
        delta = int(field_.add(four_a3, field_.mul(27 % self.p, field_.mul(B, B))))
        if delta != 0:
            return "good"
        return "additive" if A == 0 else "multiplicative"

    def to_dict(self) -> dict:
        return {"p": self.p, "a4": self.a4.low(), "a6": self.a6.low()}

    @classmethod
    def from_dict(cls, data: dict) -> EllipticSurface:
        p = int(data["p"])
        return cls(Poly.from_low(data["a4"], p), Poly.from_low(data["a6"], p))

    def __str__(self) -> str:
        return f"y^2 = x^3 + ({self.a4})*x + ({self.a6})"


def _fibre_trace(field_: ResidueField, A: int, B: int) -> int:
    """-sum_x chi(x^3 + A x + B); equals q + 1 - #E for good and nodal fibres alike."""
    x = np.arange(field_.Q, dtype=np.int64)
    y = field_.add(field_.add(field_.mul(field_.mul(x, x), x), field_.mul(A, x)), B)
    return -int(field_.chi(y).sum())


def _split_sign(field_: ResidueField, A: int, B: int) -> int:
    """Tangent test at the node x0 = -3B/(2A): split iff 3*x0 is a square."""
    p = field_.p
    x0 = int(field_.mul(field_.neg(int(field_.mul(3, B))), field_.inv(int(field_.mul(2, A)))))
    t = int(field_.mul(3, x0))
    if field_.d == 1:
        return legendre_symbol(t, p)
    return int(field_.chi(t))


def count_points(E: EllipticSurface, v: Place) -> int:
    """a_v = q_v + 1 - #E(kappa_v); +-1 at multiplicative places (split / non-split)."""
    kind = E.reduction_type(v)
    if kind == "additive":
        raise FfsnError("non-squarefree-conductor", f"additive reduction at {v}")
    field_, A, B = E.fibre(v)
    a = _fibre_trace(field_, A, B)
    if kind == "multiplicative":
        sign = _split_sign(field_, A, B)
        if a != sign:
            raise FfsnError("unsupported", f"tangent test disagrees with the count at {v}")
    elif abs(a) > 2 * math.sqrt(field_.Q):
        raise FfsnError("unsupported", f"Weil bound fails at {v}: a={a}")
    return a


def conductor(E: EllipticSurface) -> Divisor:
    """Squarefree conductor supported on degree-one places, including infinity."""
    E.validate()
    E = E.minimal()
    p = E.p
    places: dict[Place, int] = {}
    _, factors = poly_factor(E.discriminant())
    for g, _ in factors:
        v = Place(p, g)
        if E.reduction_type(v) == "additive":
            raise FfsnError("non-squarefree-conductor", f"additive reduction at {v}")
        if v.degree > 1:
            raise FfsnError("non-rational-singularity", f"bad place {v} of degree {v.degree}")
        places[v] = 1
    inf = Place.infinity(p)
    kind = E.reduction_type(inf)
    if kind == "additive":
        raise FfsnError("non-squarefree-conductor", "additive reduction at infinity")
    if kind == "multiplicative":
        places[inf] = 1
    N = Divisor(places)
    if N.degree < 4:
        raise FfsnError("level-too-small", f"deg N = {N.degree} < 4")
    return N


# ------------------------------------------------------------------ TraceTable

@dataclass(frozen=True)
class LocalFactor:
    a: int
    kind: str  # "good" | "multiplicative"

    def r(self, k: int, qv: int) -> int:
        """r(k[v]) in the integer Hecke convention."""
        if self.kind == "multiplicative":
            return self.a ** k
        prev, cur = 1, self.a
        if k == 0:
            return 1
        for _ in range(k - 1):
            prev, cur = cur, self.a * cur - qv * prev
        return cur


@dataclass
class TraceTable:
    """Frobenius data per place up to ``depth`` plus r-values of all monic polynomials."""

    surface: EllipticSurface
    conductor: Divisor
    factors: dict[Place, LocalFactor]
    depth: int
    monic_r: list[np.ndarray] = field(default_factory=list, repr=False)

    @property
    def p(self) -> int:
        return self.surface.p

    @property
    def q(self) -> int:
        return self.surface.p

    @property
    def deg_n(self) -> int:
        return self.conductor.degree

    @property
    def infinity(self) -> Place:
        return Place.infinity(self.p)

    def level_places(self) -> list[Place]:
        return self.conductor.support()

    def places(self, degree: int | None = None) -> list[Place]:
        out = [v for v in self.factors if degree is None or v.degree == degree]
        return sorted(out, key=lambda v: v.sort_key())

    def local(self, v: Place) -> LocalFactor:
        if v not in self.factors:
            kind = "multiplicative" if self.conductor[v] else "good"
            return LocalFactor(count_points(self.surface, v), kind)
        return self.factors[v]

    def r_local(self, v: Place, k: int) -> int:
        return self.local(v).r(k, self.q ** v.degree)

    def r_inf(self, k: int) -> int:
        return self.r_local(self.infinity, k)

    def r_monic(self, f: Poly) -> int:
        """r(div_finite f) for monic f, from the tabulated array when deg f <= depth."""
        if f.degree <= self.depth and self.monic_r:
            return int(self.monic_r[f.degree][poly_code(f)])
        _, factors = poly_factor(f)
        out = 1
        for g, k in factors:
            out *= self.r_local(Place(self.p, g), k)
        return out


def r_value(tbl: TraceTable, D: Divisor) -> int:
    """Multiplicative extension of the local Hecke recursions to an effective divisor."""
    if not D.is_effective():
        raise FfsnError("negative-multiplicity", f"{D} is not effective")
    out = 1
    for v, k in D.items():
        out *= tbl.r_local(v, k)
    return out


def _monic_tables(p: int, depth: int, factors: dict[Place, LocalFactor]) -> list[np.ndarray]:
    """r of every monic polynomial of degree <= depth, indexed by ``poly_code``."""
    if p ** depth * 2 ** depth * (depth + 1) >= 2 ** 62:
        raise ConfigError(f"table depth {depth} too large for 64-bit r-values at p={p}")
    tables = [np.zeros(p ** d, dtype=np.int64) for d in range(depth + 1)]
    finite = sorted((v for v in factors if not v.is_infinite), key=lambda v: v.sort_key())
    local = [(list(v.poly.c), v.degree, factors[v], p ** v.degree) for v in finite]

    def code_of(coeffs: list[int]) -> int:
        # coeffs high-to-low and monic; skip the leading 1
        code = 0
        for c in coeffs[1:]:
            code = code * p + int(c)
        return code

    def visit(start: int, coeffs: list[int], deg: int, r: int) -> None:
        tables[deg][code_of(coeffs)] = r
        for i in range(start, len(local)):
            vc, dv, lf, qv = local[i]
            if deg + dv > depth:
                break
            f, k = coeffs, 1
            while deg + k * dv <= depth:
                f = [int(x) for x in gf_mul(f, vc, p, ZZ)]
                visit(i + 1, f, deg + k * dv, r * lf.r(k, qv))
                k += 1

    visit(0, [1], 0, 1)
    return tables


def assemble_trace_table(E: EllipticSurface, N: Divisor, factors: dict[Place, LocalFactor],
                         depth: int) -> TraceTable:
    """A table from already counted local factors (fresh or reloaded from disk)."""
    tbl = TraceTable(E, N, dict(sorted(factors.items(), key=lambda t: t[0].sort_key())), depth)
    tbl.monic_r = _monic_tables(E.p, depth, tbl.factors)
    return tbl


def build_trace_table(E: EllipticSurface, depth: int, threads: int = 1,
                      progress: bool = False) -> TraceTable:
    """Count points on every fibre of degree <= depth and tabulate r on monic polynomials."""
    N = conductor(E)
    E = E.minimal()
    p = E.p
    factors: dict[Place, LocalFactor] = {}
    inf = Place.infinity(p)
    factors[inf] = LocalFactor(count_points(E, inf), "multiplicative" if N[inf] else "good")
    for d in range(1, depth + 1):
        field_ = residue_field(p, d)
        places = [Place(p, mu) for mu, _ in field_.places()]

        def work(v: Place) -> tuple[Place, LocalFactor]:
            return v, LocalFactor(count_points(E, v), "multiplicative" if N[v] else "good")

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            results = pool.map(work, places)
            if progress:
                results = tqdm(results, total=len(places), desc=f"degree {d} fibres")
            for v, lf in results:
                factors[v] = lf
        logger.debug(f"counted {len(places)} places of degree {d}")
    tbl = assemble_trace_table(E, N, factors, depth)
    logger.info(f"trace table for {E}: deg N = {N.degree}, depth {depth}, {len(factors)} places")
    return tbl


# -------------------------------------------------------------- L-polynomial

@dataclass
class LPolynomial:
    coeffs: list[int]
    inverse_roots: list[complex]

    def to_dict(self) -> dict:
        return {"coeffs": self.coeffs,
                "inverse_root_abs": [abs(r) for r in self.inverse_roots]}


def l_coefficients(tbl: TraceTable, n_max: int) -> list[int]:
    """c_n = sum over effective D of degree n of r(D), n = 0..n_max."""
    if n_max > tbl.depth:
        raise ConfigError(f"n_max={n_max} exceeds table depth {tbl.depth}")
    monic_sums = [int(t.sum()) for t in tbl.monic_r]
    return [sum(monic_sums[d] * tbl.r_inf(n - d) for d in range(n + 1)) for n in range(n_max + 1)]


def l_polynomial(tbl: TraceTable, n_max: int) -> LPolynomial:
    """The L-polynomial of the surface's H^1: degree deg N - 4, inverse roots of size q."""
    deg = tbl.deg_n - 4
    if n_max < deg:
        raise ConfigError(f"n_max={n_max} < deg N - 4 = {deg}")
    c = l_coefficients(tbl, n_max)
    tail = [n for n in range(deg + 1, n_max + 1) if c[n] != 0]
    if tail or c[deg] == 0:
        raise FfsnError("l-degree-violation", f"coefficients {c} for expected degree {deg}")
    roots = np.roots(list(reversed(c[: deg + 1]))) if deg > 0 else np.array([])
    inverse = [complex(1 / r) for r in roots]
    for r in inverse:
        if abs(abs(r) - tbl.q) > 1e-6 * tbl.q:
            raise FfsnError("l-degree-violation", f"inverse root {r} off the circle |u| = {tbl.q}")
    return LPolynomial(c[: deg + 1], inverse)


# ------------------------------------------------------------ adjoint L-value

@dataclass
class AdjointLValue:
    estimate: float
    error_bound: float
    log_tail: float
    window: tuple[float, float]
    in_window: bool

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "error_bound": self.error_bound,
                "window": list(self.window), "in_window": self.in_window}


def adjoint_trace(lf: LocalFactor, qv: int, k: int) -> float:
    """tr(Frob^k | ad) with unitary normalisation; q_v^{-k} on the Steinberg line."""
    if lf.kind == "multiplicative":
        return qv ** (-k)
    s_prev, s = 2, lf.a  # power sums alpha^j + beta^j
    for _ in range(k - 1):
        s_prev, s = s, lf.a * s - qv * s_prev
    return s * s / qv ** k - 1


def adjoint_l_value(tbl: TraceTable, d_max: int, window_constant: float = 8.0) -> AdjointLValue:
    """Truncated Euler product for L(1, ad) over places of degree <= d_max, with tail bound."""
    if d_max < 1:
        raise ConfigError("d_max must be >= 1")
    if d_max > tbl.depth:
        raise ConfigError(f"d_max={d_max} exceeds table depth {tbl.depth}")
    q = tbl.q
    log_l = 0.0
    for n in range(1, d_max + 1):
        a_n = 0.0
        for v, lf in tbl.factors.items():
            if n % v.degree == 0:
                a_n += v.degree * adjoint_trace(lf, q ** v.degree, n // v.degree)
        log_l += a_n * q ** (-n) / n
    dim = 2 * tbl.deg_n - 3
    tail = dim * q ** (-(d_max + 1) / 2) / ((d_max + 1) * (1 - q ** -0.5))
    estimate = math.exp(log_l)
    bound = (window_constant * math.log(dim)) ** 3
    window = (1 / bound, bound)
    return AdjointLValue(estimate, estimate * (math.exp(tail) - 1), tail, window,
                         window[0] <= estimate <= window[1])
