"""
Symmetric-group characters, characteristic-cycle multiplicities and the exact
coefficient engines behind the bound chain.

Everything here is exact: characters and multiplicities are integers (accumulated
as Fractions before the integrality assertion), B(d) and S(a, b) live in Z[sqrt q].
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterator

from sympy.utilities.iterables import partitions as _sympy_partitions

from .errors import FfsnError, IdentityViolation
from .exactalg import RationalSeries, SqrtQInt, series_coeff
from .utils.logger import logger

Partition = tuple[int, ...]


# ----------------------------------------------------------------- partitions

@lru_cache(maxsize=None)
def partitions_of(n: int) -> tuple[Partition, ...]:
    """All partitions of n, parts weakly decreasing, in reverse lexicographic order."""
    if n < 0:
        return ()
    if n == 0:
        return ((),)
    out = []
    for p in _sympy_partitions(n):
        # sympy reuses the dict between yields
        out.append(tuple(sorted((k for k, m in p.items() for _ in range(m)), reverse=True)))
    return tuple(sorted(out, reverse=True))


def z_centralizer(mu: Partition) -> int:
    """|centralizer| of a permutation with cycle type mu: prod k^{m_k} m_k!."""
    out = 1
    for k, m in Counter(mu).items():
        out *= k ** m * math.factorial(m)
    return out


def class_size(mu: Partition) -> int:
    return math.factorial(sum(mu)) // z_centralizer(mu)


def parse_partition(text: str) -> Partition:
    """"3,1,1" or "[3,1,1]"; an empty string is the empty partition."""
    text = text.strip().strip("[]()")
    if not text:
        return ()
    parts = tuple(sorted((int(x) for x in text.split(",") if x.strip()), reverse=True))
    if any(x <= 0 for x in parts):
        raise FfsnError("size-mismatch", f"partition parts must be positive: {text}")
    return parts


# ------------------------------------------------------------------ characters

def _beta_set(lam: Partition) -> tuple[int, ...]:
    # |lam| beads, so every rim hook of lam is a bead move
    ell = sum(lam)
    parts = tuple(lam) + (0,) * (ell - len(lam))
    return tuple(parts[i] + ell - 1 - i for i in range(ell))


def _from_beta(beta: list[int]) -> Partition:
    beta = sorted(beta, reverse=True)
    ell = len(beta)
    return tuple(x for x in (beta[i] - (ell - 1 - i) for i in range(ell)) if x > 0)


@lru_cache(maxsize=None)
def sn_character(lam: Partition, mu: Partition) -> int:
    """chi_lam at cycle type mu by removing rim hooks (Murnaghan-Nakayama on beta-sets)."""
    if sum(lam) != sum(mu):
        raise FfsnError("size-mismatch", f"|{lam}| != |{mu}|")
    if not mu:
        return 1
    k, rest = mu[0], mu[1:]
    beta = _beta_set(lam)
    members = set(beta)
    total = 0
    for b in beta:
        if b - k < 0 or (b - k) in members:
            continue
        sign = (-1) ** sum(1 for x in beta if b - k < x < b)
        moved = [x if x != b else b - k for x in beta]
        total += sign * sn_character(_from_beta(moved), rest)
    return total


def character_orthogonality(lam: Partition) -> bool:
    """sum over classes of |class| chi^2 = n!."""
    n = sum(lam)
    return sum(class_size(mu) * sn_character(lam, mu) ** 2 for mu in partitions_of(n)) == math.factorial(n)


# --------------------------------------------------------------- multiplicity

@dataclass(frozen=True)
class MultInput:
    conductors: tuple[int, ...]
    rank: int
    etuple: tuple[int, ...]
    wtuple: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.etuple) != len(self.conductors):
            raise FfsnError("size-mismatch", "etuple and conductors have different lengths")
        if any(k < 1 or w < 0 for k, w in self.wtuple.items()):
            raise FfsnError("size-mismatch", f"bad wtuple {self.wtuple}")

    @property
    def n(self) -> int:
        return sum(self.etuple) + sum(k * w for k, w in self.wtuple.items())

    def to_dict(self) -> dict:
        return {"conductors": list(self.conductors), "rank": self.rank,
                "etuple": list(self.etuple), "wtuple": {str(k): w for k, w in sorted(self.wtuple.items())}}


def _block_classes(size: int, weight: int) -> list[tuple[Partition, Fraction]]:
    """(cycle type, weight^{#cycles} / z) for one symmetric-group factor."""
    return [(mu, Fraction(weight ** len(mu), z_centralizer(mu))) for mu in partitions_of(size)]


def m_coeff(inp: MultInput, lam: Partition) -> int:
    """dim of the invariants of prod S_{e_x} x prod S_k^{w_k} on
    (tensor_x (C^{c_x})^{e_x}) (x) (C^rank)^{sum k w_k} (x) rho_lam."""
    if sum(lam) != inp.n:
        raise FfsnError("size-mismatch", f"|{lam}| != n = {inp.n}")
    blocks = [_block_classes(e, c) for e, c in zip(inp.etuple, inp.conductors)]
    for k, w in sorted(inp.wtuple.items()):
        blocks.extend([_block_classes(k, inp.rank)] * w)
    total = Fraction(0)
    for choice in itertools.product(*blocks):
        coeff = Fraction(1)
        cycles: list[int] = []
        for mu, c in choice:
            coeff *= c
            cycles.extend(mu)
        total += coeff * sn_character(lam, tuple(sorted(cycles, reverse=True)))
    if total.denominator != 1 or total < 0:
        raise IdentityViolation("multiplicity-not-integral", f"{inp.to_dict()} {lam}: {total}")
    return int(total)


def cycle_rank_two_closed_form(inp: MultInput) -> int:
    """rank 2, sign character: 2^{w_1} prod binom(c_x, e_x) when no k >= 3 blocks, else 0."""
    if any(w for k, w in inp.wtuple.items() if k >= 3):
        return 0
    return 2 ** inp.wtuple.get(1, 0) * math.prod(math.comb(c, e) for c, e in zip(inp.conductors, inp.etuple))


def sign_partition(n: int) -> Partition:
    return (1,) * n


def trivial_partition(n: int) -> Partition:
    return (n,) if n else ()


# --------------------------------------------------------- index identities

def intersection_number(wtuple: dict, g: int) -> int:
    """prod_{i < sum w_k} (2g - 2 - i) / prod w_k!, exact."""
    W = sum(wtuple.values())
    num = math.prod(2 * g - 2 - i for i in range(W))
    den = math.prod(math.factorial(w) for w in wtuple.values())
    if num % den:
        raise IdentityViolation("intersection-not-integral", f"{num} / {den}")
    return num // den


def etuples_of_total(conductors: tuple[int, ...], total: int) -> Iterator[tuple[int, ...]]:
    """All (e_x) >= 0 with sum e_x = total (no upper bound by c_x)."""
    if not conductors:
        if total == 0:
            yield ()
        return
    for first in range(total + 1):
        for rest in etuples_of_total(conductors[1:], total - first):
            yield (first,) + rest


def wtuple_of(mu: Partition) -> dict:
    return dict(Counter(mu))


@dataclass
class IdentityResult:
    name: str
    passed: bool
    lhs: str
    rhs: str
    params: dict

    def to_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "lhs": self.lhs, "rhs": self.rhs,
                "params": self.params}


def euler_characteristic(conductors: tuple[int, ...], rank: int, g: int) -> int:
    return (2 * g - 2) * rank + sum(conductors)


def index_identity_check(conductors: tuple[int, ...], rank: int, lam: Partition, n: int,
                         g: int) -> IdentityResult:
    """sum of m_coeff * intersection_number over ((e_x), (w_k)) against
    (1/n!) sum_sigma chi_lam(sigma) chi(C,K)^{#orbits}."""
    conductors = tuple(conductors)
    lhs = 0
    for s in range(n + 1):
        for mu in partitions_of(n - s):
            w = wtuple_of(mu)
            inter = intersection_number(w, g)
            if inter == 0:
                continue
            for e in etuples_of_total(conductors, s):
                lhs += m_coeff(MultInput(conductors, rank, e, w), lam) * inter
    chi = euler_characteristic(conductors, rank, g)
    rhs = sum(Fraction(sn_character(lam, mu) * chi ** len(mu), z_centralizer(mu)) for mu in partitions_of(n))
    params = {"conductors": list(conductors), "rank": rank, "lambda": list(lam), "n": n, "g": g}
    return IdentityResult("advanced-index", lhs == rhs, str(lhs), str(rhs), params)


# ------------------------------------------------------------ Euler characteristic

def radon_generic_series(total_conductor: int) -> RationalSeries:
    """-2u (1-u)^C / ((1-u)^4 (1+u))."""
    return RationalSeries.from_factors(
        [[0, -2]] + [[1, -1]] * total_conductor,
        [[1, -1]] * 4 + [[1, 1]],
    )


def radon_generic_direct(n: int, conductors: tuple[int, ...]) -> int:
    """sum over a + b + sum e_x = n, e_x <= c_x of (-1)^{n-1+a+b} prod binom(c_x, e_x) (ab + max(a, b))."""
    total = 0
    for s in range(n + 1):
        weight = sum(
            math.prod(math.comb(c, e) for c, e in zip(conductors, es))
            for es in etuples_of_total(tuple(conductors), s)
            if all(e <= c for e, c in zip(es, conductors))
        )
        if not weight:
            continue
        for a in range(n - s + 1):
            b = n - s - a
            total += (-1) ** (n - 1 + a + b) * weight * (a * b + max(a, b))
    return total


def radon_generic_euler(n: int, total_conductor: int, conductors: tuple[int, ...] | None = None) -> int:
    """Coefficient of u^n in the generic-stalk Euler characteristic series, cross-checked
    against the direct sum over (a, b, (e_x))."""
    if n < 0:
        raise FfsnError("unsupported", "n must be >= 0")
    coeff = int(series_coeff(radon_generic_series(total_conductor), n))
    if conductors is None:
        conductors = (1,) * total_conductor
    if sum(conductors) != total_conductor:
        raise FfsnError("size-mismatch", f"conductors {conductors} do not sum to {total_conductor}")
    direct = radon_generic_direct(n, tuple(conductors))
    if direct != coeff:
        raise IdentityViolation("euler-series", f"n={n}, C={total_conductor}: series {coeff}, direct {direct}")
    return coeff


def zero_section_mult(n: int, deg_n: int) -> int:
    """2 sum_{k < n} binom(deg N - 4, k)."""
    if deg_n < 4:
        raise FfsnError("level-too-small", f"deg N = {deg_n} < 4")
    return 2 * sum(math.comb(deg_n - 4, k) for k in range(n))


# --------------------------------------------------------- polar multiplicities

def _binom(n: int, k: int) -> int:
    if n < 0 or k < 0 or k > n:
        return 0
    return math.comb(n, k)


def polar_mult(d: int, r: int, i: int) -> int:
    """2^{2r-i} binom(d-i, d-2r) binom(d+1-r, d+1-i); zero outside the range."""
    b = _binom(d - i, d - 2 * r) * _binom(d + 1 - r, d + 1 - i)
    if b == 0:
        return 0
    return 2 ** (2 * r - i) * b


def level_polar_mult(d: int, r: int, i: int) -> int:
    """polar_mult weighted by the level factor 2^{d-2r}."""
    return 2 ** (d - 2 * r) * polar_mult(d, r, i) if 2 * r <= d else 0


def polar_series(d_max: int) -> list[dict[tuple[int, int], int]]:
    """u^d coefficients (as {(r, i): c}) of 1/((1 - u^2 v w^2)(1 - 2u - 2u^2 v w - u^2 v w^2))."""
    inner: list[Counter] = []
    for d in range(d_max + 1):
        acc: Counter = Counter()
        if d == 0:
            acc[(0, 0)] = 1
        if d >= 1:
            for key, c in inner[d - 1].items():
                acc[key] += 2 * c
        if d >= 2:
            for (r, i), c in inner[d - 2].items():
                acc[(r + 1, i + 1)] += 2 * c
                acc[(r + 1, i + 2)] += c
        inner.append(acc)
    out = []
    for d in range(d_max + 1):
        acc = Counter()
        for k in range(d // 2 + 1):
            for (r, i), c in inner[d - 2 * k].items():
                acc[(r + k, i + 2 * k)] += c
        out.append({key: c for key, c in acc.items() if c})
    return out


def polar_gen_check(d_max: int) -> IdentityResult:
    """Closed-form level polar multiplicities against the trivariate expansion."""
    series = polar_series(d_max)
    bad = []
    for d in range(d_max + 1):
        closed = {(r, i): level_polar_mult(d, r, i)
                  for r in range(d // 2 + 1) for i in range(d + 2)}
        closed = {k: c for k, c in closed.items() if c}
        if closed != series[d]:
            bad.append(d)
    if bad:
        logger.warning(f"polar generating identity fails at d = {bad}")
    return IdentityResult("polar-generating", not bad, f"d_max={d_max}",
                          "mismatch at " + ",".join(map(str, bad)) if bad else "all coefficients agree",
                          {"d_max": d_max})


# ------------------------------------------------------------- B(d), S(a, b)

@lru_cache(maxsize=None)
def _b_series(q: int) -> RationalSeries:
    return RationalSeries.from_factors(
        [],
        [[1, -1], [1, 1], [1, 1], [1, SqrtQInt(-1, -2, q)]],
    )


@lru_cache(maxsize=None)
def _b_table(q: int, n: int) -> tuple[SqrtQInt, ...]:
    return tuple(_as_sqrtq(c, q) for c in _b_series(q).coefficients(n))


def _as_sqrtq(x, q: int) -> SqrtQInt:
    return x if isinstance(x, SqrtQInt) else SqrtQInt(int(x), 0, q)


def b_coeff(d: int, q: int) -> SqrtQInt:
    """Coefficient of u^d in 1/((1-u)(1+u)^2(1-(2 sqrt q + 1)u)); zero for d < 0."""
    if d < 0:
        return SqrtQInt(0, 0, q)
    return _b_table(q, max(d, 32))[d]


def s_coeff(a: int, b: int, q: int) -> SqrtQInt:
    """Coefficient of u^a in (1+u)^b / ((1-u)(1+u)^2(1-(2 sqrt q + 1)u)), via
    S(a, b) = sum_k binom(b, k) B(a - k)."""
    out = SqrtQInt(0, 0, q)
    for k in range(min(a, b) + 1):
        out = out + math.comb(b, k) * b_coeff(a - k, q)
    return out


def s_coeff_series(a: int, b: int, q: int) -> SqrtQInt:
    """S(a, b) read directly off the series with the (1+u)^b numerator."""
    if a < 0:
        return SqrtQInt(0, 0, q)
    series = RationalSeries(tuple(math.comb(b, k) for k in range(b + 1)), _b_series(q).denominator)
    return _as_sqrtq(series_coeff(series, a), q)


def b_increasing_check(deg_n: int, q: int, a_max: int = 30) -> IdentityResult:
    """S(a, deg N) / sum_{k <= a+1} binom(deg N, k) strictly increasing for -1 <= a <= a_max."""
    def denom(a: int) -> int:
        return sum(math.comb(deg_n, k) for k in range(a + 2))

    for a in range(-1, a_max):
        lhs = s_coeff(a, deg_n, q) * denom(a + 1)
        rhs = s_coeff(a + 1, deg_n, q) * denom(a)
        if not lhs < rhs:
            return IdentityResult("B-increasing", False, str(lhs), str(rhs), {"a": a, "deg_n": deg_n, "q": q})
    return IdentityResult("B-increasing", True, "", "", {"deg_n": deg_n, "q": q, "a_max": a_max})


def b_estimate_holds(a: int, b: int, q: int) -> bool:
    """S(a, b) <= (2 sqrt q + 2)^{b-2} / (2 sqrt q (2 sqrt q + 1)^{b-3-a}), for b >= 2."""
    if b < 2:
        raise FfsnError("unsupported", "the estimate needs b >= 2")
    two_root = SqrtQInt(0, 2, q)
    x, y = two_root + 2, two_root + 1
    e = b - 3 - a
    lhs = s_coeff(a, b, q) * two_root * y ** max(e, 0)
    rhs = x ** (b - 2) * y ** max(-e, 0)
    return (rhs - lhs).sign() >= 0


def b_estimate_check(q: int, a_max: int = 30, b_max: int = 30) -> IdentityResult:
    for a in range(0, a_max + 1):
        for b in range(2, b_max + 1):
            if not b_estimate_holds(a, b, q):
                return IdentityResult("B-estimate", False, str(s_coeff(a, b, q)), "", {"a": a, "b": b, "q": q})
    return IdentityResult("B-estimate", True, "", "", {"q": q, "a_max": a_max, "b_max": b_max})
