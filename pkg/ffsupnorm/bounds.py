"""
The explicit bound chain for |f| and the exact decision of each inequality.

Every right-hand side is an element a + b*sqrt(q) of Z[sqrt q]. The left-hand side
q^{-n}|S| comes from an exact character sum, so |f| <= R is decided as
q^n R - |S| >= 0 in Z[sqrt q] whenever S is rational, and by interval arithmetic otherwise.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import mpmath
from mpmath import iv

from .ccycle import b_coeff, s_coeff
from .errors import FfsnError, IdentityViolation
from .exactalg import CycInt, SqrtQInt
from .funfield import Divisor, Place
from .heights import (
    AdelicMatrix,
    CuspProfile,
    ETuple,
    all_etuples,
    atkin_lehner_action,
    d_alpha,
    etuple_full,
    profile_cusps,
)
from .tracefn import AdjointLValue, TraceTable
from .utils.logger import logger
from .whittaker import EvalPoint, LinearForm, linear_form_of

IV_PREC = 200

# mpmath.iv keeps its precision on a shared context; sweeps call dominates from a thread pool
_IV_LOCK = threading.Lock()


def base_term(deg_n: int, q: int) -> SqrtQInt:
    """q^{1/2} 2^{deg N - 3}."""
    if deg_n < 4:
        raise FfsnError("level-too-small", f"deg N = {deg_n} < 4")
    return SqrtQInt(0, 2 ** (deg_n - 3), q)


def _binom_weight(e: ETuple, level: Divisor) -> int:
    return math.prod(math.comb(level[v], k) for v, k in zip(e.places, e.values))


def _is_squarefree(level: Divisor) -> bool:
    return all(level[v] == 1 for v in level.support())


# ----------------------------------------------------------------- first bound

def bound_first_form(tbl: TraceTable, n: int, alpha: LinearForm) -> SqrtQInt:
    """sqrt(q) 2^{deg N-3} + q sum_{e, sum e <= n} prod binom(c_x, e_x) B(d_alpha(n, alpha, e))."""
    q, level = tbl.q, tbl.conductor
    total = SqrtQInt(0, 0, q)
    for e in all_etuples(level):
        if e.total > n:
            continue
        total = total + _binom_weight(e, level) * b_coeff(d_alpha(n, alpha, e), q)
    return base_term(tbl.deg_n, q) + total * q


def bound_first(tbl: TraceTable, point: EvalPoint) -> SqrtQInt:
    return bound_first_form(tbl, point.n, linear_form_of(point))


# --------------------------------------------------------------- cusp bounds

def cusp_term(profile: CuspProfile, level: Divisor, q: int) -> SqrtQInt:
    """sum over e' within distance h* - 2 of the peak of prod binom(c_x, e'_x) B(h* - 2 - dist)."""
    hstar, peak = profile.profile.hstar, profile.profile.epeak
    out = SqrtQInt(0, 0, q)
    for e in all_etuples(level):
        dist = peak.distance(e)
        if dist <= hstar - 2:
            out = out + _binom_weight(e, level) * b_coeff(hstar - 2 - dist, q)
    return out


def bound_cusp(tbl: TraceTable, profiles: list[CuspProfile]) -> SqrtQInt:
    """Cusp-sum bound over cusps with h* >= 2 whose peak is not at (c_x)."""
    q, level = tbl.q, tbl.conductor
    full = etuple_full(level)
    total = SqrtQInt(0, 0, q)
    for cp in profiles:
        if cp.profile.hstar >= 2 and cp.profile.epeak != full:
            total = total + cusp_term(cp, level, q)
    return base_term(tbl.deg_n, q) + total * q


def bound_squarefree(tbl: TraceTable, profiles: list[CuspProfile]) -> SqrtQInt:
    """sqrt(q) 2^{deg N-3} + q sum_{2 <= h* <= deg N / 2} S(h* - 2, deg N)."""
    if not _is_squarefree(tbl.conductor):
        raise FfsnError("unsupported", "bound_squarefree needs a squarefree level")
    q, deg_n = tbl.q, tbl.deg_n
    total = SqrtQInt(0, 0, q)
    for cp in profiles:
        h = cp.profile.hstar
        if 2 <= h and 2 * h <= deg_n:
            total = total + s_coeff(h - 2, deg_n, q)
    return base_term(deg_n, q) + total * q


def _extremal_peak(cp: CuspProfile, level: Divisor) -> bool:
    return all(k in (0, level[v]) for v, k in zip(cp.profile.epeak.places, cp.profile.epeak.values))


def bound_atkin_lehner(tbl: TraceTable, profiles: list[CuspProfile]) -> SqrtQInt:
    """Full cusp sum over h* >= 2 minus q times the largest term among cusps whose peak
    sits at a corner (every e_x in {0, c_x})."""
    q, level = tbl.q, tbl.conductor
    terms = [(cp, cusp_term(cp, level, q)) for cp in profiles if cp.profile.hstar >= 2]
    total = SqrtQInt(0, 0, q)
    for _, t in terms:
        total = total + t
    corner = [t for cp, t in terms if _extremal_peak(cp, level)]
    if corner:
        total = total - max(corner)
    return base_term(tbl.deg_n, q) + total * q


@dataclass
class AtkinLehnerResult:
    word: list[Place]
    before: SqrtQInt
    after: SqrtQInt
    steps: list[dict] = field(default_factory=list)
    invariant: bool = True
    profiles: list[CuspProfile] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"word": [str(v) for v in self.word], "before": str(self.before),
                "after": str(self.after), "invariant": self.invariant, "steps": self.steps}


def atkin_lehner_optimize(tbl: TraceTable, m: AdelicMatrix,
                          profiles: list[CuspProfile]) -> AtkinLehnerResult:
    """Switch the dominant cusp's peak to (c_x) one level place at a time."""
    level = tbl.conductor
    if not _is_squarefree(level):
        raise FfsnError("unsupported", "Atkin-Lehner optimisation needs a squarefree level")
    before = bound_atkin_lehner(tbl, profiles)
    if not profiles:
        return AtkinLehnerResult([], before, before, profiles=profiles)
    dominant = max(range(len(profiles)), key=lambda i: (profiles[i].profile.hstar, -i))
    cusps = [cp.cusp for cp in profiles]
    current, current_profiles = m, profiles
    word: list[Place] = []
    steps: list[dict] = []
    invariant = True
    for v in level.support():
        peak = current_profiles[dominant].profile.epeak
        if peak[v] == level[v]:
            continue
        moved = atkin_lehner_action(current, v)
        moved_profiles = profile_cusps(moved, cusps)
        if [cp.cusp for cp in moved_profiles] != cusps:
            raise IdentityViolation("e-switch", f"a cusp became degenerate after switching at {v}")
        value = bound_atkin_lehner(tbl, moved_profiles)
        ok = value == before
        for old, new in zip(current_profiles, moved_profiles):
            switched = old.profile.epeak.replace(v, level[v] - old.profile.epeak[v])
            if new.profile.hstar != old.profile.hstar or new.profile.epeak != switched:
                ok = False
        steps.append({"place": str(v), "bound": str(value), "ok": ok})
        invariant = invariant and ok
        word.append(v)
        current, current_profiles = moved, moved_profiles
    if not invariant:
        logger.warning(f"Atkin-Lehner bound changed along the word {[str(v) for v in word]}")
    after = bound_atkin_lehner(tbl, current_profiles)
    return AtkinLehnerResult(word, before, after, steps, invariant, current_profiles)


# -------------------------------------------------------------- final chain

def _sqrt_q_mpf(q: int):
    return mpmath.sqrt(q)


def bound_final(deg_n: int, q: int) -> tuple[mpmath.mpf, mpmath.mpf]:
    """(explicit pre-O bound, envelope ((2 sqrt q + 2) / sqrt(2 sqrt q + 1))^{deg N})."""
    if deg_n < 4:
        raise FfsnError("level-too-small", f"deg N = {deg_n} < 4")
    r = _sqrt_q_mpf(q)
    x, y = 2 * r + 2, 2 * r + 1
    binom_sum = sum(math.comb(deg_n, k) for k in range(deg_n // 2))
    ceil_half = -(-deg_n // 2)
    value = r * (2 ** (deg_n - 3)
                 + mpmath.mpf(2 ** (deg_n - 1)) / binom_sum * x ** (deg_n - 2) / y ** (ceil_half - 1))
    envelope = (x / mpmath.sqrt(y)) ** deg_n
    return value, envelope


@dataclass
class ChainLine:
    name: str
    value: float
    exact: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "exact": self.exact}


def bound_chain(deg_n: int, q: int) -> list[ChainLine]:
    """Each line of the passage from the packing bound to the envelope."""
    base = base_term(deg_n, q)
    half = deg_n // 2
    binom_sum = sum(math.comb(deg_n, k) for k in range(half))
    # packing + monotonicity: every admissible cusp costs at most the ratio at h* = floor(deg N / 2)
    packing_num = s_coeff(half - 2, deg_n, q) * (q * 2 ** deg_n)
    packing = float(base) + float(packing_num) / binom_sum
    final, envelope = bound_final(deg_n, q)
    lines = [
        ChainLine("packing", packing, f"{base} + ({packing_num})/{binom_sum}"),
        ChainLine("binomial-estimate", float(final)),
        ChainLine("envelope", float(envelope)),
        ChainLine("final/envelope", float(final / envelope)),
    ]
    if packing > float(final) * (1 + 1e-12):
        raise IdentityViolation("chain-order", f"packing line {packing} exceeds {float(final)}")
    return lines


def l2_envelope(deg_n: int, q: int) -> float:
    """(2 (1 + q^{-1/2}) / sqrt(2 sqrt q + 1))^{deg N} log(deg N)^{3/2}."""
    r = math.sqrt(q)
    return (2 * (1 + 1 / r) / math.sqrt(2 * r + 1)) ** deg_n * math.log(deg_n) ** 1.5


def l2_constant(tbl: TraceTable, adj: AdjointLValue) -> float:
    """|C_f| of the L^2-normalised form: 2^{-1/2} q^{1 - deg N / 2} L(1, ad)^{-1/2}."""
    return 2 ** -0.5 * tbl.q ** (1 - tbl.deg_n / 2) * adj.estimate ** -0.5


# ------------------------------------------------------ inequality decisions

def _abs_squared_interval(S: CycInt):
    p = S.p
    re, im = iv.mpf(0), iv.mpf(0)
    for k, c in enumerate(S.coords):
        if c:
            angle = 2 * iv.pi * k / p
            re += c * iv.cos(angle)
            im += c * iv.sin(angle)
    return re * re + im * im


def dominates(S: CycInt, n: int, q: int, R: SqrtQInt, prec: int = IV_PREC) -> bool:
    """q^{-n}|S| <= R, decided exactly when S is rational and with ``prec``-bit intervals otherwise."""
    if R.sign() < 0:
        return False
    scaled = R * q ** n
    if S.is_rational():
        return (scaled - abs(S.to_int())).sign() >= 0
    with _IV_LOCK:
        saved = iv.prec
        try:
            iv.prec = prec
            rhs = iv.mpf(scaled.a) + iv.mpf(scaled.b) * iv.sqrt(q)
            diff = rhs * rhs - _abs_squared_interval(S)
            lower, upper = diff.a, diff.b
        finally:
            iv.prec = saved
    if lower >= 0:
        return True
    if upper < 0:
        return False
    raise FfsnError("inconclusive-comparison", f"|{S}| against q^{n}*({R})")


def ratio(magnitude: float, R: SqrtQInt) -> float:
    value = float(R)
    return magnitude / value if value else math.inf
