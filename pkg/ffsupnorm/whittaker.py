"""
Whittaker-normalised newform values at upper-triangular points.

An evaluation point in the canonical frame is (n, z): div(a) = (n+2)[inf], b = 1, so the
sections of O(n) are the polynomials w of degree <= n and the point induces the linear
form alpha(w) = <z, w dT>. The form value is

    f(point) = q^{-n} * sum_{w != 0} psi0(alpha(w)) * r(div w)

with r the integer trace function (weight factors merged into the q^{-n} prefactor).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ConfigError
from .exactalg import CycInt, Poly, cyc_abs, monic_polys
from .funfield import (
    Adele,
    Divisor,
    Place,
    RationalFunction,
    divisor_of,
    residue_pairing,
    uniformizer_rational,
)
from .tracefn import TraceTable, r_value
from .utils.logger import logger


@dataclass(frozen=True)
class EvalPoint:
    n: int
    z: Adele

    @property
    def p(self) -> int:
        return self.z.p

    def label(self) -> str:
        return f"n={self.n};z={self.z}"

    def to_dict(self) -> dict:
        return {"n": self.n, "z": str(self.z)}


@dataclass(frozen=True)
class LinearForm:
    """alpha(T^k) for k = 0..n."""

    values: tuple[int, ...]
    p: int

    @property
    def n(self) -> int:
        return len(self.values) - 1

    def is_zero(self) -> bool:
        return not any(self.values)

    def __call__(self, w: Poly) -> int:
        if w.degree > self.n:
            raise ValueError(f"degree {w.degree} section for a degree-{self.n} form")
        return sum(a * w.coeff(k) for k, a in enumerate(self.values)) % self.p

    @classmethod
    def zero(cls, n: int, p: int) -> LinearForm:
        return cls((0,) * (n + 1), p)

    @classmethod
    def coefficient(cls, n: int, k: int, p: int) -> LinearForm:
        """w -> coefficient of T^k in w."""
        return cls(tuple(1 if i == k else 0 for i in range(n + 1)), p)


@dataclass(frozen=True)
class SectionDivisor:
    """Divisor of the section line spanned by the monic g: div(g) + (n - deg g)[inf]."""

    g: Poly
    inf_mult: int

    @property
    def n(self) -> int:
        return self.g.degree + self.inf_mult

    def divisor(self) -> Divisor:
        p = self.g.p
        D = Divisor.point(Place.infinity(p), self.inf_mult)
        if self.g.degree > 0:
            finite = divisor_of(RationalFunction.from_poly(self.g))
            D = D + finite + Divisor.point(Place.infinity(p), self.g.degree)
        return D


@dataclass
class WhittakerValue:
    n: int
    S: CycInt
    magnitude: float

    def to_dict(self) -> dict:
        return {"n": self.n, "S": str(self.S), "magnitude": self.magnitude}


def linear_form_of(point: EvalPoint) -> LinearForm:
    """alpha(T^k) = <z, T^k dT>."""
    p = point.p
    values = tuple(
        residue_pairing(point.z, RationalFunction.from_poly(Poly.monomial(k, p)))
        for k in range(point.n + 1)
    )
    return LinearForm(values, p)


def p_alpha(n: int, alpha: LinearForm) -> list[SectionDivisor]:
    """Effective degree-n divisors whose section line lies in ker(alpha)."""
    out = []
    for d in range(n + 1):
        for g in monic_polys(d, alpha.p):
            if alpha(g) == 0:
                out.append(SectionDivisor(g, n - d))
    return out


def _digits(d: int, p: int) -> np.ndarray:
    codes = np.arange(p ** d, dtype=np.int64)
    return (codes[:, None] // (p ** np.arange(d, dtype=np.int64))[None, :]) % p


def kernel_split(tbl: TraceTable, n: int, alpha: LinearForm) -> tuple[list[int], list[int]]:
    """Per degree d of the monic part: (sum of r over alpha(g) = 0, sum over alpha(g) != 0)."""
    if n > tbl.depth:
        raise ConfigError(f"n={n} exceeds the trace table depth {tbl.depth}")
    p = alpha.p
    vals = np.array(alpha.values, dtype=np.int64)
    in_kernel, off_kernel = [], []
    for d in range(n + 1):
        a = (_digits(d, p) @ vals[:d] + vals[d]) % p if d else np.array([vals[0] % p])
        r = tbl.monic_r[d]
        in_kernel.append(int(r[a == 0].sum()))
        off_kernel.append(int(r[a != 0].sum()))
    return in_kernel, off_kernel


def whittaker_value(tbl: TraceTable, point: EvalPoint) -> WhittakerValue:
    """Exact character sum S in Z[zeta_p] and |f(point)| = q^{-n} |S|."""
    alpha = linear_form_of(point)
    return whittaker_value_of_form(tbl, point.n, alpha)


def whittaker_value_of_form(tbl: TraceTable, n: int, alpha: LinearForm) -> WhittakerValue:
    p = alpha.p
    in_kernel, off_kernel = kernel_split(tbl, n, alpha)
    buckets = [0] * p
    for d in range(n + 1):
        r_inf = tbl.r_inf(n - d)
        # the F_p^* multiples of g: all land on bucket 0 in the kernel, else one per nonzero bucket
        buckets[0] += (p - 1) * in_kernel[d] * r_inf
        for k in range(1, p):
            buckets[k] += off_kernel[d] * r_inf
    S = CycInt.from_buckets(buckets, p)
    magnitude = cyc_abs(S) / float(p) ** n
    return WhittakerValue(n, S, magnitude)


def radon_stalk_trace(tbl: TraceTable, n: int, alpha: LinearForm) -> int:
    """-sum over D in P(alpha) of r(D)."""
    return -sum(r_value(tbl, sd.divisor()) for sd in p_alpha(n, alpha))


def divisor_sum(tbl: TraceTable, n: int) -> int:
    """sum of r(D) over all effective D of degree n, by direct divisor enumeration."""
    return -radon_stalk_trace(tbl, n, LinearForm.zero(n, tbl.p))


def brute_force_sum(tbl: TraceTable, n: int, alpha: LinearForm) -> CycInt:
    """sum_{w != 0} psi0(alpha(w)) r(div w), one section at a time."""
    p = alpha.p
    buckets = [0] * p
    for d in range(n + 1):
        for g in monic_polys(d, p):
            r = tbl.r_monic(g) * tbl.r_inf(n - d)
            for lam in range(1, p):
                buckets[(lam * alpha(g)) % p] += r
    return CycInt.from_buckets(buckets, p)


# ----------------------------------------------------------------- z sweeps

def principal_part_point(v: Place, j: int) -> Adele:
    """z supported at v: z_v = v^{-j} at a finite place, T^{-j} at infinity."""
    k = j if v.is_infinite else -j
    return Adele(v.p, {v: uniformizer_rational(v, k)})


def z_basis(places: list[Place], j_max: int) -> Iterator[tuple[str, Adele]]:
    """The zero class followed by single-place points, labelled by their parseable text."""
    p = places[0].p if places else None
    if p is not None:
        yield "0", Adele(p, {})
    for v in places:
        for j in range(1, j_max + 1):
            z = principal_part_point(v, j)
            yield str(z), z


def random_combination(basis: list[Adele], rng: np.random.Generator, p: int) -> Adele:
    z = Adele(p, {})
    for b in basis:
        c = int(rng.integers(0, p))
        if c:
            z = z + b.scale(RationalFunction.const(c, p))
    return z


def cuspidal_support(tbl: TraceTable, zs: list[Adele], n_cap: int, window: int) -> int | None:
    """Smallest n0 with |f| = 0 at every sampled z for all n0 <= n <= n0 + window."""
    zero_from = {}
    for n in range(min(n_cap, tbl.depth) + 1):
        zero_from[n] = all(
            whittaker_value(tbl, EvalPoint(n, z)).S == 0 for z in zs
        )
    for n0 in range(0, min(n_cap, tbl.depth) - window + 1):
        if all(zero_from[n] for n in range(n0, n0 + window + 1)):
            logger.info(f"cuspidal support: values vanish for {n0} <= n <= {n0 + window}")
            return n0
    logger.warning(f"cuspidal support not found below n = {n_cap}")
    return None
