"""
Pipeline drivers: surface scans, form sweeps with the bound chain, height suites,
identity grids and the L^2 exploration. Each driver returns a pydantic report.
"""

from __future__ import annotations

import itertools
import math
import time
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Optional

import numpy as np
from tqdm import tqdm

from .bounds import (
    atkin_lehner_optimize,
    bound_chain,
    bound_cusp,
    bound_final,
    bound_first,
    bound_squarefree,
    dominates,
    l2_constant,
    l2_envelope,
    ratio,
)
from .ccycle import (
    IdentityResult,
    MultInput,
    b_estimate_check,
    b_increasing_check,
    character_orthogonality,
    cycle_rank_two_closed_form,
    etuples_of_total,
    index_identity_check,
    m_coeff,
    partitions_of,
    polar_gen_check,
    radon_generic_direct,
    radon_generic_euler,
    s_coeff,
    s_coeff_series,
    sign_partition,
    wtuple_of,
)
from .config import RunConfig
from .errors import ConfigError, FfsnError
from .exactalg import Poly, SqrtQInt
from .funfield import Adele, Divisor, Place, RationalFunction
from .heights import (
    AdelicMatrix,
    CheckResult,
    CuspProfile,
    MovedMatrix,
    all_etuples,
    canonical_matrix,
    candidate_cusps,
    cusp_transform,
    cusp_valuations,
    e_switch_check,
    invariance_suite,
    mountain_shape_check,
    packing_check,
    profile_cusps,
    random_matrix,
    uniqueness_check,
    volume_comparison,
)
from .models import (
    BoundReport,
    BoundValue,
    CuspRecord,
    FormValue,
    HeightReport,
    IdentityReport,
    L2Report,
    ScanReport,
    SupnormReport,
    SurfaceSummary,
)
from .tracefn import (
    EllipticSurface,
    TraceTable,
    adjoint_l_value,
    build_trace_table,
    conductor,
    l_polynomial,
    residue_field,
)
from .utils.logger import logger
from .whittaker import (
    EvalPoint,
    LinearForm,
    brute_force_sum,
    cuspidal_support,
    divisor_sum,
    radon_stalk_trace,
    random_combination,
    whittaker_value,
    whittaker_value_of_form,
    z_basis,
)


# --------------------------------------------------------------------- surfaces

def surface_from_config(cfg: RunConfig) -> EllipticSurface:
    if cfg.a4 is None:
        raise ConfigError("no surface given: set a4 and a6, or run curve-scan")
    return EllipticSurface(Poly.from_low(cfg.a4, cfg.q), Poly.from_low(cfg.a6, cfg.q))


def summarize(E: EllipticSurface, N: Divisor) -> SurfaceSummary:
    return SurfaceSummary(p=E.p, a4=E.a4.low(), a6=E.a6.low(), conductor=str(N),
                          deg_n=N.degree, squarefree=N.is_squarefree())


def _coefficient_lists(degree: int, p: int) -> Iterator[list[int]]:
    for coeffs in itertools.product(range(p), repeat=degree + 1):
        yield list(coeffs)


def curve_scan(cfg: RunConfig, progress: bool = True) -> tuple[ScanReport, list[EllipticSurface]]:
    """Surfaces with squarefree conductor on degree-one places and deg N in the scan range."""
    p = cfg.q
    report = ScanReport(p=p, examined=0)
    found: list[EllipticSurface] = []
    seen: set[tuple] = set()
    total = p ** (cfg.scan_a4_degree + 1) * p ** (cfg.scan_a6_degree + 1)
    pairs = itertools.product(_coefficient_lists(cfg.scan_a4_degree, p),
                              _coefficient_lists(cfg.scan_a6_degree, p))
    if progress:
        pairs = tqdm(pairs, total=total, desc="curve scan")
    for a4, a6 in pairs:
        report.examined += 1
        E = EllipticSurface(Poly.from_low(a4, p), Poly.from_low(a6, p))
        try:
            N = conductor(E)
        except FfsnError as exc:
            report.rejected[exc.code] = report.rejected.get(exc.code, 0) + 1
            continue
        if N.degree not in cfg.scan_deg_n:
            report.rejected["deg-n-out-of-range"] = report.rejected.get("deg-n-out-of-range", 0) + 1
            continue
        minimal = E.minimal()
        key = (tuple(minimal.a4.low()), tuple(minimal.a6.low()))
        if key in seen:
            continue
        seen.add(key)
        found.append(minimal)
        report.accepted.append(summarize(minimal, N))
        logger.info(f"✅ accepted {minimal} with N = {N}")
        if len(found) >= cfg.max_instances:
            break
    if not found:
        raise FfsnError("no-instances", f"no admissible surface among {report.examined} candidates")
    return report, found


def trace_table(E: EllipticSurface, cfg: RunConfig, progress: bool = True) -> TraceTable:
    return build_trace_table(E, cfg.depth, cfg.threads, progress)


def surfaces_for(cfg: RunConfig) -> list[EllipticSurface]:
    if cfg.a4 is not None:
        return [surface_from_config(cfg)]
    _, found = curve_scan(cfg)
    return found


# ------------------------------------------------------------------ sweep points

def sweep_places(tbl: TraceTable, cfg: RunConfig) -> list[Place]:
    places = [tbl.infinity]
    for d in range(1, cfg.z_place_degree + 1):
        places += [Place(tbl.p, mu) for mu, _ in residue_field(tbl.p, d).places()]
    return places


def sweep_adeles(tbl: TraceTable, cfg: RunConfig) -> list[tuple[str, Adele]]:
    """The principal-part basis followed by ``random_points`` seeded combinations."""
    basis = list(z_basis(sweep_places(tbl, cfg), cfg.z_pole_order))
    rng = np.random.default_rng(cfg.seed)
    nonzero = [z for _, z in basis[1:]]
    extra = [(f"random-{i}", random_combination(nonzero, rng, tbl.p)) for i in range(cfg.random_points)]
    return basis + extra


def sweep_points(tbl: TraceTable, cfg: RunConfig) -> list[tuple[str, EvalPoint]]:
    zs = sweep_adeles(tbl, cfg)
    return [(f"{label}|n={n}", EvalPoint(n, z)) for n in range(cfg.n_max + 1) for label, z in zs]


# ------------------------------------------------------------------ single points

def form_value(tbl: TraceTable, point: EvalPoint, label: Optional[str] = None) -> FormValue:
    wv = whittaker_value(tbl, point)
    return FormValue(point=label or point.label(), n=point.n, S=str(wv.S), magnitude=wv.magnitude)


def _bound_value(R: SqrtQInt) -> BoundValue:
    return BoundValue(exact=str(R), value=float(R))


def height_report(tbl: TraceTable, point: EvalPoint, cfg: RunConfig,
                  label: Optional[str] = None) -> HeightReport:
    m = canonical_matrix(point, tbl.conductor, cfg.prec)
    profiles = profile_cusps(m, candidate_cusps(m, cfg.brute_force_degree))
    deg_bound = cfg.cusp_deg_bound(point.n, tbl.deg_n)
    vol = volume_comparison(m, profiles)
    cusps = [CuspRecord(cusp=str(cp.cusp), hstar=cp.profile.hstar,
                        epeak={str(v): k for v, k in zip(cp.profile.epeak.places, cp.profile.epeak.values)})
             for cp in profiles if cp.profile.hstar >= 1 and cp.cusp.degree <= deg_bound]
    return HeightReport(point=label or point.label(), cusps=cusps, complete=vol.complete,
                        violations=vol.violations, gaps=vol.gaps)


def _matrix_checks(m: AdelicMatrix, profiles: list[CuspProfile], level_places: list[Place]) -> list[CheckResult]:
    """Shape, uniqueness, packing, invariance and e-switch checks on one matrix."""
    p = m.p
    cusps = [cp.cusp for cp in profiles]
    results = [mountain_shape_check(m, c) for c in cusps]
    results.append(uniqueness_check(m, profiles))
    results.append(packing_check(m, profiles))
    one, zero, T = (RationalFunction.const(1, p), RationalFunction.const(0, p),
                    RationalFunction.from_poly(Poly.T(p)))
    gammas = [(zero, one, one, zero), (one, one, zero, one), (one, T, zero, one)]
    unipotents = [(v, u) for v in level_places for u in ((one, T.inverse()) if v.is_infinite else (one, T))]
    results += invariance_suite(m, cusps, gammas, unipotents)
    results += [e_switch_check(m, cusps, v) for v in level_places]
    return results


def height_suite(tbl: TraceTable, point: EvalPoint, cfg: RunConfig) -> list[CheckResult]:
    """The matrix checks on the canonical matrix at one point."""
    m = canonical_matrix(point, tbl.conductor, cfg.prec)
    profiles = profile_cusps(m, candidate_cusps(m, cfg.brute_force_degree))
    results = _matrix_checks(m, profiles, tbl.level_places())
    failed = [r for r in results if not r.passed]
    if failed:
        logger.warning(f"❌ {len(failed)} height checks failed at {point.label()}")
    return results


def moving_places(tbl: TraceTable, extra: int = 2) -> list[Place]:
    """The level places, infinity and the first ``extra`` degree-one places off the level."""
    places = set(tbl.level_places()) | {tbl.infinity}
    off = [Place(tbl.p, mu) for mu, _ in residue_field(tbl.p, 1).places()]
    places.update([v for v in off if not tbl.conductor[v]][:extra])
    return sorted(places, key=lambda v: v.sort_key())


def random_matrices(tbl: TraceTable, point: EvalPoint, cfg: RunConfig) -> list[MovedMatrix]:
    """``random_points`` seeded points of the double coset of the canonical matrix."""
    m = canonical_matrix(point, tbl.conductor, cfg.prec)
    rng = np.random.default_rng(cfg.seed)
    places = moving_places(tbl)
    return [random_matrix(m, rng, places, f"random-{i}") for i in range(cfg.random_points)]


def _transport_check(moved: MovedMatrix, canonical: list[CuspProfile]) -> CheckResult:
    """Heights of the moved matrix at the moved cusps against those of the base."""
    es = list(all_etuples(moved.base.level))
    for cp in canonical:
        before = cusp_valuations(moved.base, cp.cusp)
        after = cusp_valuations(moved.matrix, cusp_transform(cp.cusp, moved.gamma))
        bad = [e for e in es if after.height(e) != before.height(e)]
        if bad:
            return CheckResult("transport", False, f"{cp.cusp} at e={bad[0]}")
    return CheckResult("transport", True, f"{len(canonical)} cusps")


def random_matrix_suite(tbl: TraceTable, point: EvalPoint, cfg: RunConfig) -> list[CheckResult]:
    """The matrix checks and the volume comparison on seeded random matrices."""
    results = []
    for moved in tqdm(random_matrices(tbl, point, cfg), desc="random matrices", leave=False):
        canonical = profile_cusps(moved.base, candidate_cusps(moved.base, cfg.brute_force_degree))
        profiles = profile_cusps(moved.matrix, moved.cusps(cfg.brute_force_degree))
        checks = _matrix_checks(moved.matrix, profiles, tbl.level_places())
        checks.append(_transport_check(moved, canonical))
        vol = volume_comparison(moved.matrix, profiles)
        checks.append(CheckResult("volume-comparison", not vol.violations,
                                  f"{len(vol.violations)} violations, {len(vol.gaps)} gaps"))
        results += [CheckResult(r.name, r.passed, f"{moved.label}: {r.detail}") for r in checks]
    failed = [r for r in results if not r.passed]
    if failed:
        logger.warning(f"❌ {len(failed)} random-matrix checks failed at {point.label()}")
    else:
        logger.info(f"✅ {cfg.random_points} random matrices passed at {point.label()}")
    return results


def evaluate_point(tbl: TraceTable, point: EvalPoint, cfg: RunConfig,
                   label: Optional[str] = None) -> BoundReport:
    """|f(point)| against every bound of the chain that applies to this level."""
    q, n = tbl.q, point.n
    wv = whittaker_value(tbl, point)
    report = BoundReport(point=label or point.label(), n=n, S=str(wv.S), magnitude=wv.magnitude)

    def record(name: str, R: SqrtQInt, exact: bool = True) -> None:
        report.bounds[name] = _bound_value(R)
        report.passed[name] = dominates(wv.S, n, q, R)
        if exact:
            report.worst_ratio = max(report.worst_ratio, ratio(wv.magnitude, R))

    record("first", bound_first(tbl, point))

    m = canonical_matrix(point, tbl.conductor, cfg.prec)
    profiles = profile_cusps(m, candidate_cusps(m, cfg.brute_force_degree))
    vol = volume_comparison(m, profiles)
    report.verified = vol.complete
    report.passed["volume"] = not vol.violations
    high = [cp for cp in profiles if cp.profile.hstar >= 2]
    record("cusp", bound_cusp(tbl, high))
    if tbl.conductor.is_squarefree():
        record("squarefree", bound_squarefree(tbl, high))
        al = atkin_lehner_optimize(tbl, m, high)
        record("atkin_lehner", al.after)
        report.passed["atkin_lehner_invariant"] = al.invariant
        report.atkin_lehner_word = [str(v) for v in al.word]

    final, _ = bound_final(tbl.deg_n, q)
    report.bounds["final"] = BoundValue(exact="", value=float(final))
    report.passed["final"] = wv.magnitude <= float(final) * (1 + 1e-12)
    return report


# Bounds that hold unconditionally; the cusp-sum bounds only once the enumeration is complete.
_UNCONDITIONAL = ("first", "final", "volume", "atkin_lehner_invariant")


def is_violation(report: BoundReport) -> bool:
    for name, ok in report.passed.items():
        if not ok and (report.verified or name in _UNCONDITIONAL):
            return True
    return False


# ------------------------------------------------------------------------ supnorm

def _map_points(fn, items: list, threads: int, desc: str) -> list:
    """Ordered parallel map with a progress bar."""
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        return list(tqdm(pool.map(fn, items), total=len(items), desc=desc))


def supnorm_run(tbl: TraceTable, cfg: RunConfig) -> tuple[SupnormReport, list[BoundReport]]:
    """Sweep the form, check the bound chain at every point and compare with the envelope."""
    started = time.perf_counter()
    if cfg.n_max > tbl.depth:
        raise ConfigError(f"n_max={cfg.n_max} exceeds the trace table depth {tbl.depth}")
    points = sweep_points(tbl, cfg)
    logger.info(f"📝 sweeping {len(points)} points on {tbl.surface}")
    reports = _map_points(lambda item: evaluate_point(tbl, item[1], cfg, item[0]),
                          points, cfg.threads, "bounds")
    violations = [r for r in reports if is_violation(r)]
    unverified = sum(1 for r in reports if not r.verified)
    best = max(reports, key=lambda r: r.magnitude) if reports else None
    final, envelope = bound_final(tbl.deg_n, tbl.q)
    sup = best.magnitude if best else 0.0

    summary = SupnormReport(
        surface=summarize(tbl.surface, tbl.conductor),
        n_max=cfg.n_max, points=len(reports), sup=sup,
        argmax=best.point if best else None,
        violations=violations, unverified=unverified,
        bound_final=float(final), envelope=float(envelope),
        theorem_ratio=sup / float(envelope),
        chain=[line.to_dict() for line in bound_chain(tbl.deg_n, tbl.q)],
    )
    if tbl.depth >= tbl.deg_n - 4:
        summary.l_polynomial = l_polynomial(tbl, tbl.depth).to_dict()
    if cfg.adjoint_d_max <= tbl.depth:
        adj = adjoint_l_value(tbl, cfg.adjoint_d_max, cfg.window_constant)
        summary.adjoint = adj.to_dict()
        summary.l2_constant = l2_constant(tbl, adj)
        summary.l2_envelope_ratio = sup * summary.l2_constant / l2_envelope(tbl.deg_n, tbl.q)
    summary.elapsed_seconds = time.perf_counter() - started
    if violations:
        logger.error(f"❌ {len(violations)} bound violations on {tbl.surface}")
    else:
        logger.info(f"✅ sup |f| = {sup:.6g} at {summary.argmax}; ratio to envelope {summary.theorem_ratio:.3g}")
    return summary, reports


# --------------------------------------------------------------------- identities

_GRIDS = {
    "small": {"q": (5, 7, 9), "n": 5, "index_n": 3, "g": 2, "rank": 2, "places": 2, "c": 2,
              "polar": 8, "radon_n": 6, "radon_c": 6, "deg_n": range(4, 13), "ab": 12},
    "full": {"q": (5, 7, 9, 11, 13), "n": 8, "index_n": 6, "g": 4, "rank": 3, "places": 3, "c": 3,
             "polar": 12, "radon_n": 10, "radon_c": 8, "deg_n": range(4, 21), "ab": 30},
}


def grid_limits(grid: str) -> str:
    """One-line description of what a grid covers; the grids are samples, not exhaustive."""
    if grid not in _GRIDS:
        raise ConfigError(f"unknown identity grid '{grid}'")
    G = _GRIDS[grid]
    qs = ",".join(str(q) for q in G["q"])
    return (f"{grid}: characters n<={G['n']}; multiplicities over <=2 level places, c_x<={G['c']}; "
            f"index identity n<={G['index_n']}, <={G['places']} places, rank<={G['rank']}, g<={G['g']}; "
            f"Euler series n<={G['radon_n']}, sum c_x<={G['radon_c']}; polar terms<={G['polar']}; "
            f"B and S grids q in {{{qs}}}, a,b<={G['ab']}")


def _conductor_tuples(places: int, c_max: int) -> Iterator[tuple[int, ...]]:
    for k in range(places + 1):
        yield from itertools.combinations_with_replacement(range(1, c_max + 1), k)


def _safe(name: str, fn, params: dict) -> IdentityResult:
    try:
        return fn()
    except FfsnError as exc:
        return IdentityResult(name, False, exc.code, exc.message, params)


def _integral(inp: MultInput) -> IdentityResult:
    """m_coeff raises multiplicity-not-integral on a fractional or negative value."""
    values = [m_coeff(inp, lam) for lam in partitions_of(inp.n)]
    return IdentityResult("multiplicity-integral", True, str(sum(values)), "", inp.to_dict())


def identity_results(grid: str) -> Iterator[IdentityResult]:
    if grid not in _GRIDS:
        raise ConfigError(f"unknown identity grid '{grid}'")
    G = _GRIDS[grid]

    for n in range(1, G["n"] + 1):
        for lam in partitions_of(n):
            yield IdentityResult("character-orthogonality", character_orthogonality(lam), "", "",
                                 {"lambda": list(lam)})

    # integrality and the cycle-rank-two closed form
    for n in range(1, G["n"] + 1):
        for conductors in _conductor_tuples(min(G["places"], 2), G["c"]):
            for s in range(n + 1):
                for e in etuples_of_total(conductors, s):
                    for mu in partitions_of(n - s):
                        for rank in (1, 2):
                            inp = MultInput(conductors, rank, e, wtuple_of(mu))
                            params = inp.to_dict()
                            yield _safe("multiplicity-integral", lambda: _integral(inp), params)
                            if rank == 2:
                                lhs = m_coeff(inp, sign_partition(n))
                                rhs = cycle_rank_two_closed_form(inp)
                                yield IdentityResult("cycle-rank-two", lhs == rhs, str(lhs), str(rhs), params)

    for n in range(0, G["index_n"] + 1):
        for conductors in _conductor_tuples(G["places"], G["c"]):
            for rank in range(1, G["rank"] + 1):
                for g in range(0, G["g"] + 1):
                    for lam in partitions_of(n):
                        params = {"conductors": list(conductors), "rank": rank, "lambda": list(lam), "g": g}
                        yield _safe("advanced-index",
                                    lambda: index_identity_check(conductors, rank, lam, n, g), params)

    for n in range(1, G["radon_n"] + 1):
        for conductors in _conductor_tuples(G["places"], G["c"]):
            total = sum(conductors)
            if total > G["radon_c"]:
                continue
            params = {"n": n, "conductors": list(conductors)}
            yield _safe("radon-euler", lambda: IdentityResult(
                "radon-euler", True, str(radon_generic_euler(n, total, conductors)),
                str(radon_generic_direct(n, conductors)), params), params)

    yield polar_gen_check(G["polar"])

    for q in G["q"]:
        for deg_n in G["deg_n"]:
            yield b_increasing_check(deg_n, q, G["ab"])
        yield b_estimate_check(q, G["ab"], G["ab"])
        bad = [(a, b) for a in range(8) for b in range(8) if s_coeff(a, b, q) != s_coeff_series(a, b, q)]
        yield IdentityResult("S-series", not bad, str(bad[:1]), "", {"q": q})


def radon_identity_results(tbl: TraceTable, n_max: int, samples: int, seed: int) -> Iterator[IdentityResult]:
    """S = q sum_{P(alpha)} r - sum_D r on the zero form and ``samples`` random forms per n,
    and the bucketed sum against brute force."""
    rng = np.random.default_rng(seed)
    q = tbl.q
    for n in range(min(n_max, tbl.depth) + 1):
        total = divisor_sum(tbl, n)
        forms = [LinearForm.zero(n, q)]
        forms += [LinearForm(tuple(int(x) for x in rng.integers(0, q, n + 1)), q) for _ in range(samples)]
        for alpha in forms:
            S = whittaker_value_of_form(tbl, n, alpha).S
            rhs = -q * radon_stalk_trace(tbl, n, alpha) - total
            params = {"n": n, "alpha": list(alpha.values)}
            yield IdentityResult("radon-identity", S.is_rational() and S.to_int() == rhs,
                                 str(S), str(rhs), params)
            brute = brute_force_sum(tbl, n, alpha)
            yield IdentityResult("bucketed-sum", brute == S, str(brute), str(S), params)


def verify_identities(grid: str, tbl: Optional[TraceTable] = None, samples: int = 20,
                      seed: int = 0) -> IdentityReport:
    report = IdentityReport(grid=grid, limits=grid_limits(grid))
    results = list(identity_results(grid))
    if tbl is not None:
        results += list(radon_identity_results(tbl, min(4, tbl.depth), samples, seed))
        report.limits += f"; Radon identity n<={min(4, tbl.depth)}, zero form plus {samples} random forms per n"
    for r in results:
        report.results.append(r.to_dict())
        if r.passed:
            report.passed += 1
        else:
            report.failed += 1
            logger.warning(f"❌ {r.name} failed: {r.params}")
    logger.info(f"📝 identities: {report.passed} passed, {report.failed} failed")
    return report


# ------------------------------------------------------------------------ L^2 slice

def _section_values(tbl: TraceTable, n: int) -> np.ndarray:
    """A[w] = r(div w) on F_p^{n+1}, w indexed by sum_k w_k p^k; A[0] = 0."""
    p = tbl.p
    A = np.zeros(p ** (n + 1), dtype=np.float64)
    for d in range(n + 1):
        codes = np.arange(p ** d, dtype=np.int64)
        weights = p ** np.arange(d, dtype=np.int64)
        digits = (codes[:, None] // weights[None, :]) % p if d else np.zeros((1, 0), dtype=np.int64)
        values = tbl.monic_r[d].astype(np.float64) * tbl.r_inf(n - d)
        for lam in range(1, p):
            idx = ((lam * digits) % p) @ weights + lam * p ** d if d else np.array([lam])
            A[idx] = values
    return A


def plancherel_slice(tbl: TraceTable, n: int) -> dict:
    """sum over all q^{n+1} forms alpha of |f(n, alpha)|^2, by FFT and by the divisor sum."""
    p = tbl.p
    A = _section_values(tbl, n)
    S = np.fft.fftn(A.reshape((p,) * (n + 1)))
    lhs = float(np.sum(np.abs(S) ** 2)) / p ** (2 * n)
    squares = sum(float(np.sum(tbl.monic_r[d].astype(np.float64) ** 2)) * tbl.r_inf(n - d) ** 2
                  for d in range(n + 1))
    rhs = p ** (n + 1) * (p - 1) * squares / p ** (2 * n)
    return {"n": n, "plancherel_lhs": lhs, "plancherel_rhs": rhs,
            "normalized": squares / p ** (2 * n)}


def l2_explore(tbl: TraceTable, cfg: RunConfig) -> L2Report:
    report = L2Report(surface=summarize(tbl.surface, tbl.conductor))
    zs = [z for _, z in sweep_adeles(tbl, cfg)]
    report.support = cuspidal_support(tbl, zs, cfg.support_n_cap, cfg.support_window)
    if report.support is None:
        report.flags.append("support-unbounded")
    adj = adjoint_l_value(tbl, min(cfg.adjoint_d_max, tbl.depth), cfg.window_constant)
    report.adjoint = adj.to_dict()
    if not adj.in_window:
        report.flags.append("adjoint-outside-window")
    q = tbl.q
    limit = adj.estimate * (1 - q ** -2) * math.prod(
        1 / (1 + q ** -v.degree) for v in tbl.level_places())
    n_top = min(cfg.support_n_cap, tbl.depth, cfg.n_max)
    for n in range(n_top + 1):
        row = plancherel_slice(tbl, n)
        row["limit"] = limit
        if not math.isclose(row["plancherel_lhs"], row["plancherel_rhs"], rel_tol=1e-9, abs_tol=1e-9):
            report.flags.append(f"plancherel-mismatch-n{n}")
        report.per_n.append(row)
    last = report.per_n[-1]
    report.lhs, report.rhs = last["normalized"], limit
    report.ratio = last["normalized"] / limit if limit else None
    if report.ratio is not None and not 0.5 <= report.ratio <= 2:
        report.flags.append("ratio-outside-expected-range")
    return report
