"""CLI subcommands: curve-scan, table, eval-form, heights, bound, supnorm, verify-identities, l2-explore."""

import argparse
import sys
from pathlib import Path
from typing import Any, Optional

from pydantic import BaseModel

from . import driver
from .config import RunConfig, RunProfile, config
from .errors import ConfigError, EnumerationIncomplete, FfsnError
from .funfield import parse_adele
from .heights import canonical_matrix, height_profile, parse_cusp
from .store import dump_json, load_table, save_table, write_csv, write_json, write_jsonl
from .tracefn import TraceTable
from .utils.logger import add_run_log, logger, remove_run_log
from .whittaker import EvalPoint


def _json_print(payload: Any) -> None:
    print(dump_json(payload))


def _coefficients(value: str) -> list[int]:
    """"1,0,3" -> [1, 0, 3], lowest degree first."""
    try:
        return [int(x) for x in value.replace(" ", "").split(",") if x]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {value!r}") from exc


def _add_common(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--profile", type=str, default=None, help="Profile name in the YAML file")
    cmd.add_argument("--config", type=str, default=None, help="Path to the profiles YAML")
    cmd.add_argument("--q", type=int, default=None)
    cmd.add_argument("--a4", type=_coefficients, default=None, help="a4 coefficients, low to high")
    cmd.add_argument("--a6", type=_coefficients, default=None, help="a6 coefficients, low to high")
    cmd.add_argument("--table", type=Path, default=None, help="Stored trace table (JSON)")
    cmd.add_argument("--threads", type=int, default=None)
    cmd.add_argument("--out", type=str, default=None, help="Output directory")


def _add_point(cmd: argparse.ArgumentParser) -> None:
    cmd.add_argument("--n", type=int, required=True)
    cmd.add_argument("--z", type=str, default="0", help='Adele such as "T:1/T^2;inf:T"')


def register_commands(sub: argparse._SubParsersAction) -> None:
    scan_cmd = sub.add_parser("curve-scan", help="Scan surfaces with admissible conductor")
    _add_common(scan_cmd)
    scan_cmd.add_argument("--max-instances", type=int, default=None)

    table_cmd = sub.add_parser("table", help="Build and store the trace table of a surface")
    _add_common(table_cmd)
    table_cmd.add_argument("--depth", type=int, default=None)
    table_cmd.add_argument("--path", type=Path, required=True)

    eval_cmd = sub.add_parser("eval-form", help="Whittaker-normalised value at one point")
    _add_common(eval_cmd)
    _add_point(eval_cmd)

    heights_cmd = sub.add_parser("heights", help="Cusp height profiles at one point")
    _add_common(heights_cmd)
    _add_point(heights_cmd)
    heights_cmd.add_argument("--cusp", type=str, default=None, help='"f1:f2" or "f1/f2"')
    heights_cmd.add_argument("--suite", action="store_true", help="Run the invariance suite")
    heights_cmd.add_argument("--random-matrices", action="store_true",
                             help="Also run the checks on random_points seeded random matrices of the double coset")
    heights_cmd.add_argument("--strict", action="store_true", help="Exit 3 when the enumeration is incomplete")

    bound_cmd = sub.add_parser("bound", help="Bound chain at one point or over a sweep")
    _add_common(bound_cmd)
    bound_cmd.add_argument("--n", type=int, default=None)
    bound_cmd.add_argument("--z", type=str, default="0")
    bound_cmd.add_argument("--sweep", type=str, default=None, help="Sweep every point of this profile")
    bound_cmd.add_argument("--strict", action="store_true", help="Exit 3 when the enumeration is incomplete")

    sup_cmd = sub.add_parser("supnorm", help="Full sweep, bound checks and sup-norm summary")
    _add_common(sup_cmd)
    sup_cmd.add_argument("--n-max", type=int, default=None)
    sup_cmd.add_argument("--csv", action="store_true", help="Also write the sweep as CSV")

    ident_cmd = sub.add_parser(
        "verify-identities", help="Exact identity and inequality grids",
        description=(
            "Checks exact identities on fixed finite grids. The grids sample the parameter space "
            "and are not exhaustive:\n  "
            + "\n  ".join(driver.grid_limits(g) for g in ("small", "full"))
            + "\nWith a surface, the Radon identity runs on the zero form plus --samples "
              "random forms for every n <= 4."),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(ident_cmd)
    ident_cmd.add_argument("--grid", choices=["small", "full"], default=None)
    ident_cmd.add_argument("--samples", type=int, default=20, help="Random forms per n for the Radon identity")

    l2_cmd = sub.add_parser("l2-explore", help="Cuspidal support, Plancherel slices and L^2 ratio")
    _add_common(l2_cmd)


def _run_config(args: argparse.Namespace, **extra) -> RunConfig:
    profiles = RunProfile(args.config)
    return profiles.load(args.profile, q=args.q, a4=args.a4, a6=args.a6, threads=args.threads,
                         output_dir=args.out, **extra)


def _table(args: argparse.Namespace, cfg: RunConfig) -> TraceTable:
    if args.table is not None:
        return load_table(args.table)
    return driver.trace_table(driver.surface_from_config(cfg), cfg)


def _point(args: argparse.Namespace, tbl: TraceTable) -> EvalPoint:
    if args.n is None or args.n < 0:
        raise ConfigError("--n must be a non-negative integer")
    return EvalPoint(args.n, parse_adele(args.z, tbl.p))


def _emit(model: BaseModel, out_dir: Path, name: str) -> None:
    write_json(model, out_dir / name)
    _json_print(model)


def handle(args: argparse.Namespace) -> Optional[int]:
    """Handle a subcommand. Returns the exit code."""
    command = args.command

    if command == "curve-scan":
        cfg = _run_config(args, max_instances=args.max_instances)
        report, _ = driver.curve_scan(cfg)
        _emit(report, Path(cfg.output_dir), "scan.json")
        return 0

    if command == "table":
        cfg = _run_config(args, table_depth=args.depth)
        tbl = driver.trace_table(driver.surface_from_config(cfg), cfg)
        save_table(tbl, args.path)
        _json_print(driver.summarize(tbl.surface, tbl.conductor))
        return 0

    if command == "eval-form":
        cfg = _run_config(args)
        tbl = _table(args, cfg)
        _json_print(driver.form_value(tbl, _point(args, tbl), args.z))
        return 0

    if command == "heights":
        cfg = _run_config(args)
        tbl = _table(args, cfg)
        point = _point(args, tbl)
        if args.cusp:
            m = canonical_matrix(point, tbl.conductor, cfg.prec)
            prof = height_profile(m, parse_cusp(args.cusp, tbl.p))
            _json_print({"point": point.label(), "cusp": args.cusp, **prof.to_dict()})
            return 0
        report = driver.height_report(tbl, point, cfg)
        if args.suite:
            report.checks = [r.to_dict() for r in driver.height_suite(tbl, point, cfg)]
        if args.random_matrices:
            report.checks += [r.to_dict() for r in driver.random_matrix_suite(tbl, point, cfg)]
        _json_print(report)
        if report.violations or any(not c["passed"] for c in report.checks):
            return 1
        if not report.complete:
            logger.warning(f"⚠️ cusp enumeration incomplete at {point.label()}")
            return EnumerationIncomplete.exit_code if args.strict else 0
        return 0

    if command == "bound":
        cfg = _run_config(args)
        tbl = _table(args, cfg)
        if args.sweep:
            sweep_cfg = RunProfile(args.config).load(args.sweep, threads=cfg.threads)
            points = driver.sweep_points(tbl, sweep_cfg)
            reports = [driver.evaluate_point(tbl, p, sweep_cfg, label) for label, p in points]
            write_jsonl(reports, Path(cfg.output_dir) / "bounds.jsonl")
            for r in reports:
                print(r.model_dump_json())
            return 1 if any(driver.is_violation(r) for r in reports) else 0
        report = driver.evaluate_point(tbl, _point(args, tbl), cfg)
        _json_print(report)
        if driver.is_violation(report):
            return 1
        if not report.verified:
            logger.warning("⚠️ cusp-sum bounds unverified: enumeration incomplete")
            return EnumerationIncomplete.exit_code if args.strict else 0
        return 0

    if command == "supnorm":
        cfg = _run_config(args, n_max=args.n_max)
        out_dir = Path(cfg.output_dir)
        tables = [load_table(args.table)] if args.table else [
            driver.trace_table(E, cfg) for E in driver.surfaces_for(cfg)]
        code = 0
        run_log = add_run_log(out_dir / "supnorm.log")
        try:
            for i, tbl in enumerate(tables):
                logger.info(f"🚀 supnorm run {i + 1}/{len(tables)}: {tbl.surface}")
                summary, reports = driver.supnorm_run(tbl, cfg)
                write_jsonl(reports, out_dir / f"sweep-{i}.jsonl")
                if args.csv:
                    write_csv([r.model_dump(mode="json") for r in reports], out_dir / f"sweep-{i}.csv")
                _emit(summary, out_dir, f"supnorm-{i}.json")
                if summary.violations:
                    code = 1
        finally:
            remove_run_log(run_log)
        return code

    if command == "verify-identities":
        cfg = _run_config(args)
        tbl = _table(args, cfg) if (args.table or cfg.a4 is not None) else None
        report = driver.verify_identities(args.grid or cfg.identity_grid, tbl, args.samples, cfg.seed)
        _emit(report, Path(cfg.output_dir), "identities.json")
        return 1 if report.failed else 0

    if command == "l2-explore":
        cfg = _run_config(args)
        tbl = _table(args, cfg)
        report = driver.l2_explore(tbl, cfg)
        for flag in report.flags:
            logger.warning(f"⚠️ {flag}")
        _emit(report, Path(cfg.output_dir), "l2.json")
        return 0

    return None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ffsupnorm",
        description="Exact sup-norm checks for newforms from elliptic surfaces over F_q(T)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    register_commands(sub)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logger.setLevel(config.LOG_LEVEL.upper())
    try:
        code = handle(args)
    except FfsnError as exc:
        logger.error(f"❌ {exc}")
        _json_print(exc.to_dict())
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        logger.exception(f"❌ unexpected failure: {exc}")
        return 1
    if code:
        logger.error(f"❌ {args.command} finished with exit code {code}")
    else:
        logger.info(f"✅ {args.command} done")
    return code or 0


if __name__ == "__main__":
    sys.exit(main())
