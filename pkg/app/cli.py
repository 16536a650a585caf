# app/cli.py
"""
Command-line front end.

    python -m app.cli price configs/gbm_case1.ini
    python -m app.cli oracle configs/vg_case1.ini --kind mc --paths 200000
    python -m app.cli export-lp configs/cir_case1.ini --out-dir lp/
    python -m app.cli selftest
"""
import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import ValidationError

from app.errors import ConfigurationError, MomentPricingError
from app.models.schemas import RunConfig
from app.services import pricing_service

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_CONFIG = 2


def _load(args) -> RunConfig:
    config = RunConfig.from_file(args.config)
    updates: Dict[str, Any] = {}
    for flag, field in (("n_min", "N_min"), ("n_max", "N_max"), ("solver", "solver"), ("oracle", "oracle"),
                        ("output", "output"), ("workers", "workers"), ("basis", "basis")):
        value = getattr(args, flag, None)
        if value is not None:
            updates[field] = value
    if getattr(args, "p_star_shortcut", False):
        updates["p_star_shortcut"] = True
    mc_updates = {k: getattr(args, k) for k in ("paths", "steps_per_year", "seed") if getattr(args, k, None) is not None}
    if not updates and not mc_updates:
        return config
    data = config.model_dump()
    data.update(updates)
    data["mc"].update(mc_updates)
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigurationError(f"invalid command-line override: {e}") from e


def _write(text: str, out: Optional[str]) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
        logger.info(f"💾 wrote {out}")
    else:
        sys.stdout.write(text)


def cmd_price(args) -> int:
    config = _load(args)
    report = pricing_service.run(config)
    _write(pricing_service.format_report(report, config.output), args.out)
    return EXIT_PARTIAL if report.failed else EXIT_OK


def cmd_oracle(args) -> int:
    config = _load(args)
    if args.kind:
        try:
            config = RunConfig.model_validate({**config.model_dump(), "oracle": args.kind, "reference": None})
        except ValidationError as e:
            raise ConfigurationError(str(e)) from e
    if config.oracle == "none":
        raise ConfigurationError("no oracle selected; use --kind mc or --kind exact")
    problem = pricing_service.build_problem(config)
    value, se, source = pricing_service.oracle_reference(config, problem)
    se_text = f" ± {se:.6f}" if se is not None else ""
    _write(f"{config.example} {config.case}: {source} {value:.6f}{se_text}\n", args.out)
    return EXIT_OK


def cmd_export_lp(args) -> int:
    config = _load(args)
    problem = pricing_service.build_problem(config)
    paths = pricing_service.export_ladder(problem, config.n_values, args.out_dir, config.basis)
    logger.info(f"💾 exported {len(paths)} LP files to {args.out_dir}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    checks = pricing_service.run_selftest(args.solver)
    for c in checks:
        sys.stdout.write(f"{'PASS' if c.passed else 'FAIL'}  {c.name}  {c.detail}\n")
    return EXIT_OK if all(c.passed for c in checks) else EXIT_PARTIAL


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", help="Run configuration (INI)")
    p.add_argument("--n-min", dest="n_min", type=int, help="Override N_min")
    p.add_argument("--n-max", dest="n_max", type=int, help="Override N_max")
    p.add_argument("--solver", help="LP solver adapter (highs | simplex)")
    p.add_argument("--basis", choices=["unit", "monomial"], help="Adjoint test-function family")
    p.add_argument("--workers", type=int, help="Concurrent per-N solves")
    p.add_argument("--paths", type=int, help="Monte Carlo paths")
    p.add_argument("--steps-per-year", dest="steps_per_year", type=int, help="Monte Carlo steps per unit time")
    p.add_argument("--seed", type=int, help="Monte Carlo seed")
    p.add_argument("--p-star-shortcut", dest="p_star_shortcut", action="store_true",
                   help="Apply p* outside the LP (vg-dko only)")
    p.add_argument("--out", help="Write output to this file instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="LP moment bounds for double-barrier contracts")
    parser.add_argument("--log-level", default="INFO", help="Logging level (DEBUG, INFO, WARNING, ...)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("price", help="Solve the bound ladder for a configuration")
    _add_run_flags(p)
    p.add_argument("--oracle", choices=["none", "mc", "exact"], help="Reference price source")
    p.add_argument("--output", choices=["text", "csv"], help="Report format")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("oracle", help="Reference price only (Monte Carlo or exact)")
    _add_run_flags(p)
    p.add_argument("--kind", choices=["mc", "exact"], help="Oracle to run")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("export-lp", help="Write the LPs as MPS files, one per (N, sense)")
    _add_run_flags(p)
    p.add_argument("--out-dir", dest="out_dir", default="lp", help="Output directory")
    p.set_defaults(func=cmd_export_lp)

    p = sub.add_parser("selftest", help="Run the invariant checks")
    p.add_argument("--solver", help="LP solver adapter")
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigurationError as e:
        logger.error(f"❌ configuration error: {e}")
        sys.stderr.write(f"configuration error: {e}\n")
        return EXIT_CONFIG
    except MomentPricingError as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_PARTIAL


if __name__ == "__main__":
    sys.exit(main())
