"""
Benchmark command-line driver

    python cli.py configs/snr_sweep.yaml --trials 200 --workers 4

Reads a flat-key YAML sweep file, applies flag overrides, runs the sweep and
writes <out>_summary.csv and <out>_trials.csv.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml
from pydantic import ValidationError

from config import configure_logging
from schemas import SweepAxis, SolverVariant, SweepConfig
from utils.csv_export import emit_csv
from utils.harness import SweepResult, run_sweep

cli_logger = logging.getLogger("cli")

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
EXIT_IO_ERROR = 3


class ConfigError(ValueError):
    """Unreadable or invalid sweep configuration"""


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Run a seeded Monte Carlo sweep of the line spectral estimator",
    )
    parser.add_argument("config", nargs="?", help="YAML sweep file with flat keys")
    parser.add_argument("--m", type=int, help="Number of sensors M")
    parser.add_argument("--k", type=int, help="True model order K")
    parser.add_argument("--snapshots", type=int, help="Number of snapshots L")
    parser.add_argument("--snr", help="SNR in dB, or 'noiseless'")
    parser.add_argument("--m-sel", dest="m_sel", type=int, help="Number of observed sensors")
    parser.add_argument("--separation", type=float, help="Two-tone separation for K=2 scenarios")
    parser.add_argument("--sweep", choices=[axis.value for axis in SweepAxis], help="Sweep axis")
    parser.add_argument("--values", help="Comma-separated sweep values")
    parser.add_argument("--trials", type=int, help="Trials per sweep value")
    parser.add_argument("--seed", type=int, help="Base seed")
    parser.add_argument("--out", help="Output prefix for the CSV files")
    parser.add_argument("--workers", type=int, help="Worker processes")
    parser.add_argument("--variant", choices=[v.value for v in SolverVariant], help="Engine variant")
    parser.add_argument("--name", help="Sweep name")
    parser.add_argument(
        "--deterministic",
        action="store_true",
        default=None,
        help="Zero wall-time columns so repeated runs are byte-identical",
    )
    parser.add_argument("--store", action="store_true", help="Also save the sweep to the results store")
    parser.add_argument("--log-level", help="Logging level (default from MVESA_LOG_LEVEL)")
    return parser


def load_config_file(path: Optional[str]) -> Dict[str, Any]:
    if path is None:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = yaml.safe_load(handle) or {}
    except FileNotFoundError:
        raise ConfigError(f"Config file not found: {path}")
    except yaml.YAMLError as e:
        raise ConfigError(f"Config file {path} is not valid YAML: {e}")

    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must hold a mapping of flat keys")
    return data


def parse_values(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def merge_overrides(data: Dict[str, Any], args: argparse.Namespace) -> Dict[str, Any]:
    """Flags win over file keys"""
    merged = dict(data)
    for key in ("m", "k", "snapshots", "snr", "m_sel", "separation", "sweep",
                "trials", "seed", "out", "workers", "variant", "name", "deterministic"):
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    if args.values is not None:
        merged["values"] = parse_values(args.values)
    return merged


def load_sweep_config(args: argparse.Namespace) -> SweepConfig:
    data = merge_overrides(load_config_file(args.config), args)
    try:
        return SweepConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e))


async def store_result(result: SweepResult) -> int:
    """Persist a finished sweep; returns its id"""
    from database import AsyncSessionLocal, create_tables, engine
    from crud import SweepCRUD, TrialCRUD

    try:
        await create_tables()
        async with AsyncSessionLocal() as db:
            db_sweep = await SweepCRUD.create_sweep(db, result.config)
            await TrialCRUD.add_trials(db, db_sweep.id, result.records)
            await SweepCRUD.mark_finished(db, db_sweep.id)
            return db_sweep.id
    finally:
        # Pooled connections belong to this event loop
        await engine.dispose()


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    try:
        config = load_sweep_config(args)
    except ConfigError as e:
        cli_logger.error(f"Configuration error: {e}")
        return EXIT_CONFIG_ERROR

    result = run_sweep(config)

    try:
        summary_path, trials_path = emit_csv(result.records, config.out)
    except OSError as e:
        cli_logger.error(f"Could not write results under {Path(config.out).parent}: {e}")
        return EXIT_IO_ERROR

    if args.store:
        try:
            sweep_id = asyncio.run(store_result(result))
            cli_logger.info(f"Stored sweep as id {sweep_id}")
        except Exception as e:
            cli_logger.error(f"Could not store the sweep: {e}")
            return EXIT_IO_ERROR

    for row in result.summary:
        rmse = "nan" if row.rmse is None else f"{row.rmse:.4g}"
        print(f"{config.sweep.value}={row.sweep_value}: rmse={rmse} success={row.success_rate:.3f} "
              f"evals={row.mean_evaluations:.0f}")
    print(f"Wrote {summary_path} and {trials_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
