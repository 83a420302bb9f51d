"""Closed-form analysis commands: bounds, complexity, latency, fit."""

import functools
from pathlib import Path
from typing import Callable, Optional, Tuple

import click
import structlog

from components.output import emit, output_options, parse_range
from config.settings import settings
from core.complexity import (
    HardwareProfile,
    complexity_budget,
    complexity_order,
    complexity_report,
    max_order,
)
from core.fb_limits import bounds_table
from core.tradeoff import ModelTable, constrained_rate_curve, fit_table, read_points
from utils.error_handlers import handle_cli_errors

logger = structlog.get_logger(__name__)

EPSILON = click.FloatRange(0.0, 1.0, min_open=True, max_open=True)
POSITIVE = click.FloatRange(0.0, min_open=True)


def hardware_options(required: bool = True) -> Callable:
    """Add --ts/--tb/--alpha/--procs; the command receives ``hw`` (or None)."""

    def decorator(func: Callable) -> Callable:
        @click.option("--ts", "ts", type=POSITIVE, required=required, help="Symbol duration T_s (s).")
        @click.option("--tb", "tb", type=click.FloatRange(0.0), required=required,
                      help="Time per binary operation T_b (s).")
        @click.option("--alpha", "alpha", type=click.FloatRange(0.0, 1.0), default=0.0, show_default=True,
                      help="Parallelisable fraction of decoding.")
        @click.option("--procs", "procs", type=click.IntRange(1), default=1, show_default=True,
                      help="Processor count.")
        @functools.wraps(func)
        def wrapper(*args, ts: Optional[float], tb: Optional[float], alpha: float, procs: int, **kwargs):
            hw = None
            if ts is not None and tb is not None:
                hw = HardwareProfile(T_s=ts, T_b=tb, alpha=alpha, P=procs)
            return func(*args, hw=hw, **kwargs)

        return wrapper

    return decorator


@click.command("bounds")
@click.option("--n", "n", type=click.IntRange(1), required=True, help="Blocklength.")
@click.option("--eps", "eps", type=EPSILON, required=True, help="Target codeword error probability.")
@click.option("--snr-db-range", "snr_db_range", default="0:0.1:8", show_default=True,
              help="SNR grid start:step:stop in dB.")
@click.option("--lmax", "lmax", type=POSITIVE, default=None, help="Latency budget L_M (s); adds column M.")
@click.option("--models", "models_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Model table JSON, required with --lmax.")
@hardware_options(required=False)
@output_options(default="csv")
@handle_cli_errors
def bounds_command(n: int, eps: float, snr_db_range: str, lmax, models_path, hw, fmt: str):
    """Capacity, dispersion and normal-approximation rate over an SNR grid."""
    grid = parse_range(snr_db_range, "--snr-db-range")
    if lmax is not None:
        if models_path is None or hw is None:
            raise click.UsageError("--lmax needs --models, --ts and --tb")
        curve = constrained_rate_curve(ModelTable.load(models_path), n, eps, lmax, hw, grid)
        rows = bounds_table(n, eps, grid)
        curve.insert(2, "V", [row.V for row in rows])
        emit(curve[["snr_db", "C", "V", "R", "M"]], fmt)
        return
    emit([{"snr_db": p.rho_db, "C": p.C, "V": p.V, "R": p.R} for p in bounds_table(n, eps, grid)], fmt)


@click.command("complexity")
@click.option("--n", "n", type=click.IntRange(1), required=True)
@click.option("--k", "k", type=click.IntRange(1), required=True)
@click.option("--q", "q", type=click.IntRange(1), default=None, help="Quantization bits.")
@click.option("--s", "s", type=str, required=True, help="Order, e.g. 2, 2.5 or 5/2.")
@output_options()
@handle_cli_errors
def complexity_command(n: int, k: int, q: Optional[int], s: str, fmt: str):
    """TEP count and per-information-bit complexity."""
    report = complexity_report(n, k, q or settings.quantization_bits, s).model_dump()
    if report["s"] >= 1:
        report["order"] = complexity_order(n, k, s)
    emit(report, fmt)


@click.command("latency")
@click.option("--n", "n", type=click.IntRange(1), required=True)
@click.option("--k", "k", type=click.IntRange(1), required=True)
@click.option("--q", "q", type=click.IntRange(1), default=None)
@click.option("--s", "s", type=str, default="0", show_default=True)
@click.option("--lmax", "lmax", type=POSITIVE, default=None,
              help="Latency budget L_M (s); adds the complexity budget and maximum order.")
@hardware_options()
@output_options()
@handle_cli_errors
def latency_command(n: int, k: int, q: Optional[int], s: str, lmax, hw: HardwareProfile, fmt: str):
    """Aggregate latency of an order-s decoder on the given hardware."""
    q = q or settings.quantization_bits
    report = complexity_report(n, k, q, s, hw).model_dump()
    report.update({"U": hw.speedup, "T_b_effective": hw.effective_tb})
    if lmax is not None:
        budget = complexity_budget(lmax, n, k, hw)
        report["K_budget"] = budget
        report["order_bound"] = max_order(n, k, q, budget).model_dump()
    emit(report, fmt)


@click.command("fit")
@click.option("--points", "points_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="CSV with columns n,k,s,q,delta_rho_db,log2_K,source.")
@click.option("--n", "ns", type=click.IntRange(1), multiple=True, help="Blocklength(s) to fit; default all.")
@click.option("--out", "out", type=click.Path(dir_okay=False), required=True, help="Model table JSON.")
@click.option("--merge", "merge_path", type=click.Path(exists=True, dir_okay=False), default=None,
              help="Existing model table to extend.")
@click.option("--interpolation", type=click.Choice(["nearest", "linear"]), default=None)
@output_options()
@handle_cli_errors
def fit_command(points_path: str, ns: Tuple[int, ...], out: str, merge_path, interpolation, fmt: str):
    """Fit the complexity/power-penalty model to a points file."""
    table = fit_table(read_points(points_path), ns or None, interpolation)
    if merge_path:
        table = ModelTable.load(merge_path).merged(table)
    table.save(out)
    logger.info("Model table written", path=str(Path(out)), entries=len(table.entries))
    emit(table.to_json()["entries"], fmt)
