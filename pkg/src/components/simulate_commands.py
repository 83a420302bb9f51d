"""`simulate` command group: Monte Carlo CEP, SNR searches and trade-off data."""

import functools
from typing import Callable, Optional

import click
import structlog

from components.output import emit, output_options, parse_orders
from config.settings import settings
from core.codes import LinearCode, build_ebch, load_code
from core.os_decoder import DecoderConfig
from core.simulation import StopRule, build_tradeoff_dataset, compare_orders, estimate_cep, required_snr_for_cep
from core.tradeoff import points_to_frame, write_points
from utils.error_handlers import handle_cli_errors
from utils.logging_config import metrics

logger = structlog.get_logger(__name__)

EPSILON = click.FloatRange(0.0, 1.0, min_open=True, max_open=True)


def _resolve_code(code_path: Optional[str], n: Optional[int], k: Optional[int]) -> LinearCode:
    if code_path:
        return load_code(code_path)
    if n is None or k is None:
        raise click.UsageError("give --code FILE or both --n and --k")
    return build_ebch(n, k)


def simulation_options(func: Callable) -> Callable:
    """Code selection, seed, stop rule and worker options; passes ``code`` and ``stop``."""

    @click.option("--code", "code_path", type=click.Path(exists=True, dir_okay=False), default=None,
                  help="Code file; otherwise eBCH(--n, --k).")
    @click.option("--n", "n", type=click.IntRange(4), default=None)
    @click.option("--k", "k", type=click.IntRange(1), default=None)
    @click.option("--seed", "seed", type=click.IntRange(0), required=True, help="Base random seed.")
    @click.option("--target-errors", type=click.IntRange(1), default=None)
    @click.option("--max-trials", type=click.IntRange(1), default=None)
    @click.option("--workers", type=click.IntRange(1), default=None, help="Worker processes.")
    @click.option("--q", "q", type=click.IntRange(1), default=None, help="Quantization bits.")
    @functools.wraps(func)
    @handle_cli_errors
    def wrapper(*args, code_path, n, k, target_errors, max_trials, **kwargs):
        code = _resolve_code(code_path, n, k)
        stop = StopRule(target_errors=target_errors or settings.target_errors,
                        max_trials=max_trials or settings.max_trials)
        return func(*args, code=code, stop=stop, **kwargs)

    return wrapper


@click.group("simulate")
def simulate_group():
    """Monte Carlo simulation of OS decoding over BI-AWGN."""


@simulate_group.command("cep")
@click.option("--s", "s", default="0", show_default=True, help="Decoder order.")
@click.option("--snr-db", "snr_db", type=float, required=True)
@click.option("--all-zero", is_flag=True, help="Transmit the all-zero message only.")
@click.option("--ml", is_flag=True, help="Use exhaustive ML decoding (k <= 16).")
@click.option("--early-exit", is_flag=True, help="Stop enumerating at a zero-discrepancy candidate.")
@simulation_options
@output_options()
@handle_cli_errors
def cep_command(code, stop, s, snr_db, all_zero, ml, early_exit, seed, workers, q, fmt):
    """Estimate the codeword error probability at one SNR."""
    cfg = DecoderConfig.of(s, q_bits=q or settings.quantization_bits, early_exit=early_exit)
    estimate = estimate_cep(code, cfg, snr_db, seed, stop=stop, workers=workers,
                            all_zero=all_zero, decoder="ml" if ml else "osd")
    emit(estimate.model_dump(), fmt)
    logger.debug("Simulation counters", **metrics.get_metrics())


@simulate_group.command("snr-for-cep")
@click.option("--s", "s", default="0", show_default=True)
@click.option("--eps", "eps", type=EPSILON, required=True, help="Target CEP.")
@click.option("--lo-db", type=float, default=0.0, show_default=True, help="Initial lower bracket (dB).")
@click.option("--hi-db", type=float, default=8.0, show_default=True, help="Initial upper bracket (dB).")
@click.option("--tol-db", type=click.FloatRange(0.0, min_open=True), default=None)
@click.option("--ml", is_flag=True)
@simulation_options
@output_options()
@handle_cli_errors
def snr_for_cep_command(code, stop, s, eps, lo_db, hi_db, tol_db, ml, seed, workers, q, fmt):
    """Bisect the SNR at which the CEP reaches the target."""
    cfg = DecoderConfig.of(s, q_bits=q or settings.quantization_bits)
    result = required_snr_for_cep(code, cfg, eps, seed, start_lo_db=lo_db, start_hi_db=hi_db,
                                  bracket_tol_db=tol_db, stop=stop, workers=workers,
                                  decoder="ml" if ml else "osd")
    emit({"rho_db": result.rho_db, "lo_db": result.lo_db, "hi_db": result.hi_db,
          "probes": len(result.probes), "s": str(cfg.s), "epsilon": eps}, fmt)


@simulate_group.command("tradeoff")
@click.option("--orders", "orders", default="0,1,2,3", show_default=True, help="Comma-separated orders.")
@click.option("--eps", "eps", type=EPSILON, required=True)
@click.option("--tol-db", type=click.FloatRange(0.0, min_open=True), default=None)
@click.option("--out", "out", type=click.Path(dir_okay=False), default=None, help="Points CSV.")
@simulation_options
@output_options(default="csv")
@handle_cli_errors
def tradeoff_command(code, stop, orders, eps, tol_db, out, seed, workers, q, fmt):
    """Power penalty and log2 complexity per order."""
    points = build_tradeoff_dataset(code, parse_orders(orders), eps, seed, q=q, stop=stop,
                                    workers=workers, bracket_tol_db=tol_db)
    if out:
        write_points(points, out)
    emit(points_to_frame(points), fmt)


@simulate_group.command("compare")
@click.option("--orders", "orders", default="0,1,2", show_default=True)
@click.option("--snr-db", "snr_db", type=float, required=True)
@click.option("--trials", type=click.IntRange(1), default=1000, show_default=True)
@simulation_options
@output_options(default="table")
@handle_cli_errors
def compare_command(code, stop, orders, snr_db, trials, seed, workers, q, fmt):
    """Run several orders on identical noise."""
    comparison = compare_orders(code, parse_orders(orders), snr_db, trials, seed, q=q)
    frame = comparison.summary()
    frame["distance_monotone_fraction"] = comparison.distance_monotone_fraction
    emit(frame, fmt)
