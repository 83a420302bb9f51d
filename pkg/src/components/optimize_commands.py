"""`optimize` command group: the three link design problems."""

import json
from typing import Optional

import click
import structlog

from components.analysis_commands import EPSILON, POSITIVE, hardware_options
from components.output import parse_int_range, to_json
from core.optimizers import SystemConstraints, design_point_schema, solve
from core.tradeoff import ModelTable
from utils.error_handlers import InfeasibleError, handle_cli_errors

logger = structlog.get_logger(__name__)


@click.group("optimize")
def optimize_group():
    """Choose (n, k, order) under reliability, power and latency limits."""


def _run(problem: str, k: Optional[int], eps: float, rho_max_db: float, lmax: Optional[float], hw,
         models_path: str, n_range: Optional[str], csv_curve: Optional[str], interpolation) -> None:
    models = ModelTable.load(models_path)
    if interpolation:
        models = models.model_copy(update={"interpolation": interpolation})
    constraints = SystemConstraints(epsilon_m=eps, rho_m_db=rho_max_db, L_M=lmax)
    ns = parse_int_range(n_range, "--n-range") if n_range else None
    result = solve(problem, constraints, hw, models, k=k, n_range=ns)
    if csv_curve:
        result.curve.to_csv(csv_curve, index=False, float_format="%.12g")
        logger.info("Objective curve written", path=csv_curve, rows=len(result.curve))
    payload = result.point.model_dump()
    payload["interpolation"] = models.interpolation
    if not result.point.feasible:
        raise InfeasibleError(result.point.reason or "infeasible", {"problem": problem}, payload)
    click.echo(to_json(payload))


def _common(func):
    func = click.option("--interpolation", type=click.Choice(["nearest", "linear"]), default=None)(func)
    func = click.option("--csv-curve", "csv_curve", type=click.Path(dir_okay=False), default=None,
                        help="Write the per-n objective curve here.")(func)
    func = click.option("--n-range", "n_range", default=None, help="lo:hi or lo:step:hi blocklengths.")(func)
    func = click.option("--models", "models_path", type=click.Path(exists=True, dir_okay=False),
                        required=True, help="Model table JSON.")(func)
    func = click.option("--rho-max-db", "rho_max_db", type=float, required=True, help="SNR ceiling (dB).")(func)
    func = click.option("--eps", "eps", type=EPSILON, required=True, help="Maximum CEP.")(func)
    return func


@optimize_group.command("latency")
@click.option("--k", "k", type=click.IntRange(1), required=True)
@click.option("--lmax", "lmax", type=POSITIVE, default=None)
@_common
@hardware_options()
@handle_cli_errors
def latency_command(k, lmax, hw, eps, rho_max_db, models_path, n_range, csv_curve, interpolation):
    """Minimise aggregate latency for k information bits."""
    _run("latency", k, eps, rho_max_db, lmax, hw, models_path, n_range, csv_curve, interpolation)


@optimize_group.command("energy")
@click.option("--k", "k", type=click.IntRange(1), required=True)
@click.option("--lmax", "lmax", type=POSITIVE, required=True)
@_common
@hardware_options()
@handle_cli_errors
def energy_command(k, lmax, hw, eps, rho_max_db, models_path, n_range, csv_curve, interpolation):
    """Minimise energy per information bit."""
    _run("energy", k, eps, rho_max_db, lmax, hw, models_path, n_range, csv_curve, interpolation)


@optimize_group.command("info-bits")
@click.option("--lmax", "lmax", type=POSITIVE, required=True)
@_common
@hardware_options()
@handle_cli_errors
def info_bits_command(lmax, hw, eps, rho_max_db, models_path, n_range, csv_curve, interpolation):
    """Maximise the payload within the latency budget."""
    _run("info-bits", None, eps, rho_max_db, lmax, hw, models_path, n_range, csv_curve, interpolation)


@optimize_group.command("schema")
def schema_command():
    """Print the JSON schema of design point output."""
    click.echo(json.dumps(design_point_schema(), sort_keys=True, indent=2))
