"""Command-line entry point for the OS-decoding latency workbench."""

import json
import sys
from typing import List, Optional

import click
import structlog

from components.analysis_commands import bounds_command, complexity_command, fit_command, latency_command
from components.code_commands import codes_group
from components.optimize_commands import optimize_group
from components.simulate_commands import simulate_group
from config.settings import settings
from utils.error_handlers import EXIT_ERROR
from utils.logging_config import setup_logging

logger = structlog.get_logger(__name__)


def _expand_defaults(group: click.Group, obj: dict) -> dict:
    """Turn a config object into click's nested default_map.

    Keys naming a subcommand hold that subcommand's defaults; all other keys
    are flag defaults applied to every subcommand.
    """
    flat = {key: value for key, value in obj.items() if key not in group.commands}
    expanded = {key.replace("-", "_"): value for key, value in flat.items()}
    for name, command in group.commands.items():
        nested = obj.get(name, {})
        if not isinstance(nested, dict):
            raise click.BadParameter(f"section {name!r} must be an object", param_hint="--config")
        merged = {**flat, **nested}
        if isinstance(command, click.Group):
            expanded[name] = _expand_defaults(command, merged)
        else:
            expanded[name] = {key.replace("-", "_"): value for key, value in merged.items()}
    return expanded


def _load_config(ctx: click.Context, param: click.Parameter, value: Optional[str]) -> None:
    if not value:
        return
    try:
        with open(value) as handle:
            obj = json.load(handle)
    except (OSError, json.JSONDecodeError) as e:
        raise click.BadParameter(f"cannot read config: {e}", ctx=ctx, param=param)
    if not isinstance(obj, dict):
        raise click.BadParameter("config must be a JSON object", ctx=ctx, param=param)
    ctx.default_map = _expand_defaults(ctx.command, obj)


@click.group()
@click.option("--config", type=click.Path(exists=True, dir_okay=False), is_eager=True,
              expose_value=False, callback=_load_config, help="JSON file of flag defaults.")
@click.option("--log-level", type=click.Choice(["DEBUG", "INFO", "WARNING", "ERROR"], case_sensitive=False),
              default=None, help="Overrides URLLC_LOG_LEVEL.")
def cli(log_level: Optional[str]):
    """OS decoding, finite-blocklength limits and URLLC link design."""
    setup_logging(log_level or settings.log_level)


cli.add_command(codes_group)
cli.add_command(bounds_command)
cli.add_command(complexity_command)
cli.add_command(latency_command)
cli.add_command(fit_command)
cli.add_command(simulate_group)
cli.add_command(optimize_group)


def main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and return its exit code."""
    try:
        rv = cli.main(args=argv, prog_name="urllc-osd", standalone_mode=False, auto_envvar_prefix="URLLC")
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return EXIT_ERROR
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return EXIT_ERROR
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(main())
