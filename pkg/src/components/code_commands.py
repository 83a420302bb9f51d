"""`codes` command group: build and inspect code files."""

import click
import structlog

from components.output import emit, output_options
from core.codes import build_ebch, code_to_json, load_code, save_code
from core.os_decoder import required_order
from utils.error_handlers import handle_cli_errors

logger = structlog.get_logger(__name__)


@click.group("codes")
def codes_group():
    """Build and inspect linear block codes."""


@codes_group.command("gen")
@click.option("--ebch", "ebch", type=(int, int), required=True, metavar="N K",
              help="Blocklength (power of two) and dimension.")
@click.option("--out", "out", type=click.Path(dir_okay=False, writable=True), default=None,
              help="Write the code file here; otherwise print it.")
@handle_cli_errors
def gen_command(ebch, out):
    """Construct the extended BCH code eBCH(N, K)."""
    n, k = ebch
    code = build_ebch(n, k)
    if out:
        save_code(code, out)
        emit({"label": code.label, "n": code.n, "k": code.k, "d_min": code.d_min, "path": out})
    else:
        emit(code_to_json(code))


@codes_group.command("info")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@output_options()
@handle_cli_errors
def info_command(path: str, fmt: str):
    """Summarise a code file."""
    code = load_code(path)
    emit({
        "label": code.label,
        "n": code.n,
        "k": code.k,
        "d_min": code.d_min,
        "rate": code.rate,
        "required_order": required_order(code),
    }, fmt)
