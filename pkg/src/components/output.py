"""Result emitters shared by the CLI commands."""

import functools
import json
import math
from typing import Any, Callable, Iterable, Mapping, Union

import click
import pandas as pd

FORMATS = ("json", "csv", "table")


def _clean(value: Any) -> Any:
    if isinstance(value, float) and (math.isnan(value) or math.isinf(value)):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if hasattr(value, "item") and callable(value.item):
        return _clean(value.item())
    return value


def to_json(payload: Any) -> str:
    """Deterministic JSON text; non-finite floats become null."""
    return json.dumps(_clean(payload), sort_keys=True, indent=2)


def emit(data: Union[pd.DataFrame, Mapping, Iterable[Mapping]], fmt: str = "json") -> None:
    """Write records to stdout as JSON, CSV or an aligned table."""
    if isinstance(data, pd.DataFrame):
        frame = data
        records = frame.to_dict(orient="records")
    elif isinstance(data, Mapping):
        frame = pd.DataFrame([dict(data)])
        records = dict(data)
    else:
        records = [dict(row) for row in data]
        frame = pd.DataFrame(records)

    if fmt == "json":
        click.echo(to_json(records))
    elif fmt == "csv":
        click.echo(frame.to_csv(index=False, float_format="%.12g"), nl=False)
    elif fmt == "table":
        click.echo(frame.to_string(index=False))
    else:
        raise click.BadParameter(f"unknown format {fmt!r}", param_hint="--format")


def output_options(default: str = "json") -> Callable:
    """Add ``--format`` plus ``--json``/``--csv`` shortcuts; the command receives ``fmt``."""

    def decorator(func: Callable) -> Callable:
        @click.option("--format", "fmt", type=click.Choice(FORMATS), default=default, show_default=True)
        @click.option("--json", "as_json", is_flag=True, help="Shortcut for --format json.")
        @click.option("--csv", "as_csv", is_flag=True, help="Shortcut for --format csv.")
        @functools.wraps(func)
        def wrapper(*args, fmt: str, as_json: bool, as_csv: bool, **kwargs):
            if as_json and as_csv:
                raise click.UsageError("--json and --csv are mutually exclusive")
            if as_json:
                fmt = "json"
            elif as_csv:
                fmt = "csv"
            return func(*args, fmt=fmt, **kwargs)

        return wrapper

    return decorator


def parse_range(text: str, name: str) -> list:
    """Parse ``start:step:stop`` (inclusive) into a list of floats."""
    try:
        start, step, stop = (float(part) for part in text.split(":"))
    except ValueError:
        raise click.BadParameter(f"expected start:step:stop, got {text!r}", param_hint=name)
    if step <= 0 or stop < start:
        raise click.BadParameter("step must be positive and stop >= start", param_hint=name)
    count = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(count)]


def parse_int_range(text: str, name: str) -> list:
    """Parse ``lo:hi`` or ``lo:step:hi`` (inclusive) into integers."""
    parts = text.split(":")
    try:
        values = [int(p) for p in parts]
    except ValueError:
        raise click.BadParameter(f"expected integers, got {text!r}", param_hint=name)
    if len(values) == 2:
        lo, hi, step = values[0], values[1], 1
    elif len(values) == 3:
        lo, step, hi = values
    else:
        raise click.BadParameter("expected lo:hi or lo:step:hi", param_hint=name)
    if step < 1 or hi < lo:
        raise click.BadParameter("empty range", param_hint=name)
    return list(range(lo, hi + 1, step))


def parse_orders(text: str) -> list:
    orders = [part.strip() for part in text.split(",") if part.strip()]
    if not orders:
        raise click.BadParameter("at least one order is required", param_hint="--orders")
    return orders
