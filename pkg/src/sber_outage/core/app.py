"""
Command-line interface.
"""

import functools
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple

import click

from sber_outage.allocation.search import make_evaluator, solve_p1, solve_p2
from sber_outage.core.config import (
    APP_NAME,
    APP_VERSION,
    DEFAULT_GL_ORDER,
    MC_DEFAULT_SAMPLES,
    OUTPUT_DIR,
    ensure_dirs,
)
from sber_outage.core.errors import SberError
from sber_outage.core.logging_utils import get_logger, setup_logging
from sber_outage.data.models import AlphaVariant, OutageReport, SystemConfig
from sber_outage.data.parsers import load_config, load_sweep
from sber_outage.data.repositories import EstimateRepository
from sber_outage.experiments import presets as preset_registry
from sber_outage.experiments.reports import (
    DEFAULT_GL_ORDERS,
    GL_CHECK_COLUMNS,
    HISTOGRAM_COLUMNS,
    GlSetup,
    fit_report,
    gl_check,
    histogram_rows,
    relative_change_decreasing,
    resolve_setup,
)
from sber_outage.experiments.sweeps import run_sweep
from sber_outage.experiments.writers import format_cell, write_csv
from sber_outage.outage.closedform import evaluate
from sber_outage.outage.montecarlo import mc_evaluate

logger = get_logger(__name__)

METHODS = {"cf": "closed-form", "mc": "monte-carlo"}


class Count(click.ParamType):
    """Positive integer that also accepts scientific notation such as 1e7."""

    name = "count"

    def convert(self, value, param, ctx):
        if isinstance(value, int):
            return value
        try:
            number = float(value)
        except (TypeError, ValueError):
            self.fail(f"'{value}' is not a number", param, ctx)
        if not number.is_integer() or number < 1:
            self.fail(f"'{value}' is not a positive integer", param, ctx)
        return int(number)


COUNT = Count()


def handle_errors(func):
    """Library errors become 'error: <reason>' and exit code 2; anything else exits with 1."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (click.ClickException, click.exceptions.Exit, click.exceptions.Abort):
            raise
        except SberError as e:
            logger.debug(f"{func.__name__} failed", exc_info=True)
            click.echo(f"error: {e}", err=True)
            code = 2
        except Exception as e:
            logger.error(f"Unexpected error in {func.__name__}: {e}", exc_info=True)
            click.echo(f"error: unexpected failure: {e}", err=True)
            code = 1
        click.get_current_context().exit(code)

    return wrapper


def _parse_overrides(pairs: Tuple[str, ...]) -> Dict[str, str]:
    overrides = {}
    for pair in pairs:
        if "=" not in pair:
            raise click.BadParameter(f"'{pair}' is not key=value", param_hint="--set")
        key, value = pair.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _with_alpha_variant(config: SystemConfig, alpha_variant: Optional[str]) -> SystemConfig:
    if alpha_variant is None:
        return config
    return config.replace(alpha_variant=AlphaVariant(alpha_variant))


def _repository(use_cache: bool) -> Optional[EstimateRepository]:
    return EstimateRepository() if use_cache else None


def _echo_report(config: SystemConfig, report: OutageReport):
    click.echo(f"mode: {config.mode.value}")
    click.echo(f"antennas: M={config.m_tx} N={config.n_rx} Q={config.q_chains} P={config.p_eh_antennas}")
    click.echo(f"p_out_d: {format_cell(report.p_out_d)}")
    click.echo(f"p_out_sbs: {format_cell(report.p_out_sbs)}")
    click.echo(f"minmax: {format_cell(report.minmax)}")
    click.echo(f"method: {report.method_label}")
    if report.ci_d or report.ci_sbs:
        click.echo(f"ci_d: {format_cell(report.ci_d)}")
        click.echo(f"ci_sbs: {format_cell(report.ci_sbs)}")
        click.echo(f"capped_draws: {report.capped_draws}")
    if report.diagnostics:
        click.echo("diagnostics:")
        for key in sorted(report.diagnostics):
            click.echo(f"  {key}: {format_cell(float(report.diagnostics[key]))}")


def _mc_options(func):
    func = click.option("--seed", type=click.IntRange(min=0), default=1, show_default=True)(func)
    func = click.option(
        "--samples", type=COUNT, default=MC_DEFAULT_SAMPLES, show_default=True, help="Monte Carlo draws"
    )(func)
    func = click.option(
        "--gl-order", type=click.IntRange(min=1), default=DEFAULT_GL_ORDER, show_default=True
    )(func)
    func = click.option(
        "--alpha-variant",
        type=click.Choice([v.value for v in AlphaVariant]),
        default=None,
        help="Override the amplifier relation of the config",
    )(func)
    return func


@click.group(name=APP_NAME, context_settings=dict(help_option_names=["-h", "--help"]))
@click.version_option(APP_VERSION, prog_name=APP_NAME)
@click.option(
    "-l",
    "--log",
    default="warning",
    type=click.Choice(["critical", "error", "warn", "warning", "info", "debug"]),
    help="Logging level",
)
def cli(log: str):
    """
    Outage analysis of HD/FD small base stations with self-energy recycling.
    """
    loglevel = getattr(logging, log.upper())
    setup_logging(loglevel)
    logger.info(f"Starting {APP_NAME} {APP_VERSION}")


@cli.command(name="eval")
@click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.option("--method", type=click.Choice(list(METHODS)), default="cf", show_default=True)
@_mc_options
@click.option("--cache/--no-cache", default=True, help="Reuse cached Monte Carlo estimates")
@handle_errors
def eval_command(
    config_path: Path,
    method: str,
    samples: int,
    seed: int,
    gl_order: int,
    alpha_variant: Optional[str],
    cache: bool,
):
    """Evaluate both link outages of one configuration."""
    config = _with_alpha_variant(load_config(config_path), alpha_variant)
    if method == "cf":
        report = evaluate(config, gl_order=gl_order)
    else:
        report = mc_evaluate(config, samples, seed, repository=_repository(cache))
    _echo_report(config, report)


@cli.command()
@click.argument("sweep_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--set", "pairs", multiple=True, help="Override a key of the sweep file, key=value")
@click.option("--cache/--no-cache", default=True, help="Reuse cached Monte Carlo estimates")
@handle_errors
def sweep(sweep_file: Path, out: Optional[Path], pairs: Tuple[str, ...], cache: bool):
    """Run a sweep file and write its CSV."""
    spec = load_sweep(sweep_file, _parse_overrides(pairs))
    table = run_sweep(spec, repository=_repository(cache))
    if out is None:
        ensure_dirs()
        out = OUTPUT_DIR / f"{spec.name}.csv"
    click.echo(str(write_csv(out, table.columns, table.rows)))


@cli.command()
@click.argument("problem", type=click.Choice(["p1", "p2"]))
@click.option(
    "--config",
    "config_path",
    required=True,
    type=click.Path(exists=True, dir_okay=False, path_type=Path),
)
@click.option("--q", "q_chains", type=click.IntRange(min=1), default=None, help="RF chains for p1")
@click.option("--delta", type=float, default=1e-5, show_default=True, help="MinMax target for p2")
@click.option("--q-max", type=click.IntRange(min=4), default=32, show_default=True)
@click.option("--method", type=click.Choice(list(METHODS)), default="cf", show_default=True)
@_mc_options
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@handle_errors
def optimize(
    problem: str,
    config_path: Path,
    q_chains: Optional[int],
    delta: float,
    q_max: int,
    method: str,
    samples: int,
    seed: int,
    gl_order: int,
    alpha_variant: Optional[str],
    out: Optional[Path],
):
    """Best antenna split (p1) or fewest RF chains for a target (p2)."""
    config = _with_alpha_variant(load_config(config_path), alpha_variant)
    options = dict(gl_order=gl_order)
    if method == "mc":
        options.update(n_samples=samples, seed=seed)
    evaluator = make_evaluator(METHODS[method], **options)
    if problem == "p1":
        result = solve_p1(config, q_chains, evaluator=evaluator)
    else:
        result = solve_p2(config, delta, q_max, evaluator=evaluator)
        click.echo(f"feasible: {format_cell(result.feasible)}")
        click.echo(f"q_min: {format_cell(result.q_min)}")
    click.echo(f"q_chains: {result.q_chains}")
    click.echo(f"m_opt: {result.m_opt}")
    click.echo(f"n_opt: {result.n_opt}")
    click.echo(f"minmax: {format_cell(result.minmax_outage)}")

    columns = ["m_tx", "n_rx", "p_out_d", "p_out_sbs", "minmax", "feasible"]
    rows = [
        [p.m_tx, p.n_rx, p.p_out_d, p.p_out_sbs, p.minmax, p.feasible] for p in result.per_split_curve
    ]
    if out is not None:
        click.echo(str(write_csv(out, columns, rows)))
    else:
        click.echo(",".join(columns))
        for row in rows:
            click.echo(",".join(format_cell(v) for v in row))


@cli.command(name="fit-gpd")
@click.option("--m", "m", type=click.IntRange(min=2), required=True, help="Antennas")
@click.option("--samples", type=COUNT, default=10**6, show_default=True)
@click.option("--seed", type=click.IntRange(min=0), default=1, show_default=True)
@click.option("--hist", type=click.Path(dir_okay=False, path_type=Path), default=None)
@handle_errors
def fit_gpd_command(m: int, samples: int, seed: int, hist: Optional[Path]):
    """Fit a GPD to samples of Z and compare with the population law."""
    report = fit_report(m, samples, seed)
    click.echo(f"{'parameter':<10}{'fitted':>18}{'theory':>18}{'rel_dev':>18}")
    click.echo(
        f"{'xi':<10}{format_cell(report.fitted.shape):>18}{format_cell(report.theory.shape):>18}"
        f"{format_cell(report.shape_rel_dev):>18}"
    )
    click.echo(
        f"{'sigma':<10}{format_cell(report.fitted.scale):>18}{format_cell(report.theory.scale):>18}"
        f"{format_cell(report.scale_rel_dev):>18}"
    )
    click.echo(
        f"{'mu':<10}{format_cell(report.fitted.location):>18}"
        f"{format_cell(report.theory.location):>18}{'':>18}"
    )
    click.echo(f"method: {report.fitted.method}")
    click.echo(f"ks_distance: {format_cell(report.ks_distance)}")
    if hist is None:
        ensure_dirs()
        hist = OUTPUT_DIR / f"z_histogram_m{m}.csv"
    click.echo(f"histogram: {write_csv(hist, HISTOGRAM_COLUMNS, histogram_rows(m, samples, seed))}")


def _parse_orders(raw: str) -> Tuple[int, ...]:
    try:
        orders = tuple(int(item) for item in raw.split(",") if item.strip())
    except ValueError:
        raise click.BadParameter(f"'{raw}' is not a comma-separated list of orders", param_hint="--orders")
    if not orders:
        raise click.BadParameter("no orders given", param_hint="--orders")
    return orders


@cli.command(name="gl-check")
@click.option("--setup", "setups", type=click.Choice(["1", "2"]), multiple=True)
@click.option(
    "--custom",
    type=(int, int, float, int, int, int),
    default=None,
    metavar="M N A4 L P I",
    help="Custom sum term instead of the reference setups",
)
@click.option("--orders", default=",".join(str(o) for o in DEFAULT_GL_ORDERS), show_default=True)
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@handle_errors
def gl_check_command(setups: Tuple[str, ...], custom, orders: str, out: Optional[Path]):
    """Convergence of Gauss-Laguerre quadrature on one UL sum term."""
    order_list = _parse_orders(orders)
    if custom is not None:
        m, n, a4, l, p, i = custom
        chosen = [GlSetup(m=m, n=n, a4=a4, l=l, p=p, i=i)]
    else:
        chosen = [int(s) for s in setups] or [1, 2]

    table = []
    for setup in chosen:
        label = setup if isinstance(setup, int) else "custom"
        rows = gl_check(resolve_setup(setup), order_list)
        click.echo(f"setup {label}: {resolve_setup(setup)}")
        click.echo(f"{'order':>6} {'mapping':>9} {'value':>16} {'rel_change':>16} {'rel_error':>16}")
        for row in rows:
            click.echo(
                f"{row.order:>6} {row.mapping:>9} {format_cell(row.value):>16} "
                f"{format_cell(row.rel_change):>16} {format_cell(row.rel_error):>16}"
            )
            table.append([label, row.order, row.mapping, row.value, row.rel_change, row.rel_error])
        shrinking = relative_change_decreasing(rows, "exp")
        click.echo(f"relative change decreasing (exp): {format_cell(shrinking)}")
    if out is not None:
        click.echo(str(write_csv(out, GL_CHECK_COLUMNS, table)))


@cli.group()
def presets():
    """Built-in experiments."""


@presets.command(name="list")
def presets_list():
    """List the presets and the keys they require."""
    for preset in preset_registry.list_presets():
        required = f" [requires {', '.join(preset.required)}]" if preset.required else ""
        aliases = ", ".join(preset_registry.aliases_of(preset.name))
        label = f"{preset.name} ({aliases})" if aliases else preset.name
        click.echo(f"{label:<36}{preset.description}{required}")


@presets.command(name="run")
@click.argument("name")
@click.option("--set", "pairs", multiple=True, help="Override a preset key, key=value")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None)
@click.option("--cache/--no-cache", default=True, help="Reuse cached Monte Carlo estimates")
@handle_errors
def presets_run(name: str, pairs: Tuple[str, ...], out: Optional[Path], cache: bool):
    """Run a preset and write its CSV."""
    path = preset_registry.run_preset(
        name, _parse_overrides(pairs), out_path=out, repository=_repository(cache)
    )
    click.echo(str(path))
