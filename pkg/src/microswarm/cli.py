"""Command-line entry point: ``microswarm run|validate|derive-coeffs``."""

from __future__ import annotations

import dataclasses
import json
import logging
import sys

import click

from . import __version__
from .analytics import PhysicalParams, derive_coefficients
from .experiments import ConfigError
from .io import THREADS_ENV, config_to_mapping, derived_quantities, load_config, run as run_config

EXIT_CONFIG = 1
EXIT_RUNTIME = 2


@click.group()
@click.version_option(__version__)
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def main(verbose):
    """Capture-efficiency Monte Carlo for active particles."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING, format="%(levelname)s %(message)s")


@main.command()
@click.argument("config", type=click.Path(dir_okay=False))
@click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory.")
@click.option("--seed", type=int, default=None, help="Override master_seed.")
@click.option("--threads", type=int, default=None, help=f"Worker threads (default: ${THREADS_ENV} or 1).")
def run(config, out_dir, seed, threads):
    """Run the experiment described by CONFIG."""
    try:
        cfg = load_config(config)
        if seed is not None:
            cfg = _with_seed(cfg, seed)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    try:
        manifest = run_config(cfg, out_dir, threads)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    except Exception as exc:  # noqa: BLE001
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_RUNTIME)
    for path in manifest.outputs:
        click.echo(path)


def _with_seed(cfg, seed):
    try:
        return dataclasses.replace(cfg, master_seed=seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


@main.command()
@click.argument("config", type=click.Path(dir_okay=False))
def validate(config):
    """Check CONFIG and print the fully resolved parameters."""
    try:
        cfg = load_config(config)
    except ConfigError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    doc = {"config": config_to_mapping(cfg), "derived": derived_quantities(cfg)}
    click.echo(json.dumps(doc, indent=2, sort_keys=True))


@main.command("derive-coeffs")
@click.option("--radius", type=float, default=0.5, show_default=True, help="Particle radius [um].")
@click.option("--temp", type=float, default=293.0, show_default=True, help="Temperature [K].")
@click.option("--viscosity", type=float, default=1.0016e-3, show_default=True, help="Viscosity [Pa s].")
@click.option("--speed", type=float, default=10.0, show_default=True, help="Self-propulsion speed [um/s].")
def derive_coeffs(radius, temp, viscosity, speed):
    """Print Stokes-Einstein diffusion coefficients and persistence scales."""
    try:
        c = derive_coefficients(PhysicalParams(radius, temp, viscosity, speed))
    except ValueError as exc:
        click.echo(f"config error: {exc}", err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"D_T_um2_s = {c.D_T:.6g}")
    click.echo(f"D_R_rad2_s = {c.D_R:.6g}")
    click.echo(f"persistence_time_s = {c.persistence_time:.6g}")
    click.echo(f"persistence_length_um = {c.persistence_length:.6g}")


if __name__ == "__main__":
    main()
