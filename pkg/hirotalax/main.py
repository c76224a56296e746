import asyncio
import csv
import io
import logging
import sys
from typing import Optional

import sentry_sdk
import typer
from pydantic import ValidationError

from hirotalax.core.config import settings
from hirotalax.core.errors import ConfigurationError
from hirotalax.schemas.chain import Topology
from hirotalax.schemas.reports import (
    Command,
    Model,
    OutputFormat,
    Report,
    RunConfig,
    Suite,
)
from hirotalax.services.suites import verify_service

logging.basicConfig(
    level=settings.LOG_LEVEL,
    format="%(asctime)s - %(name)s - %(levelname)s - %(funcName)s:%(lineno)d - %(message)s",
    datefmt="%Y-%m-%d %H:%M:%S",
    handlers=[
        logging.StreamHandler(sys.stderr),
    ],
)

logging.getLogger("asyncio").setLevel(logging.WARNING)

logger = logging.getLogger(__name__)

if settings.SENTRY_DSN and settings.APP_ENV == "prod":
    sentry_sdk.init(
        dsn=settings.SENTRY_DSN,
        send_default_pii=False,
    )

app = typer.Typer(
    name="hirotalax",
    help="Functional relations of XXX spin chains: spectra, verification suites, Q-functions.",
    no_args_is_help=True,
    add_completion=False,
)

CSV_FIELDS = ["check", "k", "a", "state", "magnitude", "passed", "anchor", "detail"]


def render(report: Report, fmt: OutputFormat) -> str:
    if fmt == OutputFormat.JSON:
        return report.to_json() + "\n"
    if fmt == OutputFormat.CSV:
        buffer = io.StringIO()
        writer = csv.DictWriter(buffer, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for record in report.records:
            writer.writerow(record.model_dump(include=set(CSV_FIELDS)))
        return buffer.getvalue()

    lines = [f"{report.config.command.value}: {report.config.chain().describe()}"]
    for state in report.states:
        energy = "" if state.energy is None else f" E={state.energy:.10f}"
        lines.append(f"  state {state.label}{energy} degeneracy={state.degeneracy}")
    for record in report.records:
        where = " ".join(
            f"{name}={value}"
            for name, value in (("k", record.k), ("a", record.a), ("state", record.state))
            if value is not None
        )
        magnitude = "-" if record.magnitude is None else f"{record.magnitude:.3e}"
        status = "PASS" if record.passed else "FAIL"
        lines.append(f"  [{status}] {record.check} {where} |r|={magnitude}".rstrip())
        if record.detail and not record.passed:
            lines.append(f"         {record.detail}")
    s = report.summary
    lines.append(f"{s.passed}/{s.total} passed, {s.failed} failed")
    if settings.REPORT_TIMING and report.wall_time is not None:
        lines.append(f"wall time {report.wall_time:.2f}s")
    return "\n".join(lines) + "\n"


def execute(**fields) -> None:
    try:
        config = RunConfig(**{k: v for k, v in fields.items() if v is not None})
        report = asyncio.run(verify_service.run(config))
    except ValidationError as e:
        typer.echo(f"Invalid configuration: {e}", err=True)
        raise typer.Exit(code=2)
    except ConfigurationError as e:
        typer.echo(f"Configuration error: {e}", err=True)
        raise typer.Exit(code=2)

    output = render(report, config.format)
    if config.out:
        with open(config.out, "w", encoding="utf-8") as handle:
            handle.write(output)
        logger.info(f"Report written to {config.out}")
    else:
        typer.echo(output, nl=False)
    if not report.ok:
        logger.warning(f"{report.summary.failed} checks failed")
    raise typer.Exit(code=report.exit_code())


SitesOption = typer.Option(..., "--sites", "-N", help="Number of spin-1/2 sites.")
TopologyOption = typer.Option(Topology.PERIODIC, "--topology", help="periodic or open.")
AlphaOption = typer.Option(1.0, "--alpha", help="Right boundary parameter (open).")
BetaOption = typer.Option(1.0, "--beta", help="Left boundary parameter (open).")
XiOption = typer.Option(0.0, "--xi", help="Off-diagonal left boundary parameter (open).")
KmaxOption = typer.Option(None, "--kmax", help="Highest fusion level checked.")
ModelOption = typer.Option(None, "--model", help="Coefficient model for identity checks.")
TolOption = typer.Option(None, "--tol", help="Pass threshold for relative residuals.")
SeedOption = typer.Option(None, "--seed", help="Seed for all random sampling.")
SamplesOption = typer.Option(None, "--samples", help="Sample points per float residual.")
OutOption = typer.Option(None, "--out", help="Write the report here instead of stdout.")
FormatOption = typer.Option(OutputFormat.JSON, "--format", help="json, csv or text.")


@app.command()
def spectrum(
    sites: int = SitesOption,
    topology: Topology = TopologyOption,
    alpha: float = AlphaOption,
    beta: float = BetaOption,
    xi: float = XiOption,
    kmax: Optional[int] = KmaxOption,
    model: Optional[Model] = ModelOption,
    tol: Optional[float] = TolOption,
    seed: Optional[int] = SeedOption,
    samples: Optional[int] = SamplesOption,
    out: Optional[str] = OutOption,
    format: OutputFormat = FormatOption,
):
    """Hamiltonian eigenvalues and interpolated T_k per eigenstate."""
    execute(
        command=Command.SPECTRUM,
        sites=sites,
        topology=topology,
        alpha=alpha,
        beta=beta,
        xi=xi,
        kmax=kmax,
        model=model,
        tolerance=tol,
        seed=seed,
        samples=samples,
        out=out,
        format=format,
    )


@app.command()
def verify(
    which: Suite = typer.Argument(Suite.ALL, help="Suite to run."),
    sites: int = SitesOption,
    topology: Topology = TopologyOption,
    alpha: float = AlphaOption,
    beta: float = BetaOption,
    xi: float = XiOption,
    kmax: Optional[int] = KmaxOption,
    model: Optional[Model] = ModelOption,
    tol: Optional[float] = TolOption,
    seed: Optional[int] = SeedOption,
    samples: Optional[int] = SamplesOption,
    out: Optional[str] = OutOption,
    format: OutputFormat = FormatOption,
    delta_scale: float = typer.Option(
        1.0, "--delta-scale", help="Rescale Delta in the tq suite (negative control)."
    ),
    tables: bool = typer.Option(
        False, "--tables", help="Attach (u, |residual|) sample tables to records."
    ),
):
    """Run verification suites; exit 0 iff every residual is within tolerance."""
    execute(
        command=Command.VERIFY,
        suite=which,
        sites=sites,
        topology=topology,
        alpha=alpha,
        beta=beta,
        xi=xi,
        kmax=kmax,
        model=model,
        tolerance=tol,
        seed=seed,
        samples=samples,
        out=out,
        format=format,
        delta_scale=delta_scale,
        tables=tables,
    )


@app.command("solve-q")
def solve_q(
    sites: int = SitesOption,
    topology: Topology = TopologyOption,
    alpha: float = AlphaOption,
    beta: float = BetaOption,
    xi: float = XiOption,
    tol: Optional[float] = TolOption,
    seed: Optional[int] = SeedOption,
    samples: Optional[int] = SamplesOption,
    out: Optional[str] = OutOption,
    format: OutputFormat = FormatOption,
):
    """Q-function, Bethe roots and T_1 round trip per eigenstate."""
    execute(
        command=Command.SOLVE_Q,
        sites=sites,
        topology=topology,
        alpha=alpha,
        beta=beta,
        xi=xi,
        tolerance=tol,
        seed=seed,
        samples=samples,
        out=out,
        format=format,
    )


if __name__ == "__main__":
    app()
