"""Command line entry points.

``riskpipe run`` replays an event script headlessly and writes the report
files; ``riskpipe serve`` (or top-level ``--serve PORT``) starts the HTTP
service; ``riskpipe ingest`` loads a price CSV into a store.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from .errors import RiskpipeError
from .portfolio import Session, read_script
from .store import AssetStore


@click.group(invoke_without_command=True)
@click.option("--serve", "serve_port", type=int, default=None, metavar="PORT",
              help="Start the HTTP service on PORT instead of running a subcommand.")
@click.option("--host", default="127.0.0.1", show_default=True,
              help="Bind address when --serve is given.")
@click.option("--static", "static_dir", type=click.Path(file_okay=False), default=None,
              help="Directory with a built UI bundle to serve at /.")
@click.pass_context
def main(ctx, serve_port, host, static_dir):
    """Incremental Monte Carlo portfolio risk."""
    if ctx.invoked_subcommand is None:
        if serve_port is None:
            click.echo(ctx.get_help())
            ctx.exit(0)
        _serve(host, serve_port, static_dir)


def _serve(host: str, port: int, static_dir: str | None) -> None:
    import uvicorn

    from .service import create_app

    if static_dir is None:
        bundled = Path.cwd() / "frontend" / "dist"
        static_dir = str(bundled) if bundled.is_dir() else None
    app = create_app(static_dir=static_dir)
    click.echo(f"serving on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.argument("script_arg", required=False,
                type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--script", "script_opt", type=click.Path(exists=True, dir_okay=False, path_type=Path),
              default=None, help="Event script (JSON lines); alternative to the positional form.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False, path_type=Path),
              default=Path("riskpipe-out"), show_default=True, help="Output directory.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--samples", "-n", type=int, default=100_000, show_default=True,
              help="Sample count per tuple.")
@click.option("--alpha", type=float, default=0.95, show_default=True)
@click.option("--horizon", type=int, default=1, show_default=True)
@click.option("--store", "store_path", type=click.Path(dir_okay=False, path_type=Path),
              envvar="RISKPIPE_STORE", default=None,
              help="Asset store for AttachHistory sources (env RISKPIPE_STORE).")
@click.option("--no-cache", is_flag=True, help="Disable the tuple cache.")
@click.option("--no-figures", is_flag=True, help="Skip figure rendering.")
@click.option("--no-sensitivity", is_flag=True, help="Skip sensitivity estimation.")
@click.option("--normalized-weights", is_flag=True,
              help="Treat weights as fractions of their sum.")
def run(script_arg, script_opt, out_dir, seed, samples, alpha, horizon, store_path,
        no_cache, no_figures, no_sensitivity, normalized_weights):
    """Replay SCRIPT headlessly and write risk/sensitivity/timing reports."""
    script = script_opt or script_arg
    if script is None:
        raise click.UsageError("provide an event script (positional or --script)")
    store = AssetStore(store_path) if store_path else None
    try:
        events = read_script(script)
        session = Session(
            seed=seed,
            n=samples,
            alpha=alpha,
            horizon=horizon,
            sensitivity=not no_sensitivity,
            normalized_weights=normalized_weights,
            cache=not no_cache,
            store=store,
        )
        session.replay(events)
        out_dir.mkdir(parents=True, exist_ok=True)
        written = _write_reports(session, out_dir, figures=not no_figures)
    except RiskpipeError as exc:
        raise click.ClickException(str(exc)) from exc
    finally:
        if store is not None:
            store.close()

    snap = session.snapshot()
    root = snap["risk"]["root"]
    if root is not None:
        click.echo(
            "portfolio VaR={var:.6g} CVaR={cvar:.6g} EVaR={evar:.6g} "
            "(alpha={alpha:g}, n={n}, horizon={h})".format(
                var=root["var"], cvar=root["cvar"], evar=root["evar"],
                alpha=root["alpha"], n=root["n"], h=root["horizon"],
            )
        )
    else:
        click.echo("portfolio is empty; wrote reports with null risk section")
    for path in written:
        click.echo(f"wrote {path}")


def _write_reports(session: Session, out_dir: Path, figures: bool) -> list[Path]:
    snap = session.snapshot()
    risk_doc = {
        "session": session.session_id,
        "head": snap["head"],
        "portfolio": snap["portfolio"],
        "risk": snap["risk"],
    }
    written = []
    risk_path = out_dir / "risk.json"
    risk_path.write_text(json.dumps(risk_doc, sort_keys=True, indent=2) + "\n")
    written.append(risk_path)

    sens_path = out_dir / "sensitivity.json"
    sens_path.write_text(json.dumps(snap["sensitivity"], sort_keys=True, indent=2) + "\n")
    written.append(sens_path)

    timing_path = out_dir / "timing.csv"
    timing_path.write_text(session.ledger.to_csv())
    written.append(timing_path)

    if figures:
        from . import figures as fig

        if snap["risk"]["root"] is not None:
            written.append(
                fig.loss_distribution_figure(
                    session.root_tuple().values, session.report(), out_dir / "loss.png"
                )
            )
        if session.sensitivity_report() is not None:
            written.append(
                fig.sensitivity_figure(session.sensitivity_report(), out_dir / "sensitivity.png")
            )
        if session.ledger.rows():
            written.append(fig.timing_figure(session.ledger, out_dir / "timing.png"))
    return written


@main.command()
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--static", "static_dir", type=click.Path(file_okay=False), default=None,
              help="Directory with a built UI bundle to serve at /.")
def serve(port, host, static_dir):
    """Start the HTTP service."""
    _serve(host, port, static_dir)


@main.command()
@click.argument("csv_path", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--asset", "asset_id", required=True, help="Asset id to store the history under.")
@click.option("--store", "store_path", type=click.Path(dir_okay=False, path_type=Path),
              envvar="RISKPIPE_STORE", required=True,
              help="Asset store path (env RISKPIPE_STORE).")
def ingest(csv_path, asset_id, store_path):
    """Load a timestamp,price CSV into the asset store."""
    try:
        with AssetStore(store_path) as store:
            history = store.ingest_prices(csv_path, asset_id)
    except RiskpipeError as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"stored {len(history)} prices for {asset_id!r} in {store_path}")


if __name__ == "__main__":
    main()
