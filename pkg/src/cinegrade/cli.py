"""Command-line interface; every verb is a thin client over GradingEngine."""

from __future__ import annotations

import json
import sys

import click

from .colorspace import CAMERA_LOG, Colorimetry, Frame, get_curve, get_gamut
from .config import load_config
from .engine import GradingEngine
from .errors import CinegradeError
from .frameio import read_image
from .framestats import exposure_profile


def _engine(config_path: str | None) -> GradingEngine:
    return GradingEngine(load_config(config_path))


@click.group()
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="YAML config file (search, rolloff, caps, store, sessions dir).")
@click.pass_context
def main(ctx, config_path):
    """Agentic color grading: log footage to .cube LUTs and CDL parameters."""
    ctx.obj = config_path


@main.command()
@click.argument("source", type=click.Path(exists=True))
@click.option("--curve", required=True, help="Log curve: SLog3, Log3G10, LogC3, VLog.")
@click.option("--gamut", required=True, help="Camera gamut, e.g. SGamut3Cine.")
@click.option("--directive", default=None, help="Optional creative directive.")
@click.pass_obj
def grade(config_path, source, curve, gamut, directive):
    """Create a session from a frame or clip directory and grade it."""
    engine = _engine(config_path)
    session = engine.create_session(source, curve, gamut, directive)
    session = engine.run_automatic_grade(session.id)
    click.echo(json.dumps(session.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.argument("session_id")
@click.argument("text")
@click.pass_obj
def feedback(config_path, session_id, text):
    """Apply one natural-language refinement step to a session."""
    engine = _engine(config_path)
    session = engine.post_feedback(session_id, text)
    click.echo(json.dumps(session.to_dict(), indent=2, sort_keys=True))


@main.command()
@click.argument("session_id")
@click.option("--iteration", type=int, default=None, help="Defaults to latest.")
@click.pass_obj
def export(config_path, session_id, iteration):
    """Export .cube, CDL XML, and the session report."""
    engine = _engine(config_path)
    paths = engine.export_artifacts(session_id, iteration)
    click.echo(json.dumps(paths.to_dict(), indent=2))


@main.command()
@click.argument("session_id")
@click.argument("clip_dir", type=click.Path(exists=True))
@click.argument("out_dir", type=click.Path())
@click.option("--iteration", type=int, default=None)
@click.option("--no-normalize", is_flag=True,
              help="Treat frames as already normalized Rec.709.")
@click.option("--workers", type=int, default=4)
@click.pass_obj
def render(config_path, session_id, clip_dir, out_dir, iteration, no_normalize, workers):
    """Render a full clip through the session's LUT."""
    engine = _engine(config_path)
    count, errors = engine.render_clip(
        session_id, iteration, clip_dir, out_dir,
        normalize=not no_normalize, workers=workers,
    )
    click.echo(f"rendered {count} frames")
    if errors:
        for err in errors:
            click.echo(f"error: {err}", err=True)
        sys.exit(1)


@main.command()
@click.argument("frame_path", type=click.Path(exists=True))
@click.option("--curve", required=True)
@click.option("--gamut", required=True)
def stats(frame_path, curve, gamut):
    """Print the exposure profile of a log frame after normalization."""
    from .colorspace import normalize_to_rec709

    pixels = read_image(frame_path)
    frame = Frame(pixels, Colorimetry(CAMERA_LOG, curve=curve, gamut=gamut))
    normalized = normalize_to_rec709(frame, get_curve(curve), get_gamut(gamut))
    click.echo(json.dumps(exposure_profile(normalized).to_dict(), indent=2))


@main.command()
@click.argument("session_id")
@click.pass_obj
def tree(config_path, session_id):
    """Print the audit tree of the session's last automatic search."""
    engine = _engine(config_path)
    click.echo(json.dumps(engine.tree(session_id), indent=2, sort_keys=True))


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
@click.pass_obj
def serve(config_path, host, port):
    """Run the HTTP session service."""
    import uvicorn

    from .service import create_app

    app = create_app(_engine(config_path))
    uvicorn.run(app, host=host, port=port)


def _cli_main():
    try:
        main(standalone_mode=True)
    except CinegradeError as exc:
        click.echo(f"error [{exc.code}]: {exc.message}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    _cli_main()
