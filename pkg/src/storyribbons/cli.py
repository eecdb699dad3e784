"""Command-line entry points: ingest, run, stats, serve."""

from __future__ import annotations

import json
import logging
from pathlib import Path

import click

from . import analytics
from .gateway import Gateway
from .ingest import IngestError, ingest_story
from .model import ProvenanceLog, SerializationError, deserialize
from .pipeline import PipelineError, run_pipeline
from .service import create_app


def _load_story(data_dir: Path, story_id: str):
    path = data_dir / story_id / "story.json"
    if not path.is_file():
        raise click.ClickException(f"no story.json for {story_id!r} under {data_dir}")
    try:
        return deserialize(path.read_bytes())
    except SerializationError as exc:
        raise click.ClickException(f"{path}: {exc}")


def _load_provenance(data_dir: Path, story_id: str) -> ProvenanceLog | None:
    path = data_dir / story_id / "provenance.json"
    if not path.is_file():
        return None
    try:
        return ProvenanceLog.from_obj(json.loads(path.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, ValueError, TypeError):
        return None


def _make_gateway(provider: str, fixtures: str, story_id: str | None, max_concurrency: int) -> Gateway:
    if provider == "fixture":
        return Gateway.fixture(fixtures, story_id, max_concurrency=max_concurrency)
    return Gateway.from_env(max_concurrency=max_concurrency)


@click.group()
@click.option("--verbose", is_flag=True, help="Enable info-level logging.")
def main(verbose: bool) -> None:
    """Turn raw story text into structured, explorable narrative data."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True, dir_okay=False))
def ingest(config_path: str) -> None:
    """Split a configured story into numbered chapter files."""
    try:
        story_dir = ingest_story(config_path)
    except IngestError as exc:
        raise click.ClickException(str(exc))
    index = json.loads((story_dir / "chapters.json").read_text(encoding="utf-8"))
    click.echo(f"{index['story_id']}: {len(index['chapters'])} chapters, {index['line_count']} lines")


@main.command()
@click.option("--story", "story_id", required=True)
@click.option("--data-dir", default="data", type=click.Path(file_okay=False), show_default=True)
@click.option("--target", type=click.Choice(["characters", "themes", "both"]), default="both", show_default=True)
@click.option("--allow-partial", is_flag=True, help="Keep degraded output when some steps fail.")
@click.option("--provider", type=click.Choice(["live", "fixture"]), default="live", show_default=True)
@click.option("--fixtures", default="fixtures", type=click.Path(file_okay=False), show_default=True)
@click.option("--max-concurrency", default=8, show_default=True)
def run(
    story_id: str,
    data_dir: str,
    target: str,
    allow_partial: bool,
    provider: str,
    fixtures: str,
    max_concurrency: int,
) -> None:
    """Run the extraction pipeline and write story.json + provenance.json."""
    gateway = _make_gateway(provider, fixtures, story_id, max_concurrency)
    story_dir = Path(data_dir) / story_id
    try:
        story = run_pipeline(story_dir, gateway, target=target, allow_partial=allow_partial)
    except (PipelineError, IngestError) as exc:
        raise click.ClickException(str(exc))
    row = analytics.story_stats(story)
    click.echo(
        f"{story.meta.id}: {row['scenes']} scenes, {row['characters']} characters, "
        f"{row['locations']} locations, {row['themes']} themes, {row['quotes']} quotes"
    )
    click.echo(f"wrote {story_dir / 'story.json'}")


@main.command()
@click.option("--story", "story_id", default=None)
@click.option("--all", "all_stories", is_flag=True, help="One row per story in the data dir.")
@click.option("--data-dir", default="data", type=click.Path(file_okay=False), show_default=True)
@click.option("--format", "fmt", type=click.Choice(["table", "json", "csv"]), default="table", show_default=True)
def stats(story_id: str | None, all_stories: bool, data_dir: str, fmt: str) -> None:
    """Report output statistics for finished stories."""
    root = Path(data_dir)
    if not all_stories and story_id is None:
        raise click.ClickException("pass --story <id> or --all")
    if all_stories:
        ids = sorted(p.parent.name for p in root.glob("*/story.json"))
        if not ids:
            raise click.ClickException(f"no finished stories under {root}")
    else:
        ids = [story_id]

    rows = []
    for sid in ids:
        story = _load_story(root, sid)
        row = analytics.story_stats(story)
        log = _load_provenance(root, sid)
        accuracy = analytics.quote_accuracy(log) if log else None
        rows.append((sid, story, row, accuracy))

    if fmt == "table":
        click.echo(analytics.stats_table([(sid, row) for sid, _, row, _ in rows]))
        for sid, _, _, accuracy in rows:
            shown = "n/a" if accuracy is None else f"{accuracy:.4f}"
            click.echo(f"{sid}: quote accuracy {shown}")
    elif fmt == "csv":
        click.echo("story," + ",".join(analytics.STAT_COLUMNS))
        for sid, _, row, _ in rows:
            click.echo(sid + "," + ",".join(str(row[c]) for c in analytics.STAT_COLUMNS))
    else:
        out = []
        for sid, story, row, accuracy in rows:
            explanations = [s.boundary_explanation for s in story.scenes if s.boundary_explanation]
            out.append(
                {
                    "story_id": sid,
                    "stats": row,
                    "quote_accuracy": "n/a" if accuracy is None else round(accuracy, 4),
                    "scene_lengths": analytics.scene_length_stats(story),
                    "boundary_distribution": analytics.classify_boundaries(explanations),
                }
            )
        click.echo(json.dumps(out[0] if not all_stories else out, indent=2, sort_keys=True))


@main.command()
@click.option("--data-dir", default="data", type=click.Path(file_okay=False), show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8787, show_default=True)
@click.option("--no-cache", is_flag=True, help="Skip cache reads; recompute every on-the-fly call.")
@click.option("--provider", type=click.Choice(["live", "fixture"]), default="live", show_default=True)
@click.option("--fixtures", default="fixtures", type=click.Path(file_okay=False), show_default=True)
@click.option("--max-concurrency", default=8, show_default=True)
def serve(
    data_dir: str,
    host: str,
    port: int,
    no_cache: bool,
    provider: str,
    fixtures: str,
    max_concurrency: int,
) -> None:
    """Serve stories and on-the-fly operations over HTTP."""
    import uvicorn

    gateway = _make_gateway(provider, fixtures, None, max_concurrency)
    app = create_app(data_dir, gateway, use_cache=not no_cache)
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
