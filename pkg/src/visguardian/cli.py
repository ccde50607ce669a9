"""Command-line entry points: `sanitize` (batch pipeline + bench),
`compare` (interaction-cost table), and `serve` (HTTP/WS service).

Exit codes: 0 success, 1 runtime failure, 2 configuration error.
The VISGUARDIAN_TAXONOMY environment variable overrides the taxonomy path;
without it the bundled default taxonomy is used.
"""

from __future__ import annotations

import csv
import os
import sys
from pathlib import Path
from typing import Optional

import click

from . import oracle, pipeline
from .pipeline import ConfigError, PipelineConfig, SinkError
from .policy import Mode
from .taxonomy import ValidationError

MODE_NAMES = [m.value for m in Mode]


def _taxonomy_path(flag_value: Optional[str]) -> Optional[Path]:
    env = os.environ.get("VISGUARDIAN_TAXONOMY")
    if env:
        return Path(env)
    return Path(flag_value) if flag_value else None


@click.group()
def main():
    """Visual-privacy middleware: sanitize streams, compare techniques, serve UIs."""


@main.command("sanitize")
@click.option("--frames", "frames_dir", type=click.Path(), help="Input PNG frame directory.")
@click.option("--detections", "detections_path", type=click.Path(), help="JSON Lines detection fixture.")
@click.option("--taxonomy", "taxonomy_path", type=click.Path(), default=None, help="Taxonomy JSON (default: bundled).")
@click.option("--out", "out_dir", type=click.Path(), help="Output directory for sanitized frames + report.")
@click.option("--mode", type=click.Choice(MODE_NAMES), default=Mode.VISGUARDIAN.value, show_default=True)
@click.option("--script", "script_path", type=click.Path(), default=None, help="Timed interaction script (JSON array).")
@click.option("--fallback-fill", is_flag=True, help="Occlude with solid mid-gray instead of frozen patches.")
@click.option("--fps-cap", type=float, default=None, help="Sleep to cap throughput (frames per second).")
@click.option("--app-id", default="default-app", show_default=True)
@click.option("--no-figure", is_flag=True, help="Skip the latency figure next to the report.")
@click.option("--bench", is_flag=True, help="Run the synthetic throughput benchmark and exit.")
@click.option("--bench-frames", type=int, default=120, show_default=True)
@click.option("--bench-width", type=int, default=1280, show_default=True)
@click.option("--bench-height", type=int, default=720, show_default=True)
@click.option("--bench-boxes", type=int, default=32, show_default=True)
def cli_sanitize(
    frames_dir,
    detections_path,
    taxonomy_path,
    out_dir,
    mode,
    script_path,
    fallback_fill,
    fps_cap,
    app_id,
    no_figure,
    bench,
    bench_frames,
    bench_width,
    bench_height,
    bench_boxes,
):
    """Run the sanitization pipeline over a frame directory."""
    try:
        if bench:
            report = pipeline.run_bench(
                width=bench_width,
                height=bench_height,
                boxes=bench_boxes,
                frames=bench_frames,
                mode=Mode(mode),
            )
            for line in report.summary_lines():
                click.echo(line)
            return
        if not frames_dir or not detections_path or not out_dir:
            raise ConfigError("--frames, --detections and --out are required (or use --bench)")
        script = ()
        if script_path:
            try:
                text = Path(script_path).read_text(encoding="utf-8")
            except OSError as exc:
                raise ConfigError(f"cannot read script: {exc}") from exc
            script = pipeline.parse_script(text)
        config = PipelineConfig(
            frames_dir=Path(frames_dir),
            detections_path=Path(detections_path),
            taxonomy_path=_taxonomy_path(taxonomy_path),
            out_dir=Path(out_dir),
            app_id=app_id,
            mode=Mode(mode),
            solid_fill=fallback_fill,
            fps_cap=fps_cap,
            write_figure=not no_figure,
        )
        report = pipeline.replay(config, script)
    except ConfigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    except (SinkError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for line in report.summary_lines():
        click.echo(line)


@main.command("compare")
@click.option("--scenario", "scenario_path", type=click.Path(), required=True, help="Scenario JSON file.")
@click.option("--taxonomy", "taxonomy_path", type=click.Path(), default=None, help="Taxonomy JSON (default: bundled).")
@click.option("--csv", "csv_path", type=click.Path(), default=None, help="Also write the table as CSV.")
@click.option("--figure", "figure_path", type=click.Path(), default=None, help="Write a cost bar chart (default: next to --csv).")
def cli_compare(scenario_path, taxonomy_path, csv_path, figure_path):
    """Compare minimal interaction costs of the three techniques."""
    from .taxonomy import default_taxonomy, load_taxonomy

    try:
        tax_path = _taxonomy_path(taxonomy_path)
        taxonomy = load_taxonomy(tax_path) if tax_path else default_taxonomy()
        scenario = oracle.load_scenario(scenario_path, taxonomy)
        rows = oracle.compare_techniques(
            taxonomy,
            scenario.scene,
            scenario.start,
            scenario.target,
            scenario.cost_model,
            scenario.techniques,
        )
    except (ValidationError, ConfigError, KeyError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    click.echo(oracle.comparison_table(rows))
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows(oracle.comparison_csv_rows(rows))
        if figure_path is None:
            figure_path = str(Path(csv_path).with_suffix(".png"))
    if figure_path:
        from .figures import render_comparison_figure

        render_comparison_figure(rows, figure_path)


@main.command("serve")
@click.option("--port", type=int, default=8710, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--frames", "frames_dir", type=click.Path(), required=True)
@click.option("--detections", "detections_path", type=click.Path(), required=True)
@click.option("--taxonomy", "taxonomy_path", type=click.Path(), default=None)
@click.option("--mode", type=click.Choice(MODE_NAMES), default=Mode.VISGUARDIAN.value, show_default=True)
@click.option("--fps", type=float, default=10.0, show_default=True)
@click.option("--app-id", default="default-app", show_default=True)
@click.option("--fallback-fill", is_flag=True)
@click.option("--no-loop", is_flag=True, help="Stop after one pass over the frames.")
@click.option("--policy-in", type=click.Path(), default=None, help="Load policy states at startup.")
@click.option("--policy-out", type=click.Path(), default=None, help="Write policy states on shutdown.")
def cli_serve(
    port,
    host,
    frames_dir,
    detections_path,
    taxonomy_path,
    mode,
    fps,
    app_id,
    fallback_fill,
    no_loop,
    policy_in,
    policy_out,
):
    """Serve the stream, policy, and events over HTTP/WebSocket."""
    from .service import ServiceConfig, serve

    try:
        config = ServiceConfig(
            frames_dir=Path(frames_dir),
            detections_path=Path(detections_path),
            taxonomy_path=_taxonomy_path(taxonomy_path),
            app_id=app_id,
            mode=Mode(mode),
            fps=fps,
            solid_fill=fallback_fill,
            loop_source=not no_loop,
            policy_in=Path(policy_in) if policy_in else None,
            policy_out=Path(policy_out) if policy_out else None,
        )
        serve(config, host=host, port=port)
    except (ConfigError, ValidationError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
