"""CLI entry point for wpansim."""

import sys
from pathlib import Path
from typing import List, Optional

import click
import typer

from src.errors import EngineFault, OutputError, ScenarioError, WpanSimError
from src.evaluator import BatchEvaluator, analyze_trace, print_trace_analysis
from src.launcher import FORMATS, launch_run
from src.scenario import WpanSimSettings, list_presets, parse_scenario, resolve_scenario_path
from src.util.log import setup_logging

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_ENGINE = 3

app = typer.Typer(
    help="wpansim - discrete-event simulator for IEEE 802.15.4 star, cluster and ring WPANs",
    add_completion=False,
)


def _settings() -> WpanSimSettings:
    settings = WpanSimSettings()
    setup_logging(settings.log_level)
    return settings


def _load(name: str):
    try:
        return parse_scenario(resolve_scenario_path(name))
    except ScenarioError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_USAGE)


def _check_format(format: str) -> None:
    if format not in FORMATS:
        raise typer.BadParameter(f"expected one of {', '.join(FORMATS)}", param_hint="--format")


def parse_seeds(spec: str) -> List[int]:
    """`1..10` or `1,2,3` (ranges may be mixed in: `1..3,7`)."""
    seeds: List[int] = []
    try:
        for part in spec.split(","):
            part = part.strip()
            if not part:
                continue
            if ".." in part:
                lo, hi = (int(x) for x in part.split("..", 1))
                if hi < lo:
                    raise ValueError(part)
                seeds.extend(range(lo, hi + 1))
            else:
                seeds.append(int(part))
    except ValueError:
        raise typer.BadParameter(f"cannot parse seeds '{spec}'", param_hint="--seeds")
    if not seeds or any(s < 0 for s in seeds):
        raise typer.BadParameter("need at least one non-negative seed", param_hint="--seeds")
    return list(dict.fromkeys(seeds))


@app.command()
def run(
    scenario: str = typer.Argument(..., help="Scenario file, or the name of a shipped preset"),
    seed: Optional[int] = typer.Option(None, "--seed", help="Override the scenario seed"),
    duration: Optional[float] = typer.Option(None, "--duration", help="Run length in seconds"),
    warmup: Optional[float] = typer.Option(None, "--warmup", help="Seconds excluded from metrics"),
    bucket: Optional[float] = typer.Option(None, "--bucket", help="Time-series bucket width in seconds"),
    out_dir: Optional[str] = typer.Option(None, "--out-dir", help="Output directory (default: $WPANSIM_OUT)"),
    trace: bool = typer.Option(False, "--trace", help="Write a per-event trace log"),
    format: str = typer.Option("all", "--format", help="csv, summary, svg or all"),
    quiet: bool = typer.Option(False, "--quiet", help="Only print errors"),
):
    """Run one scenario and write CSV, summary, chart and metadata."""
    settings = _settings()
    _check_format(format)
    base = _load(scenario)
    try:
        resolved = base.with_overrides(seed=seed, duration=duration, warmup=warmup, bucket_width=bucket)
    except ScenarioError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_USAGE)

    try:
        launch_run(resolved, out_dir or settings.out, trace=trace, format=format, verbose=not quiet)
    except OutputError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_IO)
    except EngineFault as e:
        typer.echo(f"Engine fault: {e}", err=True)
        typer.echo("Trace tail:", err=True)
        for line in e.trace_tail:
            typer.echo(f"  {line}", err=True)
        raise typer.Exit(code=EXIT_ENGINE)
    except WpanSimError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_USAGE)


@app.command()
def compare(
    scenarios: List[str] = typer.Argument(..., help="Two or more scenario files or preset names"),
    seeds: str = typer.Option("1..10", "--seeds", help="Seeds as a range (1..10) or a list (1,2,3)"),
    duration: Optional[float] = typer.Option(None, "--duration", help="Common run length in seconds"),
    parallel: int = typer.Option(1, "--parallel", "-p", help="Number of worker processes (1 = sequential)"),
    out_dir: Optional[str] = typer.Option(None, "--out-dir", help="Output directory (default: $WPANSIM_OUT)"),
    format: str = typer.Option("all", "--format", help="csv, summary, svg or all"),
    verbose: bool = typer.Option(True, "--verbose/--quiet", help="Print per-run progress"),
):
    """
    Compare scenarios across seeds: mean ± stddev per metric and a ranking line.

    Examples:
        # Shipped presets, seeds 1..10, four workers
        python main.py compare cluster star ring --parallel 4

        # Three seeds, one minute each
        python main.py compare star.toml ring.toml --seeds 1,2,3 --duration 60
    """
    settings = _settings()
    _check_format(format)
    if parallel < 1:
        raise typer.BadParameter("must be >= 1", param_hint="--parallel")
    seed_list = parse_seeds(seeds)
    loaded = [_load(name) for name in scenarios]
    if len(loaded) < 2:
        typer.echo("Note: a single scenario gives a degenerate comparison", err=True)

    try:
        evaluator = BatchEvaluator(loaded, seed_list, duration=duration, parallel=parallel, verbose=verbose)
    except (ValueError, ScenarioError) as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_USAGE)

    if verbose:
        print(f"\n{'=' * 80}")
        print("SCENARIO COMPARISON")
        print(f"{'=' * 80}")
        print(f"Scenarios:        {', '.join(s.name for s in evaluator.scenarios)}")
        print(f"Seeds:            {len(seed_list)}")
        print(f"Duration:         {evaluator.duration:g} s")
        print(f"Parallel workers: {parallel}")
        print(f"{'=' * 80}\n")

    try:
        evaluator.evaluate_batch()
    except KeyboardInterrupt:
        print("\n\nComparison interrupted by user.")
        raise typer.Exit(code=EXIT_ENGINE)
    evaluator.print_summary()
    try:
        evaluator.save_results(out_dir or settings.out, format=format)
    except OutputError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_IO)
    if any(r.error for r in evaluator.results):
        raise typer.Exit(code=EXIT_ENGINE)


@app.command()
def validate(scenarios: List[str] = typer.Argument(..., help="Scenario files to check")):
    """Parse and validate scenario files without running them."""
    _settings()
    failed = 0
    for name in scenarios:
        try:
            s = parse_scenario(resolve_scenario_path(name))
        except ScenarioError as e:
            failed += 1
            typer.echo(f"✗ {name}: {e}", err=True)
            continue
        print(f"✓ {name}: {s.name} ({s.topology.kind}, {s.topology.node_count()} nodes, {s.duration:g} s)")
    if failed:
        raise typer.Exit(code=EXIT_USAGE)


@app.command("analyze-trace")
def analyze_trace_command(trace_file: Path = typer.Argument(..., help="Trace log written by run --trace")):
    """Summarize a trace and check CSMA/CA bounds, slot alignment and overlaps."""
    _settings()
    try:
        metrics = analyze_trace(str(trace_file))
    except FileNotFoundError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_IO)
    except ValueError as e:
        typer.echo(f"Error: {e}", err=True)
        raise typer.Exit(code=EXIT_USAGE)
    print_trace_analysis(metrics)


@app.command("list-scenarios")
def list_scenarios():
    """List the shipped scenario presets."""
    _settings()
    for path in list_presets():
        try:
            s = parse_scenario(path)
        except ScenarioError as e:
            print(f"{path.stem:<12} invalid: {e}")
            continue
        print(f"{path.stem:<12} {s.topology.kind:<8} {s.topology.node_count():>3} nodes  {path}")


def main(argv: Optional[List[str]] = None) -> int:
    """Run the CLI and return its exit code; usage errors map to 1."""
    try:
        rv = app(args=argv, prog_name="wpansim", standalone_mode=False)
    except click.exceptions.UsageError as e:
        e.show()
        return EXIT_USAGE
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        return EXIT_USAGE
    return rv if isinstance(rv, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
