#!/usr/bin/env python3
"""
Signest CLI
Sign-measurement estimation under sensing-matrix perturbation
"""
import asyncio
import json
import shutil
import sys
import time
from contextlib import contextmanager
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional

try:  # typer >= 0.26 raises from its vendored click
    from typer._click import exceptions as click
except ImportError:
    import click
import numpy as np
import typer
import yaml
from dotenv import load_dotenv
from rich.console import Console
from rich.panel import Panel
from rich.prompt import Confirm

# Load environment variables from .env file
load_dotenv()

from estimation.errors import ConfigError, DomainError, NumericalError
from estimation.estimator import ml_estimate, perturbation_ignored_estimate
from estimation.model import (
    PerturbedSignModel,
    RngSeed,
    make_gaussian_matrix,
    make_ones_row,
    simulate_measurements,
)
from experiments import ExperimentConfig
from orchestrator import (
    ARTIFACT_VERSION,
    ExperimentOrchestrator,
    RunManifest,
    write_csv,
    write_manifest,
)
from utils.config_loader import default_output_dir, parse_config, validate_config_data

app = typer.Typer(help="Signest - one-bit estimation under sensing-matrix perturbation")
console = Console()

STREAM_DATASET_MATRIX = 1
STREAM_DATASET_MEASUREMENTS = 2
DATASET_KEYS = ("H", "y", "sigma_e2", "sigma_n2")

SCAN_DEFAULTS = {
    "sigma_n": (1e-3, 1e2),
    "sigma_e": (1e-5, 1e1),
    "gap": (1e-3, 1e3),
}


class ScanAxis(str, Enum):
    SIGMA_N = "sigma_n"
    SIGMA_E = "sigma_e"
    GAP = "gap"


class MatrixKind(str, Enum):
    ONES = "ones"
    GAUSSIAN = "gaussian"


@contextmanager
def _exit_codes():
    """Map library failures onto exit codes: 1 for bad input, 2 for numerical failure"""
    try:
        yield
    except (ConfigError, DomainError, OSError) as e:
        console.print(f"\n[red]Error: {e}[/red]")
        raise typer.Exit(1)
    except NumericalError as e:
        console.print(f"\n[red]Numerical failure ({type(e).__name__}): {e}[/red]")
        raise typer.Exit(2)
    except KeyboardInterrupt:
        console.print("\n[yellow]Cancelled by user.[/yellow]")
        raise typer.Exit(1)


def _resolve_output_dir(output: Optional[Path], config: Optional[ExperimentConfig] = None) -> Path:
    if output is not None:
        return output
    if config is not None and config.output.directory:
        return Path(config.output.directory)
    return default_output_dir()


def _run(
    config: ExperimentConfig,
    output: Optional[Path],
    warnings: Optional[List[str]] = None,
    summary: bool = False,
    progress: bool = True
) -> None:
    orchestrator = ExperimentOrchestrator(show_progress=progress, console=console)
    result = asyncio.run(orchestrator.run_experiment(
        config,
        _resolve_output_dir(output, config),
        warnings=warnings,
        show_summary=summary or config.output.summary
    ))
    console.print("[bold green]✅ Success![/bold green]")
    console.print(f"Check outputs in: [cyan]{result['output_directory']}[/cyan]\n")


def _build_config(data: Dict[str, Any]) -> ExperimentConfig:
    config, _ = validate_config_data(data)
    return config


def _load_dataset(path: Path) -> Dict[str, Any]:
    """Read a dataset written by `simulate`"""
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ConfigError(f"dataset {path} is not valid JSON: {e.msg}", line=e.lineno) from e
    missing = [key for key in DATASET_KEYS if key not in data]
    if missing:
        raise ConfigError(f"dataset {path} lacks required entries", keys=missing)
    return data


@app.command()
def simulate(
    n: int = typer.Option(..., "--n", "-n", min=1, help="Number of measurements"),
    p: int = typer.Option(1, "--p", min=1, help="Parameter dimension"),
    sigma_e2: float = typer.Option(0.0, "--sigma-e2", help="Perturbation variance"),
    sigma_n2: float = typer.Option(1.0, "--sigma-n2", help="Additive noise variance"),
    w0: Optional[List[float]] = typer.Option(None, "--w0", help="True parameter (repeat per entry, default all ones)"),
    matrix: Optional[MatrixKind] = typer.Option(None, "--matrix", help="Mean matrix (default: ones for p = 1, else gaussian)"),
    seed: int = typer.Option(0, "--seed", min=0, help="Master seed"),
    output: Path = typer.Option(Path("dataset.json"), "--output", "-o", help="Dataset file to write")
):
    """Draw a sign-measurement dataset and save it as JSON"""
    with _exit_codes():
        w_true = np.asarray(w0 if w0 else [1.0] * p, dtype=float)
        if w_true.shape[0] != p:
            raise ConfigError(f"--w0 has {w_true.shape[0]} entries but p = {p}", keys=["w0"])
        kind = matrix or (MatrixKind.ONES if p == 1 else MatrixKind.GAUSSIAN)
        if kind is MatrixKind.ONES and p != 1:
            raise ConfigError("the all-ones matrix needs p = 1", keys=["matrix"])

        root = RngSeed(seed)
        if kind is MatrixKind.ONES:
            H = make_ones_row(n)
        else:
            H = make_gaussian_matrix(p, n, root.child(STREAM_DATASET_MATRIX))
        model = PerturbedSignModel(H, sigma_e2, sigma_n2)
        y = simulate_measurements(model, w_true, root.child(STREAM_DATASET_MEASUREMENTS))

        dataset = {
            "H": H.tolist(),
            "y": [int(s) for s in y],
            "sigma_e2": sigma_e2,
            "sigma_n2": sigma_n2,
            "w0": w_true.tolist(),
            "seed": seed
        }
        output.parent.mkdir(parents=True, exist_ok=True)
        with open(output, "w") as f:
            json.dump(dataset, f, indent=2)
        console.print(f"✓ {n} measurements written to [cyan]{output}[/cyan]")


@app.command()
def estimate(
    dataset: Path = typer.Argument(..., help="Dataset JSON written by `simulate`"),
    r_w: Optional[float] = typer.Option(None, "--r-w", help="Norm limit (default: r_w_factor * ||w0||)"),
    r_w_factor: float = typer.Option(4.0, "--r-w-factor", help="Norm limit as a multiple of ||w0||"),
    ignore_perturbation: bool = typer.Option(False, "--ignore-perturbation", help="Use the probit estimator that sets sigma_e2 to 0"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output directory")
):
    """Estimate w from one dataset and write estimate.csv"""
    with _exit_codes():
        data = _load_dataset(dataset)
        H = np.asarray(data["H"], dtype=float)
        y = np.asarray(data["y"], dtype=float)
        if r_w is None:
            if "w0" not in data:
                raise ConfigError("dataset has no w0; pass --r-w", keys=["r_w"])
            r_w = r_w_factor * float(np.linalg.norm(data["w0"]))

        output_dir = _resolve_output_dir(output)
        output_dir.mkdir(parents=True, exist_ok=True)
        estimator = "ignored" if ignore_perturbation else "ml"
        echo = yaml.safe_dump({"dataset": str(dataset), "estimator": estimator, "r_w": r_w},
                              sort_keys=False)
        start = time.perf_counter()

        def manifest(warnings: List[str]) -> RunManifest:
            return RunManifest(
                config_echo=echo,
                master_seed=int(data.get("seed", 0)),
                artifact_version=ARTIFACT_VERSION,
                wall_time_seconds=time.perf_counter() - start,
                warnings=warnings
            )

        try:
            with console.status("[bold green]Solving..."):
                if ignore_perturbation:
                    report = perturbation_ignored_estimate(H, y, float(data["sigma_n2"]), r_w)
                else:
                    model = PerturbedSignModel(H, float(data["sigma_e2"]), float(data["sigma_n2"]))
                    report = ml_estimate(model, y, r_w)
        except NumericalError as e:
            write_manifest(output_dir, manifest([f"{type(e).__name__}: {e}"]))
            raise

        columns = ["estimator", "status", "iterations", "final_grad_norm", "neg_log_likelihood"]
        columns += [f"w_hat_{i + 1}" for i in range(report.w_hat.shape[0])]
        row = [estimator, report.status.value, report.iterations, report.final_grad_norm,
               report.neg_log_likelihood, *(float(w) for w in report.w_hat)]
        table = write_csv(output_dir / "estimate.csv", columns, [row])
        write_manifest(output_dir, manifest([]))

        console.print(f"✓ status [bold]{report.status.value}[/bold] after {report.iterations} iterations")
        console.print(f"  w_hat = {np.array2string(report.w_hat, precision=6)}")
        console.print(f"  written to [cyan]{table}[/cyan]\n")


@app.command()
def crlb(
    scan: ScanAxis = typer.Option(ScanAxis.SIGMA_N, "--scan", help="Axis to scan"),
    w0: float = typer.Option(1.0, "--w0", help="Scalar parameter value"),
    sigma_e2: float = typer.Option(0.3, "--sigma-e2", help="Perturbation variance (fixed for sigma_n scans)"),
    sigma_n2: float = typer.Option(1.0, "--sigma-n2", help="Noise variance (fixed for sigma_e scans)"),
    n: int = typer.Option(1, "--n", "-n", min=1, help="Number of measurements"),
    p: int = typer.Option(1, "--p", min=1, help="Parameter dimension (gap scan only)"),
    scan_min: Optional[float] = typer.Option(None, "--min", help="Lower end of the scan"),
    scan_max: Optional[float] = typer.Option(None, "--max", help="Upper end of the scan"),
    points: int = typer.Option(200, "--points", min=2, help="Grid points"),
    include_zero: bool = typer.Option(False, "--include-zero", help="Add the gamma = 0 endpoint (gap scan only)"),
    seed: int = typer.Option(0, "--seed", min=0, help="Master seed (gap scan with p > 1)"),
    summary: bool = typer.Option(False, "--summary", help="Print headline values"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output directory")
):
    """Scan the CRLB along sigma_n^2, sigma_e^2, or the gap-bound gamma axis"""
    with _exit_codes():
        low, high = SCAN_DEFAULTS[scan.value]
        grid = {"min": scan_min or low, "max": scan_max or high, "points": points,
                "include_zero": include_zero}
        if scan is ScanAxis.GAP:
            model = {"p": p, "w0": [w0] if p == 1 else "random-normal"}
            experiment = {"kind": "gap_bounds_sweep", "n_measurements": max(n, p)}
        elif scan is ScanAxis.SIGMA_N:
            model = {"w0": [w0], "sigma_e2": sigma_e2}
            experiment = {"kind": "crlb_scan_sigma_n", "n_measurements": n}
        else:
            model = {"w0": [w0], "sigma_n2": sigma_n2}
            experiment = {"kind": "crlb_scan_sigma_e", "n_measurements": n}
        experiment.update({"scan": grid, "master_seed": seed})
        config = _build_config({"model": model, "experiment": experiment})
        _run(config, output, summary=summary)


@app.command()
def probability(
    n: List[int] = typer.Option(..., "--n", "-n", help="Number of measurements (repeat for a grid)"),
    sigma_e2: List[float] = typer.Option([0.1], "--sigma-e2", help="Perturbation variance (repeat for a grid)"),
    sigma_n2: Optional[float] = typer.Option(None, "--sigma-n2", help="Fixed noise variance"),
    sigma_z2: Optional[float] = typer.Option(None, "--sigma-z2", help="Fixed total variance instead of sigma_n2"),
    w0: float = typer.Option(1.0, "--w0", help="Scalar parameter value"),
    trials: int = typer.Option(10000, "--trials", help="Monte Carlo trials per grid point"),
    seed: int = typer.Option(0, "--seed", min=0, help="Master seed"),
    workers: int = typer.Option(1, "--workers", min=1, help="Worker pool size"),
    summary: bool = typer.Option(False, "--summary", help="Print headline values"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output directory")
):
    """Probability that the scalar ML estimate exists, on an (N, sigma_e^2) grid"""
    with _exit_codes():
        model: Dict[str, Any] = {"w0": [w0]}
        if sigma_z2 is not None:
            model["sigma_z2"] = sigma_z2
        else:
            model["sigma_n2"] = 1.0 if sigma_n2 is None else sigma_n2
        config = _build_config({
            "model": model,
            "experiment": {
                "kind": "probability_vs_n",
                "n_values": list(n),
                "sigma_e2_values": list(sigma_e2),
                "trials": trials,
                "master_seed": seed,
                "workers": workers
            }
        })
        _run(config, output, summary=summary)


@app.command()
def profile(
    n: int = typer.Option(40, "--n", "-n", min=1, help="Number of measurements"),
    positives: List[int] = typer.Option([36, 38], "--positives", "-k", help="Count of +1 measurements (repeat per curve)"),
    sigma_e2: float = typer.Option(0.5, "--sigma-e2", help="Perturbation variance"),
    sigma_n2: float = typer.Option(1.0, "--sigma-n2", help="Additive noise variance"),
    scan_min: float = typer.Option(0.05, "--min", help="Smallest w on the grid"),
    scan_max: float = typer.Option(50.0, "--max", help="Largest w on the grid"),
    points: int = typer.Option(400, "--points", min=2, help="Grid points"),
    summary: bool = typer.Option(False, "--summary", help="Print headline values"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output directory")
):
    """Scalar negative log-likelihood over w for given counts of +1 measurements"""
    with _exit_codes():
        config = _build_config({
            "model": {"sigma_e2": sigma_e2, "sigma_n2": sigma_n2},
            "experiment": {
                "kind": "likelihood_profile",
                "n_measurements": n,
                "positive_counts": list(positives),
                "scan": {"min": scan_min, "max": scan_max, "points": points}
            }
        })
        _run(config, output, summary=summary)


@app.command()
def experiment(
    config_file: Path = typer.Argument(..., help="YAML experiment config"),
    output: Optional[Path] = typer.Option(None, "--output", "-o", help="Output directory (overrides the config)"),
    workers: Optional[int] = typer.Option(None, "--workers", min=1, help="Worker pool size (overrides the config)"),
    summary: bool = typer.Option(False, "--summary", help="Print headline values"),
    progress: bool = typer.Option(True, "--progress/--no-progress", help="Show progress bars")
):
    """Run an experiment described by a YAML config"""
    with _exit_codes():
        config, warnings = parse_config(config_file)
        if workers is not None:
            config = config.model_copy(update={
                "experiment": config.experiment.model_copy(update={"workers": workers})
            })
        console.print(Panel(
            f"[bold cyan]Signest[/bold cyan] · {config.experiment.kind.value}\n"
            f"[dim]{config_file}[/dim]",
            style="cyan"
        ))
        _run(config, output, warnings, summary=summary, progress=progress)


@app.command()
def init():
    """Create config.yaml and .env from the examples"""
    console.print("[bold]Initializing Signest...[/bold]\n")

    if Path("config.yaml").exists():
        if not Confirm.ask("config.yaml already exists. Overwrite?", default=False):
            console.print("Cancelled.")
            return

    if Path("config.yaml.example").exists():
        shutil.copy("config.yaml.example", "config.yaml")
        console.print("✓ Created [cyan]config.yaml[/cyan]")
    else:
        console.print("[red]❌ config.yaml.example not found[/red]")
        raise typer.Exit(1)

    if Path(".env.example").exists() and not Path(".env").exists():
        shutil.copy(".env.example", ".env")
        console.print("✓ Created [cyan].env[/cyan]")

    console.print("\n[bold green]Setup complete![/bold green]\n")
    console.print("[yellow]Next steps:[/yellow]")
    console.print("  1. Edit [cyan]config.yaml[/cyan] or pick one from [cyan]templates/[/cyan]")
    console.print("  2. Run: [cyan]python signest.py experiment config.yaml --summary[/cyan]\n")


@app.command()
def version():
    """Show version information"""
    console.print(f"[bold]Signest[/bold] v{ARTIFACT_VERSION}")
    console.print("Sign-measurement estimation under sensing-matrix perturbation\n")


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point returning the exit code; usage errors map to 1"""
    try:
        code = app(args=argv, prog_name="signest", standalone_mode=False)
    except click.UsageError as e:
        e.show()
        return 1
    except click.Abort:
        return 1
    return code if isinstance(code, int) else 0


if __name__ == "__main__":
    sys.exit(main())
