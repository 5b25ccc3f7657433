"""
Signest Orchestrator
Runs one experiment through its phases and writes CSV tables plus the run manifest
"""
import csv
import time
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from pydantic import BaseModel, Field
from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from estimation.errors import NumericalError
from experiments import ExperimentConfig, ExperimentKind, ExperimentResult, get_experiment
from utils.config_loader import serialize_config

ARTIFACT_VERSION = "0.1.0"
MANIFEST_NAME = "manifest.json"

OUTPUT_FILES = {
    ExperimentKind.MSE_VS_N: "mse_vs_n.csv",
    ExperimentKind.ESTIMATOR_COMPARISON: "mse_vs_n.csv",
    ExperimentKind.CRLB_SCAN_SIGMA_N: "crlb_scan.csv",
    ExperimentKind.CRLB_SCAN_SIGMA_E: "crlb_scan.csv",
    ExperimentKind.GAP_BOUNDS_SWEEP: "gap_bounds.csv",
    ExperimentKind.PROBABILITY_VS_N: "probability.csv",
    ExperimentKind.LIKELIHOOD_PROFILE: "likelihood_profile.csv",
}


class RunManifest(BaseModel):
    """Provenance record written next to every result table"""
    config_echo: str
    master_seed: int = Field(ge=0, lt=2**64)
    artifact_version: str = ARTIFACT_VERSION
    wall_time_seconds: float = Field(ge=0)
    warnings: List[str] = Field(default_factory=list)


def format_cell(value: Any) -> str:
    """17 significant digits for floats, so every cell round-trips exactly"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(value) for value in row])
    return path


def write_manifest(output_dir: Path, manifest: RunManifest) -> Path:
    path = output_dir / MANIFEST_NAME
    path.write_text(manifest.model_dump_json(indent=2) + "\n")
    return path


class ExperimentOrchestrator:
    """Coordinates one experiment run: compute, write tables, report"""

    def __init__(self, show_progress: bool = True, console: Optional[Console] = None):
        self.console = console or Console()
        self.show_progress = show_progress

    async def run_experiment(
        self,
        config: ExperimentConfig,
        output_dir: Path,
        warnings: Optional[List[str]] = None,
        show_summary: bool = False
    ) -> Dict[str, Any]:
        """
        Run the experiment described by config

        Args:
            config: Validated experiment configuration
            output_dir: Directory for the CSV table and manifest
            warnings: Warnings collected before the run (config loading)
            show_summary: Print the headline values as a table

        Returns:
            Dict with the in-memory result, written files and output directory

        Raises:
            NumericalError: After the manifest has recorded the failure
        """
        warnings = list(warnings or [])
        output_dir = Path(output_dir)
        output_dir.mkdir(parents=True, exist_ok=True)
        experiment = get_experiment(config.experiment.kind, show_progress=self.show_progress)

        self.console.print(Panel(f"[bold]Phase 1: {experiment.name}[/bold]", style="cyan"))
        start = time.perf_counter()
        try:
            result = await experiment.run(config)
        except NumericalError as exc:
            warnings.append(f"{type(exc).__name__}: {exc}")
            self._write_run_manifest(config, output_dir, start, warnings)
            raise
        self.console.print(f"✓ {len(result.rows)} rows computed\n")

        self.console.print(Panel("[bold]Phase 2: Writing Outputs[/bold]", style="cyan"))
        warnings.extend(result.warnings)
        outputs = self._generate_outputs(config, result, output_dir)
        outputs["manifest"] = str(self._write_run_manifest(config, output_dir, start, warnings))
        self.console.print("✓ Outputs written\n")

        for warning in warnings:
            self.console.print(f"[yellow]⚠️  {warning}[/yellow]")
        if show_summary:
            self.console.print(summary_table(experiment.name, result.summary))
        self._display_outputs(outputs, output_dir)

        return {
            "result": result,
            "outputs": outputs,
            "output_directory": str(output_dir),
            "warnings": warnings
        }

    def _generate_outputs(
        self,
        config: ExperimentConfig,
        result: ExperimentResult,
        output_dir: Path
    ) -> Dict[str, str]:
        table_path = output_dir / OUTPUT_FILES[config.experiment.kind]
        write_csv(table_path, result.columns, result.rows)
        return {"table": str(table_path)}

    @staticmethod
    def _write_run_manifest(
        config: ExperimentConfig,
        output_dir: Path,
        start: float,
        warnings: List[str]
    ) -> Path:
        manifest = RunManifest(
            config_echo=serialize_config(config),
            master_seed=config.experiment.master_seed,
            wall_time_seconds=time.perf_counter() - start,
            warnings=warnings
        )
        return write_manifest(output_dir, manifest)

    def _display_outputs(self, outputs: Dict[str, str], output_dir: Path):
        self.console.print("[bold]Generated Files:[/bold]")
        for name, path in outputs.items():
            self.console.print(f"  • {name}: [cyan]{path}[/cyan]")
        self.console.print(f"\n[bold]Output Directory:[/bold] [cyan]{output_dir}[/cyan]\n")


def summary_table(title: str, summary: Dict[str, Any]) -> Table:
    """Headline values of a run as a two-column rich table"""
    table = Table(title=f"{title}: summary")
    table.add_column("quantity", style="cyan")
    table.add_column("value", justify="right")
    for key, value in summary.items():
        table.add_row(key, f"{value:.6g}" if isinstance(value, float) else str(value))
    return table
