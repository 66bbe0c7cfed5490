"""Command-line front end for the dual-unitary SFF laboratory."""

import hashlib
import json
import re
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np
import pandas as pd
import typer
from joblib import Parallel, delayed
from loguru import logger
from pydantic import ValidationError
from rich.console import Console
from rich.table import Table
from tqdm import tqdm

from dual_unitary_sff.circuit import CircuitSpec, trace_work
from dual_unitary_sff.config import configure_logging, get_rng, get_settings
from dual_unitary_sff.dual_gates import (
    DualGateParams,
    build_dual_gate,
    build_time_reversal_gate,
    gate_from_config,
    haar_unitary,
    is_dual_unitary,
    random_dual_params,
)
from dual_unitary_sff.errors import LabError
from dual_unitary_sff.qudit_algebra import swap_gate
from dual_unitary_sff.schemas import GateCheckReport, SpectralReport
from dual_unitary_sff.sff_monte_carlo import SFF_COLUMNS, sff_row
from dual_unitary_sff.transfer_spectral import (
    build_transfer_context,
    trace_transfer_power,
    unimodular_count,
)
from dual_unitary_sff.verification import criteria_frame, run_criteria

from .schemas import GateConfig, RunConfig

EXIT_PASS, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

app = typer.Typer(help="Spectral form factor of dual-unitary brickwork circuits", no_args_is_help=True)
console = Console()

ConfigOption = typer.Option(None, "--config", "-c", help="JSON run configuration (// comments allowed)")
SeedOption = typer.Option(None, "--seed", help="Override the configured seed")
OutOption = typer.Option(None, "--out", "-o", help="Output path")
ThreadsOption = typer.Option(None, "--threads", min=1, help="Parallel workers")


def load_config(path: Optional[Path]) -> RunConfig:
    if path is None:
        return RunConfig()
    text = re.sub(r"(?m)^\s*//.*$", "", Path(path).read_text())
    data = json.loads(text)
    jsonschema.validate(data, RunConfig.model_json_schema())
    return RunConfig.model_validate(data)


def config_hash(config: RunConfig) -> str:
    canonical = json.dumps(config.model_dump(mode="json"), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _resolve(path, seed, out, threads) -> RunConfig:
    config = load_config(path)
    updates = {k: v for k, v in {"seed": seed, "out": out, "threads": threads}.items() if v is not None}
    return config.model_copy(update=updates)


def build_gate(gate: GateConfig, d: int, seed: int, stream: int) -> np.ndarray:
    rng = get_rng(gate.seed if gate.seed is not None else seed, stream)
    if gate.kind == "swap":
        return swap_gate(d)
    if gate.kind == "identity":
        return np.eye(d * d, dtype=np.complex128)
    if gate.kind == "matrix":
        return gate_from_config(gate.entries)
    if gate.kind == "params":
        us = [gate_from_config(u) for u in gate.single_site]
        return build_dual_gate(DualGateParams(*us, J=gate.J or 0.0))
    J = gate.J if gate.J is not None else float(rng.uniform(*gate.j_range))
    if gate.kind == "symmetric":
        return build_time_reversal_gate(haar_unitary(d, rng), haar_unitary(d, rng), J, d)
    params = random_dual_params(d, rng, gate.j_range)
    return build_dual_gate(DualGateParams(params.u1, params.u2, params.u3, params.u4, J))


def _gates(config: RunConfig):
    return (
        build_gate(config.gate_U, config.d, config.seed, 101),
        build_gate(config.gate_W, config.d, config.seed, 102),
    )


def _write(payload: dict, out: Optional[str]):
    text = json.dumps(payload, indent=2, default=str)
    if out:
        Path(out).write_text(text)
        logger.info(f"wrote {out}")
    else:
        console.print_json(text)


def _guard(fn):
    """Run a command body, mapping library and config errors to exit code 2"""
    try:
        return fn()
    except typer.Exit:
        raise
    except (LabError, ValidationError, jsonschema.ValidationError, json.JSONDecodeError, OSError) as exc:
        console.print(f"[bold red]error:[/bold red] {exc}")
        raise typer.Exit(EXIT_ERROR)


@app.callback()
def main(log_level: Optional[str] = typer.Option(None, "--log-level", help="loguru sink level")):
    configure_logging(log_level)


@app.command("gate-check")
def gate_check(
    config_path: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[str] = OutOption,
    threads: Optional[int] = ThreadsOption,
):
    """Unitarity and dual-unitarity residuals of the configured gates"""

    def body():
        config = _resolve(config_path, seed, out, threads)
        tol = config.unitarity_tol or get_settings().unitarity_tol
        gates = dict(zip(("U", "W"), _gates(config)))
        for i, (name, gate) in enumerate(config.check_gates.items()):
            gates[name] = build_gate(gate, config.d, config.seed, 200 + i)
        checks = Parallel(n_jobs=config.threads)(delayed(is_dual_unitary)(g, tol) for g in gates.values())
        reports = []
        for name, check in zip(gates, checks):
            reports.append(
                GateCheckReport(
                    name=name,
                    unitary_residual=check.unitary_residual,
                    dual_residual=check.dual_residual,
                    tol=tol,
                    unitary=check.unitary_residual < tol,
                    dual_unitary=check.is_dual_unitary,
                )
            )
        table = Table(title="gate check")
        for col in ("gate", "unitary residual", "dual residual", "pass"):
            table.add_column(col)
        for r in reports:
            mark = "[green]yes[/green]" if r.dual_unitary else "[red]no[/red]"
            table.add_row(r.name, f"{r.unitary_residual:.2e}", f"{r.dual_residual:.2e}", mark)
        console.print(table)
        if config.out:
            _write(
                {"config_hash": config_hash(config), "seed": config.seed, "gates": [r.model_dump() for r in reports]},
                config.out,
            )
        raise typer.Exit(EXIT_PASS if all(r.dual_unitary for r in reports) else EXIT_FAIL)

    _guard(body)


@app.command()
def sff(
    config_path: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[str] = OutOption,
    threads: Optional[int] = ThreadsOption,
):
    """Monte Carlo K_n(t, L) on the configured (t, L) grid with CUE and COE references"""

    def body():
        config = _resolve(config_path, seed, out, threads)
        gate_U, gate_W = _gates(config)
        grid = [(L, t) for L in config.Ls for t in config.ts]
        work = config.n_samples * sum(trace_work(config.d, L, t, config.trace_method) for L, t in grid)
        budget = get_settings().work_budget
        console.print(f"estimated work {work:.3g} flops over {len(grid)} grid points (budget {budget:.3g})")
        if work > budget:
            console.print("[bold red]error:[/bold red] estimated work exceeds DUSFF_WORK_BUDGET")
            raise typer.Exit(EXIT_ERROR)
        rows = []
        for L, t in tqdm(grid, desc="sff", disable=config.threads > 1):
            spec = CircuitSpec.homogeneous(config.d, L, gate_U, gate_W, config.disorder)
            rows.append(
                sff_row(
                    spec, t, config.moment, config.n_samples, config.seed,
                    method=config.trace_method, threads=config.threads,
                )
            )
        df = pd.DataFrame(rows, columns=SFF_COLUMNS)
        digest = config_hash(config)
        if config.out:
            df.to_csv(config.out, index=False)
            Path(f"{config.out}.json").write_text(
                json.dumps({"config_hash": digest, "seed": config.seed, "columns": SFF_COLUMNS}, indent=2)
            )
        table = Table(title=f"K_{config.moment}(t, L)  config {digest[:12]}")
        for col in SFF_COLUMNS:
            table.add_column(col)
        for row in df.itertuples(index=False):
            table.add_row(*[f"{v:.6g}" if isinstance(v, float) else str(v) for v in row])
        console.print(table)

    _guard(body)


@app.command()
def transfer(
    config_path: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[str] = OutOption,
    threads: Optional[int] = ThreadsOption,
):
    """tr T^L curves, leading spectrum and unimodular counts of the averaged transfer matrix"""

    def body():
        config = _resolve(config_path, seed, out, threads)
        gate_U, gate_W = _gates(config)
        reports, flagged = [], []
        for t in config.ts:
            ctx = build_transfer_context(
                gate_U, gate_W, t, config.disorder, n=config.moment,
                quadrature=config.quadrature, seed=config.seed,
            )
            count, ambiguous, evals = unimodular_count(ctx, min(32, max(config.leading, 2 * t + 2)))
            curve = []
            for L in config.Ls:
                value = trace_transfer_power(ctx, L, config.threads)
                curve.append({"L": L, "re": value.real, "im": value.imag})
            expected = 2 * t if ctx.time_reversal else t
            if ambiguous or count != expected:
                logger.warning(f"t={t}: tr T^L does not converge to {expected} (count {count})")
                flagged.append(t)
            moduli = np.abs(evals)
            reports.append(
                SpectralReport(
                    t=t,
                    d=ctx.d,
                    n=ctx.n,
                    time_reversal=ctx.time_reversal,
                    quadrature=ctx.quadrature,
                    leading_moduli=moduli[: config.leading].tolist(),
                    spectral_radius=float(moduli[0]),
                    unimodular_count=count,
                    ambiguous=ambiguous,
                    trace_curve=curve,
                )
            )
        _write(
            {
                "config_hash": config_hash(config),
                "seed": config.seed,
                "reports": [r.model_dump() for r in reports],
                "non_convergent": flagged,
            },
            config.out,
        )

    _guard(body)


@app.command()
def verify(
    config_path: Optional[Path] = ConfigOption,
    seed: Optional[int] = SeedOption,
    out: Optional[str] = OutOption,
    criteria: Optional[str] = typer.Option(None, "--criteria", help="Comma-separated ids or tags"),
    quick: bool = typer.Option(False, "--quick", help="Reduced sample counts and grids"),
    threads: Optional[int] = ThreadsOption,
):
    """Acceptance suite; exit code 0 only when every selected criterion passes"""

    def body():
        config = _resolve(config_path, seed, out, threads)
        selection = criteria.split(",") if criteria else config.criteria
        try:
            results = run_criteria(selection, quick or config.quick, config.seed, config.threads)
        except KeyError as exc:
            console.print(f"[bold red]error:[/bold red] {exc}")
            raise typer.Exit(EXIT_ERROR)
        df = criteria_frame(results)
        table = Table(title="acceptance criteria")
        for col in df.columns:
            table.add_column(col)
        for row in df.itertuples(index=False):
            table.add_row(str(row.id), row.tag, "[green]pass[/green]" if row.passed else "[red]fail[/red]", f"{row.wall_time:.1f}s")
        console.print(table)
        if config.out:
            _write(
                {
                    "config_hash": config_hash(config),
                    "seed": config.seed,
                    "criteria": [r.model_dump() for r in results],
                },
                config.out,
            )
        raise typer.Exit(EXIT_PASS if all(r.passed for r in results) else EXIT_FAIL)

    _guard(body)


@app.command()
def schema():
    """Print the JSON schema of run configurations"""
    console.print_json(json.dumps(RunConfig.model_json_schema()))


if __name__ == "__main__":
    app()
