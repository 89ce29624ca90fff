"""Command-line entry point for the phase-space toolkit.

Usage:
    python pipeline.py <command> --config <path> [--out <dir>] [--log-file <path>]

Commands:
 transform  Weyl symbol CSV of the configured state or Hamiltonian
 evolve     phase-space trajectory (snapshot CSVs + manifest.json)
 transport  energy-integrated distribution of the dissipative transport equation
 verify     invariant suite; prints a pass/fail table
 bench      per-step timing report of the propagation engines
"""
from __future__ import annotations

import sys
from datetime import datetime
from pathlib import Path
from typing import Optional

import numpy as np
import pandas as pd

# Ensure src on path
sys.path.append(str(Path(__file__).parent / "src"))

from src.core.space import (
    OperatorMatrix,
    basis_state,
    make_space,
    mixed_state,
    momentum_basis_state,
    random_density,
)
from src.core.weyl import WeylSymbol, inverse_weyl, weyl_symbol
from src.processors.benchmark import benchmark_engines
from src.processors.distributions import wavepacket_state
from src.processors.dynamics import PropagatorConfig, evolve, save_trajectory
from src.processors.hamiltonians import HamiltonianSpec, from_matrix, from_symbol, preset
from src.processors.transport import (
    EnergyResolvedSymbols,
    TransportInputs,
    run_transport,
    save_transport,
)
from src.processors.verification import run_invariant_suite
from src.utils.config import config
from src.utils.file_utils import load_csv, load_grid_csv, load_matrix_csv, save_symbol_csv, save_to_csv
from src.utils.logging_utils import configure_root_logging, get_logger, log_banner
from src.utils.run_config import COMMANDS, RunConfig, load_run_config


class PhaseSpacePipeline:
    """Runs one configured command and writes its artifacts."""

    def __init__(self, log_file: Optional[str] = None) -> None:
        configure_root_logging(force=log_file is not None, log_file=log_file)
        self.logger = get_logger(__name__)
        self.verify_table: Optional[pd.DataFrame] = None
        self.error: Optional[str] = None

    # --- Public API -----------------------------------------------------------------
    def run(self, command: str, config_path: str, out_dir: Optional[str] = None) -> bool:
        log_banner(self.logger, f"PHASE-SPACE {command.upper()} STARTED")
        start_time = datetime.now()

        try:
            run_config = load_run_config(config_path, command)
            if run_config.n is not None:
                make_space(run_config.n)
            output_dir = Path(out_dir) if out_dir else run_config.output_dir
            config.ensure_directories(output_dir)
            steps = {
                "transform": self._run_transform,
                "evolve": self._run_evolve,
                "transport": self._run_transport,
                "verify": self._run_verify,
                "bench": self._run_bench,
            }
            success = steps[run_config.command](run_config, output_dir)
            duration = datetime.now() - start_time
            if success:
                self.logger.info("Command %s completed successfully in %s", command, duration)
            else:
                self.logger.error("Command %s finished with failures in %s", command, duration)
            return success
        except Exception as exc:  # noqa: BLE001
            self.error = f"{type(exc).__name__}: {exc}"
            self.logger.error("Command %s failed: %s", command, exc, exc_info=True)
            return False
        finally:
            log_banner(self.logger, "PHASE-SPACE RUN COMPLETED")

    # --- Inputs ---------------------------------------------------------------------
    def _hamiltonian(self, run_config: RunConfig) -> HamiltonianSpec:
        space = make_space(run_config.n)
        section = run_config.hamiltonian
        if "preset" in section:
            return preset(space, section["preset"], **section.get("params", {}))
        if "matrix_file" in section:
            matrix = load_matrix_csv(run_config.resolve(section["matrix_file"]))
            return from_matrix(OperatorMatrix(space, matrix, tag="hermitian"), name=Path(section["matrix_file"]).stem)
        if "symbol_file" in section:
            grid = load_grid_csv(run_config.resolve(section["symbol_file"]))
            return from_symbol(WeylSymbol(space, grid), name=Path(section["symbol_file"]).stem)
        raise ValueError("hamiltonian section needs preset, matrix_file or symbol_file")

    def _state(self, run_config: RunConfig) -> OperatorMatrix:
        space = make_space(run_config.n)
        section = run_config.state
        if "file" in section:
            path = run_config.resolve(section["file"])
            if "row" in load_csv(path).columns:
                return OperatorMatrix(space, load_matrix_csv(path), tag="density")
            return inverse_weyl(WeylSymbol(space, load_grid_csv(path)), tag="density")
        name = section.get("preset")
        if name == "wavepacket":
            center = section.get("center", [0, (space.n - 1) // 2])
            return wavepacket_state(space, (center[0], center[1]), section.get("width"))
        if name == "basis_state":
            return basis_state(space, int(section.get("q0", 0)))
        if name == "momentum_state":
            return momentum_basis_state(space, int(section.get("p0", 0)))
        if name == "mixed":
            return mixed_state(space)
        if name == "random":
            return random_density(space, np.random.default_rng(run_config.seed), section.get("rank"))
        raise ValueError(f"state section needs a preset or a file, got {section}")

    def _engine(self, run_config: RunConfig) -> PropagatorConfig:
        settings = {**config.ENGINE_SETTINGS, **run_config.engine}
        return PropagatorConfig(
            engine=settings.get("name", settings["engine"]),
            dt=float(settings["dt"]),
            steps=int(settings["steps"]),
            integrator=settings["integrator"],
            stride=int(settings["stride"]),
        )

    def _transport_input(self, run_config: RunConfig, key: str, default=0.0):
        value = run_config.transport.get(key, default)
        if isinstance(value, str):
            return load_grid_csv(run_config.resolve(value)).real
        return value

    # --- Commands -------------------------------------------------------------------
    def _run_transform(self, run_config: RunConfig, output_dir: Path) -> bool:
        operator = run_config.transform.get("operator", "state")
        self.logger.info("Step 1: Weyl transform of the %s ...", operator)
        if operator == "hamiltonian":
            symbol = self._hamiltonian(run_config).symbol_at(0.0)
        else:
            symbol = weyl_symbol(self._state(run_config))
        label = run_config.transform.get("label", operator)
        path = config.get_file_path("symbol", output_dir, label=label)
        save_symbol_csv(symbol.grid, path)
        self.logger.info(
            "Symbol written: N=%d | total=%.6g | max imag=%.2e | File=%s",
            symbol.space.n, symbol.total().real, symbol.max_imag(), path,
        )
        return True

    def _run_evolve(self, run_config: RunConfig, output_dir: Path) -> bool:
        self.logger.info("Step 1: Building Hamiltonian and initial state ...")
        hamiltonian = self._hamiltonian(run_config)
        state = self._state(run_config)
        cfg = self._engine(run_config)
        self.logger.info("Step 2: Propagating %s for t=%g ...", hamiltonian.name, cfg.total_time)
        trajectory = evolve(state, hamiltonian, cfg)
        manifest = save_trajectory(trajectory, output_dir)
        self.logger.info(
            "Trajectory: %d snapshots | trace drift %.2e | purity drift %.2e | manifest=%s",
            len(trajectory.snapshots), trajectory.drift("trace"), trajectory.drift("purity"), manifest,
        )
        return True

    def _run_transport(self, run_config: RunConfig, output_dir: Path) -> bool:
        self.logger.info("Step 1: Loading transport inputs ...")
        space = make_space(run_config.n)
        section = run_config.transport
        if "hamiltonian" not in section and run_config.hamiltonian:
            h_grid = self._hamiltonian(run_config).symbol_at(0.0).real()
        else:
            h_grid = self._transport_input(run_config, "hamiltonian")
        inputs = TransportInputs(
            space,
            hamiltonian=h_grid,
            sigma_less=self._transport_input(run_config, "sigma_less"),
            gamma=self._transport_input(run_config, "gamma"),
            re_gr=self._transport_input(run_config, "re_gr"),
            spectral=self._transport_input(run_config, "spectral"),
        )
        energies = np.asarray(section["energies"], dtype=float)
        initial = self._transport_input(run_config, "initial")
        grids = np.broadcast_to(np.asarray(initial, dtype=float), (energies.size, space.n, space.n)).copy()
        f0 = EnergyResolvedSymbols(space, energies, grids, weight=float(section.get("weight", 1.0)))

        dt = float(section.get("dt", config.ENGINE_SETTINGS["dt"]))
        steps = int(section.get("steps", config.ENGINE_SETTINGS["steps"]))
        stride = int(section.get("stride", config.ENGINE_SETTINGS["stride"]))
        self.logger.info("Step 2: Stepping %d energy slices for %d steps ...", energies.size, steps)
        trajectory = run_transport(f0, inputs, dt, steps, stride=stride, max_workers=run_config.workers)
        manifest = save_transport(
            trajectory, output_dir,
            {"N": space.n, "dt": dt, "steps": steps, "stride": stride, "energies": energies.tolist()},
        )
        self.logger.info("Transport: %d snapshots | manifest=%s", len(trajectory.times), manifest)
        return True

    def _run_verify(self, run_config: RunConfig, output_dir: Path) -> bool:
        sizes = run_config.verify.get("sizes") or ([run_config.n] if run_config.n else [5])
        self.logger.info("Step 1: Running invariant suite on N=%s ...", sizes)
        table = run_invariant_suite(sizes, seed=run_config.seed)
        self.verify_table = table
        path = config.get_file_path("verify", output_dir)
        save_to_csv(table, path)
        failed = table.loc[~table["passed"]]
        self.logger.info("Invariant suite: %d/%d rows passed | File=%s", len(table) - len(failed), len(table), path)
        for _, row in failed.iterrows():
            self.logger.error("FAIL %s at N=%d: max error %.3e > %.1e", row["check"], row["N"], row["max_error"], row["tolerance"])
        return failed.empty

    def _run_bench(self, run_config: RunConfig, output_dir: Path) -> bool:
        section = run_config.bench
        self.logger.info("Step 1: Benchmarking engines ...")
        report = benchmark_engines(
            section.get("sizes", config.BENCH_SETTINGS["sizes"]),
            repeats=section.get("repeats"),
            steps=section.get("steps"),
            max_workers=section.get("max_workers", run_config.workers),
            seed=run_config.seed,
        )
        path = report.save(config.get_file_path("bench", output_dir))
        for engine, exponent in report.exponents.items():
            self.logger.info("  %s: cost ~ N^%.2f", engine, exponent)
        self.logger.info("Spectral path beats dense kernel from N=%s | File=%s", report.crossover, path)
        return True


def main() -> None:
    import argparse

    parser = argparse.ArgumentParser(description="Discrete phase-space quantum dynamics toolkit")
    parser.add_argument("command", choices=COMMANDS, help="Command to run")
    parser.add_argument("--config", required=True, help="Run configuration file (JSON)")
    parser.add_argument("--out", default=None, help="Output directory, overrides output_dir in the config")
    parser.add_argument("--log-file", default=None, help="Also write the log to this file")
    args = parser.parse_args()

    pipeline = PhaseSpacePipeline(log_file=args.log_file)
    success = pipeline.run(args.command, args.config, args.out)
    if pipeline.verify_table is not None:
        print(pipeline.verify_table.to_string(index=False))
    if success:
        print(f"\n{args.command} completed successfully. See {args.out or 'the configured output directory'}.")
    else:
        if pipeline.error:
            print(pipeline.error, file=sys.stderr)
        print(f"\n{args.command} failed. Check logs for details.")
        sys.exit(1)


if __name__ == "__main__":  # pragma: no cover
    main()
