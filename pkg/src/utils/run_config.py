"""
Run configuration files.

A run config is a JSON object; unknown or malformed keys are reported with
the 1-based line on which they appear. The grammar is documented in
docs/CONFIG.md.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

from .config import config

COMMANDS = ("transform", "evolve", "transport", "verify", "bench")

TOP_LEVEL_KEYS = {
    "command", "N", "seed", "output_dir", "workers", "hamiltonian", "state",
    "engine", "transform", "transport", "verify", "bench",
}
SECTION_KEYS = {
    "hamiltonian": {"preset", "params", "matrix_file", "symbol_file"},
    "state": {"preset", "center", "width", "q0", "p0", "rank", "file"},
    "engine": {"name", "dt", "steps", "stride", "integrator"},
    "transform": {"operator", "label"},
    "transport": {
        "energies", "weight", "dt", "steps", "stride", "initial",
        "hamiltonian", "sigma_less", "gamma", "re_gr", "spectral",
    },
    "verify": {"sizes"},
    "bench": {"sizes", "repeats", "steps", "max_workers"},
}
STATE_PRESETS = ("wavepacket", "basis_state", "momentum_state", "mixed", "random")


class ConfigError(ValueError):
    """Malformed run configuration; carries the offending key and line."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        location = f" (key {key!r}, line {line})" if key is not None and line is not None else (
            f" (key {key!r})" if key is not None else ""
        )
        super().__init__(f"{message}{location}")


_DECODER = json.JSONDecoder()
_SPACE = re.compile(r"\s*")


def _depth(text: str, start: int, stop: int) -> int:
    segment = text[start:stop]
    return segment.count("{") + segment.count("[") - segment.count("}") - segment.count("]")


def _line_of(text: str, key: str) -> Optional[int]:
    """Line of a dotted key, each part searched inside the span of its parent's value."""
    start, end, match = 0, len(text), None
    for part in key.split("."):
        found = next(
            (m for m in re.compile(r'"' + re.escape(part) + r'"\s*:').finditer(text, start, end)
             if _depth(text, start, m.start()) == 1),
            None,
        )
        if found is None:
            break
        match, start = found, found.end()
        try:
            _, end = _DECODER.raw_decode(text, _SPACE.match(text, start).end())
        except json.JSONDecodeError:
            end = len(text)
    if match is None:
        return None
    return text.count("\n", 0, match.start()) + 1


@dataclass(frozen=True)
class RunConfig:
    command: str
    n: Optional[int]
    seed: int = 0
    output_dir: Path = config.OUTPUT_DIR
    workers: Optional[int] = None
    hamiltonian: Dict[str, Any] = field(default_factory=dict)
    state: Dict[str, Any] = field(default_factory=dict)
    engine: Dict[str, Any] = field(default_factory=dict)
    transform: Dict[str, Any] = field(default_factory=dict)
    transport: Dict[str, Any] = field(default_factory=dict)
    verify: Dict[str, Any] = field(default_factory=dict)
    bench: Dict[str, Any] = field(default_factory=dict)
    source: Optional[Path] = None

    def resolve(self, path: str) -> Path:
        """Paths inside the config are relative to the config file."""
        candidate = Path(path)
        if not candidate.is_absolute() and self.source is not None:
            candidate = self.source.parent / candidate
        return candidate

    def referenced_files(self) -> List[Tuple[str, Path]]:
        files = []
        for section_name in ("hamiltonian", "state"):
            section = getattr(self, section_name)
            for key in ("matrix_file", "symbol_file", "file"):
                if key in section:
                    files.append((f"{section_name}.{key}", self.resolve(section[key])))
        for key, value in self.transport.items():
            if isinstance(value, str):
                files.append((f"transport.{key}", self.resolve(value)))
        return files


class _Parser:
    def __init__(self, text: str, source: Optional[Path]) -> None:
        self.text = text
        self.source = source

    def fail(self, message: str, key: str) -> ConfigError:
        return ConfigError(message, key=key, line=_line_of(self.text, key))

    def parse(self, command: Optional[str]) -> RunConfig:
        try:
            raw = json.loads(self.text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc.msg}", key="<document>", line=exc.lineno)
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object", key="<document>", line=1)

        for key in raw:
            if key not in TOP_LEVEL_KEYS:
                raise self.fail(f"unknown key {key!r}; expected one of {sorted(TOP_LEVEL_KEYS)}", key)
        for section, allowed in SECTION_KEYS.items():
            value = raw.get(section, {})
            if not isinstance(value, dict):
                raise self.fail(f"{section} must be an object", section)
            for key in value:
                if key not in allowed:
                    raise self.fail(f"unknown key {key!r} in {section}; expected one of {sorted(allowed)}", f"{section}.{key}")

        file_command = raw.get("command")
        if file_command is not None and command is not None and file_command != command:
            raise self.fail(f"config is for command {file_command!r}, not {command!r}", "command")
        command = command or file_command
        if command not in COMMANDS:
            raise self.fail(f"command must be one of {COMMANDS}, got {command!r}", "command")

        n = raw.get("N")
        if n is None and command not in ("verify", "bench"):
            raise ConfigError("missing required key 'N'", key="N")
        if n is not None and (isinstance(n, bool) or not isinstance(n, int)):
            raise self.fail(f"N must be an integer, got {n!r}", "N")

        seed = raw.get("seed", 0)
        if isinstance(seed, bool) or not isinstance(seed, int):
            raise self.fail(f"seed must be an integer, got {seed!r}", "seed")
        workers = raw.get("workers")
        if workers is not None and (isinstance(workers, bool) or not isinstance(workers, int) or workers < 1):
            raise self.fail(f"workers must be a positive integer, got {workers!r}", "workers")

        self._check_sections(raw, command)
        output_dir = Path(raw.get("output_dir", config.OUTPUT_DIR))
        if not output_dir.is_absolute() and self.source is not None:
            output_dir = self.source.parent / output_dir
        return RunConfig(
            command=command, n=n, seed=seed, output_dir=output_dir, workers=workers,
            hamiltonian=raw.get("hamiltonian", {}), state=raw.get("state", {}),
            engine=raw.get("engine", {}), transform=raw.get("transform", {}),
            transport=raw.get("transport", {}), verify=raw.get("verify", {}),
            bench=raw.get("bench", {}), source=self.source,
        )

    def _check_sections(self, raw: Dict[str, Any], command: str) -> None:
        hamiltonian = raw.get("hamiltonian", {})
        forms = [k for k in ("preset", "matrix_file", "symbol_file") if k in hamiltonian]
        if len(forms) > 1:
            raise self.fail(f"hamiltonian takes exactly one of preset, matrix_file, symbol_file; got {forms}", f"hamiltonian.{forms[1]}")
        if command == "evolve" and not forms:
            raise ConfigError("evolve needs a hamiltonian section with preset, matrix_file or symbol_file", key="hamiltonian")
        if "params" in hamiltonian and not isinstance(hamiltonian["params"], dict):
            raise self.fail("hamiltonian.params must be an object", "hamiltonian.params")

        state = raw.get("state", {})
        if "preset" in state and state["preset"] not in STATE_PRESETS:
            raise self.fail(f"state preset must be one of {STATE_PRESETS}, got {state['preset']!r}", "state.preset")
        if "preset" in state and "file" in state:
            raise self.fail("state takes either preset or file", "state.file")
        if command == "evolve" and not ("preset" in state or "file" in state):
            raise ConfigError("evolve needs a state section with preset or file", key="state")
        if "center" in state:
            center = state["center"]
            if not (isinstance(center, list) and len(center) == 2 and all(isinstance(c, (int, float)) for c in center)):
                raise self.fail(f"state.center must be [p0, q0], got {center!r}", "state.center")

        engine = raw.get("engine", {})
        for key in ("steps", "stride"):
            if key in engine and (isinstance(engine[key], bool) or not isinstance(engine[key], int) or engine[key] < 1):
                raise self.fail(f"engine.{key} must be a positive integer, got {engine[key]!r}", f"engine.{key}")
        if "dt" in engine and (not isinstance(engine["dt"], (int, float)) or engine["dt"] <= 0):
            raise self.fail(f"engine.dt must be a positive number, got {engine['dt']!r}", "engine.dt")

        transform = raw.get("transform", {})
        if "operator" in transform and transform["operator"] not in ("state", "hamiltonian"):
            raise self.fail(f"transform.operator must be 'state' or 'hamiltonian', got {transform['operator']!r}", "transform.operator")

        transport = raw.get("transport", {})
        if command == "transport" and "energies" not in transport:
            raise ConfigError("transport needs transport.energies", key="transport.energies")
        if "energies" in transport and (not isinstance(transport["energies"], list) or not transport["energies"]):
            raise self.fail("transport.energies must be a non-empty list", "transport.energies")

        for section in ("verify", "bench"):
            sizes = raw.get(section, {}).get("sizes")
            if sizes is not None and (not isinstance(sizes, list) or not all(isinstance(s, int) for s in sizes)):
                raise self.fail(f"{section}.sizes must be a list of integers", f"{section}.sizes")


def load_run_config(path, command: Optional[str] = None) -> RunConfig:
    """
    Parse a run configuration file.

    Args:
        path: Config file path
        command: Command given on the command line; must agree with the file

    Returns:
        RunConfig with paths resolved against the config location
    """
    path = Path(path)
    if not os.path.exists(path):
        raise FileNotFoundError(f"File not found: {path}")
    run_config = _Parser(path.read_text(), path).parse(command)
    for label, referenced in run_config.referenced_files():
        if not referenced.exists():
            raise FileNotFoundError(f"File not found: {referenced} (from {label})")
    return run_config


def parse_run_config(text: str, command: Optional[str] = None) -> RunConfig:
    return _Parser(text, None).parse(command)
