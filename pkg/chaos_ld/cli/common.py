"""Plumbing shared by the sub-commands: config loading, output tracking, argument groups."""
import argparse
import json
import logging
from pathlib import Path
from typing import Optional, TypeVar

import numpy as np
from pydantic import BaseModel

from chaos_ld.config import Settings
from chaos_ld.exceptions import ConfigurationError
from chaos_ld.schemas.propagation import IntegratorConfig
from chaos_ld.schemas.run import RunConfig, SystemOptions
from chaos_ld.schemas.system import SectionSpec, SystemKind, SystemSpec
from chaos_ld.services.systems import solve_constrained_momentum

logger = logging.getLogger(__name__)

ConfigT = TypeVar("ConfigT", bound=BaseModel)


class CommandContext:
    """Where a command writes, and what it has written so far."""

    def __init__(self, command: str, output_dir: Path, settings: Settings, threads: int):
        self.command = command
        self.output_dir = Path(output_dir)
        self.settings = settings
        self.threads = threads
        self.written: list[Path] = []

    @property
    def integrator(self) -> IntegratorConfig:
        return IntegratorConfig.from_settings(self.settings)

    def path(self, name: str) -> Path:
        """Register an output file and return its path."""
        self.output_dir.mkdir(parents=True, exist_ok=True)
        target = self.output_dir / name
        self.written.append(target)
        return target

    def write_text(self, name: str, text: str) -> Path:
        target = self.path(name)
        target.write_text(text, encoding="utf-8")
        logger.info("Wrote %s", target)
        return target

    def echo_config(self, config: BaseModel) -> Path:
        text = config.model_dump_json(indent=2) + "\n"
        return self.write_text(f"{self.command}.config.json", text)

    def cleanup(self) -> None:
        """Remove everything this command wrote."""
        for target in self.written:
            if target.exists():
                target.unlink()
                logger.info("Removed partial output %s", target)


def load_config(args: argparse.Namespace, config_cls: type[ConfigT]) -> ConfigT:
    """Config file values overridden by the flags that were actually given."""
    data: dict = {}
    config_file: Optional[str] = getattr(args, "config", None)
    if config_file:
        try:
            data = json.loads(Path(config_file).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"{config_file} is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigurationError(f"{config_file} must hold a JSON object")
    for name in config_cls.model_fields:
        value = getattr(args, name, None)
        if value is not None:
            data[name] = value
    return config_cls.model_validate(data)


def resolve_output_dir(config: BaseModel, settings: Settings) -> Path:
    given = config.output_dir if isinstance(config, RunConfig) else None
    return Path(given) if given is not None else settings.output_dir


def add_run_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with the command's parameters")
    parser.add_argument("--seed", type=int, help="RNG seed (default 0)")


def add_system_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("system")
    group.add_argument("--system", choices=[k.value for k in SystemKind])
    group.add_argument("--alpha", type=float)
    group.add_argument("--sigma", type=float)
    group.add_argument("--beta", type=float)
    group.add_argument("--delta", type=float)
    group.add_argument("--K", type=float, nargs="+", help="standard map kick strength(s)")
    group.add_argument("--case", type=int, help="four-well parameter case 1-8")


def require_energy(system: SystemSpec, energy: Optional[float]) -> None:
    if not system.is_map and energy is None:
        raise ConfigurationError(f"{system.kind.value} needs --energy")


def orbit_state(
    options: SystemOptions,
    system: SystemSpec,
    ic: tuple[float, float],
    energy: Optional[float],
) -> tuple[Optional[SectionSpec], np.ndarray]:
    """Section (None for the map) and full initial state of a slice point."""
    if system.is_map:
        return None, np.array(ic, dtype=np.float64)
    require_energy(system, energy)
    assert energy is not None
    section = SectionSpec.default_for(options.system)
    assert section is not None
    return section, solve_constrained_momentum(system, section, ic, energy)
