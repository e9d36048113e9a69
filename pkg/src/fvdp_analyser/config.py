"""Run configuration and its flat key=value file format.

A configuration file has one `key=value` per line. Blank lines and lines
starting with # are ignored. Options specific to a command are written as
`option.<name>=<value>`.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional

from fvdp_analyser.errors import ConfigError
from fvdp_analyser.integrator import IntegratorConfig
from fvdp_analyser.model import Params

OPTION_PREFIX = "option."
_NONE = "none"


def read_key_values(text: str) -> dict[str, str]:
    """Parse key=value lines.

    Raises:
        ConfigError: On a line without "=", an empty key or a repeated key.
    """
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or not key:
            msg = f"Line {number} is not of the form key=value: {raw!r}"
            raise ConfigError(msg)
        if key in values:
            msg = f"Key {key!r} is set twice (line {number})."
            raise ConfigError(msg)
        values[key] = value.strip()
    return values


def read_config_file(path: str | os.PathLike[str]) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        msg = f"Could not read config file {path}: {e}"
        raise ConfigError(msg) from e
    return read_key_values(text)


def _format(value: Any) -> str:
    if value is None:
        return _NONE
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(_format(v) for v in value)
    return str(value)


def _float(key: str, text: str) -> float:
    try:
        return float(text)
    except ValueError as e:
        msg = f"{key} must be a number, got {text!r}."
        raise ConfigError(msg) from e


def _int(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError as e:
        msg = f"{key} must be an integer, got {text!r}."
        raise ConfigError(msg) from e


def _floats(key: str, text: str) -> tuple[float, ...]:
    return tuple(_float(key, part) for part in text.split(","))


@dataclass(frozen=True)
class RunConfig:
    """Everything a command run depends on.

    Attributes:
        command: The subcommand name.
        params: Parameters of the forced field.
        integrator: Integrator settings.
        options: Command specific options as sorted (name, value) text pairs.
        output_dir: Where output files go.
        seed: Seed of any random sampling.
    """

    command: str
    params: Params
    integrator: IntegratorConfig
    options: tuple[tuple[str, str], ...] = ()
    output_dir: str = "."
    seed: int = 0

    def __post_init__(self) -> None:
        options = tuple(sorted((str(k), str(v)) for k, v in self.options))
        object.__setattr__(self, "options", options)

    def option(self, name: str, default: Optional[str] = None) -> Optional[str]:
        return dict(self.options).get(name, default)

    def dumps(self) -> str:
        """The configuration in key=value form, keys in a fixed order."""
        lines = [
            f"command={self.command}",
            f"a={_format(self.params.a)}",
            f"omega={_format(self.params.omega)}",
            f"eps={_format(self.params.eps)}",
        ]
        for f in fields(IntegratorConfig):
            value = getattr(self.integrator, f.name)
            if f.name == "atol" and not isinstance(value, tuple):
                value = float(value)
            lines.append(f"{f.name}={_format(value)}")
        lines.append(f"output_dir={self.output_dir}")
        lines.append(f"seed={self.seed}")
        lines.extend(f"{OPTION_PREFIX}{name}={value}" for name, value in self.options)
        return "\n".join(lines) + "\n"

    @classmethod
    def loads(cls, text: str) -> RunConfig:
        """Read a configuration written by `dumps`."""
        values = read_key_values(text)
        try:
            params = Params(
                _float("a", values["a"]),
                _float("omega", values["omega"]),
                _float("eps", values["eps"]),
            )
            atol = _floats("atol", values["atol"])
            h_init = values["h_init"]
            integrator = IntegratorConfig(
                rtol=_float("rtol", values["rtol"]),
                atol=atol[0] if len(atol) == 1 else atol,
                h_init=None if h_init == _NONE else _float("h_init", h_init),
                h_max=_float("h_max", values["h_max"]),
                max_steps=_int("max_steps", values["max_steps"]),
                method=values["method"],
                cap_band=tuple(_floats("cap_band", values["cap_band"])),  # type: ignore[arg-type]
                cap_factor=_float("cap_factor", values["cap_factor"]),
                event_tol=_float("event_tol", values["event_tol"]),
            )
            command = values["command"]
            output_dir = values["output_dir"]
            seed = _int("seed", values["seed"])
        except KeyError as e:
            msg = f"Missing key {e.args[0]!r} in run configuration."
            raise ConfigError(msg) from e
        options = tuple(
            sorted(
                (key[len(OPTION_PREFIX) :], value)
                for key, value in values.items()
                if key.startswith(OPTION_PREFIX)
            )
        )
        return cls(command, params, integrator, options, output_dir, seed)

    def echo(self) -> dict[str, Any]:
        """The configuration for a report, without the output directory.

        Output files must not depend on where they are written.
        """
        integrator = {f.name: getattr(self.integrator, f.name) for f in fields(IntegratorConfig)}
        return {
            "command": self.command,
            "params": {"a": self.params.a, "omega": self.params.omega, "eps": self.params.eps},
            "integrator": {
                key: list(value) if isinstance(value, tuple) else value
                for key, value in integrator.items()
            },
            "options": dict(self.options),
            "seed": self.seed,
        }
