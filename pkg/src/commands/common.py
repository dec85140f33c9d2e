"""
Shared pieces of the command modules: the result model, TOML run configs with
flat dotted keys and `--set key=value` overrides.
"""
import logging
import tomllib
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, Field, ValidationError

from src.models.run import CONFIG_KEYS, RunConfig
from src.validation.errors import ConfigurationError, UsageError

logger = logging.getLogger(__name__)

# Config keys holding paths; file values resolve against the config file's directory.
PATH_KEYS = {"data.train_manifests", "data.eval_manifests", "output_dir"}


class CommandResult(BaseModel):
    """Outcome of one command: exit code, summary line and every artifact written."""
    exit_code: int = Field(0, ge=0, le=2)
    summary: str = ""
    paths: List[Path] = Field(default_factory=list)

    def lines(self) -> List[str]:
        return [self.summary] + [str(p) for p in self.paths]


def flatten(table: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    """Nested TOML tables -> flat dotted keys."""
    flat: Dict[str, Any] = {}
    for key, value in table.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten(value, f"{name}."))
        else:
            flat[name] = value
    return flat


def _resolve_paths(flat: Dict[str, Any], base: Path) -> Dict[str, Any]:
    resolved = dict(flat)
    for key in PATH_KEYS & flat.keys():
        value = flat[key]
        if isinstance(value, list):
            resolved[key] = [str(base / v) for v in value]
        else:
            resolved[key] = str(base / value)
    return resolved


def parse_override(item: str) -> tuple:
    """'key=value' with a TOML-literal value; bare words stay strings."""
    if "=" not in item:
        raise UsageError(f"override '{item}' is not of the form key=value", field="set")
    key, raw = item.split("=", 1)
    key = key.strip()
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw.strip()
    return key, value


def check_keys(flat: Dict[str, Any]) -> None:
    unknown = sorted(k for k in flat if k not in CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config key(s): {unknown}. Known: {sorted(CONFIG_KEYS)}", field=unknown[0])


def load_run_config(path: Optional[Path], overrides: Sequence[str] = ()) -> RunConfig:
    """File keys first, then overrides in order; the last assignment of a key wins."""
    flat: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            with open(path, "rb") as f:
                table = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ConfigurationError(f"config {path} is not valid TOML: {e}", field="config") from e
        flat = flatten(table)
        check_keys(flat)
        flat = _resolve_paths(flat, path.parent)
    for item in overrides:
        key, value = parse_override(item)
        flat[key] = value
    check_keys(flat)

    if "model.input_size" in flat and isinstance(flat["model.input_size"], int):
        flat["model.input_size"] = [flat["model.input_size"]] * 2
    for key in ("data.train_manifests", "data.eval_manifests"):
        if isinstance(flat.get(key), str):
            flat[key] = [flat[key]]
    try:
        return RunConfig.model_validate(RunConfig.nest_flat(flat))
    except ValidationError as e:
        raise ConfigurationError(f"invalid run config: {e}", field="config") from e


def parse_size(values: Sequence[int]) -> tuple:
    """One value -> square size, two values -> (width, height)."""
    if len(values) == 1:
        return values[0], values[0]
    if len(values) == 2:
        return values[0], values[1]
    raise UsageError(f"size takes one or two integers, got {list(values)}", field="size")
