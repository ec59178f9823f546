"""Plain-text key=value configuration files.

One option per line, `key = value`, with `#` comments and blank lines ignored.
Booleans accept true/false/yes/no/1/0; `none`/`off` clears an optional
threshold. Used for heuristic thresholds, scenario/corpus definitions and the
base-token whitelist.
"""

from __future__ import annotations

from dataclasses import fields
from pathlib import Path
from typing import Dict, Optional, Union

from .validators import HeuristicConfig

# Well-established base tokens accepted by default when whitelist filtering
# is turned on (mainnet WETH, USDT, USDC, DAI).
DEFAULT_BASE_WHITELIST = (
    "0xC02aaA39b223FE8D0A0e5C4F27eAD9083C756Cc2",
    "0xdAC17F958D2ee523a2206206994597C13D831ec7",
    "0xA0b86991c6218b36c1d19D4a2e9Eb0cE3606eB48",
    "0x6B175474E89094C44Da98b954EedeAC495271d0F",
)

_TRUE = {"true", "yes", "on", "1"}
_FALSE = {"false", "no", "off", "0"}
_NONE = {"none", "null", "disabled", ""}


class ConfigError(Exception):
    """Malformed configuration file or unknown option."""


def parse_kv_file(path: Union[str, Path]) -> Dict[str, str]:
    """Read a key=value file into an ordered dict of raw strings."""
    options: Dict[str, str] = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path} line {lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        options[key.strip()] = value.strip()
    return options


def coerce(value: str, target_type) -> object:
    if target_type is bool:
        lowered = value.lower()
        if lowered in _TRUE:
            return True
        if lowered in _FALSE:
            return False
        raise ConfigError(f"expected boolean, got {value!r}")
    if target_type is int:
        return int(value)
    if target_type is float:
        return float(value)
    return value


def load_heuristic_config(path: Union[str, Path]) -> HeuristicConfig:
    """Build a HeuristicConfig from a key=value file; unknown keys are errors."""
    options = parse_kv_file(path)
    typed = {}
    known = {f.name: f for f in fields(HeuristicConfig)}
    optional_floats = {"theta_p", "theta_v"}
    for key, value in options.items():
        if key not in known:
            raise ConfigError(f"{path}: unknown heuristic option {key!r}")
        if key in optional_floats:
            typed[key] = None if value.lower() in _NONE else float(value)
            continue
        target = known[key].type
        base = {"int": int, "float": float, "bool": bool, "str": str}.get(
            str(target).replace("builtins.", ""), None)
        if base is None:
            base = type(known[key].default)
        try:
            typed[key] = coerce(value, base)
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"{path}: bad value for {key}: {exc}") from exc
    try:
        return HeuristicConfig(**typed)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_base_whitelist(path: Optional[Union[str, Path]] = None) -> frozenset:
    """Base-token addresses accepted by the ingest whitelist filter."""
    if path is None:
        return frozenset(DEFAULT_BASE_WHITELIST)
    options = parse_kv_file(path)
    raw = options.get("base_whitelist")
    if raw is None:
        return frozenset(DEFAULT_BASE_WHITELIST)
    return frozenset(token.strip() for token in raw.split(",") if token.strip())
