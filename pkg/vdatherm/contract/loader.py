# GNU Affero General Public License v3.0 only
# Copyright (c) 2026 vdatherm contributors
# SPDX-License-Identifier: AGPL-3.0-only

"""
Loading, overriding and serializing simulation config files.

Assumptions:
- Config format is JSON with a "schema_version" of the form MAJOR.MINOR
- Only the current major version is accepted; minor versions are additive
- Overrides address nested keys with dots and list items by index
  ("boundary_conditions.2.h=21") and are applied before validation
- Errors carry the line/column (syntax) or the field path (validation)
"""
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional, Union

from pydantic import ValidationError

from vdatherm.contract.models import SCHEMA_VERSION, SimulationConfig


class ConfigError(ValueError):
    """Raised when a config document cannot be parsed or validated."""


class ConfigVersionError(ConfigError):
    """Raised when a config document targets an unsupported schema version."""


def _validate_schema_version(document: Mapping[str, Any]) -> None:
    """Reject documents written for another major schema version.

    Raises:
        ConfigVersionError: if the version is missing, malformed or of another major.
    """
    version = document.get("schema_version")
    if not isinstance(version, str) or "." not in version:
        raise ConfigVersionError(f"schema_version must be a 'MAJOR.MINOR' string, got {version!r}")
    major = version.split(".", 1)[0]
    if major != SCHEMA_VERSION.split(".", 1)[0]:
        raise ConfigVersionError(
            f"schema_version {version} is not supported (expected {SCHEMA_VERSION})"
        )


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def set_path(document: dict, path: str, value: Any) -> None:
    """Set `value` at dotted `path` inside a raw config document.

    Raises:
        ConfigError: if an intermediate key or index does not exist.
    """
    parts = path.split(".")
    node: Any = document
    for i, part in enumerate(parts):
        last = i == len(parts) - 1
        if isinstance(node, list):
            try:
                index = int(part)
                if last:
                    node[index] = value
                else:
                    node = node[index]
            except (ValueError, IndexError) as exc:
                raise ConfigError(f"{path}: no list item {part!r}") from exc
        elif isinstance(node, dict):
            if last:
                node[part] = value
            elif part not in node or node[part] is None:
                node[part] = {}
                node = node[part]
            else:
                node = node[part]
        else:
            raise ConfigError(f"{path}: {'.'.join(parts[:i])} is not a section")


def get_path(document: Any, path: str) -> Any:
    node = document
    for part in path.split("."):
        node = node[int(part)] if isinstance(node, list) else node[part]
    return node


def apply_overrides(
    document: dict,
    overrides: Iterable[str] = (),
    overlay: Optional[Mapping[str, Any]] = None,
) -> dict:
    """Apply an overlay mapping and then `key=value` overrides to a raw document.

    Returns:
        dict: the same document, modified in place
    """
    for path, value in (overlay or {}).items():
        set_path(document, path, value)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        path, text = item.split("=", 1)
        set_path(document, path.strip(), _parse_value(text.strip()))
    return document


def parse_config(document: Mapping[str, Any]) -> SimulationConfig:
    """Validate a raw config document.

    Raises:
        ConfigVersionError: on an unsupported schema version
        ConfigError: on validation errors, listing each failing field path
    """
    _validate_schema_version(document)
    try:
        return SimulationConfig.model_validate(document)
    except ValidationError as exc:
        lines = []
        for err in exc.errors():
            loc = ".".join(str(p) for p in err["loc"]) or "<root>"
            lines.append(f"{loc}: {err['msg']}")
        raise ConfigError("invalid config:\n  " + "\n  ".join(lines)) from exc


def read_document(path: Union[str, Path]) -> dict:
    """Read a JSON document, reporting syntax errors with line and column."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(document, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return document


def load_config(
    path: Union[str, Path],
    overrides: Iterable[str] = (),
    overlay: Optional[Union[str, Path]] = None,
) -> SimulationConfig:
    """Read, override and validate a config file."""
    document = read_document(path)
    overlay_doc = read_document(overlay) if overlay is not None else None
    apply_overrides(document, overrides, overlay_doc)
    try:
        return parse_config(document)
    except ConfigVersionError:
        raise
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def dump_config(config: SimulationConfig) -> dict:
    """Serialize a config to a JSON-compatible document."""
    return config.model_dump(mode="json")
