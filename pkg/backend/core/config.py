"""
Case configuration files: sectioned YAML in, flat CaseConfig out.

    grid:      {nx: 128, ny: 64, ...}
    physics:   {capillary: 0.01, ...}
    scheme:    {scheme: SemiImplicit, dt: 0.1}
    schedules: {reinit_steps: 5}
    outputs:   {snapshot_every: 0.1}
"""

import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Mapping, Optional

import yaml
from pydantic import ValidationError

from .exceptions import ConfigurationError
from .models import SECTIONS, CaseConfig

logger = logging.getLogger(__name__)

PRESETS_PATH = Path(__file__).resolve().parent.parent / "data" / "shear_cases.yaml"


def valid_keys() -> list[str]:
    """All flat keys a config file or override may name."""
    return [key for keys in SECTIONS.values() for key in keys]


def _check_keys(keys: Iterable[str], where: str) -> None:
    allowed = set(valid_keys())
    unknown = sorted(set(keys) - allowed)
    if unknown:
        raise ConfigurationError(
            f"unknown key(s) {unknown} in {where}; valid keys: {', '.join(valid_keys())}"
        )


def flatten_sections(raw: Mapping[str, Any]) -> Dict[str, Any]:
    """
    Merge the sections of a config mapping into one flat dict.
    Top-level flat keys are accepted as well.
    """
    flat: Dict[str, Any] = {}
    for name, body in (raw or {}).items():
        if name in SECTIONS:
            if body is None:
                continue
            if not isinstance(body, Mapping):
                raise ConfigurationError(f"section '{name}' must be a mapping")
            _check_keys(body.keys(), f"section '{name}'")
            misplaced = sorted(set(body) - set(SECTIONS[name]))
            if misplaced:
                raise ConfigurationError(
                    f"key(s) {misplaced} do not belong to section '{name}' "
                    f"(expected one of {SECTIONS[name]})"
                )
            flat.update(body)
        else:
            _check_keys([name], "top level")
            flat[name] = body
    return flat


def parse_override(text: str) -> tuple[str, Any]:
    """Split `key=value`; the value is parsed with YAML scalar rules."""
    if "=" not in text:
        raise ConfigurationError(f"override '{text}' is not of the form key=value")
    key, value = text.split("=", 1)
    key = key.strip()
    if "." in key:
        key = key.split(".", 1)[1]
    _check_keys([key], "--set")
    return key, yaml.safe_load(value)


def build_config(raw: Mapping[str, Any], overrides: Iterable[str] = ()) -> CaseConfig:
    """Validate a raw mapping plus `key=value` overrides into a CaseConfig."""
    flat = flatten_sections(raw)
    for item in overrides:
        key, value = parse_override(item)
        flat[key] = value
    try:
        return CaseConfig(**flat)
    except ValidationError as exc:
        raise ConfigurationError(str(exc)) from exc


def load_config(path: Optional[Path], overrides: Iterable[str] = ()) -> CaseConfig:
    """Read a YAML config file (or defaults when path is None)."""
    raw: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file not found: {path}")
        try:
            raw = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigurationError(f"cannot parse {path}: {exc}") from exc
        if not isinstance(raw, Mapping):
            raise ConfigurationError(f"{path} must contain a mapping")
    config = build_config(raw, overrides)
    logger.debug("loaded config from %s with %d override(s)", path, len(list(overrides)))
    return config


def to_sections(config: CaseConfig) -> Dict[str, Dict[str, Any]]:
    """Sectioned plain-data view of a config (the effective-config echo)."""
    data = config.model_dump(mode="json")
    return {name: {key: data[key] for key in keys} for name, keys in SECTIONS.items()}


def dump_config(config: CaseConfig, path: Path) -> Path:
    """Write the effective config so the run can be repeated exactly."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(to_sections(config), sort_keys=False))
    return path


def load_presets(path: Path = PRESETS_PATH) -> Dict[str, Any]:
    """Raw preset document (cases, meshes, reference tables)."""
    with open(path) as handle:
        return yaml.safe_load(handle)


def load_preset(name: str, mesh: str = "coarse", **updates: Any) -> CaseConfig:
    """
    Build the CaseConfig of a named shear preset on a named mesh.
    Extra keyword arguments override preset values.
    """
    presets = load_presets()
    cases = presets["cases"]
    meshes = presets["meshes"]
    if name not in cases:
        raise ConfigurationError(f"unknown preset '{name}'; available: {sorted(cases)}")
    if mesh not in meshes:
        raise ConfigurationError(f"unknown mesh '{mesh}'; available: {sorted(meshes)}")
    flat = {key: value for key, value in cases[name].items() if key != "reference"}
    flat.update(meshes[mesh])
    flat.update(updates)
    try:
        return CaseConfig(**flat)
    except ValidationError as exc:
        raise ConfigurationError(str(exc)) from exc


def reference_dt(name: str, mesh: str, scheme: str) -> Optional[float]:
    """Published maximum stable Δt for a preset, mesh and scheme."""
    presets = load_presets()
    ref = presets["cases"].get(name, {}).get("reference", {})
    return ref.get(mesh, {}).get(scheme)
