"""Config files and delimited-text outputs."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import yaml

from .core import ConfigError, DiagnosticsRecord, SimConfig


def load_config(path, overrides=()) -> SimConfig:
    """Read a flat key/value YAML (or JSON) file and apply ``key=value`` overrides."""
    mapping = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
        try:
            loaded = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError(f"malformed config {path}: {exc}") from exc
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict) or any(isinstance(v, (dict, list)) for v in loaded.values()):
            raise ConfigError(f"config {path} must be a flat key/value mapping")
        mapping.update(loaded)
    for item in overrides:
        key, sep, value = item.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"override {item!r} is not of the form key=value")
        mapping[key.strip()] = value.strip()
    return SimConfig.from_mapping(mapping)


def dump_config(config: SimConfig, path) -> None:
    import dataclasses
    Path(path).write_text(yaml.safe_dump(dataclasses.asdict(config), sort_keys=False))


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_columns(path, columns: dict) -> None:
    """Write equal-length 1D arrays as CSV with full-precision numbers."""
    names = list(columns)
    arrays = [np.asarray(columns[n]).ravel() for n in names]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(names)
        for row in zip(*arrays):
            writer.writerow([_fmt(v) for v in row])


def read_columns(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        names = next(reader)
        rows = [[float(v) for v in row] for row in reader]
    data = np.array(rows, dtype=float).reshape(-1, len(names))
    return {name: data[:, i] for i, name in enumerate(names)}


class DiagnosticsWriter:
    def __init__(self, path):
        self.path = Path(path)
        self._fh = open(self.path, "w", newline="")
        self._writer = csv.writer(self._fh)
        self._writer.writerow(DiagnosticsRecord.HEADER)

    def write(self, record: DiagnosticsRecord) -> None:
        self._writer.writerow([_fmt(v) for v in record.row()])

    def close(self) -> None:
        self._fh.close()
