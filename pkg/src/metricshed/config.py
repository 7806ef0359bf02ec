"""Operator configuration: file + environment + flags, flags winning.

The config file is simple ``key = value`` lines ('#' comments allowed):

    server_url  = http://127.0.0.1:8477
    secret_key  = 6a81d622-5e24-4d9e-adc0-e3f7f2d93ac7
    install_guid = 2187b011-6b9d-4d86-8083-dd09a0d73019
    code_name   = macos-activity
    full_name   = Developer's activity collector
    buffer_path = /var/lib/metricshed/buffer.log
    buffer_cap  = 10000
    reader_key  = ...
    data_dir    = /var/lib/metricshed/data
    sink_dir    = /var/lib/metricshed/sink

Environment variables use the METRICSHED_ prefix (METRICSHED_SERVER_URL...).
"""

from __future__ import annotations

import os
from pathlib import Path

ENV_PREFIX = "METRICSHED_"

KNOWN_KEYS = (
    "server_url",
    "secret_key",
    "install_guid",
    "code_name",
    "full_name",
    "buffer_path",
    "buffer_cap",
    "reader_key",
    "data_dir",
    "sink_dir",
    "listen",
    "log_level",
)

_PATH_KEYS = ("buffer_path", "data_dir", "sink_dir")


class ConfigError(ValueError):
    pass


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key = key.strip()
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = value.strip()
    return out


def load_config_file(path: str | Path | None) -> dict[str, str]:
    if path is None:
        return {}
    return parse_config_text(Path(path).read_text(encoding="utf-8"))


def write_config_file(path: str | Path, values: dict[str, str]) -> None:
    lines = [f"{key} = {values[key]}" for key in KNOWN_KEYS if key in values]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def resolve(
    key: str,
    flag_value: str | None = None,
    file_values: dict[str, str] | None = None,
    default: str | None = None,
) -> str | None:
    """Precedence: flag, then environment, then file, then default."""
    if flag_value is not None:
        value = flag_value
    else:
        value = os.environ.get(ENV_PREFIX + key.upper())
        if value is None:
            value = (file_values or {}).get(key, default)
    if value is not None and key in _PATH_KEYS:
        value = str(Path(value).expanduser().resolve())
    return value
