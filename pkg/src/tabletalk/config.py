"""Service configuration from a TOML file plus environment overrides.

Precedence, lowest to highest: built-in defaults, the TOML file, then the
T2I_* environment variables. The model API key itself never lives in config;
config only names the environment variable that holds it.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from .errors import PipelineError
from .translate import LlmConfig

ENV_DATA_DIR = "T2I_DATA_DIR"
ENV_BASE_URL = "T2I_LLM_BASE_URL"
ENV_PORT = "T2I_PORT"

DEFAULT_DATA_DIR = "t2i_data"


class ConfigError(PipelineError):
    code = "CONFIG_ERROR"


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: str = DEFAULT_DATA_DIR
    host: str = "127.0.0.1"
    port: int = 8000
    ui_dir: Optional[str] = None
    llm: LlmConfig = field(default_factory=LlmConfig)


def _coerce_int(value, name: str) -> int:
    try:
        return int(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be an integer, got {value!r}") from None


def load_config(path: Optional[str] = None,
                env: Optional[dict] = None) -> ServiceConfig:
    """Build the effective configuration; env defaults to os.environ."""
    if env is None:
        env = dict(os.environ)

    service_table: dict = {}
    llm_table: dict = {}
    if path is not None:
        try:
            with open(path, "rb") as handle:
                document = tomllib.load(handle)
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file is not valid TOML: {exc}") from None
        if not isinstance(document, dict):
            raise ConfigError("config root must be a table")
        service_table = document.get("service", {})
        llm_table = document.get("llm", {})
        if not isinstance(service_table, dict) or not isinstance(llm_table, dict):
            raise ConfigError("[service] and [llm] must be tables")

    defaults = LlmConfig()
    llm = LlmConfig(
        base_url=env.get(ENV_BASE_URL) or llm_table.get("base_url",
                                                        defaults.base_url),
        model=llm_table.get("model", defaults.model),
        api_key_env=llm_table.get("api_key_env", defaults.api_key_env),
        timeout=float(llm_table.get("timeout", defaults.timeout)),
        max_retries=_coerce_int(llm_table.get("max_retries",
                                              defaults.max_retries),
                                "llm.max_retries"),
        max_concurrency=_coerce_int(llm_table.get("max_concurrency",
                                                  defaults.max_concurrency),
                                    "llm.max_concurrency"),
        temperature=float(llm_table.get("temperature", defaults.temperature)),
    )

    port = service_table.get("port", 8000)
    if ENV_PORT in env:
        port = env[ENV_PORT]
    data_dir = env.get(ENV_DATA_DIR) or service_table.get("data_dir",
                                                          DEFAULT_DATA_DIR)
    return ServiceConfig(
        data_dir=data_dir,
        host=service_table.get("host", "127.0.0.1"),
        port=_coerce_int(port, "service.port"),
        ui_dir=service_table.get("ui_dir"),
        llm=llm,
    )
