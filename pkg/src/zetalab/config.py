import os
from pathlib import Path
from typing import Optional, Tuple

import yaml
from dotenv import load_dotenv

load_dotenv()

DEFAULTS = {
    "verification": {"weights": [-3, 5], "max_workers": 2, "hodge_margin": 2},
    "logging": {"dir": "logs", "level": "INFO", "max_bytes": 20 * 1024 * 1024, "backup_count": 3},
    "report": {"schema_version": "zetalab/report-v1"},
}


class Config:
    def __init__(self, config_path: Optional[str] = None):
        if config_path is None:
            # $ZETALAB_CONFIG first, then the repository config/app.yaml
            env_path = os.getenv("ZETALAB_CONFIG")
            repo_path = Path(__file__).parent.parent.parent / "config" / "app.yaml"
            if env_path:
                config_path = env_path
            elif repo_path.exists():
                config_path = repo_path

        self._config = {section: dict(values) for section, values in DEFAULTS.items()}
        if config_path is not None:
            with open(config_path, "r") as f:
                loaded = yaml.safe_load(f) or {}
            for section, values in loaded.items():
                self._config.setdefault(section, {}).update(values or {})

    @property
    def weights(self) -> Tuple[int, int]:
        low, high = self._config["verification"]["weights"]
        return int(low), int(high)

    @property
    def max_workers(self) -> int:
        override = os.getenv("ZETALAB_MAX_WORKERS")
        if override:
            return int(override)
        return int(self._config["verification"]["max_workers"])

    @property
    def hodge_margin(self) -> int:
        return int(self._config["verification"]["hodge_margin"])

    @property
    def log_dir(self) -> str:
        return os.getenv("ZETALAB_LOG_DIR") or self._config["logging"]["dir"]

    @property
    def log_level(self) -> str:
        return (os.getenv("ZETALAB_LOG_LEVEL") or self._config["logging"]["level"]).upper()

    @property
    def log_max_bytes(self) -> int:
        return int(self._config["logging"]["max_bytes"])

    @property
    def log_backup_count(self) -> int:
        return int(self._config["logging"]["backup_count"])

    @property
    def report_schema_version(self) -> str:
        return self._config["report"]["schema_version"]


config = Config()
