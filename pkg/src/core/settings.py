import copy
import json
from pathlib import Path

DEFAULT_SETTINGS = {
    "output_dir": "results",
    "db_path": "data/history.db",
    "log_level": "INFO",
    "log_format": "json",
    "default_seed": 20240501,
    "workers": 1,
    "verify": {
        "geometry_cases": 10000,
        "busemann_triples": 10000,
        "resolvent_inputs": 1000,
        "vi_samples": 1000,
        "probe_trials": 1000,
        "fejer_runs_ex52": 200,
        "fejer_runs_ex51": 50,
    },
}


class Settings:
    def __init__(self, config_path="config/settings.json"):
        self.config_path = Path(config_path)
        self.config = self._load_config()

    def _load_config(self):
        config = copy.deepcopy(DEFAULT_SETTINGS)
        if not self.config_path.exists():
            # Return default config if file missing
            return config

        with open(self.config_path, 'r') as f:
            stored = json.load(f)
        verify = {**config["verify"], **stored.pop("verify", {})}
        config.update(stored)
        config["verify"] = verify
        return config

    @property
    def output_dir(self):
        return Path(self.config.get("output_dir", "results"))

    @property
    def db_path(self):
        return self.config.get("db_path", "data/history.db")

    @property
    def log_level(self):
        return self.config.get("log_level", "INFO")

    @property
    def log_format(self):
        return self.config.get("log_format", "json")

    @property
    def default_seed(self):
        return int(self.config.get("default_seed", 0))

    @property
    def workers(self):
        return max(1, int(self.config.get("workers", 1)))

    @property
    def verify(self):
        return self.config.get("verify", DEFAULT_SETTINGS["verify"])
