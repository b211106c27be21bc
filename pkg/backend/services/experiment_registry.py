import json
import logging
import os
from dataclasses import dataclass, asdict, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from backend.models.entities import ChainConfig, Combiner
from backend.models.errors import ConfigurationError

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "config" / "experiments.json"


@dataclass
class ChainProfile:
    id: str
    label: str
    iterations: int = 30000
    burn_in: int = 15000
    thinning: int = 1
    seed: int = 0
    combiner: str = Combiner.MIN.value
    a: float = 1.0
    b1: float = 1.0
    b2: float = 1.0
    log_every: int = 1000

    def to_chain_config(self, **overrides: Any) -> ChainConfig:
        """Validated ChainConfig; ``None`` overrides are ignored"""
        values = {k: v for k, v in asdict(self).items() if k not in ("id", "label")}
        values.update({k: v for k, v in overrides.items() if v is not None})
        return ChainConfig(**values)


@dataclass
class ExperimentConfig:
    id: str
    label: str
    description: str
    kind: str
    default_profile_id: str
    params: Dict[str, Any] = field(default_factory=dict)


class ExperimentRegistry:
    """
    Chain profiles and experiment settings read from a JSON config.
    Reloads when the file's mtime changes.
    """

    def __init__(self, config_path: Optional[str] = None, auto_reload: bool = True):
        self.config_path = Path(config_path or os.getenv("OVERLAP_CONFIG", DEFAULT_CONFIG_PATH))
        self.auto_reload = auto_reload
        self._experiments: Dict[str, ExperimentConfig] = {}
        self._profiles: Dict[str, ChainProfile] = {}
        self._mtime: Optional[float] = None
        self.reload()

    # --- Public API ---
    def reload(self) -> None:
        """Force reload config from disk."""
        data = self._read_config()
        self._load_profiles(data.get("profiles", []))
        self._load_experiments(data.get("experiments", []))
        self._mtime = self._current_mtime()
        logger.debug(f"Loaded {len(self._profiles)} profiles, {len(self._experiments)} experiments from {self.config_path}")

    def list_experiments(self) -> List[ExperimentConfig]:
        self._maybe_reload()
        return list(self._experiments.values())

    def list_profiles(self) -> List[ChainProfile]:
        self._maybe_reload()
        return list(self._profiles.values())

    def get_experiment(self, experiment_id: str) -> ExperimentConfig:
        self._maybe_reload()
        cfg = self._experiments.get(experiment_id)
        if not cfg:
            raise ConfigurationError(f"Experiment '{experiment_id}' not registered")
        return cfg

    def get_profile(self, profile_id: str) -> ChainProfile:
        self._maybe_reload()
        profile = self._profiles.get(profile_id)
        if not profile:
            raise ConfigurationError(f"Chain profile '{profile_id}' not found")
        return profile

    def chain_config(self, profile_id: str, **overrides: Any) -> ChainConfig:
        return self.get_profile(profile_id).to_chain_config(**overrides)

    def experiment_chain_config(self, experiment_id: str, profile_id: Optional[str] = None, **overrides: Any) -> ChainConfig:
        """Chain settings of an experiment: its default profile unless another is named"""
        exp = self.get_experiment(experiment_id)
        return self.chain_config(profile_id or exp.default_profile_id, **overrides)

    # --- Internal ---
    def _maybe_reload(self):
        if not self.auto_reload:
            return
        current = self._current_mtime()
        if self._mtime is None or (current and current > self._mtime):
            self.reload()

    def _read_config(self) -> Dict[str, Any]:
        if not self.config_path.exists():
            raise FileNotFoundError(f"Config not found: {self.config_path}")
        try:
            with self.config_path.open("r", encoding="utf-8") as f:
                return json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Invalid JSON in {self.config_path}: {e}") from e

    def _load_profiles(self, items: List[Dict[str, Any]]):
        self._profiles = {}
        for item in items:
            try:
                profile = ChainProfile(**item)
            except TypeError as e:
                raise ConfigurationError(f"Bad chain profile {item.get('id', '?')}: {e}") from e
            self._profiles[profile.id] = profile

    def _load_experiments(self, items: List[Dict[str, Any]]):
        self._experiments = {}
        for item in items:
            cfg = ExperimentConfig(
                id=item["id"],
                label=item.get("label", item["id"]),
                description=item.get("description", ""),
                kind=item["kind"],
                default_profile_id=item["default_profile_id"],
                params=item.get("params") or {},
            )
            if cfg.default_profile_id not in self._profiles:
                raise ConfigurationError(f"Experiment '{cfg.id}' refers to unknown profile '{cfg.default_profile_id}'")
            self._experiments[cfg.id] = cfg

    def _current_mtime(self) -> Optional[float]:
        if not self.config_path.exists():
            return None
        return self.config_path.stat().st_mtime
