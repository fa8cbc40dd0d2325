#!/usr/bin/env python3
"""
Experiment configuration and logging.
Logger interface, JSON configuration manager and the typed experiment
configuration shared by the trainer, the pruning pipeline and the CLI.
"""
import copy
import json
import logging
import os
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple


class ILogger(ABC):
    """Abstract interface for logging."""

    @abstractmethod
    def info(self, message: str) -> None:
        pass

    @abstractmethod
    def error(self, message: str) -> None:
        pass

    @abstractmethod
    def warning(self, message: str) -> None:
        pass

    @abstractmethod
    def debug(self, message: str) -> None:
        pass


class ConsoleLogger(ILogger):
    """Concrete implementation of ILogger for console output."""

    def __init__(self, level: str = "INFO", name: str = "fourier_inr"):
        self.logger = logging.getLogger(name)
        self.logger.setLevel(getattr(logging, level.upper()))

        handler = logging.StreamHandler()
        formatter = logging.Formatter('%(asctime)s - %(levelname)s - %(message)s')
        handler.setFormatter(formatter)

        if not self.logger.handlers:
            self.logger.addHandler(handler)

    def info(self, message: str) -> None:
        self.logger.info(message)

    def error(self, message: str) -> None:
        self.logger.error(message)

    def warning(self, message: str) -> None:
        self.logger.warning(message)

    def debug(self, message: str) -> None:
        self.logger.debug(message)


class NullLogger(ILogger):
    """Logger that drops every message; default for library calls."""

    def info(self, message: str) -> None:
        pass

    def error(self, message: str) -> None:
        pass

    def warning(self, message: str) -> None:
        pass

    def debug(self, message: str) -> None:
        pass


class ConfigError(ValueError):
    """Unknown key, wrong type or failed validation in an experiment config."""


DEFAULT_CONFIG: Dict[str, Any] = {
    "images": [],
    "synthetic": None,
    "synthetic_size": 64,
    "synthetic_count": 1,
    "out": "runs/experiment",
    "log_level": "INFO",
    "mapping": {
        "family": "integer",
        "N": 16,
        "m": None,
        "sigma": 10.0,
        "seed": 0,
    },
    "network": {
        "depth": 0,
        "width": 32,
        "activation": "relu",
        "omega0": 30.0,
        "siren_width": None,
    },
    "training": {
        "iterations": 2000,
        "lr": 1e-3,
        "optimizer": "adam",
        "beta1": 0.9,
        "beta2": 0.999,
        "epsilon": 1e-8,
        "progressive": False,
        "end_fraction": 0.75,
        "seed": 0,
        "deterministic": True,
        "log_every": 25,
        "weight_init": "random",
    },
    "init_check": {
        "threshold": 140.0,
        "allow_even": False,
        "train_stride": 1,
    },
    "prune": {
        "M": 128,
        "weight_init": "random",
    },
    "compare": {
        "mappings": ["integer", "pe", "gaussian", "siren"],
        "depths": [0, 2],
        "Ns": [8],
        "seeds": [0],
        "jobs": 1,
    },
    "render": {
        "weights": None,
        "height": 256,
        "width": 256,
        "x_offset": 0,
        "y_offset": 0,
        "tiles": 1,
        "periodic": True,
    },
}


class IConfiguration(ABC):
    """Interface for configuration management."""

    @abstractmethod
    def load_config(self, config_path: str) -> dict:
        pass

    @abstractmethod
    def get_value(self, key: str, default=None):
        pass


def _merge_checked(base: Dict[str, Any], update: Dict[str, Any], prefix: str = "") -> None:
    """Deep-merge `update` into `base`, refusing keys `base` does not know."""
    for key, value in update.items():
        dotted = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"Unknown configuration key: {dotted}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"Configuration key {dotted} must be an object")
            _merge_checked(base[key], value, prefix=f"{dotted}.")
        else:
            base[key] = value


class ConfigManager(IConfiguration):
    """Configuration management for Fourier INR experiments."""

    def __init__(self, config_path: Optional[str] = None):
        self.config = copy.deepcopy(DEFAULT_CONFIG)

        if config_path:
            if not os.path.exists(config_path):
                raise ConfigError(f"Config file not found: {config_path}")
            self.load_config(config_path)

    def load_config(self, config_path: str) -> dict:
        """Load configuration from a JSON file."""
        try:
            with open(config_path, 'r') as f:
                file_config = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"Error parsing config file {config_path}: {e}") from e
        if not isinstance(file_config, dict):
            raise ConfigError(f"Config file {config_path} must hold a JSON object")
        _merge_checked(self.config, file_config)
        return self.config

    def get_value(self, key: str, default=None):
        """Get a configuration value; dotted keys address nested sections."""
        node: Any = self.config
        for part in key.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def set_value(self, key: str, value: Any) -> None:
        """Override a known configuration value (used for CLI flags)."""
        parts = key.split(".")
        node = self.config
        for part in parts[:-1]:
            if part not in node or not isinstance(node[part], dict):
                raise ConfigError(f"Unknown configuration key: {key}")
            node = node[part]
        if parts[-1] not in node:
            raise ConfigError(f"Unknown configuration key: {key}")
        node[parts[-1]] = value


MAPPING_FAMILIES = ("integer", "gaussian", "pe", "pruned", "gaussian_pr", "siren")
ACTIVATIONS = ("relu", "sine")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


@dataclass(frozen=True)
class MappingConfig:
    family: str = "integer"
    N: Optional[int] = 16
    m: Optional[int] = None
    sigma: float = 10.0
    seed: int = 0


@dataclass(frozen=True)
class NetworkConfig:
    depth: int = 0
    width: int = 32
    activation: str = "relu"
    omega0: float = 30.0
    siren_width: Optional[int] = None


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated, typed view of a merged configuration dictionary."""

    images: Tuple[str, ...]
    synthetic: Optional[str]
    synthetic_size: int
    synthetic_count: int
    out: str
    log_level: str
    mapping: MappingConfig
    network: NetworkConfig
    training: Dict[str, Any]
    init_check: Dict[str, Any]
    prune: Dict[str, Any]
    compare: Dict[str, Any]
    render: Dict[str, Any]
    raw: Dict[str, Any] = field(default_factory=dict, compare=False)

    @classmethod
    def from_manager(cls, manager: ConfigManager) -> "ExperimentConfig":
        raw = copy.deepcopy(manager.config)
        images = raw["images"]
        if isinstance(images, str):
            images = [images]
        mapping = MappingConfig(**raw["mapping"])
        network = NetworkConfig(**raw["network"])
        config = cls(
            images=tuple(images),
            synthetic=raw["synthetic"],
            synthetic_size=raw["synthetic_size"],
            synthetic_count=raw["synthetic_count"],
            out=raw["out"],
            log_level=raw["log_level"],
            mapping=mapping,
            network=network,
            training=raw["training"],
            init_check=raw["init_check"],
            prune=raw["prune"],
            compare=raw["compare"],
            render=raw["render"],
            raw=raw,
        )
        config.validate()
        return config

    def validate(self) -> None:
        """Check every module precondition that can be checked up front."""
        problems: List[str] = []
        m = self.mapping
        if m.family not in MAPPING_FAMILIES:
            problems.append(f"mapping.family must be one of {MAPPING_FAMILIES}, got {m.family!r}")
        if m.family in ("integer", "pe", "pruned", "gaussian_pr"):
            if not isinstance(m.N, int) or m.N < 0:
                problems.append(f"mapping.N must be a non-negative integer, got {m.N!r}")
            elif m.family == "pe" and m.N < 1:
                problems.append("mapping.N must be >= 1 for positional encoding")
        if m.family == "gaussian":
            if m.m is None and (not isinstance(m.N, int) or m.N < 0):
                problems.append("gaussian mapping needs mapping.m or a non-negative mapping.N")
            if m.m is not None and (not isinstance(m.m, int) or m.m < 1):
                problems.append(f"mapping.m must be a positive integer, got {m.m!r}")
            if not _is_number(m.sigma) or m.sigma <= 0:
                problems.append(f"mapping.sigma must be > 0, got {m.sigma!r}")

        n = self.network
        if not isinstance(n.depth, int) or n.depth < 0:
            problems.append(f"network.depth must be a non-negative integer, got {n.depth!r}")
        if not isinstance(n.width, int) or n.width < 1:
            problems.append(f"network.width must be a positive integer, got {n.width!r}")
        if n.activation not in ACTIVATIONS:
            problems.append(f"network.activation must be one of {ACTIVATIONS}, got {n.activation!r}")

        t = self.training
        if not isinstance(t["iterations"], int) or isinstance(t["iterations"], bool) or t["iterations"] < 1:
            problems.append(f"training.iterations must be >= 1, got {t['iterations']!r}")
        for key in ("lr", "beta1", "beta2", "epsilon", "end_fraction"):
            if not _is_number(t[key]):
                problems.append(f"training.{key} must be a number, got {t[key]!r}")
        if _is_number(t["lr"]) and t["lr"] < 0:
            problems.append(f"training.lr must be >= 0, got {t['lr']!r}")
        if t["optimizer"] not in ("adam", "sgd"):
            problems.append(f"training.optimizer must be 'adam' or 'sgd', got {t['optimizer']!r}")
        if _is_number(t["end_fraction"]) and not 0 < t["end_fraction"] <= 1:
            problems.append(f"training.end_fraction must be in (0, 1], got {t['end_fraction']!r}")
        if t["weight_init"] not in ("random", "fft"):
            problems.append(f"training.weight_init must be 'random' or 'fft', got {t['weight_init']!r}")
        if not isinstance(t["log_every"], int) or t["log_every"] < 1:
            problems.append(f"training.log_every must be >= 1, got {t['log_every']!r}")

        if self.init_check["train_stride"] not in (1, 2):
            problems.append("init_check.train_stride must be 1 or 2")
        if self.prune["weight_init"] not in ("random", "fft"):
            problems.append("prune.weight_init must be 'random' or 'fft'")
        if not isinstance(self.prune["M"], int) or self.prune["M"] < 1:
            problems.append(f"prune.M must be a positive integer, got {self.prune['M']!r}")
        elif m.family in ("pruned", "gaussian_pr") and isinstance(m.N, int) and self.prune["M"] <= m.N:
            problems.append(f"prune.M ({self.prune['M']}) must be greater than mapping.N ({m.N})")
        for family in self.compare["mappings"]:
            if family not in MAPPING_FAMILIES:
                problems.append(f"compare.mappings holds unknown family {family!r}")
        if self.synthetic not in (None, "natural", "band_limited"):
            problems.append(f"synthetic must be 'natural' or 'band_limited', got {self.synthetic!r}")
        if not isinstance(self.synthetic_size, int) or self.synthetic_size < 2:
            problems.append(f"synthetic_size must be an integer >= 2, got {self.synthetic_size!r}")
        if not isinstance(self.synthetic_count, int) or self.synthetic_count < 1:
            problems.append(f"synthetic_count must be a positive integer, got {self.synthetic_count!r}")
        if self.log_level.upper() not in ("DEBUG", "INFO", "WARNING", "ERROR"):
            problems.append(f"log_level must be DEBUG, INFO, WARNING or ERROR, got {self.log_level!r}")

        if problems:
            raise ConfigError("; ".join(problems))
