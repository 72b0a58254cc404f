#!/usr/bin/env python3
"""
Configuration settings for ffsupnorm
"""

import os
from dataclasses import dataclass
from pathlib import Path
from typing import List, Literal, Optional

import yaml
from dotenv import load_dotenv
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator
from sympy import isprime

from .errors import ConfigError

# Load environment variables from .env file
load_dotenv()

DEFAULT_PROFILE_PATH = Path(__file__).resolve().parent.parent / "config" / "profiles.yaml"


@dataclass
class Config:
    """Process-level settings; run parameters live in the YAML profiles"""

    PROFILE: str = os.getenv('FFSN_PROFILE', 'default')
    PROFILE_PATH: str = os.getenv('FFSN_PROFILE_PATH', str(DEFAULT_PROFILE_PATH))
    THREADS: int = int(os.getenv('FFSN_THREADS', '1'))
    LOG_LEVEL: str = os.getenv('FFSN_LOG_LEVEL', 'INFO')
    OUTPUT_DIR: str = os.getenv('FFSN_OUTPUT_DIR', 'out')


class RunConfig(BaseModel):
    """One run of the pipeline: the surface (or scan ranges), the sweep and the budgets."""

    q: int = 5
    a4: Optional[List[int]] = None
    a6: Optional[List[int]] = None

    # curve scan
    scan_a4_degree: int = 2
    scan_a6_degree: int = 3
    scan_deg_n: List[int] = Field(default_factory=lambda: [4])
    max_instances: int = 3

    # sweep
    n_max: int = 4
    table_depth: Optional[int] = None
    z_place_degree: int = 1
    z_pole_order: int = 2
    random_points: int = 50
    seed: int = 0

    # heights
    deg_bound: Optional[int] = None
    brute_force_degree: int = 1

    # identities
    identity_grid: Literal["small", "full"] = "small"

    # exploration
    support_window: int = 3
    support_n_cap: int = 8
    adjoint_d_max: int = 6
    window_constant: float = 8.0

    # plumbing
    output_dir: str = "out"
    threads: int = 1
    prec: int = 24

    @field_validator("q")
    @classmethod
    def _prime_base(cls, q: int) -> int:
        if not isprime(q) or q < 5:
            raise ValueError(f"q={q} must be a prime >= 5")
        return q

    @field_validator("n_max", "brute_force_degree")
    @classmethod
    def _non_negative(cls, v: int) -> int:
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator("threads", "prec", "max_instances", "support_window", "adjoint_d_max",
                     "z_pole_order", "scan_a4_degree", "scan_a6_degree")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @model_validator(mode="after")
    def _surface_pair(self):
        if (self.a4 is None) != (self.a6 is None):
            raise ValueError("a4 and a6 must be given together")
        return self

    @property
    def depth(self) -> int:
        """Trace-table depth: enough for the sweep and the adjoint truncation."""
        return self.table_depth or max(self.n_max, self.adjoint_d_max, self.support_n_cap)

    def cusp_deg_bound(self, n: int, deg_n: int) -> int:
        return self.deg_bound if self.deg_bound is not None else n + deg_n + 2


class RunProfile:
    """Named run profiles from config/profiles.yaml"""

    def __init__(self, config_path: Optional[str] = None):
        path = Path(config_path or config.PROFILE_PATH)
        if not path.exists():
            raise ConfigError(f"profile file {path} not found")
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f) or {}
        self.path = path
        self.profiles = data.get("profiles", {})

    def names(self) -> list[str]:
        return sorted(self.profiles)

    def load(self, name: Optional[str] = None, **overrides) -> RunConfig:
        name = name or config.PROFILE
        if name not in self.profiles:
            raise ConfigError(f"unknown profile '{name}' in {self.path}")
        values = dict(self.profiles[name] or {})
        values.setdefault("threads", config.THREADS)
        values.setdefault("output_dir", config.OUTPUT_DIR)
        values.update({k: v for k, v in overrides.items() if v is not None})
        try:
            return RunConfig(**values)
        except ValidationError as exc:
            raise ConfigError(f"profile '{name}': {exc}") from exc

    def __repr__(self):
        return f"<RunProfile {self.path} ({', '.join(self.names())})>"


# Global config instance
config = Config()
