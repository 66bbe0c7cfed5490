import sys
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np
from joblib import Memory
from loguru import logger
from pydantic_settings import BaseSettings, SettingsConfigDict

from .constants import (
    DENSE_CAP,
    DENSE_TRANSFER_CAP,
    ENV_PREFIX,
    GAP_FLOOR,
    MC_AVERAGING_NODES,
    QUADRATURE_NODES,
    STRUCTURE_TOL,
    SWEEP_CAP,
    UNITARITY_TOL,
    WORK_BUDGET,
    ZERO_CEILING,
)


class LabSettings(BaseSettings):
    """Process-wide numerical settings, overridable through DUSFF_* variables or .env"""

    model_config = SettingsConfigDict(
        env_prefix=ENV_PREFIX, env_file=".env", extra="ignore"
    )

    structure_tol: float = STRUCTURE_TOL
    unitarity_tol: float = UNITARITY_TOL
    dense_cap: int = DENSE_CAP
    dense_transfer_cap: int = DENSE_TRANSFER_CAP
    sweep_cap: int = SWEEP_CAP
    quadrature_nodes: int = QUADRATURE_NODES
    mc_averaging_nodes: int = MC_AVERAGING_NODES
    zero_ceiling: float = ZERO_CEILING
    gap_floor: float = GAP_FLOOR
    threads: int = 1
    log_level: str = "WARNING"
    work_budget: float = WORK_BUDGET
    cache_dir: Optional[Path] = None


@lru_cache(maxsize=1)
def get_settings() -> LabSettings:
    return LabSettings()


def get_rng(seed: int, sample_idx: int = 0) -> np.random.Generator:
    """Counter-based stream keyed by (seed, sample_idx); independent of call order"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, sample_idx])))


def get_memory() -> Memory:
    """Disk memoization under DUSFF_CACHE_DIR; a pass-through when no directory is set"""
    location = get_settings().cache_dir
    return Memory(None if location is None else str(location), verbose=0)


def configure_logging(level: Optional[str] = None):
    logger.remove()
    logger.add(sys.stderr, level=(level or get_settings().log_level).upper())
