"""
QBC4 Simulator - Settings
=========================

Centralized numerical tolerances and optimizer defaults.

Overrides are read from the environment after loading an optional .env file
(config/.env or ~/.config/qbc4sim/.env). RNG seeds are never taken from the
environment: every stochastic command must be given an explicit seed.
"""
import os
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

from dotenv import load_dotenv

try:
    import psutil
    HAS_PSUTIL = True
except ImportError:
    HAS_PSUTIL = False

logger = logging.getLogger("qbc4sim.settings")

ENV_FILES = [Path("config/.env"), Path.home() / ".config" / "qbc4sim" / ".env"]

_loaded_env = False


def _load_env_once():
    global _loaded_env
    if _loaded_env:
        return
    _loaded_env = True
    for p in ENV_FILES:
        if p.exists():
            load_dotenv(p)
            logger.debug(f"Loaded environment overrides from {p}")
            break


def default_workers() -> int:
    """Worker threads for independent restarts and sweep items."""
    if HAS_PSUTIL:
        cores = psutil.cpu_count(logical=False) or psutil.cpu_count() or 1
    else:
        cores = os.cpu_count() or 1
    # one thread per physical core, at most 8
    return max(1, min(cores, 8))


@dataclass(frozen=True)
class Tolerances:
    """Tolerances shared by every module"""
    structural: float = 1e-10   # unitarity, orthonormality, Schmidt reconstruction
    equality: float = 1e-12     # norm, trace, hermiticity, positivity
    optimizer: float = 1e-9     # seesaw convergence


@dataclass(frozen=True)
class OptimizerSettings:
    """Defaults for the binding analysis"""
    restarts: int = 32
    max_iter: int = 10_000
    tol: float = 1e-9
    oracle_budget: int = 4000       # L-BFGS-B iterations per oracle start
    oracle_starts: int = 4
    max_adam_dim: int = 16
    ancilla_factor: int = 1         # relaxed opening: 1, 2 or 4 times the default ancilla
    workers: int = field(default_factory=default_workers)


@dataclass(frozen=True)
class Settings:
    tolerances: Tolerances = field(default_factory=Tolerances)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)


def _env_float(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not a number")
        return default


def _env_int(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not an integer")
        return default


def load_settings() -> Settings:
    """Build Settings from defaults plus environment overrides."""
    _load_env_once()

    tol = Tolerances()
    tol = replace(
        tol,
        structural=_env_float("QBC4_TOL_STRUCTURAL", tol.structural),
        equality=_env_float("QBC4_TOL_EQUALITY", tol.equality),
        optimizer=_env_float("QBC4_TOL_OPTIMIZER", tol.optimizer),
    )

    opt = OptimizerSettings()
    opt = replace(
        opt,
        restarts=_env_int("QBC4_RESTARTS", opt.restarts),
        max_iter=_env_int("QBC4_MAX_ITER", opt.max_iter),
        tol=tol.optimizer,
        workers=_env_int("QBC4_WORKERS", opt.workers),
    )

    return Settings(tolerances=tol, optimizer=opt)


_settings: Optional[Settings] = None


def get_settings() -> Settings:
    """Process-wide settings (loaded lazily)"""
    global _settings
    if _settings is None:
        _settings = load_settings()
    return _settings


def set_settings(settings: Settings):
    """Replace the process-wide settings (used by the CLI and tests)."""
    global _settings
    _settings = settings


def tolerances() -> Tolerances:
    return get_settings().tolerances
