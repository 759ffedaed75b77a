"""
QBC4 Simulator - Report Schemas
===============================

Pydantic models for everything the simulator writes: run configurations,
protocol transcripts and the analyzer reports. All payloads carry
schema_version; generated_at is informational and excluded from
canonical_json(), which is what determinism checks compare.
"""
import json
import os
import tempfile
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, field_validator, model_validator

from ..version import REPORT_SCHEMA

SCHEMA_VERSION = REPORT_SCHEMA


class Command(str, Enum):
    RUN = "run"
    CONCEAL = "conceal"
    BIND = "bind"
    BABE_ATTACK = "babe-attack"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class RunConfig(BaseModel):
    """Validated CLI configuration, echoed into every report"""
    model_config = ConfigDict(frozen=True)

    command: Command
    seed: int = Field(ge=0)
    n: int = Field(default=1, ge=1)
    bit: Literal[0, 1] = 0
    ensemble: str = "mub2"
    mode: Literal["quantum", "classical"] = "quantum"
    restarts: int = Field(default=32, ge=1)
    max_iter: int = Field(default=10_000, ge=1)
    tol: float = Field(default=1e-9, gt=0)
    oracle_budget: int = Field(default=4000, ge=0)
    oracle_starts: int = Field(default=4, ge=1)
    n_rounds: int = Field(default=1, ge=1)
    joint_check: bool = False
    delta_grid: Optional[List[float]] = None
    ancilla_factor: Literal[1, 2, 4] = 1
    samples: int = Field(default=100, ge=0)
    purify: bool = False
    corrupt_transform: bool = False
    fraction: float = 0.5
    honest: bool = False
    attacked: Optional[int] = None
    attack_file: Optional[str] = None
    trials: int = Field(default=0, ge=0)
    output: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON
    with_history: bool = False

    @field_validator("fraction")
    @classmethod
    def _fraction_range(cls, v: float) -> float:
        if not 0.0 <= v < 1.0:
            raise ValueError("check fraction must satisfy 0 <= fraction < 1")
        return v

    @field_validator("delta_grid")
    @classmethod
    def _delta_nonnegative(cls, v):
        if v is not None and any(d < 0 or d > 1 for d in v):
            raise ValueError("delta values must lie in [0, 1]")
        return v

    @model_validator(mode="after")
    def _attacked_within_n(self):
        if self.attacked is not None and not 0 <= self.attacked <= self.n:
            raise ValueError(f"attacked instances must lie in [0, {self.n}]")
        return self


class ReportBase(BaseModel):
    schema_version: str = SCHEMA_VERSION
    generated_at: Optional[str] = None
    config: Optional[RunConfig] = None

    def stamped(self, config: Optional[RunConfig] = None):
        return self.model_copy(update={
            "generated_at": datetime.now(timezone.utc).isoformat(),
            "config": config if config is not None else self.config,
        })

    def canonical_json(self) -> str:
        """Deterministic payload without the timestamp"""
        return json.dumps(self.model_dump(mode="json", exclude={"generated_at"}), sort_keys=True)


# =============================================================================
# Protocol
# =============================================================================

class TranscriptEvent(BaseModel):
    model_config = ConfigDict(frozen=True)

    step: int
    sender: str
    receiver: str
    kind: Literal["quantum", "classical"]
    instance: Optional[int] = None
    subsystems: List[str] = Field(default_factory=list)
    data: Dict[str, Any] = Field(default_factory=dict)


class InstanceOutcome(BaseModel):
    instance: int
    draw: Tuple[int, int]
    acceptance_probability: float
    accepted: bool


class Transcript(ReportBase):
    n_instances: int
    ensemble: Dict[str, Any]
    mode: str
    seeds: Dict[str, int]
    events: List[TranscriptEvent]
    outcomes: List[InstanceOutcome]
    accepted: bool
    aborted: bool = False


# =============================================================================
# Analyzers
# =============================================================================

class EnsembleConcealing(BaseModel):
    name: str
    m_mu: int
    m_nu: int
    distance_b: float
    distance_to_mixed: float
    purified_distance: Optional[float] = None
    product_residual: Optional[float] = None


class ConcealingReport(ReportBase):
    seed: int
    samples: int
    corrupt: bool = False
    mode: Literal["quantum", "classical"] = "quantum"
    purified: bool = False
    ensembles: List[EnsembleConcealing]
    max_distance_b: float
    max_distance_to_mixed: float
    max_purified_distance: Optional[float] = None
    max_product_residual: Optional[float] = None
    claims_hold: bool


class BasisSuccess(BaseModel):
    draw: Tuple[int, ...]
    weight: float
    success: float


class TradeoffPoint(BaseModel):
    delta: float
    b0_success: float
    b1_success: float


class CheatReport(ReportBase):
    ensemble: Optional[Dict[str, Any]] = None
    adam_dim: int
    p_A: float
    per_basis: List[BasisSuccess]
    restarts: int
    iterations: List[int]
    best_restart: int
    history: Optional[List[float]] = None
    oracle_value: Optional[float] = None
    oracle_gap: Optional[float] = None
    baselines: Dict[str, float] = Field(default_factory=dict)
    baseline: Optional[float] = None
    n_rounds: int = 1
    n_round_bound: Optional[float] = None
    joint_value: Optional[float] = None
    classical_choice: Optional[float] = None
    tradeoff: Optional[List[TradeoffPoint]] = None
    strategy: str = "local unitary on Adam's retained space after an honest b=0 commitment"
    flags: List[str] = Field(default_factory=list)
    claims: Dict[str, bool] = Field(default_factory=dict)
    seed: Optional[int] = None

    _unitary: Any = PrivateAttr(default=None)

    @property
    def unitary(self):
        """Best unitary found (not serialized)"""
        return self._unitary


class CheckResult(BaseModel):
    passed: bool
    purity: float
    schmidt_coefficients: List[float]
    diagnostic: str = ""


class CutAndChooseResult(BaseModel):
    n: int
    fraction: float
    checked: List[int]
    surviving: List[int]
    failed: List[int]
    aborted: bool


class AttackReport(ReportBase):
    attack: str
    entangled_with_reference: bool
    distinguishability: float
    honest_distinguishability: float
    cut_and_choose: CutAndChooseResult
    attacked_instances: int
    abort_probability: float
    monte_carlo_abort_rate: Optional[float] = None
    monte_carlo_trials: int = 0
    seed: int
    claims: Dict[str, bool] = Field(default_factory=dict)


# =============================================================================
# Output
# =============================================================================

def atomic_write_text(path: Path, text: str):
    """Write via a temp file in the target directory and rename over the target."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=str(path.parent))
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


def write_json(report: ReportBase, path: Path):
    payload = report.model_dump(mode="json")
    atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def write_csv(frame: pd.DataFrame, path: Path):
    atomic_write_text(path, frame.to_csv(index=False, float_format="%.17g"))


def report_frame(report: ReportBase) -> pd.DataFrame:
    """Flat, plot-ready table for a report."""
    if isinstance(report, CheatReport):
        if report.tradeoff:
            return pd.DataFrame([p.model_dump() for p in report.tradeoff],
                                columns=["delta", "b0_success", "b1_success"])
        ens = report.ensemble or {}
        row = {
            "ensemble": ens.get("name", ""),
            "m_mu": ens.get("m_mu"),
            "m_nu": ens.get("m_nu"),
            "p_A": report.p_A,
            "oracle": report.oracle_value,
            "gap": report.oracle_gap,
            "baseline": report.baseline,
            "n_rounds": report.n_rounds,
            "n_round_bound": report.n_round_bound,
        }
        return pd.DataFrame([row], columns=list(row))
    if isinstance(report, ConcealingReport):
        return pd.DataFrame([e.model_dump() for e in report.ensembles],
                            columns=list(EnsembleConcealing.model_fields))
    if isinstance(report, Transcript):
        return pd.DataFrame(
            [{"instance": o.instance, "n_mu": o.draw[0], "n_nu": o.draw[1],
              "acceptance_probability": o.acceptance_probability, "accepted": o.accepted}
             for o in report.outcomes],
            columns=["instance", "n_mu", "n_nu", "acceptance_probability", "accepted"],
        )
    if isinstance(report, AttackReport):
        row = {
            "attack": report.attack,
            "distinguishability": report.distinguishability,
            "honest_distinguishability": report.honest_distinguishability,
            "n": report.cut_and_choose.n,
            "fraction": report.cut_and_choose.fraction,
            "attacked": report.attacked_instances,
            "abort_probability": report.abort_probability,
            "aborted": report.cut_and_choose.aborted,
            "monte_carlo_abort_rate": report.monte_carlo_abort_rate,
        }
        return pd.DataFrame([row], columns=list(row))
    raise TypeError(f"no tabular form for {type(report).__name__}")
