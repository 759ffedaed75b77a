"""
QBC4 Simulator - Basis Ensembles
================================

Babe's randomized orthonormal bases {|f^n_k>} per pair slot, with the
probabilities she draws them with.

Presets:
- computational: the z basis on both slots
- hadamard:      the x basis on both slots
- mub2:          z and x, uniform
- mub3:          z, x and the circular basis, uniform
- haar-m:        m Haar-random bases per slot, uniform (needs a seed)

Ensembles can also be loaded from JSON:
    {"name": "...",
     "mu": {"bases": [[[re, [re, im]], ...], ...], "probabilities": [...]},
     "nu": {...}}
Each basis is a 2x2 matrix given row by row whose columns are |f_1>, |f_2>.
Entries are real numbers or [re, im] pairs.
"""
import json
import logging
import re
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, field_validator

from .errors import EnsembleError
from .quantum import Slot, haar_matrix, make_rng, spawn_seeds
from .settings import tolerances

logger = logging.getLogger("qbc4sim.ensembles")

_SQ2 = 1.0 / np.sqrt(2.0)

COMPUTATIONAL = np.eye(2, dtype=np.complex128)
HADAMARD = np.array([[_SQ2, _SQ2], [_SQ2, -_SQ2]], dtype=np.complex128)
CIRCULAR = np.array([[_SQ2, _SQ2], [1j * _SQ2, -1j * _SQ2]], dtype=np.complex128)

PRESETS = ("computational", "hadamard", "mub2", "mub3", "haar-m")

Draw = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class SlotBases:
    """Bases for one pair slot and their draw probabilities"""
    bases: Tuple[np.ndarray, ...]
    probabilities: Tuple[float, ...]

    def __post_init__(self):
        if not self.bases:
            raise EnsembleError("a slot needs at least one basis")
        if len(self.bases) != len(self.probabilities):
            raise EnsembleError(
                f"{len(self.bases)} bases but {len(self.probabilities)} probabilities"
            )
        tol = tolerances()
        checked = []
        for n, f in enumerate(self.bases):
            f = np.array(f, dtype=np.complex128)
            if f.shape != (2, 2):
                raise EnsembleError(f"basis {n} has shape {f.shape}, expected (2, 2)")
            err = np.max(np.abs(f.conj().T @ f - np.eye(2)))
            if err > tol.structural:
                raise EnsembleError(f"basis {n} is not orthonormal (deviation {err:.3g})")
            f.setflags(write=False)
            checked.append(f)
        probs = tuple(float(p) for p in self.probabilities)
        if any(p < 0 for p in probs):
            raise EnsembleError(f"negative probability in {probs}")
        if abs(sum(probs) - 1.0) > tol.equality:
            raise EnsembleError(f"probabilities sum to {sum(probs):.16g}, not 1")
        object.__setattr__(self, "bases", tuple(checked))
        object.__setattr__(self, "probabilities", probs)

    @property
    def m(self) -> int:
        return len(self.bases)

    @classmethod
    def uniform(cls, bases: Sequence[np.ndarray]) -> "SlotBases":
        return cls(tuple(bases), tuple([1.0 / len(bases)] * len(bases)))


@dataclass(frozen=True, eq=False)
class BasisEnsemble:
    name: str
    mu: SlotBases
    nu: SlotBases

    def slot(self, slot: Slot) -> SlotBases:
        if slot is Slot.MU:
            return self.mu
        if slot is Slot.NU:
            return self.nu
        raise EnsembleError(f"no bases for slot {slot.value}")

    def bases_for(self, draw: Draw) -> Tuple[np.ndarray, np.ndarray]:
        n_mu, n_nu = draw
        return self.mu.bases[n_mu], self.nu.bases[n_nu]

    def joint_draws(self) -> List[Tuple[Draw, float]]:
        """All (n_mu, n_nu) with weight p_mu * p_nu, in lexicographic order."""
        return [
            ((i, j), self.mu.probabilities[i] * self.nu.probabilities[j])
            for i, j in product(range(self.mu.m), range(self.nu.m))
        ]

    def draw(self, rng: np.random.Generator) -> Draw:
        """Independent draws for the two slots."""
        n_mu = int(rng.choice(self.mu.m, p=self.mu.probabilities))
        n_nu = int(rng.choice(self.nu.m, p=self.nu.probabilities))
        return n_mu, n_nu

    def swapped(self) -> "BasisEnsemble":
        """Same ensemble with the mu and nu slots exchanged"""
        return BasisEnsemble(f"{self.name}/swapped", self.nu, self.mu)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "m_mu": self.mu.m,
            "m_nu": self.nu.m,
            "p_mu": list(self.mu.probabilities),
            "p_nu": list(self.nu.probabilities),
        }

    @classmethod
    def single(cls, f_mu: np.ndarray, f_nu: np.ndarray, name: str = "known") -> "BasisEnsemble":
        """Ensemble with one known basis per slot"""
        return cls(name, SlotBases((f_mu,), (1.0,)), SlotBases((f_nu,), (1.0,)))

    @classmethod
    def symmetric(cls, name: str, bases: Sequence[np.ndarray]) -> "BasisEnsemble":
        slot = SlotBases.uniform(bases)
        return cls(name, slot, slot)


def haar_ensemble(m: int, seed, name: Optional[str] = None) -> BasisEnsemble:
    """m independent Haar bases per slot, uniform probabilities"""
    if m < 1:
        raise EnsembleError(f"haar ensemble needs m >= 1, got {m}")
    rng = make_rng(seed)
    mu = SlotBases.uniform([haar_matrix(2, rng) for _ in range(m)])
    nu = SlotBases.uniform([haar_matrix(2, rng) for _ in range(m)])
    return BasisEnsemble(name or f"haar-{m}", mu, nu)


def preset(name: str, seed: Optional[int] = None) -> BasisEnsemble:
    """Named preset; haar-m presets require a seed."""
    if name == "computational":
        return BasisEnsemble.symmetric(name, [COMPUTATIONAL])
    if name == "hadamard":
        return BasisEnsemble.symmetric(name, [HADAMARD])
    if name == "mub2":
        return BasisEnsemble.symmetric(name, [COMPUTATIONAL, HADAMARD])
    if name == "mub3":
        return BasisEnsemble.symmetric(name, [COMPUTATIONAL, HADAMARD, CIRCULAR])
    match = re.fullmatch(r"haar-(\d+)", name)
    if match:
        if seed is None:
            raise EnsembleError(f"preset {name} is random and needs a seed")
        return haar_ensemble(int(match.group(1)), spawn_seeds(seed, 1)[0], name)
    raise EnsembleError(f"unknown ensemble preset {name!r} (known: {', '.join(PRESETS)})")


# =============================================================================
# JSON ensemble files
# =============================================================================

Entry = Union[float, Tuple[float, float]]


class _SlotModel(BaseModel):
    bases: List[List[List[Entry]]] = Field(min_length=1)
    probabilities: Optional[List[float]] = None

    @field_validator("bases")
    @classmethod
    def _two_by_two(cls, v):
        for basis in v:
            if len(basis) != 2 or any(len(row) != 2 for row in basis):
                raise ValueError("each basis must be a 2x2 matrix given row by row")
        return v

    def to_slot(self) -> SlotBases:
        mats = [
            np.array([[complex(*e) if isinstance(e, (tuple, list)) else complex(e) for e in row]
                      for row in basis], dtype=np.complex128)
            for basis in self.bases
        ]
        probs = self.probabilities or [1.0 / len(mats)] * len(mats)
        return SlotBases(tuple(mats), tuple(probs))


class _EnsembleModel(BaseModel):
    name: Optional[str] = None
    mu: _SlotModel
    nu: Optional[_SlotModel] = None


def load_ensemble(path: Union[str, Path]) -> BasisEnsemble:
    """Load an ensemble file; nu defaults to a copy of mu."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
        model = _EnsembleModel.model_validate(raw)
    except FileNotFoundError:
        raise EnsembleError(f"ensemble file not found: {path}") from None
    except (json.JSONDecodeError, ValidationError) as e:
        raise EnsembleError(f"malformed ensemble file {path}: {e}") from e

    mu = model.mu.to_slot()
    nu = model.nu.to_slot() if model.nu is not None else mu
    ensemble = BasisEnsemble(model.name or path.stem, mu, nu)
    logger.debug(f"Loaded ensemble {ensemble.name} from {path} (m_mu={mu.m}, m_nu={nu.m})")
    return ensemble


def resolve_ensemble(name: str, seed: Optional[int] = None) -> BasisEnsemble:
    """Preset name or path to a JSON ensemble file"""
    if name in PRESETS[:-1] or re.fullmatch(r"haar-\d+", name):
        return preset(name, seed)
    if name.endswith(".json") or Path(name).exists():
        return load_ensemble(name)
    raise EnsembleError(f"unknown ensemble {name!r}: not a preset and not a file")
