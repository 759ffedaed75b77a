"""
QBC4 Simulator - Dishonest Babe
===============================

Babe substituting her own states for the split pairs, the information she
gains about b, and Adam's countermeasure: take the beta half of a randomly
chosen subset of instances and check the pair is maximally entangled
(cut-and-choose). Checked instances are consumed.

Attack files:
    {"description": "...",
     "slots": {"mu": {"state": [a00, a01, a10, a11]}, "nu": {...}}}
amplitudes over (alpha, beta) with entries real or [re, im]; the beta
factor is Babe's retained reference. A missing slot is honest (computational basis).
"""
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError, field_validator

from .ensembles import COMPUTATIONAL, BasisEnsemble
from .errors import AttackSpecError, StateValidationError
from .quantum import (
    B_alpha,
    B_beta,
    DensityOperator,
    HilbertRegistry,
    Party,
    PureState,
    Slot,
    haar_matrix,
    make_rng,
    partial_trace,
    permute,
    schmidt,
    spawn_seeds,
    tensor,
    trace_distance,
)
from .protocol import babe_ids, commit_transform, split_pair
from .reports import CheckResult, CutAndChooseResult
from .settings import tolerances
from .syslogger import syslog

logger = logging.getLogger("qbc4sim.adversary")

SLOTS = (Slot.MU, Slot.NU)


@dataclass(frozen=True, eq=False)
class BabeAttack:
    """Per-slot states Babe sends in place of the split pairs, over (alpha_j, beta_j)"""
    description: str
    inputs: Dict[Slot, PureState]

    def __post_init__(self):
        for slot in SLOTS:
            state = self.inputs.get(slot)
            if state is None:
                raise AttackSpecError(f"attack has no input for slot {slot.value}")
            expected = (B_alpha(slot), B_beta(slot))
            if state.registry.ids != expected:
                raise AttackSpecError(
                    f"input for slot {slot.value} must live on {[s.label for s in expected]}"
                )

    @property
    def entangled(self) -> bool:
        """Whether any substituted alpha wire is entangled with Babe's reference"""
        return any(schmidt(self.inputs[s], [B_alpha(s)]).rank > 1 for s in SLOTS)

    def prepared(self, instance: int = 1) -> PureState:
        """Babe-side state of one instance in canonical factor order"""
        relabel = {}
        for slot in SLOTS:
            relabel[B_alpha(slot)] = B_alpha(slot, instance)
            relabel[B_beta(slot)] = B_beta(slot, instance)
        parts = [PureState(self.inputs[s].registry.relabel(relabel), self.inputs[s].amplitudes)
                 for s in SLOTS]
        return permute(tensor(*parts), babe_ids(instance))


def honest_attack(f_mu: np.ndarray = COMPUTATIONAL, f_nu: np.ndarray = COMPUTATIONAL) -> BabeAttack:
    """The honest split pairs, as a baseline"""
    return BabeAttack("honest", {Slot.MU: split_pair(f_mu, Slot.MU), Slot.NU: split_pair(f_nu, Slot.NU)})


def orthogonal_product_attack() -> BabeAttack:
    """|1> on the mu alpha wire, |2> on the nu alpha wire, unentangled with beta"""
    inputs = {}
    for slot, k in ((Slot.MU, 0), (Slot.NU, 1)):
        registry = HilbertRegistry.of(B_alpha(slot), B_beta(slot))
        inputs[slot] = PureState.basis(registry, [k, 0])
    return BabeAttack("orthogonal-product", inputs)


def bit_distinguishability(attack: BabeAttack) -> float:
    """Helstrom success (1 + D(sigma_0, sigma_1)) / 2 on everything Babe holds after the commit."""
    prepared = attack.prepared()
    sigma = []
    for b in (0, 1):
        committed = commit_transform(prepared, b)
        sigma.append(partial_trace(committed, [sid for sid in committed.registry.ids
                                               if sid.party is not Party.A]))
    value = 0.5 * (1.0 + trace_distance(sigma[0], sigma[1]))
    syslog.metric("adversary.distinguishability", value, tags={"attack": attack.description})
    return value


def adam_entanglement_check(state: Union[PureState, DensityOperator]) -> CheckResult:
    """Pass iff the alpha|beta pair is pure and maximally entangled (both Schmidt coefficients 2^-1/2)."""
    tol = tolerances().structural
    if isinstance(state, DensityOperator):
        purity = state.purity()
        if purity < 1.0 - tol:
            return CheckResult(passed=False, purity=purity, schmidt_coefficients=[],
                               diagnostic=f"mixed state (purity {purity:.6g})")
        _, evecs = np.linalg.eigh(state.matrix)
        state = PureState.from_vector(state.registry, evecs[:, -1], normalize=True)
    purity = 1.0

    alphas = [sid for sid in state.registry.ids if sid.party is Party.B_ALPHA]
    decomposition = schmidt(state, alphas)
    coeffs = [float(c) for c in decomposition.coefficients]
    target = 1.0 / math.sqrt(2.0)
    if len(coeffs) != 2:
        return CheckResult(passed=False, purity=purity, schmidt_coefficients=coeffs,
                           diagnostic=f"Schmidt rank {len(coeffs)}, expected 2")
    worst = max(abs(c - target) for c in coeffs)
    if worst > tol:
        return CheckResult(passed=False, purity=purity, schmidt_coefficients=coeffs,
                           diagnostic=f"Schmidt coefficients {coeffs} differ from 1/sqrt(2) by {worst:.3g}")
    return CheckResult(passed=True, purity=purity, schmidt_coefficients=coeffs)


def check_count(n: int, fraction: float) -> int:
    """ceil(fraction * N), robust to float representation of the fraction"""
    return int(math.ceil(round(fraction * n, 9)))


def abort_probability(n: int, fraction: float, attacked: int) -> float:
    """1 - C(N - a, k) / C(N, k): some attacked instance lands in the checked sample"""
    k = check_count(n, fraction)
    return 1.0 - math.comb(n - attacked, k) / math.comb(n, k)


def cut_and_choose(n: int, fraction: float, attack: Optional[BabeAttack], seed,
                   attacked_instances: Optional[int] = None,
                   ensemble: Optional[BasisEnsemble] = None) -> CutAndChooseResult:
    """Check ceil(fraction * N) random instances; abort on any failure.

    The first `attacked_instances` instances (all of them by default) carry the
    attack; the rest are honest split pairs drawn from the ensemble, or
    Haar-random bases when none is given.
    """
    if not 0.0 <= fraction < 1.0:
        raise AttackSpecError(f"check fraction must satisfy 0 <= fraction < 1, got {fraction}")
    rng = make_rng(seed)
    attacked = n if attacked_instances is None else attacked_instances
    if attack is None:
        attacked = 0

    k = check_count(n, fraction)
    checked = sorted(int(i) + 1 for i in rng.choice(n, size=k, replace=False)) if k else []
    failed = []
    for inst in checked:
        for slot in SLOTS:
            if inst <= attacked:
                pair = attack.inputs[slot]
            elif ensemble is not None:
                draw = ensemble.draw(rng)
                pair = split_pair(ensemble.bases_for(draw)[0 if slot is Slot.MU else 1], slot)
            else:
                pair = split_pair(haar_matrix(2, rng), slot)
            result = adam_entanglement_check(pair)
            if not result.passed:
                logger.debug(f"instance {inst} slot {slot.value} failed: {result.diagnostic}")
                failed.append(inst)
                break

    surviving = [i for i in range(1, n + 1) if i not in set(checked)]
    return CutAndChooseResult(
        n=n,
        fraction=fraction,
        checked=checked,
        surviving=[] if failed else surviving,
        failed=failed,
        aborted=bool(failed),
    )


def simulate_abort_rate(n: int, fraction: float, attack: BabeAttack, attacked: int,
                        trials: int, seed: int) -> float:
    """Monte Carlo abort frequency of cut_and_choose over independent trials"""
    seeds = spawn_seeds(seed, trials)
    aborts = sum(cut_and_choose(n, fraction, attack, s, attacked).aborted for s in seeds)
    return aborts / trials if trials else 0.0


# =============================================================================
# Attack files
# =============================================================================

Entry = Union[float, Tuple[float, float]]


class _SlotInput(BaseModel):
    state: List[Entry]

    @field_validator("state")
    @classmethod
    def _four_amplitudes(cls, v):
        if len(v) != 4:
            raise ValueError("a slot state needs 4 amplitudes over (alpha, beta)")
        return v


class _AttackModel(BaseModel):
    description: str = "custom"
    slots: Dict[str, _SlotInput]

    @field_validator("slots")
    @classmethod
    def _known_slots(cls, v):
        unknown = set(v) - {"mu", "nu"}
        if unknown:
            raise ValueError(f"unknown slots {sorted(unknown)}")
        return v


def load_attack(path: Union[str, Path]) -> BabeAttack:
    path = Path(path)
    try:
        model = _AttackModel.model_validate(json.loads(path.read_text(encoding="utf-8")))
    except FileNotFoundError:
        raise AttackSpecError(f"attack file not found: {path}") from None
    except (json.JSONDecodeError, ValidationError) as e:
        raise AttackSpecError(f"malformed attack file {path}: {e}") from e

    inputs = {}
    for slot in SLOTS:
        entry = model.slots.get(slot.value)
        if entry is None:
            inputs[slot] = split_pair(COMPUTATIONAL, slot)
            continue
        vec = [complex(*e) if isinstance(e, (tuple, list)) else complex(e) for e in entry.state]
        try:
            inputs[slot] = PureState(HilbertRegistry.of(B_alpha(slot), B_beta(slot)), vec)
        except StateValidationError as e:
            raise AttackSpecError(f"slot {slot.value}: {e}") from e
    return BabeAttack(model.description, inputs)
