"""
QBC4 Simulator - Protocol Engine
================================

Honest QBC4 (N instances of the single-pair protocol QBC4p) as a message
passing state machine between Adam (committer) and Babe (verifier).

Per instance l, Babe prepares two split pairs
    |Psi_j> = 2^-1/2 sum_k |k>_{j,alpha} |f_k>_{j,beta},   j in {mu, nu}
and sends the alpha halves to Adam. Adam attaches an ancilla A_j in the
uniform superposition of |e_1>..|e_4>, applies sum_i |e_i><e_i| (x) V_i to
(A_j, alpha_j), and returns the alpha wires in order (mu, nu) for b=0 or
switched for b=1. Opening transfers the A factors and announces b together
with the wire order; Babe rearranges and projects onto |Phi_mu>|Phi_nu>.

Each instance is stored as its own state over the registry
    [A:mu, A:nu, Ba:mu, Ba:nu, Bb:mu, Bb:nu]
since instances never interact. The global state is their tensor product.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .ensembles import BasisEnsemble, Draw
from .errors import HolderViolation, PhaseError, QBCError
from .quantum import (
    A,
    B_alpha,
    B_beta,
    DensityOperator,
    HilbertRegistry,
    Party,
    PureState,
    Slot,
    UnitaryOp,
    apply,
    controlled_pauli,
    exchange,
    fidelity,
    make_rng,
    partial_trace,
    pauli_set,
    permute,
    spawn_seeds,
    tensor,
)
from .reports import InstanceOutcome, Transcript, TranscriptEvent
from .syslogger import syslog

logger = logging.getLogger("qbc4sim.protocol")

SLOTS = (Slot.MU, Slot.NU)


class Phase(str, Enum):
    INIT = "Init"
    PREPARED = "Prepared"
    COMMITTED = "Committed"
    OPENED = "Opened"
    VERIFIED = "Verified"
    ABORTED = "Aborted"


_TRANSITIONS = {
    Phase.INIT: {Phase.PREPARED},
    Phase.PREPARED: {Phase.COMMITTED, Phase.ABORTED},
    Phase.COMMITTED: {Phase.OPENED, Phase.ABORTED},
    Phase.OPENED: {Phase.VERIFIED, Phase.ABORTED},
    Phase.VERIFIED: set(),
    Phase.ABORTED: set(),
}


class Holder(str, Enum):
    ADAM = "Adam"
    BABE = "Babe"


class CommitMode(str, Enum):
    """QUANTUM: ancilla in superposition. CLASSICAL: Adam picks the V_i and announces them."""
    QUANTUM = "quantum"
    CLASSICAL = "classical"


Choices = Tuple[int, int]


# =============================================================================
# State construction shared with the analyzers
# =============================================================================

def babe_ids(instance: int = 1) -> List:
    """Babe-side factors of one instance in canonical order"""
    return [B_alpha(Slot.MU, instance), B_alpha(Slot.NU, instance),
            B_beta(Slot.MU, instance), B_beta(Slot.NU, instance)]


def adam_ids(instance: int = 1) -> List:
    return [A(Slot.MU, instance), A(Slot.NU, instance)]


def split_pair(f: np.ndarray, slot: Slot, instance: int = 1) -> PureState:
    """2^-1/2 sum_k |k>_alpha |f_k>_beta (columns of f are the |f_k>)"""
    registry = HilbertRegistry.of(B_alpha(slot, instance), B_beta(slot, instance))
    # amplitude[k, l] = <l|f_k> / sqrt(2)
    return PureState(registry, (np.asarray(f).T / np.sqrt(2.0)).reshape(-1))


def prepared_state(f_mu: np.ndarray, f_nu: np.ndarray, instance: int = 1) -> PureState:
    """|Psi_mu> (x) |Psi_nu> on Babe's factors in canonical order"""
    joint = tensor(split_pair(f_mu, Slot.MU, instance), split_pair(f_nu, Slot.NU, instance))
    return permute(joint, babe_ids(instance))


def adam_ancilla(slot: Slot, instance: int = 1, choice: Optional[int] = None) -> PureState:
    """Uniform superposition of |e_i>, or |e_choice> for a classical commitment"""
    registry = HilbertRegistry.of(A(slot, instance))
    if choice is None:
        return PureState(registry, np.full(4, 0.5, dtype=np.complex128))
    return PureState.basis(registry, [choice])


def commit_transform(state: PureState, b: int, instance: int = 1,
                     choices: Optional[Choices] = None, corrupt: bool = False) -> PureState:
    """Adam's commit on a Babe-side state holding both alpha wires of an instance.

    Prepends the A ancillas, applies the controlled Pauli on each (A_j, alpha_j)
    (skipped when corrupt) and switches the alpha wires for b=1. Any other
    factors of the input (Babe's beta wires, a C register) ride along.
    """
    ancillas = [adam_ancilla(slot, instance, None if choices is None else choices[k])
                for k, slot in enumerate(SLOTS)]
    out = tensor(*ancillas, state)
    if not corrupt:
        for slot in SLOTS:
            out = apply(controlled_pauli(A(slot, instance), B_alpha(slot, instance)), out)
    if b == 1:
        out = exchange(out, B_alpha(Slot.MU, instance), B_alpha(Slot.NU, instance))
    return out


def committed_state(f_mu: np.ndarray, f_nu: np.ndarray, b: int, instance: int = 1,
                    choices: Optional[Choices] = None, corrupt: bool = False) -> PureState:
    """Honest committed state of one instance for known bases"""
    return commit_transform(prepared_state(f_mu, f_nu, instance), b, instance, choices, corrupt)


# =============================================================================
# Session
# =============================================================================

@dataclass(frozen=True)
class Announcement:
    bit: int
    order: Tuple[Slot, Slot]
    choices: Optional[Dict[int, Choices]] = None

    @classmethod
    def for_bit(cls, bit: int, choices: Optional[Dict[int, Choices]] = None) -> "Announcement":
        order = (Slot.MU, Slot.NU) if bit == 0 else (Slot.NU, Slot.MU)
        return cls(bit, order, choices)

    def problems(self, mode: CommitMode, instances: Iterable[int]) -> List[str]:
        issues = []
        if self.bit not in (0, 1):
            issues.append(f"bit {self.bit!r} is not binary")
        if tuple(self.order) not in ((Slot.MU, Slot.NU), (Slot.NU, Slot.MU)):
            issues.append(f"order {self.order!r} is not a wire order")
        elif self.bit in (0, 1) and tuple(self.order) != Announcement.for_bit(self.bit).order:
            issues.append(f"order {[s.value for s in self.order]} contradicts bit {self.bit}")
        if mode is CommitMode.CLASSICAL:
            for inst in instances:
                c = (self.choices or {}).get(inst)
                if c is None or len(c) != 2 or any(i not in range(4) for i in c):
                    issues.append(f"missing or invalid Pauli choices for instance {inst}")
        return issues


@dataclass
class VerificationResult:
    accepted: bool
    aborted: bool
    probabilities: Dict[int, float]
    outcomes: Dict[int, bool]
    reason: str = ""


@dataclass
class SessionState:
    """Single-owner session driven through the phase machine"""
    ensemble: BasisEnsemble
    n_instances: int
    mode: CommitMode
    babe_rng: np.random.Generator
    adam_rng: np.random.Generator
    seeds: Dict[str, int] = field(default_factory=dict)
    phase: Phase = Phase.INIT
    states: Dict[int, Union[PureState, DensityOperator]] = field(default_factory=dict)
    holders: Dict = field(default_factory=dict)
    draws: Dict[int, Draw] = field(default_factory=dict)
    events: List[TranscriptEvent] = field(default_factory=list)
    access_log: List[Tuple[str, str, Tuple[str, ...]]] = field(default_factory=list)
    announcement: Optional[Announcement] = None
    verification: Optional[VerificationResult] = None
    # Adam-private
    _bit: Optional[int] = None
    _choices: Dict[int, Choices] = field(default_factory=dict)

    def advance(self, target: Phase):
        if target not in _TRANSITIONS[self.phase]:
            raise PhaseError(f"cannot move from {self.phase.value} to {target.value}")
        logger.debug(f"phase {self.phase.value} -> {target.value}")
        self.phase = target

    def require(self, phase: Phase, operation: str):
        if self.phase is not phase:
            raise PhaseError(f"{operation} requires phase {phase.value}, session is {self.phase.value}")

    def touch(self, party: Holder, operation: str, ids: Sequence):
        """Record an access and reject it unless party holds every factor."""
        foreign = [sid for sid in ids if self.holders.get(sid) is not party]
        if foreign:
            raise HolderViolation(party.value, operation, foreign)
        self.access_log.append((party.value, operation, tuple(sid.label for sid in ids)))

    def transfer(self, ids: Sequence, to: Holder):
        for sid in ids:
            self.holders[sid] = to

    def record(self, sender: Holder, receiver: Holder, kind: str, instance: Optional[int] = None,
               subsystems: Sequence = (), **data):
        event = TranscriptEvent(
            step=len(self.events),
            sender=sender.value,
            receiver=receiver.value,
            kind=kind,
            instance=instance,
            subsystems=[s.label for s in subsystems],
            data=data,
        )
        self.events.append(event)
        syslog.audit(f"{kind}:{sender.value}->{receiver.value}", party=sender.value,
                     details={"instance": instance, "subsystems": event.subsystems, **data})

    def global_state(self) -> Union[PureState, DensityOperator]:
        """Tensor product over instances (dimension 256^N)"""
        return tensor(*(self.states[i] for i in sorted(self.states)))


def babe_prepare(ensemble: BasisEnsemble, seed, n_instances: int = 1,
                 mode: CommitMode = CommitMode.QUANTUM) -> Tuple[SessionState, Dict[int, Draw]]:
    """Draw bases per instance and slot, prepare the split pairs, send the alpha halves."""
    if n_instances < 1:
        raise QBCError(f"need at least one instance, got {n_instances}")
    babe_seed, adam_seed = spawn_seeds(seed, 2) if isinstance(seed, (int, np.integer)) else (seed, None)
    # generator seeds (caller-supplied rngs) leave nothing to record
    seeds = ({"root": int(seed), "babe": int(babe_seed), "adam": int(adam_seed)}
             if adam_seed is not None else {})
    session = SessionState(
        ensemble=ensemble,
        n_instances=n_instances,
        mode=mode,
        babe_rng=make_rng(babe_seed),
        adam_rng=make_rng(adam_seed),
        seeds=seeds,
    )
    for inst in range(1, n_instances + 1):
        draw = ensemble.draw(session.babe_rng)
        session.draws[inst] = draw
        f_mu, f_nu = ensemble.bases_for(draw)
        session.states[inst] = prepared_state(f_mu, f_nu, inst)
        session.transfer(babe_ids(inst), Holder.BABE)
        session.touch(Holder.BABE, "prepare", babe_ids(inst))
        alphas = babe_ids(inst)[:2]
        session.transfer(alphas, Holder.ADAM)
        session.record(Holder.BABE, Holder.ADAM, "quantum", inst, alphas)

    session.advance(Phase.PREPARED)
    logger.info(f"Babe prepared {n_instances} instance(s) from ensemble {ensemble.name}")
    return session, dict(session.draws)


def adam_commit(session: SessionState, b: int,
                choices: Optional[Dict[int, Choices]] = None) -> SessionState:
    """Commit to b on every instance; in classical mode Adam draws his Pauli labels unless given."""
    session.require(Phase.PREPARED, "adam_commit")
    if b not in (0, 1):
        raise QBCError(f"commit bit must be 0 or 1, got {b!r}")

    for inst in sorted(session.states):
        a_ids = adam_ids(inst)
        session.transfer(a_ids, Holder.ADAM)
        alphas = babe_ids(inst)[:2]
        session.touch(Holder.ADAM, "commit", a_ids + alphas)

        picked = None
        if session.mode is CommitMode.CLASSICAL:
            if choices and inst in choices:
                picked = tuple(choices[inst])
            else:
                picked = tuple(int(x) for x in session.adam_rng.integers(0, 4, size=2))
            session._choices[inst] = picked

        session.states[inst] = commit_transform(session.states[inst], b, inst, picked)
        session.transfer(alphas, Holder.BABE)
        session.record(Holder.ADAM, Holder.BABE, "quantum", inst, alphas)

    session._bit = b
    session.advance(Phase.COMMITTED)
    return session


def adam_open(session: SessionState, *, announce_bit: Optional[int] = None,
              adam_unitary: Optional[UnitaryOp] = None,
              substitute_ancilla: Optional[Union[PureState, DensityOperator]] = None,
              announce_choices: Optional[Dict[int, Choices]] = None) -> Announcement:
    """Announce the bit and wire order and hand over the A factors.

    The keyword hooks model a dishonest Adam: announce another bit, rotate the
    A factors before handing them over, or hand over a substitute ancilla
    (on the A factors of instance 1, relabeled per instance).
    """
    session.require(Phase.COMMITTED, "adam_open")

    bit = session._bit if announce_bit is None else announce_bit
    for inst in sorted(session.states):
        a_ids = adam_ids(inst)
        session.touch(Holder.ADAM, "open", a_ids)
        state = session.states[inst]
        if adam_unitary is not None:
            state = apply(adam_unitary.on(*a_ids), state)
        if substitute_ancilla is not None:
            state = _replace_adam_factors(state, substitute_ancilla, inst)
        session.states[inst] = state
        session.transfer(a_ids, Holder.BABE)
        session.record(Holder.ADAM, Holder.BABE, "quantum", inst, a_ids)

    if session.mode is CommitMode.CLASSICAL:
        choices = dict(announce_choices) if announce_choices is not None else dict(session._choices)
    else:
        choices = None
    if bit in (0, 1):
        announcement = Announcement.for_bit(bit, choices)
    else:
        announcement = Announcement(bit, (Slot.MU, Slot.NU), choices)

    data = {"bit": bit, "order": [s.value for s in announcement.order]}
    if choices is not None:
        data["choices"] = {str(k): list(v) for k, v in sorted(choices.items())}
    session.record(Holder.ADAM, Holder.BABE, "classical", None, (), **data)
    session.announcement = announcement
    session.advance(Phase.OPENED)
    return announcement


def _replace_adam_factors(state, substitute, instance: int) -> DensityOperator:
    a_ids = adam_ids(instance)
    sub_registry = HilbertRegistry.of(*a_ids)
    if isinstance(substitute, PureState):
        substitute = substitute.density()
    substitute = DensityOperator(sub_registry, substitute.matrix)
    babe_part = partial_trace(state, [sid for sid in state.registry.ids if sid.party is not Party.A])
    return permute(tensor(substitute, babe_part), state.registry.ids)


def expected_state(session: SessionState, instance: int, announcement: Announcement) -> PureState:
    """The state Babe projects onto, built from her own draws (b=0 wire order)"""
    f_mu, f_nu = session.ensemble.bases_for(session.draws[instance])
    choices = None
    if session.mode is CommitMode.CLASSICAL:
        choices = tuple(announcement.choices[instance])
    return committed_state(f_mu, f_nu, 0, instance, choices)


def babe_verify(session: SessionState, announcement: Announcement) -> VerificationResult:
    """Rearrange per the announced order, project onto |Phi_mu>|Phi_nu>, sample the outcome."""
    session.require(Phase.OPENED, "babe_verify")

    issues = announcement.problems(session.mode, session.states)
    if issues:
        reason = "; ".join(issues)
        logger.warning(f"Malformed announcement, aborting: {reason}")
        session.record(Holder.BABE, Holder.ADAM, "classical", None, (), verdict="abort", reason=reason)
        session.verification = VerificationResult(False, True, {}, {}, reason)
        session.advance(Phase.ABORTED)
        return session.verification

    probabilities, outcomes = {}, {}
    for inst in sorted(session.states):
        state = session.states[inst]
        session.touch(Holder.BABE, "verify", list(state.registry.ids))
        if tuple(announcement.order) == (Slot.NU, Slot.MU):
            state = exchange(state, B_alpha(Slot.MU, inst), B_alpha(Slot.NU, inst))
        target = expected_state(session, inst, announcement)
        p = float(np.clip(fidelity(target, state), 0.0, 1.0))
        accepted = bool(session.babe_rng.random() < p)
        probabilities[inst] = p
        outcomes[inst] = accepted
        session.record(Holder.BABE, Holder.ADAM, "classical", inst, (),
                       acceptance_probability=p, accepted=accepted)

    result = VerificationResult(all(outcomes.values()), False, probabilities, outcomes)
    session.verification = result
    session.advance(Phase.VERIFIED)
    logger.info(f"Verification: {sum(outcomes.values())}/{len(outcomes)} instance(s) accepted")
    return result


def run_protocol(n: int, ensemble: BasisEnsemble, b: int, seed: int,
                 mode: CommitMode = CommitMode.QUANTUM) -> Transcript:
    """Honest N-instance run; same seed gives an identical transcript."""
    if n < 1:
        raise QBCError(f"need at least one instance, got {n}")
    session, _ = babe_prepare(ensemble, seed, n, mode)
    adam_commit(session, b)
    announcement = adam_open(session)
    result = babe_verify(session, announcement)

    outcomes = [
        InstanceOutcome(
            instance=inst,
            draw=session.draws[inst],
            acceptance_probability=result.probabilities.get(inst, 0.0),
            accepted=result.outcomes.get(inst, False),
        )
        for inst in sorted(session.states)
    ]
    return Transcript(
        n_instances=n,
        ensemble=ensemble.describe(),
        mode=mode.value,
        seeds=dict(session.seeds),
        events=list(session.events),
        outcomes=outcomes,
        accepted=result.accepted,
        aborted=result.aborted,
    )
