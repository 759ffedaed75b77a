"""
QBC4 Simulator Core Modules
"""
from .errors import QBCError, ConfigError, EnsembleError, AttackSpecError, HolderViolation
from .quantum import HilbertRegistry, PureState, DensityOperator, UnitaryOp, SubsystemId, Party, Slot
from .ensembles import BasisEnsemble, SlotBases, preset, resolve_ensemble
from .protocol import Phase, CommitMode, babe_prepare, adam_commit, adam_open, babe_verify, run_protocol
from .concealing import evidence_state, purified_evidence_state, product_form_check, concealing_sweep
from .binding import seesaw_optimize, oracle_optimize, analyze_binding, n_round_bound
from .adversary import BabeAttack, adam_entanglement_check, cut_and_choose
from .syslogger import syslog, log_function_call

__all__ = [
    "QBCError",
    "ConfigError",
    "EnsembleError",
    "AttackSpecError",
    "HolderViolation",
    "HilbertRegistry",
    "PureState",
    "DensityOperator",
    "UnitaryOp",
    "SubsystemId",
    "Party",
    "Slot",
    "BasisEnsemble",
    "SlotBases",
    "preset",
    "resolve_ensemble",
    "Phase",
    "CommitMode",
    "babe_prepare",
    "adam_commit",
    "adam_open",
    "babe_verify",
    "run_protocol",
    "evidence_state",
    "purified_evidence_state",
    "product_form_check",
    "concealing_sweep",
    "seesaw_optimize",
    "oracle_optimize",
    "analyze_binding",
    "n_round_bound",
    "BabeAttack",
    "adam_entanglement_check",
    "cut_and_choose",
    "syslog",
    "log_function_call",
]
