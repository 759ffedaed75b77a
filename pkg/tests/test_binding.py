from dataclasses import replace

import numpy as np
import pytest

from qbc4sim.core.binding import (
    CheatInstance,
    CheatInstanceSet,
    analyze_binding,
    build_cheat_instances,
    classical_choice_cheat,
    joint_instances,
    known_basis_cheat,
    n_round_bound,
    n_round_joint_check,
    objective,
    oracle_optimize,
    relaxed_opening_tradeoff,
    seesaw_optimize,
    transition_operator,
    trivial_strategies,
)
from qbc4sim.core.ensembles import BasisEnsemble, SlotBases, preset
from qbc4sim.core.errors import ConfigError, DimensionMismatchError, QBCError
from qbc4sim.core.protocol import adam_ids
from qbc4sim.core.quantum import (
    B_beta,
    C,
    HilbertRegistry,
    PureState,
    Slot,
    apply,
    haar_matrix,
    haar_unitary,
    overlap,
    random_state,
    spawn_seeds,
)
from qbc4sim.core.settings import get_settings, set_settings

ATOL = 1e-9


def synthetic_set(s: int, d: int = 2, n: int = 3) -> CheatInstanceSet:
    """n random source/target pairs with a d-dimensional Adam side and a qubit on the other side"""
    registry = HilbertRegistry(((C(), d), (B_beta(Slot.MU), 2)))
    rng = np.random.default_rng(s)
    weights = rng.dirichlet(np.ones(n))
    weights = weights / weights.sum()
    seeds = spawn_seeds(s, 2 * n)
    items = [((k,), random_state(registry, seeds[2 * k]), random_state(registry, seeds[2 * k + 1]), w)
             for k, w in enumerate(weights)]
    return CheatInstanceSet.from_states(items, [C()])


# =============================================================================
# Instances
# =============================================================================

def test_transition_operator_matches_overlap():
    registry = HilbertRegistry(((C(), 3), (B_beta(Slot.MU), 2)))
    source, target = random_state(registry, 1), random_state(registry, 2)
    m = transition_operator(source, target, [C()])
    u = haar_unitary(3, 4, support=[C()])
    assert np.trace(u.matrix @ m) == pytest.approx(overlap(target, apply(u, source)))


def test_transition_operator_is_basis_independent(mub2):
    instances = build_cheat_instances(mub2)
    assert instances.adam_dim == 16
    assert len(instances.instances) == 4
    first = instances.operators[0]
    assert all(np.allclose(op, first, atol=1e-12) for op in instances.operators)


def test_instance_set_validation():
    op = np.eye(2) / 2
    with pytest.raises(QBCError):
        CheatInstanceSet((CheatInstance((0,), 0.5, op),))
    with pytest.raises(DimensionMismatchError):
        CheatInstanceSet((CheatInstance((0,), 0.5, op), CheatInstance((1,), 0.5, np.eye(3) / 3)))
    with pytest.raises(QBCError):
        CheatInstanceSet(())


def test_announce_other_bit_value(mub2):
    instances = build_cheat_instances(mub2)
    assert objective(np.eye(16), instances) == pytest.approx(0.25)


# =============================================================================
# Known bases
# =============================================================================

@pytest.mark.parametrize("name", ["computational", "hadamard"])
def test_known_basis_cheat_is_perfect(name):
    instances = build_cheat_instances(preset(name))
    cheat = known_basis_cheat(instances.instances[0], adam_ids())
    assert cheat.fidelity == pytest.approx(1.0, abs=ATOL)
    assert cheat.marginal_distance < 1e-10
    assert cheat.flags == []
    assert cheat.unitary.support == tuple(adam_ids())


def test_known_basis_cheat_for_random_bases():
    for s in spawn_seeds(4, 20):
        rng = np.random.default_rng(s)
        ensemble = BasisEnsemble.single(haar_matrix(2, rng), haar_matrix(2, rng))
        cheat = known_basis_cheat(build_cheat_instances(ensemble).instances[0], adam_ids())
        assert cheat.fidelity >= 1.0 - ATOL
        assert cheat.flags == []


def test_known_basis_cheat_reports_marginal_mismatch():
    registry = HilbertRegistry(((C(), 2), (B_beta(Slot.MU), 2)))
    source = PureState.basis(registry, [0, 0])
    target = PureState.basis(registry, [0, 1])
    instance = CheatInstanceSet.from_states([((0,), source, target, 1.0)], [C()]).instances[0]
    cheat = known_basis_cheat(instance, [C()])
    assert cheat.flags == ["marginals_mismatch"]
    assert cheat.marginal_distance == pytest.approx(1.0)
    assert cheat.fidelity == pytest.approx(0.0)


# =============================================================================
# Seesaw and oracle
# =============================================================================

def test_seesaw_on_protocol_instances(mub2):
    report = seesaw_optimize(build_cheat_instances(mub2), seed=3, restarts=3, max_iter=200,
                             record_history=True)
    assert report.p_A == pytest.approx(1.0, abs=1e-8)
    assert report.flags == []
    assert report.unitary.shape == (16, 16)
    assert sum(b.weight * b.success for b in report.per_basis) == pytest.approx(report.p_A)
    assert len(report.iterations) == 3


@pytest.mark.parametrize("s", [1, 2, 3])
def test_seesaw_is_monotone(s):
    report = seesaw_optimize(synthetic_set(s, d=3, n=4), seed=s, restarts=4, record_history=True)
    assert np.all(np.diff(report.history) >= -1e-12)
    assert "non_monotone" not in report.flags


def test_seesaw_is_deterministic():
    instances = synthetic_set(7)
    a = seesaw_optimize(instances, seed=11, restarts=5, workers=1)
    b = seesaw_optimize(instances, seed=11, restarts=5, workers=4)
    assert a.canonical_json() == b.canonical_json()


def test_seesaw_flags_iteration_cap():
    report = seesaw_optimize(synthetic_set(5, d=3), seed=1, restarts=1, max_iter=1, tol=1e-300)
    assert "non_converged" in report.flags


@pytest.mark.parametrize("s,d", [(1, 2), (2, 2), (3, 3)])
def test_seesaw_agrees_with_oracle(s, d):
    instances = synthetic_set(s, d=d)
    seesaw = seesaw_optimize(instances, seed=s, restarts=8)
    oracle = oracle_optimize(instances, seed=s, budget=2000, starts=4)
    assert abs(seesaw.p_A - oracle.value) < 1e-5
    assert seesaw.p_A >= max(trivial_strategies(instances).values()) - ATOL


def test_seesaw_agrees_with_oracle_on_protocol_instances(mub2):
    instances = build_cheat_instances(mub2)
    seesaw = seesaw_optimize(instances, seed=1, restarts=2, max_iter=200)
    oracle = oracle_optimize(instances, seed=1, budget=400, starts=2)
    assert abs(seesaw.p_A - oracle.value) <= 1e-4
    assert seesaw.p_A >= 0.5 - ATOL


def test_slot_exchange_leaves_cheat_value_unchanged(mub2):
    ensemble = BasisEnsemble("mixed", mub2.mu, SlotBases((haar_matrix(2, 9),), (1.0,)))
    original = build_cheat_instances(ensemble)
    swapped = build_cheat_instances(ensemble.swapped())
    assert objective(np.eye(16), swapped) == pytest.approx(objective(np.eye(16), original), abs=1e-12)
    a = seesaw_optimize(original, seed=2, restarts=2, max_iter=200)
    b = seesaw_optimize(swapped, seed=2, restarts=2, max_iter=200)
    assert b.p_A == pytest.approx(a.p_A, abs=1e-8)
    assert classical_choice_cheat(ensemble.swapped()) == pytest.approx(classical_choice_cheat(ensemble))


def test_oracle_zero_budget_returns_identity_value(mub2):
    result = oracle_optimize(build_cheat_instances(mub2), seed=1, budget=0)
    assert result.value == pytest.approx(0.25)
    assert result.flags == ["budget_exhausted"]
    assert result.iterations == 0


def test_oracle_dimension_limit(mub2):
    settings = get_settings()
    set_settings(replace(settings, optimizer=replace(settings.optimizer, max_adam_dim=8)))
    with pytest.raises(ConfigError):
        oracle_optimize(build_cheat_instances(mub2), seed=1)


# =============================================================================
# Baselines, N rounds, classical choice
# =============================================================================

def test_trivial_strategies(mub2):
    baselines = trivial_strategies(build_cheat_instances(mub2))
    assert baselines["announce_other_bit"] == pytest.approx(0.25)
    assert set(baselines) == {"announce_other_bit", "blind_known_basis:0,0", "blind_known_basis:0,1",
                              "blind_known_basis:1,0", "blind_known_basis:1,1"}
    assert all(baselines[k] == pytest.approx(1.0) for k in baselines if k.startswith("blind"))


@pytest.mark.parametrize("p,n,expected", [(0.5, 3, 0.125), (1.0, 10, 1.0), (0.0, 1, 0.0), (0.9, 1, 0.9)])
def test_n_round_bound(p, n, expected):
    assert n_round_bound(p, n) == pytest.approx(expected)


@pytest.mark.parametrize("p,n", [(1.5, 2), (-0.1, 2), (0.5, 0)])
def test_n_round_bound_rejects_bad_input(p, n):
    with pytest.raises(ConfigError):
        n_round_bound(p, n)


def test_joint_instances_structure():
    instances = synthetic_set(2, d=2, n=2)
    joint = joint_instances(instances, 2)
    assert joint.adam_dim == 4
    assert len(joint.instances) == 4
    assert joint.weights.sum() == pytest.approx(1.0)
    assert joint.instances[1].draw == (0, 1)


def test_joint_check_follows_product_law():
    instances = synthetic_set(4, d=2, n=2)
    single = seesaw_optimize(instances, seed=4, restarts=1).p_A
    joint = n_round_joint_check(instances, seed=4, n=2, restarts=6)
    # restart 0 of the joint run is the product of the single-instance restart 0
    assert joint >= single ** 2 - 1e-6


@pytest.mark.parametrize("name", ["computational", "mub2", "mub3"])
def test_classical_choice_cheat(name):
    assert classical_choice_cheat(preset(name)) == pytest.approx(0.25)


# =============================================================================
# Relaxed opening
# =============================================================================

def test_relaxed_tradeoff_curve(computational):
    curve = relaxed_opening_tradeoff(computational, [0.5, 0.0, 1.0], seed=2, lambdas=(0.0, 1.0),
                                     random_starts=0, max_iter=5)
    assert [p.delta for p in curve] == [0.0, 0.5, 1.0]
    b1 = [p.b1_success for p in curve]
    assert b1 == sorted(b1)
    assert all(0.0 <= v <= 1.0 for v in b1)
    assert b1[0] >= 0.25 - ATOL
    assert b1[-1] == pytest.approx(1.0, abs=ATOL)


def test_relaxed_tradeoff_endpoints_on_randomized_ensemble(mub2):
    p_A = seesaw_optimize(build_cheat_instances(mub2), seed=1, restarts=2, max_iter=200).p_A
    curve = relaxed_opening_tradeoff(mub2, [0.0, 0.1, 0.5, 1.0], seed=3, lambdas=(1.0, 4.0),
                                     random_starts=1, max_iter=50)
    b1 = [p.b1_success for p in curve]
    assert b1 == sorted(b1)
    assert abs(b1[0] - p_A) <= 2e-3
    assert curve[0].b0_success >= 1.0 - 1e-6
    assert b1[-1] == pytest.approx(1.0, abs=1e-6)


def test_relaxed_tradeoff_validation(computational):
    with pytest.raises(ConfigError):
        relaxed_opening_tradeoff(computational, [-0.1], seed=1)
    with pytest.raises(ConfigError):
        relaxed_opening_tradeoff(computational, [0.1], seed=1, ancilla_factor=3)


# =============================================================================
# Full analysis
# =============================================================================

def test_analyze_binding_known_basis(computational):
    report = analyze_binding(computational, seed=1, restarts=2, max_iter=100, oracle_budget=0)
    assert report.p_A == pytest.approx(1.0, abs=1e-8)
    assert report.claims["known_basis_perfect_cheat"]
    assert report.claims["p_A_at_least_half"]
    assert report.classical_choice == pytest.approx(0.25)
    assert report.oracle_value == pytest.approx(0.25)
    assert "budget_exhausted" in report.flags
    assert "oracle_disagreement" not in report.flags


def test_analyze_binding_randomized(mub2):
    report = analyze_binding(mub2, seed=1, restarts=2, max_iter=100, oracle_budget=0, n_rounds=5)
    # the transition operator does not depend on Babe's draw, so randomizing bases does not help her
    assert report.p_A == pytest.approx(1.0, abs=1e-8)
    assert report.claims["randomization_prevents_perfect_cheat"] is False
    assert report.n_round_bound == pytest.approx(1.0, abs=1e-7)
    assert report.baseline == pytest.approx(1.0)
    assert "dominance_violated" not in report.flags
    assert report.unitary is not None


@pytest.mark.slow
def test_analyze_binding_joint_check(mub2):
    report = analyze_binding(mub2, seed=1, restarts=2, max_iter=50, oracle_budget=0,
                             n_rounds=2, joint_check=True)
    assert report.joint_value == pytest.approx(1.0, abs=1e-8)
    assert report.claims["n_round_product_law"]
