import numpy as np
import pytest

from qbc4sim.core.binding import build_cheat_instances, known_basis_cheat
from qbc4sim.core.ensembles import COMPUTATIONAL, HADAMARD, preset
from qbc4sim.core.errors import HolderViolation, PhaseError, QBCError
from qbc4sim.core.protocol import (
    Announcement,
    CommitMode,
    Holder,
    Phase,
    adam_commit,
    adam_ids,
    adam_open,
    babe_ids,
    babe_prepare,
    babe_verify,
    committed_state,
    prepared_state,
    run_protocol,
    split_pair,
)
from qbc4sim.core.quantum import (
    A,
    B_alpha,
    B_beta,
    DensityOperator,
    HilbertRegistry,
    Slot,
    exchange,
    haar_matrix,
    overlap,
    partial_trace,
    schmidt,
)


def test_split_pair_is_maximally_entangled():
    pair = split_pair(HADAMARD, Slot.MU)
    decomposition = schmidt(pair, [B_alpha(Slot.MU)])
    assert np.allclose(decomposition.coefficients, [2 ** -0.5] * 2)


def test_prepared_state_registry_order():
    state = prepared_state(COMPUTATIONAL, HADAMARD)
    assert state.registry.ids == tuple(babe_ids())


def test_committed_registry_and_norm():
    state = committed_state(COMPUTATIONAL, HADAMARD, 1)
    assert state.registry.ids == tuple(adam_ids() + babe_ids())
    assert state.registry.total_dim == 256
    assert np.linalg.norm(state.amplitudes) == pytest.approx(1.0)


def test_committed_states_differ_between_bits():
    s0 = committed_state(COMPUTATIONAL, COMPUTATIONAL, 0)
    s1 = committed_state(COMPUTATIONAL, COMPUTATIONAL, 1)
    assert abs(overlap(s0, s1)) ** 2 == pytest.approx(0.25)


@pytest.mark.parametrize("s", [1, 2, 3])
def test_switched_commit_exchanges_alpha_wires(s):
    rng = np.random.default_rng(s)
    f_mu, f_nu = haar_matrix(2, rng), haar_matrix(2, rng)
    s0 = committed_state(f_mu, f_nu, 0)
    s1 = committed_state(f_mu, f_nu, 1)
    moved = exchange(s0, B_alpha(Slot.MU), B_alpha(Slot.NU))
    assert moved.registry.ids == s1.registry.ids
    assert np.allclose(moved.amplitudes, s1.amplitudes, atol=1e-12)


def test_committed_slot_amplitudes():
    state = committed_state(COMPUTATIONAL, COMPUTATIONAL, 0)
    decomposition = schmidt(state, [A(Slot.MU), B_alpha(Slot.MU), B_beta(Slot.MU)])
    assert decomposition.rank == 1
    # 8^-1/2 sum_{i,k} |e_i> V_i|k> |k>: eight equal terms in 16 entries
    magnitudes = np.sort(np.abs(decomposition.left[0].amplitudes))
    assert np.allclose(magnitudes, [0.0] * 8 + [8 ** -0.5] * 8, atol=1e-12)


@pytest.mark.parametrize("ensemble_name", ["computational", "hadamard", "mub2", "mub3"])
@pytest.mark.parametrize("bit", [0, 1])
def test_honest_run_accepts(ensemble_name, bit):
    transcript = run_protocol(3, preset(ensemble_name), bit, seed=11)
    assert transcript.accepted
    assert not transcript.aborted
    assert all(o.acceptance_probability == pytest.approx(1.0, abs=1e-10) for o in transcript.outcomes)


@pytest.mark.parametrize("ensemble_name", ["computational", "mub2", "haar-3"])
@pytest.mark.parametrize("n", [1, 3])
@pytest.mark.parametrize("bit", [0, 1])
def test_honest_runs_accept_across_seeds(ensemble_name, n, bit):
    ensemble = preset(ensemble_name, seed=5)
    for s in range(20):
        transcript = run_protocol(n, ensemble, bit, seed=s)
        assert transcript.accepted
        assert all(o.acceptance_probability == pytest.approx(1.0, abs=1e-12) for o in transcript.outcomes)


def test_transcript_seeds_come_from_the_session():
    session, _ = babe_prepare(preset("mub2"), 77, 2)
    transcript = run_protocol(2, preset("mub2"), 0, seed=77)
    assert transcript.seeds == session.seeds
    assert set(transcript.seeds) == {"root", "babe", "adam"}


def test_honest_run_classical_mode():
    transcript = run_protocol(2, preset("mub2"), 1, seed=4, mode=CommitMode.CLASSICAL)
    assert transcript.accepted
    announcement = [e for e in transcript.events if e.kind == "classical" and e.instance is None][0]
    assert set(announcement.data["choices"]) == {"1", "2"}


def test_run_is_deterministic():
    a = run_protocol(4, preset("mub3"), 1, seed=2024)
    b = run_protocol(4, preset("mub3"), 1, seed=2024)
    assert a.canonical_json() == b.canonical_json()
    assert a.seeds["root"] == 2024


def test_transcript_events():
    n = 2
    transcript = run_protocol(n, preset("mub2"), 0, seed=3)
    kinds = [e.kind for e in transcript.events]
    # prepare, commit and open are quantum per instance; announce plus one verdict per instance
    assert kinds.count("quantum") == 3 * n
    assert kinds.count("classical") == n + 1
    assert [e.step for e in transcript.events] == list(range(len(transcript.events)))
    first = transcript.events[0]
    assert (first.sender, first.receiver) == ("Babe", "Adam")
    assert first.subsystems == ["Ba:mu:1", "Ba:nu:1"]


def test_run_rejects_empty():
    with pytest.raises(QBCError):
        run_protocol(0, preset("mub2"), 0, seed=1)


def test_phase_order_is_enforced():
    session, draws = babe_prepare(preset("mub2"), 1, 1)
    assert session.phase is Phase.PREPARED
    assert set(draws) == {1}
    with pytest.raises(PhaseError):
        adam_open(session)
    adam_commit(session, 0)
    with pytest.raises(PhaseError):
        adam_commit(session, 0)
    with pytest.raises(PhaseError):
        babe_verify(session, Announcement.for_bit(0))


def test_commit_bit_must_be_binary():
    session, _ = babe_prepare(preset("mub2"), 1, 1)
    with pytest.raises(QBCError):
        adam_commit(session, 2)


def test_holders_are_enforced():
    session, _ = babe_prepare(preset("mub2"), 1, 1)
    alphas = babe_ids()[:2]
    assert all(session.holders[sid] is Holder.ADAM for sid in alphas)
    with pytest.raises(HolderViolation) as err:
        session.touch(Holder.BABE, "peek", alphas)
    assert err.value.party == "Babe"
    adam_commit(session, 0)
    with pytest.raises(HolderViolation):
        session.touch(Holder.BABE, "peek", adam_ids())
    with pytest.raises(HolderViolation):
        session.touch(Holder.ADAM, "peek", babe_ids())


def test_access_log_records_parties():
    session, _ = babe_prepare(preset("computational"), 1, 1)
    adam_commit(session, 1)
    operations = [(party, op) for party, op, _ in session.access_log]
    assert operations == [("Babe", "prepare"), ("Adam", "commit")]


def test_global_state_dimension():
    session, _ = babe_prepare(preset("computational"), 5, 2)
    adam_commit(session, 0)
    assert session.global_state().registry.total_dim == 256 ** 2


@pytest.mark.parametrize("ensemble_name", ["computational", "mub2"])
def test_announcing_other_bit_accepts_with_one_quarter(ensemble_name):
    session, _ = babe_prepare(preset(ensemble_name), 8, 2)
    adam_commit(session, 0)
    announcement = adam_open(session, announce_bit=1)
    result = babe_verify(session, announcement)
    assert session.phase is Phase.VERIFIED
    assert all(p == pytest.approx(0.25) for p in result.probabilities.values())


def test_local_rotation_cheat_reaches_one():
    cheat = known_basis_cheat(build_cheat_instances(preset("computational")).instances[0], adam_ids())
    session, _ = babe_prepare(preset("mub3"), 13, 3)
    adam_commit(session, 0)
    announcement = adam_open(session, announce_bit=1, adam_unitary=cheat.unitary)
    result = babe_verify(session, announcement)
    assert all(p == pytest.approx(1.0, abs=1e-9) for p in result.probabilities.values())
    assert result.accepted


def test_garbage_ancilla_is_rejected_almost_surely():
    session, _ = babe_prepare(preset("computational"), 2, 1)
    adam_commit(session, 0)
    garbage = DensityOperator.maximally_mixed(HilbertRegistry.of(*adam_ids()))
    announcement = adam_open(session, substitute_ancilla=garbage)
    result = babe_verify(session, announcement)
    assert result.probabilities[1] == pytest.approx(1 / 256)


def test_substitution_keeps_babe_view():
    session, _ = babe_prepare(preset("mub2"), 2, 1)
    adam_commit(session, 0)
    before = partial_trace(session.states[1], babe_ids())
    garbage = DensityOperator.maximally_mixed(HilbertRegistry.of(*adam_ids()))
    adam_open(session, substitute_ancilla=garbage)
    after = partial_trace(session.states[1], babe_ids())
    assert np.allclose(before.matrix, after.matrix, atol=1e-12)


@pytest.mark.parametrize("announcement", [
    Announcement(2, (Slot.MU, Slot.NU)),
    Announcement(0, (Slot.NU, Slot.MU)),
    Announcement(1, (Slot.MU, Slot.MU)),
])
def test_malformed_announcement_aborts(announcement):
    session, _ = babe_prepare(preset("mub2"), 6, 1)
    adam_commit(session, 0)
    adam_open(session)
    result = babe_verify(session, announcement)
    assert result.aborted and not result.accepted
    assert session.phase is Phase.ABORTED
    assert session.events[-1].data["verdict"] == "abort"


def test_classical_mode_wrong_choices():
    session, _ = babe_prepare(preset("computational"), 3, 1, CommitMode.CLASSICAL)
    adam_commit(session, 0, choices={1: (0, 0)})
    announcement = adam_open(session, announce_choices={1: (1, 1)})
    result = babe_verify(session, announcement)
    assert result.probabilities[1] == pytest.approx(0.0, abs=1e-12)
    assert not result.accepted


def test_classical_mode_missing_choices_aborts():
    session, _ = babe_prepare(preset("computational"), 3, 1, CommitMode.CLASSICAL)
    adam_commit(session, 0)
    announcement = adam_open(session, announce_choices={})
    assert babe_verify(session, announcement).aborted
