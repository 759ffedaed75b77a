import json

import pandas as pd
import pytest

from qbc4sim.core.reports import CheatReport
from qbc4sim.main import (
    EXIT_CLAIMS_VIOLATED,
    EXIT_DATA,
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    main,
    parse_args,
)


def read_report(path):
    payload = json.loads(path.read_text())
    payload.pop("generated_at")
    payload.pop("config")
    return payload


def test_parse_args_defaults():
    args = parse_args(["bind", "--seed", "3"])
    assert args.command == "bind"
    assert args.ensemble == "mub2"
    assert args.n_rounds == 1
    assert args.delta_grid is None


def test_parse_delta_grid():
    args = parse_args(["bind", "--seed", "3", "--delta-grid", "0,0.1,0.25"])
    assert args.delta_grid == [0.0, 0.1, 0.25]


@pytest.mark.parametrize("argv", [
    ["run"],
    ["run", "--seed", "1", "--bit", "2"],
    ["bind", "--seed", "1", "--delta-grid", "a,b"],
    ["bind", "--seed", "1", "--ancilla-factor", "3"],
    ["teleport", "--seed", "1"],
])
def test_usage_errors_exit_64(argv):
    with pytest.raises(SystemExit) as err:
        main(argv)
    assert err.value.code == EXIT_USAGE


@pytest.mark.parametrize("argv", [
    ["babe-attack", "--seed", "1", "--fraction", "1.0"],
    ["babe-attack", "--seed", "1", "--n", "10", "--attacked", "11"],
    ["run", "--seed", "-1"],
    ["bind", "--seed", "1", "--delta-grid", "0.5,-0.1"],
])
def test_invalid_configuration_exits_64(argv):
    assert main(argv) == EXIT_USAGE


def test_run_writes_transcript(tmp_path, capsys):
    out = tmp_path / "run.json"
    code = main(["run", "--n", "2", "--bit", "1", "--ensemble", "mub2", "--seed", "7", "--output", str(out)])
    assert code == EXIT_OK
    assert "ACCEPTED" in capsys.readouterr().out
    payload = json.loads(out.read_text())
    assert payload["schema_version"] == "1.0"
    assert payload["accepted"] is True
    assert len(payload["outcomes"]) == 2
    assert payload["config"]["seed"] == 7


def test_run_is_reproducible(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert main(["run", "--n", "3", "--ensemble", "mub3", "--seed", "99", "--output", str(path)]) == EXIT_OK
    assert read_report(a) == read_report(b)


def test_run_csv(tmp_path):
    out = tmp_path / "run.csv"
    assert main(["run", "--n", "3", "--seed", "1", "--output", str(out), "--format", "csv"]) == EXIT_OK
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["instance", "n_mu", "n_nu", "acceptance_probability", "accepted"]
    assert len(frame) == 3


def test_run_classical_mode():
    assert main(["run", "--n", "2", "--seed", "4", "--mode", "classical"]) == EXIT_OK


def test_conceal(tmp_path):
    out = tmp_path / "conceal.json"
    assert main(["conceal", "--seed", "1", "--samples", "3", "--purify", "--output", str(out)]) == EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["claims_hold"] is True
    assert payload["purified"] is True


def test_conceal_classical_mode(tmp_path):
    out = tmp_path / "conceal.json"
    assert main(["conceal", "--seed", "2", "--samples", "2", "--mode", "classical", "--output", str(out)]) == EXIT_OK
    assert json.loads(out.read_text())["mode"] == "classical"


def test_conceal_corrupted_exits_1():
    assert main(["conceal", "--seed", "1", "--samples", "2", "--corrupt-transform"]) == EXIT_CLAIMS_VIOLATED


def test_bind_with_exhausted_oracle_exits_2(tmp_path):
    out = tmp_path / "bind.json"
    code = main(["bind", "--ensemble", "computational", "--seed", "1", "--restarts", "2",
                 "--max-iter", "50", "--oracle-budget", "0", "--n-rounds", "3", "--output", str(out)])
    assert code == EXIT_NUMERICAL
    payload = json.loads(out.read_text())
    assert payload["p_A"] == pytest.approx(1.0, abs=1e-8)
    assert payload["n_round_bound"] == pytest.approx(1.0, abs=1e-7)
    assert "budget_exhausted" in payload["flags"]


def test_bind_violated_claims_exit_1(monkeypatch):
    def fake_analysis(ensemble, seed, **kwargs):
        return CheatReport(adam_dim=16, p_A=1.0, per_basis=[], restarts=1, iterations=[1], best_restart=0,
                           baseline=1.0, n_round_bound=1.0, classical_choice=0.25,
                           claims={"randomization_prevents_perfect_cheat": False})

    monkeypatch.setattr("qbc4sim.core.binding.analyze_binding", fake_analysis)
    assert main(["bind", "--seed", "1"]) == EXIT_CLAIMS_VIOLATED


def test_bind_flags_take_precedence(monkeypatch):
    def fake_analysis(ensemble, seed, **kwargs):
        return CheatReport(adam_dim=16, p_A=1.0, per_basis=[], restarts=1, iterations=[1], best_restart=0,
                           baseline=1.0, n_round_bound=1.0, classical_choice=0.25,
                           claims={"p_A_at_least_half": False}, flags=["non_converged"])

    monkeypatch.setattr("qbc4sim.core.binding.analyze_binding", fake_analysis)
    assert main(["bind", "--seed", "1"]) == EXIT_NUMERICAL


def test_babe_attack_default(tmp_path, capsys):
    out = tmp_path / "attack.json"
    assert main(["babe-attack", "--n", "10", "--fraction", "0.5", "--seed", "5", "--output", str(out)]) == EXIT_OK
    assert "ABORT" in capsys.readouterr().out
    payload = json.loads(out.read_text())
    assert payload["attack"] == "orthogonal-product"
    assert payload["abort_probability"] == pytest.approx(1.0)
    assert payload["cut_and_choose"]["aborted"] is True
    assert payload["distinguishability"] == pytest.approx(0.5, abs=1e-10)


def test_babe_attack_honest():
    assert main(["babe-attack", "--seed", "5", "--honest"]) == EXIT_OK


def test_babe_attack_monte_carlo(tmp_path):
    out = tmp_path / "mc.json"
    argv = ["babe-attack", "--seed", "2", "--attacked", "10", "--trials", "200", "--output", str(out)]
    assert main(argv) == EXIT_OK
    payload = json.loads(out.read_text())
    assert payload["abort_probability"] == pytest.approx(1.0)
    assert payload["monte_carlo_abort_rate"] == pytest.approx(1.0)
    assert payload["monte_carlo_trials"] == 200
    assert payload["claims"]["monte_carlo_matches_formula"] is True


def test_babe_attack_csv(tmp_path):
    out = tmp_path / "attack.csv"
    assert main(["babe-attack", "--seed", "1", "--output", str(out), "--format", "csv"]) == EXIT_OK
    frame = pd.read_csv(out)
    assert frame.loc[0, "attack"] == "orthogonal-product"


def test_bad_attack_file_exits_65(tmp_path):
    path = tmp_path / "attack.json"
    path.write_text("{\"slots\": 3}")
    assert main(["babe-attack", "--seed", "1", "--attack-file", str(path)]) == EXIT_DATA


def test_bad_ensemble_exits_65(tmp_path):
    assert main(["run", "--seed", "1", "--ensemble", str(tmp_path / "missing.json")]) == EXIT_DATA
    assert main(["run", "--seed", "1", "--ensemble", "mub9"]) == EXIT_DATA
