import pytest

from tdmcheck import (
    CheckResult,
    PreconditionViolated,
    check_all,
    check_delivery,
    gen_bus,
    gen_clique,
    make_config,
    run_random,
)
from tdmcheck.model import ActionKind
from tdmcheck.simulator import RunOutcome, default_max_steps
from tdmcheck.semantics import SemanticsMode, apply_action, enabled_actions
from tdmcheck.model import initial_state

from conftest import fixture_config, seq_idata


def test_same_seed_same_trace():
    cfg = make_config(gen_clique(3, 2), seq_idata(3))
    a = run_random(cfg, seed=42)
    b = run_random(cfg, seed=42)
    assert a.trace == b.trace
    assert a.final_state == b.final_state
    c = run_random(cfg, seed=43)
    assert c.trace != a.trace  # overwhelmingly likely for this space


def test_valid_clique_terminates_for_many_seeds():
    cfg = make_config(gen_clique(3, 2), seq_idata(3))
    for seed in range(50):
        result = run_random(cfg, seed=seed)
        assert result.outcome is RunOutcome.TERMINATED
        assert check_delivery(result, cfg) == []


def test_asymmetric_fixture_deadlocks_for_every_seed():
    cfg = fixture_config("asym_2x1.sched", allow_invalid=True)
    for seed in range(25):
        result = run_random(cfg, seed=seed, allow_invalid=True)
        assert result.outcome is RunOutcome.DEADLOCKED


def test_delivery_requires_termination():
    cfg = fixture_config("asym_2x1.sched", allow_invalid=True)
    result = run_random(cfg, seed=1, allow_invalid=True)
    with pytest.raises(PreconditionViolated):
        check_delivery(result, cfg)


def test_delivery_values_follow_peer_order():
    cfg = make_config(gen_clique(3, 1), [10, 20, 30])
    result = run_random(cfg, seed=7)
    assert check_delivery(result, cfg) == []
    rows = [n.odata_row for n in result.final_state.nodes]
    assert rows == [(20, 30), (10, 30), (10, 20)]


def test_delivery_on_two_node_bus():
    cfg = make_config(gen_bus(2, 1), [5, 7])
    result = run_random(cfg, seed=3)
    assert check_delivery(result, cfg) == []
    assert result.final_state.nodes[0].odata_row == (7,)
    assert result.final_state.nodes[1].odata_row == (5,)


def test_delivery_single_node_vacuous():
    cfg = make_config(gen_clique(1, 2), [5])
    result = run_random(cfg, seed=0)
    assert result.outcome is RunOutcome.TERMINATED
    assert check_delivery(result, cfg) == []


def test_delivery_oracle_catches_tampering():
    cfg = make_config(gen_clique(2, 1), [5, 7])
    result = run_random(cfg, seed=0)
    # drop the final set_terminated and pretend the run ended early: the
    # replayed final state no longer matches
    result.trace.pop()
    with pytest.raises(PreconditionViolated):
        check_delivery(result, cfg)


def test_simulator_is_a_strict_semantics_client():
    """Each recorded step must be one of the enabled actions at that point."""
    cfg = make_config(gen_clique(3, 2), seq_idata(3))
    result = run_random(cfg, seed=11)
    state = initial_state(cfg)
    for action in result.trace:
        assert action in enabled_actions(state, cfg, result.mode)
        state = apply_action(state, action, cfg, result.mode)
    assert state == result.final_state


def test_faithful_mode_runs_terminate_too():
    cfg = make_config(gen_clique(2, 2), [5, 7])
    result = run_random(cfg, mode=SemanticsMode.FAITHFUL, seed=5)
    assert result.outcome is RunOutcome.TERMINATED
    kinds = {a.kind for a in result.trace}
    assert ActionKind.LOCAL_STEP in kinds or ActionKind.LOCAL_SCAN in kinds


def test_step_limit_reported():
    cfg = make_config(gen_clique(3, 2), seq_idata(3))
    result = run_random(cfg, seed=0, max_steps=3)
    assert result.outcome is RunOutcome.STEP_LIMIT
    assert result.steps == 3


def test_default_step_budget_generous():
    cfg = make_config(gen_clique(4, 2), seq_idata(4))
    bound = default_max_steps(cfg)
    result = run_random(cfg, seed=9)
    assert result.outcome is RunOutcome.TERMINATED
    assert result.steps < bound / 2


def test_thousand_seeded_runs_on_a_checked_fixture():
    """Statistical smoke: green checker verdicts imply every run terminates."""
    cfg = make_config(gen_clique(3, 2), [10, 20, 30])
    verdicts, _ = check_all(cfg)
    assert all(v.result is CheckResult.PASS for v in verdicts.values())
    for seed in range(1000):
        result = run_random(cfg, seed=seed)
        assert result.outcome is RunOutcome.TERMINATED
        assert check_delivery(result, cfg) == []
