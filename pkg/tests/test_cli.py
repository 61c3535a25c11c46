import re

import pytest

from tdmcheck import cli
from tdmcheck.model import PropertyKind
from tdmcheck.semantics import replay_trace
from tdmcheck import parse_schedule, traces

from conftest import FIXTURES


def run_cli(*argv):
    return cli.main(list(argv))


def gen_file(tmp_path, *extra):
    out = tmp_path / "sched.txt"
    code = run_cli("gen", "--out", str(out), *extra)
    return code, out


def test_gen_clique_seq_idata(tmp_path):
    code, out = gen_file(
        tmp_path, "--topology", "clique", "--nodes", "3", "--slots", "2",
        "--idata", "seq",
    )
    assert code == 0
    text = out.read_text()
    assert "idata 1 2 3" in text
    cfg = parse_schedule(text)
    assert cfg.no_nodes == 3 and cfg.no_time_slots == 2


def test_gen_explicit_idata_bus(tmp_path):
    code, out = gen_file(
        tmp_path, "--topology", "bus", "--nodes", "4", "--slots", "1",
        "--idata", "5,6,7,8",
    )
    assert code == 0
    cfg = parse_schedule(out.read_text())
    assert cfg.idata == (5, 6, 7, 8)


def test_gen_ring_two_nodes_exit_2(tmp_path, capsys):
    code, _ = gen_file(
        tmp_path, "--topology", "ring", "--nodes", "2", "--slots", "1"
    )
    assert code == 2
    assert "ring" in capsys.readouterr().err


def test_gen_bad_idata_exit_2(tmp_path):
    code, _ = gen_file(
        tmp_path, "--topology", "clique", "--nodes", "2", "--slots", "1",
        "--idata", "5,x",
    )
    assert code == 2


def test_verify_clique_3x2(tmp_path, capsys):
    _, sched = gen_file(
        tmp_path, "--topology", "clique", "--nodes", "3", "--slots", "2",
        "--idata", "seq",
    )
    code = run_cli("verify", str(sched))
    out = capsys.readouterr().out
    assert code == 0
    m = re.search(
        r"^RESULT deadlockfree=pass reaches=pass always_eventually=pass "
        r"states=(\d+) transitions=(\d+) mode=reduced$",
        out,
        re.M,
    )
    assert m, out
    assert (int(m.group(1)), int(m.group(2))) == (3159, 7911)


def test_verify_counts_stable_across_runs(tmp_path, capsys):
    _, sched = gen_file(
        tmp_path, "--topology", "bus", "--nodes", "3", "--slots", "2",
        "--idata", "seq",
    )
    run_cli("verify", str(sched))
    first = capsys.readouterr().out
    run_cli("verify", str(sched))
    second = capsys.readouterr().out
    assert first == second


def test_verify_faithful_mode_flag(tmp_path, capsys):
    _, sched = gen_file(
        tmp_path, "--topology", "clique", "--nodes", "2", "--slots", "1",
        "--idata", "seq",
    )
    code = run_cli("verify", str(sched), "--mode", "faithful")
    assert code == 0
    assert "mode=faithful" in capsys.readouterr().out


def test_verify_garbage_file_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("nodes 2\nslots 1\nidata 5 7\nslot 0\nedge 0 9\n")
    code = run_cli("verify", str(bad))
    assert code == 2
    assert "line 5" in capsys.readouterr().err


def test_verify_missing_file_exit_2(tmp_path):
    assert run_cli("verify", str(tmp_path / "nope.txt")) == 2


def test_verify_invalid_needs_flag(capsys):
    fixture = str(FIXTURES / "asym_2x1.sched")
    assert run_cli("verify", fixture) == 2
    assert "--allow-invalid" in capsys.readouterr().err


def test_verify_asymmetric_fails_and_writes_replayable_trace(tmp_path, capsys):
    fixture = str(FIXTURES / "asym_2x1.sched")
    trace_path = tmp_path / "cex.trace"
    code = run_cli("verify", fixture, "--allow-invalid", "--trace-out", str(trace_path))
    assert code == 1
    assert "deadlockfree=fail" in capsys.readouterr().out
    actions, meta = traces.parse_trace(trace_path.read_text())
    assert meta["property"] == PropertyKind.DEADLOCK_FREE.value
    cfg = parse_schedule((FIXTURES / "asym_2x1.sched").read_text(), allow_invalid=True)
    final = replay_trace(cfg, actions, traces.trace_mode(meta))
    assert not final.terminated


def test_verify_dead_peer_warns_and_fails(capsys):
    fixture = str(FIXTURES / "deadpeer_2x1.sched")
    code = run_cli("verify", fixture)
    captured = capsys.readouterr()
    assert code == 1
    assert "dead-peer" in captured.err
    assert "deadlockfree=fail reaches=fail" in captured.out


def test_verify_inconclusive_exit_3(tmp_path, capsys):
    _, sched = gen_file(
        tmp_path, "--topology", "clique", "--nodes", "3", "--slots", "2",
        "--idata", "seq",
    )
    code = run_cli("verify", str(sched), "--max-states", "100")
    assert code == 3
    assert "inconclusive" in capsys.readouterr().out


def test_simulate_hundred_runs(tmp_path, capsys):
    _, sched = gen_file(
        tmp_path, "--topology", "clique", "--nodes", "3", "--slots", "2",
        "--idata", "seq",
    )
    code = run_cli("simulate", str(sched), "--runs", "100", "--seed", "7")
    out = capsys.readouterr().out
    assert code == 0
    assert "SIM runs=100 terminated=100 delivery_ok=100" in out
    assert out.count("RUN seed=") == 100


def test_simulate_deadlocking_fixture_exit_1(capsys):
    fixture = str(FIXTURES / "deadpeer_2x1.sched")
    code = run_cli("simulate", fixture, "--runs", "5")
    out = capsys.readouterr().out
    assert code == 1
    assert "SIM runs=5 terminated=0 delivery_ok=0" in out
    assert out.count("outcome=deadlocked") == 5


def test_simulate_zero_runs_usage_error(tmp_path):
    _, sched = gen_file(
        tmp_path, "--topology", "clique", "--nodes", "2", "--slots", "1",
        "--idata", "seq",
    )
    with pytest.raises(SystemExit) as err:
        run_cli("simulate", str(sched), "--runs", "0")
    assert err.value.code == 2


def test_simulate_trace_out_byte_identical(tmp_path, capsys):
    _, sched = gen_file(
        tmp_path, "--topology", "clique", "--nodes", "3", "--slots", "2",
        "--idata", "seq",
    )
    t1, t2 = tmp_path / "a.trace", tmp_path / "b.trace"
    assert run_cli("simulate", str(sched), "--seed", "5", "--trace-out", str(t1)) == 0
    assert run_cli("simulate", str(sched), "--seed", "5", "--trace-out", str(t2)) == 0
    capsys.readouterr()
    assert t1.read_bytes() == t2.read_bytes()
    different = tmp_path / "c.trace"
    run_cli("simulate", str(sched), "--seed", "6", "--trace-out", str(different))
    assert different.read_bytes() != t1.read_bytes()


def test_simulate_trace_out_needs_single_run(tmp_path):
    _, sched = gen_file(
        tmp_path, "--topology", "clique", "--nodes", "2", "--slots", "1",
        "--idata", "seq",
    )
    with pytest.raises(SystemExit) as err:
        run_cli(
            "simulate", str(sched), "--runs", "2", "--trace-out",
            str(tmp_path / "x.trace"),
        )
    assert err.value.code == 2


def test_simulate_replay_round_trip(tmp_path, capsys):
    _, sched = gen_file(
        tmp_path, "--topology", "clique", "--nodes", "3", "--slots", "2",
        "--idata", "seq",
    )
    trace_path = tmp_path / "run.trace"
    assert run_cli("simulate", str(sched), "--seed", "3", "--trace-out", str(trace_path)) == 0
    capsys.readouterr()
    code = run_cli("simulate", str(sched), "--replay", str(trace_path))
    out = capsys.readouterr().out
    assert code == 0
    assert "outcome=terminated delivery=ok" in out


def test_simulate_replay_of_counterexample_reports_incomplete(tmp_path, capsys):
    fixture = str(FIXTURES / "asym_2x1.sched")
    trace_path = tmp_path / "cex.trace"
    run_cli("verify", fixture, "--allow-invalid", "--trace-out", str(trace_path))
    capsys.readouterr()
    code = run_cli("simulate", fixture, "--allow-invalid", "--replay", str(trace_path))
    out = capsys.readouterr().out
    assert code == 1
    assert "outcome=incomplete" in out


def test_trace_file_format_fields(tmp_path):
    _, sched = gen_file(
        tmp_path, "--topology", "clique", "--nodes", "2", "--slots", "1",
        "--idata", "seq",
    )
    trace_path = tmp_path / "run.trace"
    run_cli("simulate", str(sched), "--seed", "1", "--trace-out", str(trace_path))
    lines = [
        ln for ln in trace_path.read_text().splitlines() if not ln.startswith("#")
    ]
    send_lines = [ln for ln in lines if " send " in ln]
    assert send_lines and all(re.match(r"^\d+ send \d \d msg=\d+,\d+,\d+$", ln) for ln in send_lines)
    assert lines[-1].split()[1:3] == ["set_terminated", "-1"]
