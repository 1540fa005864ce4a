import math

import pytest

from qrak.harness import (
    HIDDEN,
    Harness,
    SimulationExit,
    SpawnFailure,
    Status,
    interpret_outcome,
    register_blackbox,
    run_simulation,
    serialize_point,
)
from qrak.problem import parse_problem, parse_problem_file


def load(fixtures, name):
    return parse_problem_file(fixtures / f"{name}.qrak")


def run(inst, x, sim=None, **kw):
    spec = inst.simulations[0] if sim is None else inst.simulation(sim)
    return run_simulation(spec, inst.point(inst.vector({inst.names[0]: x})), **kw)


def test_completed(fixtures):
    inst = load(fixtures, "log")
    out = run(inst, math.e)
    assert out.status is Status.COMPLETED
    assert out.output(0) == pytest.approx(1.0)
    assert out.code == 0


def test_log_crash_is_hidden(fixtures):
    inst = load(fixtures, "log")
    out = run(inst, -1.0)
    assert out.status is Status.CRASHED
    (r,) = interpret_outcome(out, inst)
    assert r.name == HIDDEN and r.hidden and r.feasible is False and r.info is None


def test_signal_crash(fixtures):
    inst = load(fixtures, "abort")
    out = run(inst, 0.0)
    assert out.status is Status.CRASHED and out.code < 0
    assert interpret_outcome(out, inst)[0].hidden


def test_timeout(fixtures):
    inst = load(fixtures, "sleep")
    out = run(inst, 3.0)
    assert out.status is Status.TIMED_OUT
    assert out.elapsed >= 1.0
    assert interpret_outcome(out, inst)[0].hidden


def test_timeout_with_timer_constraint(fixtures):
    inst = load(fixtures, "timer")
    (r,) = interpret_outcome(run(inst, 3.0), inst)
    assert r.name == "timer" and r.feasible is False and r.info.violation is None
    (ok,) = interpret_outcome(run(inst, 0.0), inst)
    assert ok.feasible and ok.info.margin > 0.5


def test_partial_outputs(fixtures):
    inst = load(fixtures, "concentration")
    out = run(inst, -2.0)
    assert out.status is Status.PARTIAL_OUTPUTS
    assert out.output(1) == 2.0 and out.output(0) is None and out.output(2) is None
    res = {r.name: r for r in interpret_outcome(out, inst)}
    assert res["cS"].feasible is False and res["cS"].info.violation == 2.0
    assert res["c2"].unknown


def test_documented_error_code(fixtures):
    inst = load(fixtures, "errcode")
    out = run(inst, 5.0)
    assert out.status is Status.ERROR_CODE and out.code == 3
    (r,) = interpret_outcome(out, inst)
    assert r.name == "diverged" and r.feasible is False and not r.hidden


def test_undocumented_error_code_is_hidden(fixtures):
    inst = load(fixtures, "errcode")
    out = run(inst, -5.0)
    assert out.status is Status.CRASHED and out.code == 9
    assert interpret_outcome(out, inst)[0].hidden


def test_error_code_not_raised(fixtures):
    inst = load(fixtures, "errcode")
    (r,) = interpret_outcome(run(inst, 1.0), inst)
    assert r.feasible is True


def test_toxicity_flag(fixtures):
    inst = load(fixtures, "toxicity")
    (r,) = interpret_outcome(run(inst, 4.0), inst)
    assert r.name == "toxic" and r.feasible is False and r.info is None
    (ok,) = interpret_outcome(run(inst, 1.0), inst)
    assert ok.feasible is True


def test_spawn_failure(fixtures):
    inst = load(fixtures, "missing_bb")
    with pytest.raises(SpawnFailure):
        run(inst, 0.5)


def test_cache_counters(fixtures):
    inst = load(fixtures, "log")
    h = Harness()
    spec = inst.simulations[0]
    p = {"x": 2.0}
    a = h.cached_evaluate(spec, p)
    b = h.cached_evaluate(spec, dict(p))
    assert a is b
    assert (h.counters.requests, h.counters.hits, h.counters.executions) == (2, 1, 1)


def test_cache_is_exact(fixtures):
    inst = load(fixtures, "log")
    h = Harness()
    spec = inst.simulations[0]
    h.cached_evaluate(spec, {"x": 0.1234567890123456})
    h.cached_evaluate(spec, {"x": 0.1234567890123457})
    assert h.counters.executions == 2 and h.counters.hits == 0


def test_executions_count_distinct_points():
    inst = parse_problem(
        'problem "p"\nvar x real\nminimize sim s out 0\nsimulation s func log_square timeout 5 outputs 1\n'
    )
    h = Harness()
    for x in [1.0, 2.0, 3.0, 2.0, 1.0]:
        h.cached_evaluate(inst.simulations[0], {"x": x})
    assert h.counters.executions == 3 and h.counters.requests == 5


def test_transcripts(fixtures, tmp_path):
    inst = load(fixtures, "log")
    h = Harness(tmp_path)
    h.cached_evaluate(inst.simulations[0], {"x": 2.0})
    h.cached_evaluate(inst.simulations[0], {"x": -2.0})
    files = sorted(p.name for p in (tmp_path / "transcripts").iterdir())
    assert files == ["000001_logbb.txt", "000002_logbb.txt"]
    text = (tmp_path / "transcripts" / "000002_logbb.txt").read_text()
    assert "Crashed" in text


def test_serialization():
    assert serialize_point({"x": 0.1, "c": "gcc"}) == b"0.1\ngcc\n"


def test_in_process_exit_code():
    @register_blackbox("_test_exit")
    def box(x):
        raise SimulationExit(3)

    inst = parse_problem(
        'problem "p"\nvar x real\nminimize sim s out 0\n'
        "constraint bad class NUSK sim s exitcode 3\n"
        "simulation s func _test_exit timeout 5 outputs 1\n"
    )
    out = run_simulation(inst.simulations[0], {"x": 1.0})
    assert out.status is Status.ERROR_CODE and out.code == 3


def test_in_process_exception_is_crash():
    @register_blackbox("_test_raise")
    def box(x):
        raise ValueError("boom")

    inst = parse_problem(
        'problem "p"\nvar x real\nminimize sim s out 0\nsimulation s func _test_raise timeout 5 outputs 1\n'
    )
    assert run_simulation(inst.simulations[0], {"x": 1.0}).status is Status.CRASHED
