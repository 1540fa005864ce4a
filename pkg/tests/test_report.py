from qrak.problem import parse_problem_file
from qrak.report import history_csv, legend_rows, policy_trace_text, report_text, write_report
from qrak.solver import SolveOptions, solve


def test_history_layout(fixtures):
    r = solve(parse_problem_file(fixtures / "omega.qrak"), SolveOptions(x0=(1.0, 1.0)))
    lines = history_csv(r).splitlines()
    assert lines[0] == "ordinal,stage,f,h,n_viol_nonquant,hidden_event,sim_calls_used,iteration,incumbent,x1,x2"
    assert lines[1] == "1,Simulated,2.0,0.0,0,0,0,0,F,1.0,1.0"
    assert len(lines) == len(r.history) + 1


def test_policy_trace_and_report(fixtures, tmp_path):
    r = solve(parse_problem_file(fixtures / "log.qrak"), SolveOptions(x0=(4.0,)))
    trace = policy_trace_text(r)
    assert trace.splitlines()[0].split() == ["constraint", "class", "treatment", "points", "violations"]
    assert trace.splitlines()[1].split() == ["<hidden>", "NUSH", "ExtremeBarrier", "3", "3"]
    text = report_text(r)
    assert "status: Solved" in text and "hidden events: 3" in text
    paths = write_report(r, tmp_path)
    assert all(p.exists() for p in paths.values())


def test_legend_rows():
    assert [row[0] for row in legend_rows()] == [str(i) for i in range(1, 10)]
