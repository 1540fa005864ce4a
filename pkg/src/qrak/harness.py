"""Black-box execution: processes or in-process callables, with caching.

Wire protocol for external simulations: the point is written to standard
input, one value per line (``repr`` of the float, or the label text for
categoricals); outputs are read as whitespace-separated reals from
standard output, ``NaN`` allowed. ``{python}`` and ``{<variable>}`` in the
argv template are substituted before launch.
"""

from __future__ import annotations

import enum
import importlib
import logging
import math
import os
import re
import signal
import subprocess
import sys
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Mapping, Optional

from .problem.measures import ViolationInfo, is_satisfied, violation_measure
from .problem.model import ProblemInstance, SimBinding, SimulationSpec

__all__ = [
    "Status",
    "SimOutcome",
    "EvalResult",
    "HIDDEN",
    "HarnessFault",
    "SpawnFailure",
    "SimulationExit",
    "Counters",
    "Harness",
    "register_blackbox",
    "serialize_point",
    "run_simulation",
    "interpret_outcome",
    "outcome_objective",
]

logger = logging.getLogger(__name__)

HIDDEN = "<hidden>"


class HarnessFault(RuntimeError):
    """The harness itself failed; not a constraint event."""


class SpawnFailure(HarnessFault):
    pass


class SimulationExit(Exception):
    """Raised by an in-process black box to report an exit code."""

    def __init__(self, code):
        super().__init__(f"exit code {code}")
        self.code = int(code)


class Status(enum.Enum):
    COMPLETED = "Completed"
    CRASHED = "Crashed"
    TIMED_OUT = "TimedOut"
    ERROR_CODE = "ErrorCode"
    PARTIAL_OUTPUTS = "PartialOutputs"


@dataclass(frozen=True)
class SimOutcome:
    """Raw result of one execution.

    ``outputs`` holds floats (possibly NaN) or ``None`` for missing values.
    ``code`` is the exit status (negative for a signal).
    """

    simulation: str
    status: Status
    outputs: tuple
    elapsed: float
    code: Optional[int] = None
    transcript: Optional[str] = None
    stdout: str = ""
    stderr: str = ""

    def output(self, k):
        if k is None or k >= len(self.outputs):
            return None
        v = self.outputs[k]
        if v is None or math.isnan(v):
            return None
        return v


@dataclass(frozen=True)
class EvalResult:
    """Verdict for one constraint at one point.

    ``feasible is None`` means the result is unknown (``reason`` says why).
    Hidden events are named :data:`HIDDEN` and never carry a measure.
    """

    name: str
    feasible: Optional[bool]
    info: Optional[ViolationInfo] = None
    reason: str = ""

    @property
    def hidden(self) -> bool:
        return self.name == HIDDEN

    @property
    def unknown(self) -> bool:
        return self.feasible is None


@dataclass(frozen=True)
class Counters:
    requests: int = 0
    hits: int = 0
    executions: int = 0


_REGISTRY: dict = {}


def register_blackbox(name: str, fn: Optional[Callable] = None):
    """Register an in-process black box under ``name`` (usable as decorator)."""
    if fn is None:
        return lambda f: register_blackbox(name, f)
    _REGISTRY[name] = fn
    return fn


def _resolve_function(ref):
    from . import blackboxes  # noqa: F401  registers the bundled boxes

    if ref in _REGISTRY:
        return _REGISTRY[ref]
    module, _, attr = ref.partition(":")
    if not attr:
        raise SpawnFailure(f"unknown in-process black box {ref!r}")
    try:
        return getattr(importlib.import_module(module), attr)
    except (ImportError, AttributeError) as exc:
        raise SpawnFailure(f"cannot load black box {ref!r}: {exc}") from exc


def _fmt_value(v):
    return v if isinstance(v, str) else repr(float(v))


def serialize_point(point: Mapping) -> bytes:
    return "".join(_fmt_value(v) + "\n" for v in point.values()).encode()


def _parse_outputs(text, arity):
    tokens = text.split()
    outputs = []
    for i in range(arity):
        if i >= len(tokens):
            outputs.append(None)
            continue
        try:
            outputs.append(float(tokens[i]))
        except ValueError:
            outputs.append(None)
    return tuple(outputs)


def _completion_status(outputs):
    if all(v is not None and not math.isnan(v) for v in outputs):
        return Status.COMPLETED
    return Status.PARTIAL_OUTPUTS


def _exit_status(spec, code):
    if code in spec.code_table:
        return Status.ERROR_CODE
    return Status.CRASHED


_PLACEHOLDER = re.compile(r"\{(\w+)\}")


def _argv(spec, point):
    def sub(m):
        key = m.group(1)
        if key == "python":
            return sys.executable
        if key in point:
            return _fmt_value(point[key])
        return m.group(0)

    return [_PLACEHOLDER.sub(sub, a) for a in spec.command]


def _run_process(spec, point):
    argv = _argv(spec, point)
    payload = serialize_point(point)
    start = time.perf_counter()
    try:
        proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            cwd=spec.cwd,
            start_new_session=True,
        )
    except OSError as exc:
        raise SpawnFailure(f"cannot launch {argv[0]!r}: {exc}") from exc
    try:
        out, err = proc.communicate(payload, timeout=spec.timeout)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, err = proc.communicate()
        elapsed = max(time.perf_counter() - start, spec.timeout)
        return (
            SimOutcome(spec.id, Status.TIMED_OUT, (None,) * spec.outputs, elapsed, proc.returncode,
                       stdout=out.decode(errors="replace"), stderr=err.decode(errors="replace")),
            argv,
            payload,
        )
    elapsed = time.perf_counter() - start
    stdout, stderr = out.decode(errors="replace"), err.decode(errors="replace")
    code = proc.returncode
    if code == 0:
        outputs = _parse_outputs(stdout, spec.outputs)
        status = _completion_status(outputs)
    else:
        outputs = (None,) * spec.outputs
        status = _exit_status(spec, code)
    return SimOutcome(spec.id, status, outputs, elapsed, code, stdout=stdout, stderr=stderr), argv, payload


def _run_function(spec, point):
    fn = _resolve_function(spec.function)
    values = list(point.values())
    box = {}

    def target():
        try:
            box["value"] = fn(values)
        except SimulationExit as exc:
            box["code"] = exc.code
        except Exception as exc:  # any failure inside the black box is a crash
            box["error"] = f"{type(exc).__name__}: {exc}"

    start = time.perf_counter()
    worker = threading.Thread(target=target, daemon=True)
    worker.start()
    worker.join(spec.timeout)
    elapsed = time.perf_counter() - start
    argv = [f"<func {spec.function}>"]
    payload = serialize_point(point)
    if worker.is_alive():
        elapsed = max(elapsed, spec.timeout)
        return SimOutcome(spec.id, Status.TIMED_OUT, (None,) * spec.outputs, elapsed), argv, payload
    if "code" in box:
        code = box["code"]
        status = Status.COMPLETED if code == 0 else _exit_status(spec, code)
        return SimOutcome(spec.id, status, (None,) * spec.outputs, elapsed, code), argv, payload
    if "error" in box:
        return SimOutcome(spec.id, Status.CRASHED, (None,) * spec.outputs, elapsed, stderr=box["error"]), argv, payload
    raw = box.get("value")
    raw = [] if raw is None else list(raw) if not isinstance(raw, (int, float)) else [raw]
    outputs = tuple(
        (None if raw[i] is None else float(raw[i])) if i < len(raw) else None for i in range(spec.outputs)
    )
    stdout = " ".join("NaN" if v is None else repr(v) for v in outputs)
    return SimOutcome(spec.id, _completion_status(outputs), outputs, elapsed, 0, stdout=stdout), argv, payload


def _write_transcript(path, outcome, argv, payload):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = (
        f"simulation: {outcome.simulation}\n"
        f"argv: {argv}\n"
        f"status: {outcome.status.value}\n"
        f"code: {outcome.code}\n"
        f"elapsed: {outcome.elapsed:.6f}\n"
        f"--- stdin ---\n{payload.decode()}"
        f"--- stdout ---\n{outcome.stdout}\n"
        f"--- stderr ---\n{outcome.stderr}\n"
    )
    path.write_text(text)


def run_simulation(spec: SimulationSpec, point: Mapping, transcript_path=None) -> SimOutcome:
    """Execute one simulation at ``point`` (a ``{name: value}`` mapping).

    Does not check any constraint; callers stage a priori checks first.
    Raises :class:`SpawnFailure` when the black box cannot be started.
    """
    if spec.function is not None:
        outcome, argv, payload = _run_function(spec, point)
    else:
        outcome, argv, payload = _run_process(spec, point)
    if transcript_path is not None:
        _write_transcript(transcript_path, outcome, argv, payload)
        outcome = SimOutcome(**{**outcome.__dict__, "transcript": os.fspath(transcript_path)})
    if outcome.status is not Status.COMPLETED:
        logger.debug("simulation %s: %s (code %s)", spec.id, outcome.status.value, outcome.code)
    return outcome


class Harness:
    """Runs simulations with an exact-key outcome cache.

    Two requests hit the same cache entry only when their serialized
    points are byte-identical. ``run_dir`` enables transcript files named
    by execution ordinal.
    """

    def __init__(self, run_dir=None):
        self.run_dir = Path(run_dir) if run_dir is not None else None
        self._cache = {}
        self._lock = threading.Lock()
        self._requests = 0
        self._hits = 0
        self._executions = 0

    @property
    def counters(self) -> Counters:
        with self._lock:
            return Counters(self._requests, self._hits, self._executions)

    def cached_evaluate(self, spec: SimulationSpec, point: Mapping) -> SimOutcome:
        key = (spec.id, serialize_point(point))
        with self._lock:
            self._requests += 1
            if key in self._cache:
                self._hits += 1
                return self._cache[key]
            self._executions += 1
            ordinal = self._executions
        transcript = None
        if self.run_dir is not None:
            transcript = self.run_dir / "transcripts" / f"{ordinal:06d}_{spec.id}.txt"
        outcome = run_simulation(spec, point, transcript)
        with self._lock:
            self._cache.setdefault(key, outcome)
        return outcome


def outcome_objective(outcome: SimOutcome, binding: SimBinding) -> float:
    """Extended-value objective: ``+inf`` unless the run completed."""
    if outcome.status is not Status.COMPLETED:
        return math.inf
    v = outcome.output(binding.output)
    return math.inf if v is None else v


def _measured(c, value):
    if c.cls.quantifiable:
        info = violation_measure(c, value)
        return EvalResult(c.name, info.feasible, info)
    return EvalResult(c.name, is_satisfied(c, value))


def interpret_outcome(outcome: SimOutcome, instance: ProblemInstance) -> list:
    """Turn one simulation outcome into per-constraint results.

    Crashes, undocumented exit codes, and timeouts with no declared time
    constraint become a single hidden event. A documented exit code
    violates the constraint it is mapped to.
    """
    spec = instance.simulation(outcome.simulation)
    bound = [c for c in instance.constraints if isinstance(c.body, SimBinding) and c.body.simulation == spec.id]
    status = outcome.status
    timers = [c for c in bound if c.body.source == "elapsed"]

    if status is Status.CRASHED:
        return [EvalResult(HIDDEN, False, reason=f"crashed (code {outcome.code})")]
    if status is Status.TIMED_OUT and not timers:
        return [EvalResult(HIDDEN, False, reason=f"timed out after {outcome.elapsed:.3g}s")]

    results = []
    flagged = spec.code_table.get(outcome.code) if status is Status.ERROR_CODE else None
    for c in bound:
        b = c.body
        if b.source == "exitcode":
            if c.name == flagged:
                results.append(EvalResult(c.name, False, reason=f"exit code {outcome.code}"))
            else:
                results.append(EvalResult(c.name, True))
        elif b.source == "elapsed":
            if status is Status.TIMED_OUT:
                info = ViolationInfo(False, None, 0.0) if c.cls.quantifiable else None
                results.append(EvalResult(c.name, False, info, reason="timed out"))
            else:
                results.append(_measured(c, outcome.elapsed - spec.timeout))
        elif status in (Status.ERROR_CODE, Status.TIMED_OUT):
            results.append(EvalResult(c.name, None, reason=f"no outputs ({status.value})"))
        else:
            v = outcome.output(b.output)
            if v is None:
                results.append(EvalResult(c.name, None, reason=f"output {b.output} missing"))
            elif b.source == "flag":
                results.append(EvalResult(c.name, v == b.feasible_when))
            else:
                results.append(_measured(c, v))
    return results
