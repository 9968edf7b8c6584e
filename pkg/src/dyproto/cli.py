"""Command-line front end: ``dyproto parse|lint|validate|search``.

Exit status tells a calling agent what happened without reading the report:

    0   attack found (search) / attack validated (validate) / input accepted
    2   trace is not a valid attack, or no attack within the search bounds
    3   time budget exhausted
    64  usage error
    65  parse or semantic error in an input file

The report goes to stdout, diagnostics to stderr.  ``--format structured``
prints a JSON object with a ``schema_version`` field; it contains nothing
time dependent, so repeated runs on the same inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import os
import random
import sys
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .anb import ProtocolSpec, SpecError, parse_protocol
from .sandbox import lint, validate_attack
from .search import SearchConfig, SearchStats, SearchTimeout, find_attack
from .trace import TraceStructureError, loads

SCHEMA_VERSION = 1
COMMANDS = ("parse", "lint", "validate", "search")
FORMATS = ("text", "structured")

EXIT_OK = 0
EXIT_NEGATIVE = 2
EXIT_TIMEOUT = 3
EXIT_USAGE = 64
EXIT_INPUT = 65

# slack between the cooperative deadline and the hard kill
WATCHDOG_GRACE = 0.5


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    protocol: Path
    trace: Path | None = None
    property: Path | None = None
    timeout: float = 200.0
    max_sessions: int = 2
    depth: int = 3
    max_events: int = 24
    format: str = "text"
    quiet: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.format not in FORMATS:
            raise UsageError(f"unknown format {self.format!r}")
        if self.command == "validate" and self.trace is None:
            raise UsageError("validate needs a trace file")
        if self.command != "validate" and self.trace is not None:
            raise UsageError(f"{self.command} does not take a trace file")
        if self.timeout <= 0:
            raise UsageError("--timeout must be positive")
        for name in ("max_sessions", "depth", "max_events"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name.replace('_', '-')} must be positive")

    def search_config(self, budget: float) -> SearchConfig:
        return SearchConfig(max_sessions=self.max_sessions, synth_depth=self.depth,
                            max_events=self.max_events, time_budget=budget)


@dataclass
class Report:
    command: str
    status: str
    protocol: str | None = None
    diagnostics: list[dict] = field(default_factory=list)
    trace: dict | None = None
    stats: dict | None = None
    checks: dict | None = None
    lints: list[dict] | None = None
    seed: int = 0

    def to_dict(self, quiet: bool = False) -> dict:
        d: dict = {"schema_version": SCHEMA_VERSION, "command": self.command, "status": self.status}
        diags = self.diagnostics
        if quiet:
            # output filtering: errors, the verdict and the trace only
            d["diagnostics"] = [x for x in diags if x.get("severity") == "error"]
            if self.trace is not None:
                d["trace"] = self.trace
            return d
        d["diagnostics"] = diags
        d["protocol"] = self.protocol
        d["seed"] = self.seed
        for key in ("trace", "stats", "checks", "lints"):
            value = getattr(self, key)
            if value is not None:
                d[key] = value
        return d


# ---------------------------------------------------------------------------
# rendering


def render_structured(d: dict) -> str:
    out = dict(d)
    if "stats" in out:
        out["stats"] = {k: v for k, v in out["stats"].items() if k != "wall_time"}
    return json.dumps(out, indent=2, sort_keys=True) + "\n"


def render_text(d: dict) -> str:
    lines = [f"status: {d['status']}"]
    if d.get("protocol"):
        lines.append(f"protocol: {d['protocol']}")
    for diag in d.get("diagnostics", []):
        lines.append(f"diagnostic: {_diag_line(diag)}")
    checks = d.get("checks")
    if checks:
        failed = checks.get("failed_checks", [])
        for name in ("executability", "coherence", "intruder"):
            if name in checks:
                lines.append(f"check {name}: {'pass' if checks[name]['passed'] else 'FAIL'}")
        validity = checks.get("validity", {})
        if "value" in validity:
            lines.append(f"check validity: property {validity.get('property')} evaluates to {validity['value']}")
        if validity.get("witness"):
            w = ", ".join(f"{k}={v}" for k, v in sorted(validity["witness"].items()))
            lines.append(f"witness: {w}")
        for err in checks.get("errors", []):
            lines.append(f"error: {err}")
        for why in _failure_reasons(checks):
            lines.append(f"reason: {why}")
        if failed:
            lines.append(f"failed checks: {', '.join(failed)}")
    for item in d.get("lints") or []:
        lines.append(f"lint {item['code']}: {item['message']}")
    trace = d.get("trace")
    if trace is not None:
        lines.append("trace:")
        for inst, s in sorted(trace["sessions"].items()):
            binds = ", ".join(f"{k}={v}" for k, v in sorted(s["bindings"].items()))
            lines.append(f"  session {inst} ({s['role']}): {binds}")
        for ev in trace["events"]:
            lines.append(f"  {_event_line(ev)}")
    stats = d.get("stats")
    if stats:
        lines.append("stats: " + ", ".join(f"{k}={v}" for k, v in stats.items()))
    return "\n".join(lines) + "\n"


def _diag_line(diag: dict) -> str:
    if "line" in diag:
        where = f"{diag['file']}:" if "file" in diag else ""
        return f"{where}{diag['line']}:{diag['col']}: {diag['severity']}: {diag['message']}"
    return f"{diag['severity']}: {diag['message']}"


def _event_line(ev: dict) -> str:
    head = f"{ev['t']:>3} {ev['actor']:<4} {ev['kind']:<8}"
    if ev["kind"] == "claim":
        return f"{head}{ev['label']}({', '.join(ev['args'])})"
    if ev["kind"] == "send":
        return f"{head}{ev['term']} -> {ev.get('to', '?')}"
    return f"{head}{ev['term']}"


def _failure_reasons(checks: dict) -> list[str]:
    out = []
    for name in ("executability", "intruder"):
        for r in checks.get(name, {}).get("events", []):
            if not r["passed"]:
                out.append(f"{name} t={r['t']}: {r.get('reason', 'failed')}")
    for r in checks.get("coherence", {}).get("instances", []):
        for msg in r.get("diagnostics", []) if not r["passed"] else []:
            out.append(f"coherence {r['instance']}: {msg}")
    return out


# ---------------------------------------------------------------------------
# running


class _Watchdog:
    """Hard stop in case the cooperative deadline is not honoured in time."""

    def __init__(self, seconds: float, emit):
        self.lock = threading.Lock()
        self.emit = emit
        self.timer = threading.Timer(seconds, self._fire)
        self.timer.daemon = True

    def start(self):
        self.timer.start()

    def _fire(self):
        if not self.lock.acquire(blocking=False):
            return  # the main thread is already reporting
        try:
            self.emit()
        finally:
            os._exit(EXIT_TIMEOUT)

    def finish(self) -> bool:
        """Claim the right to report; False when the watchdog already fired."""
        self.timer.cancel()
        return self.lock.acquire(blocking=False)


def _read(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror or e}") from None


def _load_spec(cfg: RunConfig) -> ProtocolSpec:
    text = _read(cfg.protocol)
    prop = _read(cfg.property) if cfg.property is not None else None
    return parse_protocol(text, prop)


def execute(cfg: RunConfig, stats: SearchStats | None = None, started: float | None = None) -> tuple[int, Report]:
    """Carry out one command; returns the exit status and the report."""
    started = time.monotonic() if started is None else started
    random.seed(cfg.seed)
    report = Report(cfg.command, "error", seed=cfg.seed)
    try:
        spec = _load_spec(cfg)
    except SpecError as e:
        report.status = "input-error"
        paths = {"protocol": cfg.protocol, "property": cfg.property}
        report.diagnostics = [{**d.to_dict(), "file": str(paths[d.source])} for d in e.diagnostics]
        return EXIT_INPUT, report
    report.protocol = spec.name
    if cfg.command == "parse":
        report.status = "ok"
        return EXIT_OK, report
    if cfg.command == "lint":
        found = lint(spec)
        report.status = "ok"
        report.lints = found
        report.diagnostics = [{"severity": "warning", "message": x["message"]} for x in found]
        return EXIT_OK, report
    if spec.property is None:
        report.status = "input-error"
        report.diagnostics = [{"severity": "error", "message": "protocol has no property; give one with --property"}]
        return EXIT_INPUT, report
    if cfg.command == "validate":
        return _validate(cfg, spec, report)
    return _search(cfg, spec, report, stats, started)


def _validate(cfg: RunConfig, spec: ProtocolSpec, report: Report) -> tuple[int, Report]:
    try:
        trace = loads(_read(cfg.trace), dict(spec.functions))
    except TraceStructureError as e:
        report.status = "input-error"
        report.diagnostics = [{"severity": "error", "message": f"{cfg.trace}: {e}"}]
        return EXIT_INPUT, report
    result = validate_attack(spec, trace)
    report.checks = result.to_dict()
    report.status = result.verdict
    if result.verdict == "valid-attack":
        report.trace = trace.to_dict()
        return EXIT_OK, report
    return EXIT_NEGATIVE, report


def _search(cfg: RunConfig, spec: ProtocolSpec, report: Report, stats: SearchStats | None,
            started: float) -> tuple[int, Report]:
    stats = stats if stats is not None else SearchStats()
    budget = max(cfg.timeout - (time.monotonic() - started), 1e-3)
    try:
        result = find_attack(spec, cfg.search_config(budget), stats)
    except SearchTimeout as e:
        report.status = "timeout"
        report.stats = e.stats.to_dict()
        report.diagnostics = [{"severity": "error", "message": f"time budget of {cfg.timeout:g}s exhausted"}]
        return EXIT_TIMEOUT, report
    report.stats = result.stats.to_dict()
    if not result.found:
        report.status = "no-attack"
        return EXIT_NEGATIVE, report
    # never report success without the sandbox agreeing
    check = validate_attack(spec, result.trace)
    report.checks = check.to_dict()
    if check.verdict != "valid-attack":
        report.status = "invalid"
        return EXIT_NEGATIVE, report
    report.status = "attack-found"
    report.trace = result.trace.to_dict()
    return EXIT_OK, report


def emit(report: Report, cfg: RunConfig, out=None, err=None) -> None:
    out = out or sys.stdout
    err = err or sys.stderr
    d = report.to_dict(quiet=cfg.quiet)
    for diag in d.get("diagnostics", []):
        print(_diag_line(diag), file=err)
    out.write(render_structured(d) if cfg.format == "structured" else render_text(d))
    out.flush()
    err.flush()


def run(cfg: RunConfig) -> int:
    """Run one command with the global timeout enforced; writes the report and returns the exit status."""
    started = time.monotonic()
    stats = SearchStats()

    def on_timeout():
        stats.elapsed = time.monotonic() - started
        partial = Report(cfg.command, "timeout", stats=stats.to_dict(), seed=cfg.seed,
                         diagnostics=[{"severity": "error", "message": f"time budget of {cfg.timeout:g}s exhausted"}])
        emit(partial, cfg)

    dog = _Watchdog(max(cfg.timeout - (time.monotonic() - started), 0) + WATCHDOG_GRACE, on_timeout)
    dog.start()
    try:
        code, report = execute(cfg, stats, started)
    except UsageError as e:
        code, report = EXIT_USAGE, Report(cfg.command, "usage-error", seed=cfg.seed,
                                          diagnostics=[{"severity": "error", "message": str(e)}])
    if not dog.finish():
        # the watchdog is writing the timeout report and will exit the process
        threading.Event().wait()
    emit(report, cfg)
    return code


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("protocol", type=Path, help="protocol file (.anb)")
    common.add_argument("--property", type=Path, help="property file (.prop), for a protocol without an inline one")
    common.add_argument("--timeout", type=float, default=200.0, help="global time budget in seconds")
    common.add_argument("--max-sessions", type=int, default=2)
    common.add_argument("--depth", type=int, default=3, help="intruder composition depth")
    common.add_argument("--max-events", type=int, default=24)
    common.add_argument("--format", choices=FORMATS, default="text")
    common.add_argument("--quiet", action="store_true", help="only errors, the verdict and the trace")
    common.add_argument("--seed", type=int, default=0)

    parser = _Parser(prog="dyproto", description="Symbolic protocol checking and attack search.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("parse", parents=[common], help="parse and check a protocol file")
    sub.add_parser("lint", parents=[common], help="report suspicious protocol constructs")
    v = sub.add_parser("validate", parents=[common], help="check an attack trace in the sandbox")
    v.add_argument("trace", type=Path, help="attack trace (.trace)")
    sub.add_parser("search", parents=[common], help="search for an attack within bounds")
    return parser


def config_from_args(argv: list[str] | None = None) -> RunConfig:
    ns = build_parser().parse_args(argv)
    try:
        return RunConfig(command=ns.command, protocol=ns.protocol, trace=getattr(ns, "trace", None),
                         property=ns.property, timeout=ns.timeout, max_sessions=ns.max_sessions,
                         depth=ns.depth, max_events=ns.max_events, format=ns.format,
                         quiet=ns.quiet, seed=ns.seed)
    except UsageError as e:
        print(f"dyproto: error: {e}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def main(argv: list[str] | None = None) -> int:
    cfg = config_from_args(argv)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
