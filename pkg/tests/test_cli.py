import json
import subprocess
import sys
import time
from importlib.resources import files

import pytest

from _mutations import mutate
from conftest import corpus_trace
from dyproto import dumps

CORPUS = files("dyproto") / "corpus"


def cli(*args, timeout=60):
    return subprocess.run([sys.executable, "-m", "dyproto.cli", *map(str, args)],
                          capture_output=True, text=True, timeout=timeout)


def anb(name):
    return CORPUS / f"{name}.anb"


def structured(*args):
    out = cli(*args, "--format", "structured")
    return out, json.loads(out.stdout)


# -- exit codes ---------------------------------------------------------------


def test_validate_corpus_trace_exits_zero():
    out = cli("validate", anb("nspk"), CORPUS / "nspk.trace")
    assert out.returncode == 0
    assert out.stdout.startswith("status: valid-attack")


def test_parse_and_lint_success(tmp_path):
    assert cli("parse", anb("nsl")).returncode == 0
    assert cli("lint", anb("nsl")).returncode == 0


def test_syntax_error_exits_65_with_one_positioned_diagnostic(tmp_path):
    bad = tmp_path / "bad.anb"
    bad.write_text(anb("nspk").read_text().replace("pk(skB))", "pk(skB)))", 1))
    out = cli("parse", bad)
    assert out.returncode == 65
    lines = [ln for ln in out.stderr.splitlines() if ": error: " in ln]
    assert len(lines) == 1 and lines[0].startswith(str(bad) + ":")


def test_missing_file_is_a_usage_error(tmp_path):
    assert cli("parse", tmp_path / "nope.anb").returncode == 64


def test_validate_without_trace_is_a_usage_error():
    assert cli("validate", anb("nspk")).returncode == 64


def test_unknown_flag_is_a_usage_error():
    assert cli("search", anb("nspk"), "--frobnicate").returncode == 64
    assert cli("search", anb("nspk"), "--max-sessions", "0").returncode == 64


def test_mutated_trace_exits_two(tmp_path):
    spec, trace = corpus_trace("nspk")
    bad = mutate("underivable-delivery", spec, trace)
    path = tmp_path / "bad.trace"
    path.write_text(dumps(bad))
    out, doc = structured("validate", anb("nspk"), path)
    assert out.returncode == 2
    assert doc["status"] == "invalid" and "intruder" in doc["checks"]["failed_checks"]


def test_malformed_trace_exits_65(tmp_path):
    path = tmp_path / "bad.trace"
    path.write_text('{"sessions": {}, "events": [{"t": 1, "kind": "teleport", "actor": "A1"}]}')
    assert cli("validate", anb("nspk"), path).returncode == 65


def test_search_without_property_exits_65(tmp_path):
    assert cli("search", bare_protocol(tmp_path, "nspk")).returncode == 65


def test_search_secure_protocol_exits_two():
    out, doc = structured("search", anb("nsl"), "--max-events", "10")
    assert out.returncode == 2 and doc["status"] == "no-attack"


# -- reports ------------------------------------------------------------------


def test_structured_output_is_byte_identical():
    first = cli("search", anb("nspk"), "--format", "structured")
    second = cli("search", anb("nspk"), "--format", "structured")
    assert first.returncode == 0 and first.stdout == second.stdout
    doc = json.loads(first.stdout)
    assert doc["schema_version"] == 1 and doc["status"] == "attack-found"
    assert "wall_time" not in doc["stats"]


def test_quiet_is_a_subset_of_verbose():
    args = ("validate", anb("nspk"), CORPUS / "nspk.trace")
    loud, quiet = cli(*args), cli(*args, "--quiet")
    assert quiet.returncode == loud.returncode == 0
    assert set(quiet.stdout.splitlines()) <= set(loud.stdout.splitlines())
    assert len(quiet.stdout) < len(loud.stdout)


def bare_protocol(tmp_path, name):
    text = anb(name).read_text()
    path = tmp_path / f"{name}.anb"
    path.write_text(text[: text.index("Property:")])
    return path


def test_separate_property_file(tmp_path):
    bare, trace = bare_protocol(tmp_path, "nspk"), CORPUS / "nspk.trace"
    secrecy = tmp_path / "secrecy.prop"
    secrecy.write_text('lemma secrecy:\n"not Ex m #i #j . Secret(m)@#i & K(m)@#j"\n')
    assert cli("validate", bare, trace, "--property", secrecy).returncode == 0
    # a lemma that holds on the trace: the trace is then not an attack
    never = tmp_path / "never.prop"
    never.write_text('lemma never:\n"not Ex m #i . Secret(m)@#i & #i < #i"\n')
    assert cli("validate", bare, trace, "--property", never).returncode == 2
    # giving both is an input error
    assert cli("validate", anb("nspk"), trace, "--property", secrecy).returncode == 65


@pytest.mark.slow
def test_timeout_exits_three_promptly():
    start = time.monotonic()
    out = cli("search", anb("nsl"), "--timeout", "1", "--max-sessions", "4", "--max-events", "60", "--depth", "4")
    elapsed = time.monotonic() - start
    assert out.returncode == 3 and elapsed < 2
    assert out.stdout.startswith("status: timeout")
