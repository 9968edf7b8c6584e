import contextlib
import functools
import time

import pytest
from hypothesis import settings

from dyproto import corpus_names, corpus_text, load_corpus, loads
from dyproto.search import SearchConfig, find_attack

settings.register_profile("default", deadline=None)
settings.load_profile("default")

SECURE = {"nsl"}
ATTACKED = [n for n in corpus_names() if n not in SECURE]


def corpus_trace(name):
    spec = load_corpus(name)
    return spec, loads(corpus_text(name, ".trace"), dict(spec.functions))


@pytest.fixture(params=ATTACKED)
def attacked(request):
    return (request.param, *corpus_trace(request.param))


@functools.lru_cache(maxsize=None)
def searched(name, max_events=None):
    """Default-bound search of a corpus protocol, run once per session; returns (result, seconds)."""
    cfg = SearchConfig() if max_events is None else SearchConfig(max_events=max_events)
    start = time.monotonic()
    result = find_attack(load_corpus(name), cfg)
    return result, time.monotonic() - start


# -- acceptance summary ---------------------------------------------------------

ACCEPTANCE: dict[int, str] = {}


@contextlib.contextmanager
def criterion(number, title):
    """Record a PASS/FAIL line for one acceptance criterion; details may be filled in via the yielded dict."""
    info = {"detail": ""}
    try:
        yield info
    except BaseException:
        ACCEPTANCE[number] = f"criterion {number}: FAIL  {title} {info['detail']}".rstrip()
        raise
    ACCEPTANCE[number] = f"criterion {number}: PASS  {title} {info['detail']}".rstrip()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
