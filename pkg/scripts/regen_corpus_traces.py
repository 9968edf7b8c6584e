"""Regenerate the frozen attack traces shipped next to the corpus protocols.

Each trace is produced by the bounded search under default bounds and only
written if the sandbox accepts it.  Protocols without a known attack (those
listed in SECURE) are searched too, and a found attack is reported as an error.

    python scripts/regen_corpus_traces.py [name ...]
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from dyproto import corpus_names, dumps, find_attack, load_corpus, validate_attack
from dyproto.search import SearchConfig

CORPUS = Path(__file__).resolve().parent.parent / "src" / "dyproto" / "corpus"
SECURE = {"nsl"}


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="corpus entries (default: all)")
    ap.add_argument("--secure-max-events", type=int, default=12,
                    help="event bound used when confirming the secure protocols")
    args = ap.parse_args(argv)
    status = 0
    for name in args.names or corpus_names():
        spec = load_corpus(name)
        cfg = SearchConfig(max_events=args.secure_max_events) if name in SECURE else SearchConfig()
        start = time.monotonic()
        result = find_attack(spec, cfg)
        took = time.monotonic() - start
        if name in SECURE:
            if result.found:
                print(f"{name}: unexpected attack found", file=sys.stderr)
                status = 1
            else:
                print(f"{name}: no attack up to {cfg.max_events} events ({took:.1f}s)")
            continue
        if not result.found:
            print(f"{name}: no attack found ({took:.1f}s)", file=sys.stderr)
            status = 1
            continue
        verdict = validate_attack(spec, result.trace).verdict
        if verdict != "valid-attack":
            print(f"{name}: search returned a trace the sandbox rejects", file=sys.stderr)
            status = 1
            continue
        (CORPUS / f"{name}.trace").write_text(dumps(result.trace), encoding="utf-8")
        print(f"{name}: {len(result.trace.events)} events ({took:.1f}s)")
    return status


if __name__ == "__main__":
    sys.exit(main())
