"""Symbolic (Dolev-Yao) protocol toolkit.

Protocols are written in an extended Alice-and-Bob notation, attack traces
are checked in a sandbox (executability, coherence, intruder derivability,
property violation), and a bounded search looks for attacks.
"""

from importlib import resources

from .anb import Diagnostic, ProtocolSpec, SpecError, parse_property, parse_protocol, render
from .deduce import KnowledgeBase, derivable
from .sandbox import AttackReport, eval_formula, lint, validate_attack
from .search import SearchConfig, SearchResult, SearchTimeout, find_attack
from .term import format_term, normalize, parse_term
from .trace import Trace, TraceEvent, dumps, loads

__version__ = "0.1.0"


def corpus_names() -> list[str]:
    """Names of the bundled example protocols."""
    root = resources.files(__package__) / "corpus"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".anb"))


def corpus_text(name: str, suffix: str = ".anb") -> str:
    return (resources.files(__package__) / "corpus" / f"{name}{suffix}").read_text(encoding="utf-8")


def load_corpus(name: str) -> ProtocolSpec:
    return parse_protocol(corpus_text(name))


__all__ = [
    "AttackReport",
    "Diagnostic",
    "KnowledgeBase",
    "ProtocolSpec",
    "SearchConfig",
    "SearchResult",
    "SearchTimeout",
    "SpecError",
    "Trace",
    "TraceEvent",
    "corpus_names",
    "corpus_text",
    "derivable",
    "dumps",
    "eval_formula",
    "find_attack",
    "format_term",
    "lint",
    "load_corpus",
    "loads",
    "normalize",
    "parse_property",
    "parse_protocol",
    "parse_term",
    "render",
    "validate_attack",
]
