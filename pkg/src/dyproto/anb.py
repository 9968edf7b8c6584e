"""Extended Alice-and-Bob protocol notation.

A protocol file has the sections below; ``Functions:`` and ``Property:`` are
optional (the property may live in a separate ``.prop`` file)::

    Protocol Example:

    Knowledge:
    A : A, B, Kab, M
    B : A, B, Kab
    where Kab is a pre shared symmetric key

    Fresh:
    A : Na

    Actions:
    A -> B : Na
    B -> A : Na XOR Kab
    A -> B : senc(M XOR Na, Kab) [A: Secret(M)]

    Property:
    Secrecy of M
    lemma secrecy:
    "not Ex m #i #j . Secret(m)@#i & K(m)@#j"

Identifiers declared in ``Knowledge`` and ``Fresh`` (and the role names) are
protocol variables, instantiated per role instance.  Claims in brackets are
emitted by the receiver unless prefixed with a role name.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import Iterable

from ._lexer import SyntaxErrorAt, TokenStream, tokenize
from .formula import CLAIM_LABELS, Formula, FormulaSyntaxError, claim_labels, format_formula, parse_formula
from .term import SIGNATURE, Term, TermParser, Var, format_payload, format_term, variables


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str
    severity: str = "error"
    source: str = "protocol"  # or "property", for a separately given property text

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.severity}: {self.message}"

    def to_dict(self) -> dict:
        return {"line": self.line, "col": self.col, "message": self.message, "severity": self.severity,
                "source": self.source}


class SpecError(ValueError):
    """Parsing failed; ``diagnostics`` lists every positioned problem found."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("\n".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class StepClaim:
    role: str
    label: str
    args: tuple[Term, ...]


@dataclass(frozen=True)
class ActionStep:
    index: int
    sender: str
    receiver: str
    payload: Term
    claims: tuple[StepClaim, ...] = ()


@dataclass(frozen=True)
class PreShared:
    term: Term
    kind: str  # "symmetric-key" | "key-pair"
    holders: tuple[str, ...]


@dataclass(frozen=True)
class Property:
    name: str
    formula: Formula
    title: tuple[str, ...] = ()


@dataclass(frozen=True)
class ProtocolSpec:
    name: str
    roles: tuple[str, ...]
    knowledge: tuple[tuple[str, tuple[Term, ...]], ...]
    pre_shared: tuple[PreShared, ...]
    fresh: tuple[tuple[str, tuple[tuple[str, int], ...]], ...]
    steps: tuple[ActionStep, ...]
    property: Property | None = None
    functions: tuple[tuple[str, int], ...] = ()

    def knowledge_of(self, role: str) -> tuple[Term, ...]:
        return dict(self.knowledge).get(role, ())

    def fresh_of(self, role: str) -> tuple[tuple[str, int], ...]:
        return dict(self.fresh).get(role, ())

    def fresh_names(self) -> dict[str, tuple[str, int]]:
        return {name: (role, step) for role, items in self.fresh for name, step in items}

    def with_property(self, prop: Property) -> "ProtocolSpec":
        return ProtocolSpec(self.name, self.roles, self.knowledge, self.pre_shared, self.fresh, self.steps, prop,
                            self.functions)

    def step_labels(self) -> set[str]:
        return {c.label for s in self.steps for c in s.claims}


# ---------------------------------------------------------------------------
# parsing

_SECTION_RE = re.compile(r"^(Knowledge|Fresh|Actions|Property|Functions)\s*:\s*$")
_HEADER_RE = re.compile(r"^Protocol\s+([A-Za-z_][A-Za-z0-9_]*)\s*:\s*$")
_WHERE_RE = re.compile(
    r"^where\s+(?P<terms>.+?)\s+(?:is|are)\s+(?:a\s+)?pre[\s-]?shared\s+"
    r"(?P<kind>symmetric\s+keys?|key\s+pairs?)\s*$"
)
_STEP_PREFIX_RE = re.compile(r"^\s*(\d+)\s*\.\s*")


@dataclass
class _Line:
    no: int
    text: str
    indent: int = 0


def _lines(text: str) -> list[_Line]:
    out = []
    for no, raw in enumerate(text.replace("→", "->").split("\n"), start=1):
        body = raw.split("//", 1)[0].rstrip()
        if body.strip():
            stripped = body.lstrip()
            out.append(_Line(no, stripped, len(body) - len(stripped)))
    return out


class _Parser:
    def __init__(self):
        self.diags: list[Diagnostic] = []
        self.functions: dict[str, int] = {}
        self.declared: set[str] = set()

    def error(self, line: int, col: int, message: str) -> None:
        self.diags.append(Diagnostic(line, col, message))

    def term(self, text: str, line: int, col: int, resolve, payload: bool = False) -> Term | None:
        try:
            ts = TokenStream(tokenize(text, line, col))
            parser = TermParser(ts, resolve, self.functions)
            t = parser.payload() if payload else parser.term()
            if ts.peek().kind != "eof":
                raise ts.error(f"unexpected {ts.peek().value!r}")
            return t
        except SyntaxErrorAt as e:
            self.error(e.line, e.col, e.message)
            return None

    def term_list(self, text: str, line: int, col: int, resolve) -> list[Term]:
        try:
            ts = TokenStream(tokenize(text, line, col))
            parser = TermParser(ts, resolve, self.functions)
            items = [parser.term()]
            while ts.accept(","):
                items.append(parser.term())
            if ts.peek().kind != "eof":
                raise ts.error(f"unexpected {ts.peek().value!r}")
            return items
        except SyntaxErrorAt as e:
            self.error(e.line, e.col, e.message)
            return []

    def declaring(self, ident: str, line: int, col: int) -> Term:
        self.declared.add(ident)
        return Var(ident)

    def using(self, ident: str, line: int, col: int) -> Term:
        if ident not in self.declared:
            self.error(line, col, f"unknown identifier {ident!r}")
        return Var(ident)


def parse_protocol(text: str, property_text: str | None = None) -> ProtocolSpec:
    """Parse a protocol; raises ``SpecError`` with positioned diagnostics on failure."""
    p = _Parser()
    lines = _lines(text)
    if not lines:
        raise SpecError([Diagnostic(1, 1, "empty protocol file")])
    head = _HEADER_RE.match(lines[0].text)
    if head is None:
        raise SpecError([Diagnostic(lines[0].no, lines[0].indent + 1, "expected 'Protocol <Name>:' header")])
    name = head.group(1)

    sections: dict[str, tuple[_Line, list[_Line]]] = {}
    current: str | None = None
    for ln in lines[1:]:
        m = _SECTION_RE.match(ln.text)
        if m:
            current = m.group(1)
            if current in sections:
                p.error(ln.no, ln.indent + 1, f"duplicate section {current!r}")
            sections[current] = (ln, [])
        elif current is None:
            p.error(ln.no, ln.indent + 1, "text outside of any section")
        else:
            sections[current][1].append(ln)

    # Functions
    for ln in sections.get("Functions", (None, []))[1]:
        for item in ln.text.split(","):
            m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*/\s*(\d+)\s*", item)
            col = ln.indent + 1 + ln.text.find(item.strip())
            if not m:
                p.error(ln.no, col, f"expected 'name/arity', found {item.strip()!r}")
            elif m.group(1) in SIGNATURE or m.group(1) == "true":
                p.error(ln.no, col, f"function {m.group(1)!r} collides with a built-in symbol")
            else:
                p.functions[m.group(1)] = int(m.group(2))

    # Knowledge
    roles: list[str] = []
    knowledge: dict[str, list[Term]] = {}
    where_lines: list[tuple[_Line, re.Match]] = []
    if "Knowledge" not in sections:
        p.error(lines[0].no, 1, "missing 'Knowledge:' section")
    for ln in sections.get("Knowledge", (None, []))[1]:
        wm = _WHERE_RE.match(ln.text)
        if wm:
            where_lines.append((ln, wm))
            continue
        if ln.text.startswith("where"):
            p.error(ln.no, ln.indent + 1, "expected 'where <terms> is a pre shared symmetric key' or '... key pair'")
            continue
        role, body, col = _split_colon(ln)
        if role is None:
            p.error(ln.no, ln.indent + 1, "expected '<Role> : <terms>'")
            continue
        if role in knowledge:
            p.error(ln.no, ln.indent + 1, f"duplicate knowledge for role {role!r}")
            continue
        roles.append(role)
        p.declared.add(role)
        knowledge[role] = p.term_list(body, ln.no, col, p.declaring)
    pre_shared: list[PreShared] = []
    for ln, wm in where_lines:
        col = ln.indent + 1 + wm.start("terms")
        kind = "symmetric-key" if wm.group("kind").startswith("symmetric") else "key-pair"
        for t in p.term_list(wm.group("terms"), ln.no, col, p.using):
            holders = tuple(r for r in roles if t in knowledge[r])
            if not holders:
                p.error(ln.no, col, f"pre-shared term {format_term(t)} is not in any role's knowledge")
            pre_shared.append(PreShared(t, kind, holders))
    knowledge_vars = {v for ts_ in knowledge.values() for t in ts_ for v in variables(t)}

    # Fresh
    fresh_raw: dict[str, list[tuple[str, int | None, int, int]]] = {}
    fresh_owner: dict[str, str] = {}
    for ln in sections.get("Fresh", (None, []))[1]:
        role, body, col = _split_colon(ln)
        if role is None:
            p.error(ln.no, ln.indent + 1, "expected '<Role> : <names>'")
            continue
        if role not in knowledge:
            p.error(ln.no, ln.indent + 1, f"unknown role {role!r}")
            continue
        for item in _split_top(body):
            icol = col + body.find(item.strip())
            m = re.fullmatch(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*(?:@\s*(\d+))?\s*", item)
            if not m:
                p.error(ln.no, icol, f"expected a fresh name, found {item.strip()!r}")
                continue
            ident = m.group(1)
            if ident in fresh_owner:
                p.error(ln.no, icol, f"fresh name {ident!r} is declared by both {fresh_owner[ident]} and {role}")
                continue
            if ident in knowledge_vars or ident in knowledge:
                p.error(ln.no, icol, f"fresh name {ident!r} is already part of the initial knowledge")
                continue
            if ident in SIGNATURE or ident == "true":
                p.error(ln.no, icol, f"fresh name {ident!r} collides with a built-in symbol")
                continue
            fresh_owner[ident] = role
            p.declared.add(ident)
            fresh_raw.setdefault(role, []).append((ident, int(m.group(2)) if m.group(2) else None, ln.no, icol))

    # Actions
    steps: list[ActionStep] = []
    step_lines: dict[int, _Line] = {}
    actions_head, action_lines = sections.get("Actions", (None, []))
    steps_ok = True
    for number, ln in enumerate(action_lines, start=1):
        before = len(p.diags)
        step = _parse_step(p, ln, number, knowledge)
        steps_ok = steps_ok and step is not None and len(p.diags) == before
        if step is not None:
            steps.append(step)
            step_lines[step.index] = ln
    # checks that look across steps would only echo a broken step's error
    if not action_lines:
        where = actions_head or lines[-1]
        p.error(where.no, where.indent + 1, "protocol has no steps")

    # fresh creation steps
    fresh: list[tuple[str, tuple[tuple[str, int], ...]]] = []
    for role in roles:
        items = []
        for ident, explicit, lno, lcol in fresh_raw.get(role, []):
            default = default_fresh_step(steps, role, ident)
            step_no = explicit if explicit is not None else default
            if steps_ok and explicit is not None and not any(s.index == explicit and role in (s.sender, s.receiver) for s in steps):
                p.error(lno, lcol, f"fresh name {ident!r} created at step {explicit}, where {role} does not act")
            for s in steps if steps_ok else ():
                if s.index < step_no and ident in variables(s.payload):
                    sl = step_lines[s.index]
                    p.error(sl.no, sl.indent + 1, f"fresh name {ident!r} used at step {s.index} before its creation at step {step_no}")
                    break
            items.append((ident, step_no))
        if items:
            fresh.append((role, tuple(items)))

    spec_fresh = {name: (role, st) for role, items in fresh for name, st in items}
    if steps_ok:
        _check_scoping(p, roles, knowledge, spec_fresh, steps, step_lines)

    # Property
    prop = None
    if "Property" in sections:
        head_ln, body = sections["Property"]
        prop = _parse_property_lines(p, body, head_ln)
    if property_text is not None:
        if prop is not None:
            p.error(sections["Property"][0].no, 1, "exactly one property per protocol: both inline and separate given")
        else:
            sub = _Parser()
            sub.functions = p.functions
            prop = _parse_property_lines(sub, _lines(property_text), None)
            p.diags.extend(replace(d, source="property") for d in sub.diags)
    if prop is not None and steps_ok:
        used = {c.label for s in steps for c in s.claims}
        for label in sorted(claim_labels(prop.formula) - used):
            where = sections.get("Property", (lines[0], []))[0]
            p.error(where.no, where.indent + 1, f"claim label {label!r} in the property is not attached to any step")

    if p.diags:
        raise SpecError(sorted(p.diags, key=lambda d: (d.line, d.col)))
    return ProtocolSpec(
        name=name,
        roles=tuple(roles),
        knowledge=tuple((r, tuple(knowledge[r])) for r in roles),
        pre_shared=tuple(pre_shared),
        fresh=tuple(fresh),
        steps=tuple(steps),
        property=prop,
        functions=tuple(sorted(p.functions.items())),
    )


def _split_colon(ln: _Line) -> tuple[str | None, str, int]:
    m = re.match(r"([A-Za-z_][A-Za-z0-9_]*)\s*:(.*)$", ln.text)
    if not m:
        return None, "", 0
    return m.group(1), m.group(2), ln.indent + 1 + m.start(2)


def _split_top(body: str) -> list[str]:
    parts, depth, cur = [], 0, ""
    for ch in body:
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append(cur)
            cur = ""
        else:
            cur += ch
    parts.append(cur)
    return [x for x in parts if x.strip()]


def default_fresh_step(steps: Iterable[ActionStep], role: str, ident: str) -> int:
    """First step at which ``role`` sends ``ident``, else its first step."""
    steps = list(steps)
    for s in steps:
        if s.sender == role and ident in variables(s.payload):
            return s.index
    for s in steps:
        if role in (s.sender, s.receiver):
            return s.index
    return 1


def _parse_step(p: _Parser, ln: _Line, index: int, knowledge: dict[str, list[Term]]) -> ActionStep | None:
    text = ln.text
    offset = ln.indent
    m = _STEP_PREFIX_RE.match(text)
    if m:
        offset += m.end()
        text = text[m.end():]
    am = re.match(r"([A-Za-z_][A-Za-z0-9_]*)\s*->\s*([A-Za-z_][A-Za-z0-9_]*)\s*:", text)
    if not am:
        p.error(ln.no, offset + 1, "expected '<Sender> -> <Receiver> : <message>'")
        return None
    sender, receiver = am.group(1), am.group(2)
    for role, pos in ((sender, am.start(1)), (receiver, am.start(2))):
        if role not in knowledge:
            p.error(ln.no, offset + pos + 1, f"unknown role {role!r}")
            return None
    if sender == receiver:
        p.error(ln.no, offset + am.start(2) + 1, "sender and receiver must differ")
        return None
    body = text[am.end():]
    body_col = offset + am.end() + 1
    claims_text = None
    if "[" in body:
        cut = body.index("[")
        if not body.rstrip().endswith("]"):
            p.error(ln.no, body_col + cut, "unterminated claim list")
            return None
        claims_text = (body[cut + 1:body.rstrip().rindex("]")], body_col + cut + 1)
        body = body[:cut]
    if not body.strip():
        p.error(ln.no, body_col, "step has an empty message")
        return None
    payload = p.term(body, ln.no, body_col, p.using, payload=True)
    if payload is None:
        return None
    claims: list[StepClaim] = []
    if claims_text is not None:
        ctext, ccol = claims_text
        for item in _split_top(ctext):
            icol = ccol + ctext.find(item)
            lead = len(item) - len(item.lstrip())
            icol += lead
            item = item.strip()
            rm = re.match(r"([A-Za-z_][A-Za-z0-9_]*)\s*:\s*", item)
            role = receiver
            if rm:
                role = rm.group(1)
                if role not in (sender, receiver):
                    p.error(ln.no, icol, f"claim role {role!r} does not take part in step {index}")
                    continue
                icol += rm.end()
                item = item[rm.end():]
            cm = re.match(r"([A-Za-z_][A-Za-z0-9_]*)\s*\((.*)\)\s*$", item)
            if not cm:
                p.error(ln.no, icol, f"expected a claim 'Label(args)', found {item!r}")
                continue
            label = cm.group(1)
            if label not in CLAIM_LABELS:
                p.error(ln.no, icol, f"unknown claim label {label!r}")
                continue
            args = p.term_list(cm.group(2), ln.no, icol + cm.start(2), p.using) if cm.group(2).strip() else []
            claims.append(StepClaim(role, label, tuple(args)))
    return ActionStep(index, sender, receiver, payload, tuple(claims))


def _check_scoping(p, roles, knowledge, fresh, steps, step_lines) -> None:
    """Every variable a role sends or claims must be known to it at that point."""
    known: dict[str, set[str]] = {}
    for r in roles:
        known[r] = {r} | {v for t in knowledge[r] for v in variables(t)} | set(roles)
    for s in steps:
        ln = step_lines[s.index]
        for role in (s.sender, s.receiver):
            known[role] |= {n for n, (owner, st) in fresh.items() if owner == role and st <= s.index}
        for v in sorted(variables(s.payload) - known[s.sender]):
            p.error(ln.no, ln.indent + 1, f"variable {v!r} in step {s.index} is not known to sender {s.sender}")
        known[s.receiver] |= variables(s.payload)
        for c in s.claims:
            for a in c.args:
                for v in sorted(variables(a) - known[c.role]):
                    p.error(ln.no, ln.indent + 1, f"claim {c.label} at step {s.index} uses {v!r}, unknown to {c.role}")


def _parse_property_lines(p: _Parser, body: list[_Line], head: _Line | None) -> Property | None:
    lemma_idx = [i for i, ln in enumerate(body) if ln.text.startswith("lemma")]
    if len(lemma_idx) > 1:
        ln = body[lemma_idx[1]]
        p.error(ln.no, ln.indent + 1, "exactly one property per protocol")
        return None
    if not body:
        where = head
        p.error(where.no if where else 1, 1, "empty property")
        return None
    if not lemma_idx:
        title: list[str] = []
        name = "property"
        formula_lines = body
    else:
        i = lemma_idx[0]
        title = [ln.text for ln in body[:i]]
        lm = re.match(r"lemma\s+([A-Za-z_][A-Za-z0-9_]*)\s*:\s*(.*)$", body[i].text)
        if not lm:
            p.error(body[i].no, body[i].indent + 1, "expected 'lemma <name>:'")
            return None
        name = lm.group(1)
        rest = lm.group(2)
        formula_lines = ([_Line(body[i].no, rest, body[i].indent + lm.start(2))] if rest.strip() else []) + body[i + 1:]
    if not formula_lines:
        where = body[-1]
        p.error(where.no, where.indent + 1, "property has no formula")
        return None
    # join the lines, keeping per-line positions by re-tokenizing each one
    first = formula_lines[0]
    text = "\n".join(ln.text for ln in formula_lines)
    start_line, start_col = first.no, first.indent + 1
    stripped = text.strip()
    if stripped.startswith('"'):
        if not stripped.endswith('"') or len(stripped) < 2:
            p.error(first.no, first.indent + 1, "unterminated formula string")
            return None
        text = text.replace('"', " ", 1)
        text = text[: text.rindex('"')]
    try:
        f = parse_formula(text, CLAIM_LABELS, start_line, start_col, functions=p.functions)
    except FormulaSyntaxError as e:
        # columns on continuation lines are relative to the stripped line
        for ln_no, col, msg in e.diagnostics:
            indent = next((ln.indent for ln in formula_lines if ln.no == ln_no), 0)
            p.error(ln_no, col + (indent if ln_no != start_line else 0), msg)
        return None
    return Property(name, f, tuple(title))


def parse_property(text: str, functions: dict[str, int] | None = None) -> Property:
    """Parse a standalone ``.prop`` file (optional title lines, ``lemma name:``, quoted formula)."""
    p = _Parser()
    p.functions = dict(functions or {})
    prop = _parse_property_lines(p, _lines(text), None)
    if p.diags or prop is None:
        raise SpecError(p.diags or [Diagnostic(1, 1, "empty property")])
    return prop


# ---------------------------------------------------------------------------
# printing


def render(spec: ProtocolSpec) -> str:
    out = [f"Protocol {spec.name}:", ""]
    if spec.functions:
        out += ["Functions:", ", ".join(f"{n}/{a}" for n, a in spec.functions), ""]
    out.append("Knowledge:")
    for role, terms in spec.knowledge:
        out.append(f"{role} : " + ", ".join(format_term(t) for t in terms))
    for ps in spec.pre_shared:
        kind = "symmetric key" if ps.kind == "symmetric-key" else "key pair"
        out.append(f"where {format_term(ps.term)} is a pre shared {kind}")
    out.append("")
    if spec.fresh:
        out.append("Fresh:")
        for role, items in spec.fresh:
            names = []
            for ident, step in items:
                default = default_fresh_step(spec.steps, role, ident)
                names.append(ident if step == default else f"{ident}@{step}")
            out.append(f"{role} : " + ", ".join(names))
        out.append("")
    out.append("Actions:")
    for s in spec.steps:
        line = f"{s.sender} -> {s.receiver} : {format_payload(s.payload)}"
        if s.claims:
            items = [f"{c.role}: {c.label}(" + ", ".join(format_term(a) for a in c.args) + ")" for c in s.claims]
            line += " [" + ", ".join(items) + "]"
        out.append(line)
    if spec.property is not None:
        out += ["", "Property:"]
        out += list(spec.property.title)
        out.append(f"lemma {spec.property.name}:")
        out.append(f'"{format_formula(spec.property.formula)}"')
    return "\n".join(out) + "\n"


def render_property(prop: Property) -> str:
    return "\n".join([*prop.title, f"lemma {prop.name}:", f'"{format_formula(prop.formula)}"']) + "\n"


__all__ = [
    "ActionStep", "Diagnostic", "PreShared", "Property", "ProtocolSpec", "SpecError", "StepClaim",
    "parse_property", "parse_protocol", "render", "render_property",
]

