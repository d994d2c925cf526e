"""Anchor expressions: where an annotation attaches.

An anchor is a triple ``(subject, dim1, dim2)``; each part is empty (λ), a
fact/measure reference, or a dimension path. A leading context id on the
subject makes the anchor LOCAL to that analysis context; otherwise it is
GLOBAL and names schema concepts.

Grammar (spaces optional, λ also spellable ``lambda``)::

    anchor  := "(" part "," part "," part ")"
    part    := LAMBDA | subject | dimref      # position 1: subject, 2-3: dimref
    subject := [ ctxid "." ] NAME [ "/" measure [ "=" literal ] ]
    measure := NAME | AGG "(" NAME ")"
    dimref  := NAME [ "." NAME ( "/" NAME [ "=" literal ] )* ]
    literal := number | "'" chars "'"

Anchors keep the author's capitalization; names are checked against the
constellation case-insensitively and mapped to schema spelling only when the
anchor is resolved against a context tree.
"""

from __future__ import annotations

import datetime as _dt
import re
from dataclasses import dataclass

from .context import AGGREGATIONS, format_literal
from .errors import AnchorSyntaxError, UnknownNameError
from .schema import Constellation

_NAME_RE = re.compile(r"[A-Za-z][A-Za-z0-9_]*")
_NUMBER_RE = re.compile(r"-?\d+(\.\d+)?")
_CTXID_RE = re.compile(r"^CA\d+$")


@dataclass(frozen=True)
class SubjectAnchor:
    context_ref: str | None
    fact: str
    measure: str | None = None
    agg: str | None = None
    value: object = None

    def text(self) -> str:
        out = f"{self.context_ref}." if self.context_ref else ""
        out += self.fact
        if self.measure is not None:
            ref = f"{self.agg}({self.measure})" if self.agg else self.measure
            out += f"/{ref}"
            if self.value is not None:
                out += f"={format_literal(self.value)}"
        return out


@dataclass(frozen=True)
class DimAnchor:
    dimension: str
    hierarchy: str | None = None
    levels: tuple = ()

    def text(self) -> str:
        out = self.dimension
        if self.hierarchy is not None:
            out += f".{self.hierarchy}"
            for param, pos in self.levels:
                out += f"/{param}"
                if pos is not None:
                    out += f"={format_literal(pos)}"
        return out


@dataclass(frozen=True)
class Anchor:
    subject: SubjectAnchor | None
    dim1: DimAnchor | None
    dim2: DimAnchor | None

    @property
    def is_local(self) -> bool:
        return self.subject is not None and self.subject.context_ref is not None


def format_anchor(a: Anchor) -> str:
    """Canonical text; ``parse_anchor(format_anchor(a)) == a`` for valid anchors."""
    parts = [
        a.subject.text() if a.subject else "λ",
        a.dim1.text() if a.dim1 else "λ",
        a.dim2.text() if a.dim2 else "λ",
    ]
    return "(" + ", ".join(parts) + ")"


class _Scanner:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def error(self, message: str):
        raise AnchorSyntaxError(message, self.pos)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def accept(self, ch: str) -> bool:
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def name(self) -> str:
        self.skip_ws()
        m = _NAME_RE.match(self.text, self.pos)
        if not m:
            self.error("expected a name")
        self.pos = m.end()
        return m.group()

    def literal(self):
        self.skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] == "'":
            end = self.text.find("'", self.pos + 1)
            if end < 0:
                self.error("unterminated string literal")
            value = self.text[self.pos + 1 : end]
            self.pos = end + 1
            return value
        m = _NUMBER_RE.match(self.text, self.pos)
        if not m:
            self.error("expected a literal")
        self.pos = m.end()
        return float(m.group()) if m.group(1) else int(m.group())

    def at_end(self) -> bool:
        self.skip_ws()
        return self.pos >= len(self.text)


def _is_lambda(s: _Scanner) -> bool:
    if s.peek() == "λ":
        s.pos += 1
        return True
    m = _NAME_RE.match(s.text, s.pos)
    if m and m.group().lower() == "lambda":
        s.pos = m.end()
        return True
    return False


def parse_anchor(c: Constellation, text: str) -> Anchor:
    """Parse and resolve one anchor expression against the constellation."""
    s = _Scanner(text)
    s.expect("(")
    subject = None if _is_lambda(s) else _parse_subject(s, c)
    s.expect(",")
    dim1 = None if _is_lambda(s) else _parse_dimref(s, c)
    s.expect(",")
    dim2 = None if _is_lambda(s) else _parse_dimref(s, c)
    s.expect(")")
    if not s.at_end():
        s.error("trailing characters after anchor")
    if subject is None and dim1 is None and dim2 is None:
        raise AnchorSyntaxError("empty anchor: all three parts are λ", 0)
    return Anchor(subject=subject, dim1=dim1, dim2=dim2)


def _parse_subject(s: _Scanner, c: Constellation) -> SubjectAnchor:
    first = s.name()
    context_ref = None
    fact_name = first
    if s.accept("."):
        context_ref = first
        fact_name = s.name()
    fact = c.fact_ci(fact_name)

    measure = agg = value = None
    if s.accept("/"):
        ref = s.name()
        if s.accept("("):
            if ref.upper() not in AGGREGATIONS:
                s.error(f"unknown aggregation {ref!r}")
            agg = ref.upper()
            measure = s.name()
            s.expect(")")
        else:
            measure = ref
        fact.measure_ci(measure)
        if s.accept("="):
            value = s.literal()
    return SubjectAnchor(context_ref=context_ref, fact=fact_name, measure=measure, agg=agg, value=value)


def _parse_dimref(s: _Scanner, c: Constellation) -> DimAnchor:
    dim_name = s.name()
    dim = c.dimension_ci(dim_name)
    hierarchy = None
    levels = []
    if s.accept("."):
        hier_name = s.name()
        hier = dim.hierarchy_ci(hier_name)
        hierarchy = hier_name
        while s.accept("/"):
            param_name = s.name()
            attr = dim.attribute_ci(param_name)
            if attr.name not in hier.params:
                raise UnknownNameError(f"{attr.name} is not a parameter of hierarchy {hier.name}")
            pos = None
            if s.accept("="):
                pos = s.literal()
                _check_position_kind(attr.kind, pos, s)
            levels.append((param_name, pos))
    return DimAnchor(dimension=dim_name, hierarchy=hierarchy, levels=tuple(levels))


def _check_position_kind(kind: str, pos, s: _Scanner):
    ok = (
        (kind == "string" and isinstance(pos, str))
        or (kind == "integer" and isinstance(pos, int))
        or (kind == "decimal" and isinstance(pos, (int, float)))
        or (kind == "date" and isinstance(pos, str) and _parses_as_date(pos))
    )
    if not ok:
        s.error(f"position {pos!r} does not match attribute kind {kind}")


def _parses_as_date(text: str) -> bool:
    try:
        _dt.date.fromisoformat(text)
        return True
    except ValueError:
        return False


def anchor_concepts(c: Constellation, a: Anchor) -> dict:
    """Schema-cased concept labels a GLOBAL anchor requires in a context tree.

    Returns ``{"nodes": [...], "measure": name | None, "measure_value": ...}``;
    the measure entry matches any displayed aggregation when the anchor wrote
    a bare measure name.
    """
    nodes: list[str] = []
    measure = None
    measure_agg = None
    measure_value = None
    if a.subject is not None:
        fact = c.fact_ci(a.subject.fact)
        nodes.append(f"fact:{fact.name}")
        if a.subject.measure is not None:
            measure = fact.measure_ci(a.subject.measure).name
            measure_agg = a.subject.agg
            measure_value = a.subject.value
    for ref in (a.dim1, a.dim2):
        if ref is None:
            continue
        dim = c.dimension_ci(ref.dimension)
        nodes.append(f"dim:{dim.name}")
        if ref.hierarchy is not None:
            hier = dim.hierarchy_ci(ref.hierarchy)
            nodes.append(f"hier:{hier.name}")
            for param, _pos in ref.levels:
                nodes.append(f"param:{dim.attribute_ci(param).name}")
    return {
        "nodes": nodes,
        "measure": measure,
        "measure_agg": measure_agg,
        "measure_value": measure_value,
    }
