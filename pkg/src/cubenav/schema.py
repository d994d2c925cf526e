"""Constellation schema: facts, measures, dimensions, hierarchies, star links.

A constellation is immutable after loading. Annotation and preference stores
are attached to it as references so that one loaded schema carries the whole
personalized workspace.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import SchemaError, SchemaValidationError, UnknownNameError

IDENT_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")

ATTRIBUTE_KINDS = ("string", "integer", "decimal", "date")
MEASURE_KINDS = ("integer", "decimal")


@dataclass(frozen=True)
class Finding:
    """One validation finding; a valid constellation yields no findings."""

    path: str
    rule: str
    message: str

    def as_dict(self) -> dict:
        return {"path": self.path, "rule": self.rule, "message": self.message}


@dataclass(frozen=True)
class Measure:
    name: str
    kind: str = "decimal"


@dataclass(frozen=True)
class Fact:
    name: str
    measures: tuple[Measure, ...]

    def measure(self, name: str) -> Measure | None:
        for m in self.measures:
            if m.name == name:
                return m
        return None

    def measure_ci(self, name: str) -> Measure:
        return _lookup_ci([m.name for m in self.measures], name, f"measure of {self.name}", self.measure)


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str


@dataclass(frozen=True)
class Hierarchy:
    """An ordered chain of parameters from the root id to the coarsest level.

    ``params`` runs root (finest) to extremity (coarsest); the implicit top
    level All is never stored. ``weak`` maps a parameter to the weak
    attributes displayed alongside it.
    """

    name: str
    params: tuple[str, ...]
    weak: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def has(self, param: str) -> bool:
        return param in self.params

    def index(self, param: str) -> int:
        return self.params.index(param)

    def coarsest(self) -> str:
        return self.params[-1]

    def finer(self, a: str, b: str) -> bool:
        """True when ``a`` is a strictly finer graduation than ``b``."""
        return self.index(a) < self.index(b)

    def weak_of(self, param: str) -> tuple[str, ...]:
        for p, attrs in self.weak:
            if p == param:
                return attrs
        return ()


@dataclass(frozen=True)
class Dimension:
    name: str
    id_attr: str
    attributes: tuple[Attribute, ...]
    hierarchies: tuple[Hierarchy, ...]

    @property
    def all_attr(self) -> str:
        # The All level is virtual; it never appears in data or parameter lists.
        return f"ALL_{self.name}"

    def attribute(self, name: str) -> Attribute | None:
        for a in self.attributes:
            if a.name == name:
                return a
        return None

    def attribute_ci(self, name: str) -> Attribute:
        return _lookup_ci([a.name for a in self.attributes], name, f"attribute of {self.name}", self.attribute)

    def hierarchy(self, name: str) -> Hierarchy | None:
        for h in self.hierarchies:
            if h.name == name:
                return h
        return None

    def hierarchy_ci(self, name: str) -> Hierarchy:
        return _lookup_ci([h.name for h in self.hierarchies], name, f"hierarchy of {self.name}", self.hierarchy)

    def parameter_names(self) -> set[str]:
        return {p for h in self.hierarchies for p in h.params}

    def weak_names(self) -> set[str]:
        return {w for h in self.hierarchies for _, attrs in h.weak for w in attrs}


@dataclass(eq=False)
class Constellation:
    """The full multidimensional schema plus its personalization stores.

    ``annotations`` and ``preferences`` are attached once by :func:`load_schema`
    and never replaced; the schema itself is treated as immutable.
    """

    facts: tuple[Fact, ...]
    dimensions: tuple[Dimension, ...]
    star: tuple[tuple[str, tuple[str, ...]], ...]
    annotations: object = field(default=None, repr=False)
    preferences: object = field(default=None, repr=False)

    def fact(self, name: str) -> Fact | None:
        for f in self.facts:
            if f.name == name:
                return f
        return None

    def dimension(self, name: str) -> Dimension | None:
        for d in self.dimensions:
            if d.name == name:
                return d
        return None

    def fact_ci(self, name: str) -> Fact:
        return _lookup_ci([f.name for f in self.facts], name, "fact", self.fact)

    def dimension_ci(self, name: str) -> Dimension:
        return _lookup_ci([d.name for d in self.dimensions], name, "dimension", self.dimension)

    def star_of(self, fact_name: str) -> tuple[str, ...]:
        for f, dims in self.star:
            if f == fact_name:
                return dims
        raise UnknownNameError(f"unknown fact: {fact_name}")

    def owner_dimension_of(self, attr_name: str) -> Dimension | None:
        """Attribute names are disjoint across dimensions, so at most one owner."""
        for d in self.dimensions:
            if d.attribute(attr_name) is not None:
                return d
        return None


def _lookup_ci(names: list[str], wanted: str, what: str, exact):
    """Case-insensitive lookup used by anchors; exact spelling wins when present."""
    hit = exact(wanted)
    if hit is not None:
        return hit
    matches = [n for n in names if n.lower() == wanted.lower()]
    if not matches:
        raise UnknownNameError(f"unknown {what}: {wanted}")
    if len(matches) > 1:
        raise UnknownNameError(f"ambiguous {what}: {wanted} matches {matches}")
    return exact(matches[0])


# ---------------------------------------------------------------------------
# Loading and serialization


def load_schema(document: dict | str | Path) -> Constellation:
    """Build and validate a constellation from a schema document.

    ``document`` may be a parsed dict, a JSON string, or a path to a JSON
    file. Raises :class:`SchemaError` on malformed input and
    :class:`SchemaValidationError` naming the violated invariant otherwise.
    """
    data = _read_document(document)
    constellation = _build(data)
    findings = validate_constellation(constellation)
    if findings:
        raise SchemaValidationError(findings)

    from .annotations import AnnotationStore
    from .preferences import PreferenceStore

    constellation.annotations = AnnotationStore(constellation)
    constellation.preferences = PreferenceStore(constellation)
    return constellation


def _read_document(document: dict | str | Path) -> dict:
    if isinstance(document, dict):
        return document
    if isinstance(document, Path):
        try:
            text = document.read_text(encoding="utf-8")
        except OSError as exc:
            raise SchemaError(f"cannot read schema file {document}: {exc}") from exc
    else:
        text = document
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"malformed schema document: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError("malformed schema document: top level must be an object")
    return data


def _build(data: dict) -> Constellation:
    try:
        facts = tuple(
            Fact(
                name=f["name"],
                measures=tuple(Measure(m["name"], m.get("kind", "decimal")) for m in f["measures"]),
            )
            for f in data.get("facts", [])
        )
        dimensions = tuple(
            Dimension(
                name=d["name"],
                id_attr=d["id"],
                attributes=tuple(Attribute(a["name"], a["kind"]) for a in d["attributes"]),
                hierarchies=tuple(
                    Hierarchy(
                        name=h["name"],
                        params=tuple(h["params"]),
                        weak=tuple((p, tuple(attrs)) for p, attrs in h.get("weak", {}).items()),
                    )
                    for h in d["hierarchies"]
                ),
            )
            for d in data.get("dimensions", [])
        )
        star = tuple((f, tuple(dims)) for f, dims in data.get("star", {}).items())
    except (KeyError, TypeError, AttributeError) as exc:
        raise SchemaError(f"malformed schema document: missing or mistyped field ({exc})") from exc
    return Constellation(facts=facts, dimensions=dimensions, star=star)


def serialize_constellation(c: Constellation) -> dict:
    """Emit the schema file format; ``load_schema(serialize_constellation(c))``
    reproduces ``c`` on every valid constellation."""
    return {
        "facts": [
            {"name": f.name, "measures": [{"name": m.name, "kind": m.kind} for m in f.measures]}
            for f in c.facts
        ],
        "dimensions": [
            {
                "name": d.name,
                "id": d.id_attr,
                "attributes": [{"name": a.name, "kind": a.kind} for a in d.attributes],
                "hierarchies": [
                    {
                        "name": h.name,
                        "params": list(h.params),
                        "weak": {p: list(attrs) for p, attrs in h.weak},
                    }
                    for h in d.hierarchies
                ],
            }
            for d in c.dimensions
        ],
        "star": {f: list(dims) for f, dims in c.star},
    }


# ---------------------------------------------------------------------------
# Validation


def validate_constellation(c: Constellation) -> list[Finding]:
    """Check every schema invariant; findings are data, never raised."""
    findings: list[Finding] = []
    out = findings.append

    def check_ident(path: str, name: str):
        if not isinstance(name, str) or not IDENT_RE.match(name):
            out(Finding(path, "identifier", f"name {name!r} is not a valid identifier"))

    seen_facts: set[str] = set()
    for f in c.facts:
        path = f"fact:{f.name}"
        check_ident(path, f.name)
        if f.name in seen_facts:
            out(Finding(path, "duplicate fact", f"fact {f.name} declared twice"))
        seen_facts.add(f.name)
        if not f.measures:
            out(Finding(path, "empty measures", "a fact needs at least one measure"))
        seen_measures: set[str] = set()
        for m in f.measures:
            mpath = f"{path}/measure:{m.name}"
            check_ident(mpath, m.name)
            if m.name in seen_measures:
                out(Finding(mpath, "duplicate measure", f"measure {m.name} declared twice in {f.name}"))
            seen_measures.add(m.name)
            if m.kind not in MEASURE_KINDS:
                out(Finding(mpath, "measure kind", f"kind {m.kind!r} is not numeric"))

    seen_dims: set[str] = set()
    attr_owner: dict[str, str] = {}
    hier_owner: dict[str, str] = {}
    for d in c.dimensions:
        path = f"dimension:{d.name}"
        check_ident(path, d.name)
        if d.name in seen_dims:
            out(Finding(path, "duplicate dimension", f"dimension {d.name} declared twice"))
        seen_dims.add(d.name)
        if d.name in seen_facts:
            out(Finding(path, "namespace collision", f"{d.name} names both a fact and a dimension"))

        declared: set[str] = set()
        for a in d.attributes:
            apath = f"{path}/attribute:{a.name}"
            check_ident(apath, a.name)
            if a.name in declared:
                out(Finding(apath, "duplicate attribute", f"attribute {a.name} declared twice in {d.name}"))
            declared.add(a.name)
            if a.kind not in ATTRIBUTE_KINDS:
                out(Finding(apath, "attribute kind", f"kind {a.kind!r} is not one of {ATTRIBUTE_KINDS}"))
            if a.name in attr_owner and attr_owner[a.name] != d.name:
                out(
                    Finding(
                        apath,
                        "attribute disjointness",
                        f"attribute {a.name} declared in both {attr_owner[a.name]} and {d.name}",
                    )
                )
            attr_owner.setdefault(a.name, d.name)

        if d.attribute(d.id_attr) is None:
            out(Finding(path, "id attribute", f"id attribute {d.id_attr} is not declared in {d.name}"))

        if not d.hierarchies:
            out(Finding(path, "empty hierarchies", "a dimension needs at least one hierarchy"))

        seen_hiers: set[str] = set()
        for h in d.hierarchies:
            hpath = f"{path}/hierarchy:{h.name}"
            check_ident(hpath, h.name)
            if h.name in seen_hiers:
                out(Finding(hpath, "duplicate hierarchy", f"hierarchy {h.name} declared twice in {d.name}"))
            seen_hiers.add(h.name)
            if h.name in hier_owner and hier_owner[h.name] != d.name:
                out(
                    Finding(
                        hpath,
                        "hierarchy disjointness",
                        f"hierarchy {h.name} declared in both {hier_owner[h.name]} and {d.name}",
                    )
                )
            hier_owner.setdefault(h.name, d.name)

            if not h.params:
                out(Finding(hpath, "empty hierarchy", "a hierarchy needs at least one parameter"))
                continue
            if len(set(h.params)) != len(h.params):
                out(Finding(hpath, "total order violated", f"parameter list {list(h.params)} has duplicates"))
            if h.params[0] != d.id_attr:
                out(
                    Finding(
                        hpath,
                        "root parameter",
                        f"hierarchy must start at the id attribute {d.id_attr}, got {h.params[0]}",
                    )
                )
            for p in h.params:
                if d.attribute(p) is None:
                    out(Finding(hpath, "unknown parameter", f"parameter {p} is not an attribute of {d.name}"))
            for p, attrs in h.weak:
                if p not in h.params:
                    out(Finding(hpath, "weak key", f"weak mapping key {p} is not a parameter of {h.name}"))
                for w in attrs:
                    if d.attribute(w) is None:
                        out(Finding(hpath, "unknown weak attribute", f"weak attribute {w} is not declared in {d.name}"))

        params = d.parameter_names()
        weaks = d.weak_names()
        for name in sorted(params & weaks):
            out(
                Finding(
                    f"{path}/attribute:{name}",
                    "parameter weak disjointness",
                    f"attribute {name} is used both as a parameter and as a weak attribute",
                )
            )
        for a in d.attributes:
            if a.name not in params and a.name not in weaks:
                out(
                    Finding(
                        f"{path}/attribute:{a.name}",
                        "unassigned attribute",
                        f"attribute {a.name} belongs to no hierarchy (neither parameter nor weak)",
                    )
                )

    star_facts = {f for f, _ in c.star}
    for f, dims in c.star:
        path = f"star:{f}"
        if c.fact(f) is None:
            out(Finding(path, "unknown fact in star", f"star key {f} is not a declared fact"))
        for dn in dims:
            if c.dimension(dn) is None:
                out(Finding(path, "unknown dimension in star", f"star entry {dn} is not a declared dimension"))
    for f in c.facts:
        if f.name not in star_facts:
            out(Finding(f"star:{f.name}", "star missing fact", f"fact {f.name} has no star entry"))

    return findings
