"""User preferences and contextual candidacy.

A preference orders structure elements (measures, parameters of one
dimension, facts, dimensions, or hierarchies of one dimension) or value
predicates, scoped by a preference context. An empty context makes the
preference absolute. A preference is a candidate for an analysis context
when its context tree is totally covered: every labeled edge of the
preference-context tree appears in the analysis-context tree.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .context import (
    AnalysisContext,
    Restriction,
    build_context_tree,
    make_restriction,
    to_tree,
    tree_edges,
)
from .errors import StoreError, UnknownNameError
from .schema import Constellation

STRUCTURE_ROLES = ("measure", "parameter", "fact", "dimension", "hierarchy")


@dataclass(frozen=True)
class StructureRef:
    """A schema element named by a preference order."""

    role: str
    name: str
    owner: str | None = None  # fact of a measure, dimension of a parameter/hierarchy

    @property
    def text(self) -> str:
        if self.role == "measure":
            return f"{self.owner}/{self.name}"
        if self.role in ("parameter", "hierarchy"):
            return f"{self.owner}.{self.name}"
        return self.name


@dataclass(frozen=True)
class PreferenceContext:
    """A partial analysis context: optional subject, axis sketches, predicates."""

    fact: str | None = None
    axes: tuple = ()  # (dimension, hierarchy | None, params tuple)
    restrictions: frozenset = frozenset()

    @property
    def is_empty(self) -> bool:
        return self.fact is None and not self.axes and not self.restrictions

    def as_json(self) -> dict:
        out: dict = {}
        if self.fact is not None:
            out["fact"] = self.fact
        if self.axes:
            out["axes"] = [
                {"dim": d, **({"hier": h} if h else {}), **({"params": list(ps)} if ps else {})}
                for d, h, ps in self.axes
            ]
        if self.restrictions:
            out["restrictions"] = [r.as_json() for r in sorted(self.restrictions, key=lambda r: r.canonical_text)]
        return out


@dataclass(frozen=True)
class Preference:
    id: str
    owner: str
    kind: str  # "structure" | "value"
    order: tuple  # StructureRef... or Restriction..., most preferred first
    context: PreferenceContext = field(default_factory=PreferenceContext)

    @property
    def role(self) -> str:
        return self.order[0].role if self.kind == "structure" else "predicate"

    def as_json(self) -> dict:
        return {
            "id": self.id,
            "owner": self.owner,
            "kind": self.kind,
            "order": [e.text if self.kind == "structure" else e.as_json() for e in self.order],
            "context": self.context.as_json(),
        }


def resolve_structure_ref(c: Constellation, text: str) -> StructureRef:
    """Resolve a structure reference: ``FACT/MEASURE``, ``DIM.PARAM``,
    ``DIM.HIER``, a bare fact/dimension name, or a bare unambiguous
    measure/parameter/hierarchy name."""
    if "/" in text:
        fact_name, m = text.split("/", 1)
        fact = c.fact(fact_name)
        if fact is None or fact.measure(m) is None:
            raise UnknownNameError(f"unknown measure reference: {text}")
        return StructureRef(role="measure", name=m, owner=fact_name)
    if "." in text:
        dim_name, member = text.split(".", 1)
        dim = c.dimension(dim_name)
        if dim is None:
            raise UnknownNameError(f"unknown dimension: {dim_name}")
        if dim.hierarchy(member) is not None:
            return StructureRef(role="hierarchy", name=member, owner=dim_name)
        if dim.attribute(member) is not None:
            return StructureRef(role="parameter", name=member, owner=dim_name)
        raise UnknownNameError(f"unknown member {member} of dimension {dim_name}")
    if c.fact(text) is not None:
        return StructureRef(role="fact", name=text)
    if c.dimension(text) is not None:
        return StructureRef(role="dimension", name=text)
    hits = []
    for f in c.facts:
        if f.measure(text) is not None:
            hits.append(StructureRef(role="measure", name=text, owner=f.name))
    for d in c.dimensions:
        if d.attribute(text) is not None:
            hits.append(StructureRef(role="parameter", name=text, owner=d.name))
        if d.hierarchy(text) is not None:
            hits.append(StructureRef(role="hierarchy", name=text, owner=d.name))
    if len(hits) == 1:
        return hits[0]
    if len(hits) > 1:
        raise UnknownNameError(f"ambiguous structure reference: {text}")
    raise UnknownNameError(f"unknown structure reference: {text}")


def _validate_order(c: Constellation, kind: str, order: tuple):
    if not order:
        raise StoreError("a preference needs at least one ordered element")
    if len(set(order)) != len(order):
        raise StoreError("preference order has duplicate elements")
    if kind == "value":
        if not all(isinstance(e, Restriction) for e in order):
            raise StoreError("a value preference orders predicates only")
        return
    if kind != "structure":
        raise StoreError(f"unknown preference kind: {kind}")
    if not all(isinstance(e, StructureRef) for e in order):
        raise StoreError("a structure preference orders schema elements only")
    for e in order:
        # Re-resolve so programmatically built refs are named-checked too.
        resolve_structure_ref(c, e.text)
    roles = {e.role for e in order}
    if len(roles) != 1:
        raise StoreError(f"mixed category preference order: {sorted(roles)}")
    role = next(iter(roles))
    if role in ("parameter", "hierarchy") and len({e.owner for e in order}) != 1:
        raise StoreError(f"all ordered {role}s must belong to one dimension")
    if role == "measure" and len({e.owner for e in order}) != 1:
        raise StoreError("all ordered measures must belong to one fact")


def preference_context_tree(c: Constellation, pc: PreferenceContext):
    """Tree rendering of a preference context, built with the context-tree
    rules, absent parts omitted."""
    axes = [(d, h, ps or (), lambda p: ()) for d, h, ps in pc.axes]
    return build_context_tree(c, pc.fact, (), axes, pc.restrictions)


def covers(pc: PreferenceContext, ctx: AnalysisContext) -> bool:
    """Total coverage: every edge of the preference-context tree is an edge
    of the analysis-context tree.

    Fact and dimension nodes only ever occur as root children, so the
    node-presence cases (subject-only or bare-dimension contexts) are decided
    by their root edge; the empty context has no edges and covers everything.
    """
    return tree_edges(preference_context_tree(ctx.constellation, pc)) <= tree_edges(to_tree(ctx))


class PreferenceStore:
    """Per-owner preference collection over one constellation."""

    def __init__(self, constellation: Constellation, path: str | Path | None = None):
        self.constellation = constellation
        self.path = Path(path) if path else None
        self._items: list[Preference] = []
        self._by_id: dict[str, Preference] = {}
        self._counter = 0
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self._load()

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def get(self, preference_id: str) -> Preference:
        try:
            return self._by_id[preference_id]
        except KeyError:
            raise StoreError(f"unknown preference: {preference_id}") from None

    def add(
        self,
        owner: str,
        kind: str,
        order,
        context: PreferenceContext | None = None,
        preference_id: str | None = None,
    ) -> Preference:
        order = tuple(order)
        _validate_order(self.constellation, kind, order)
        context = context or PreferenceContext()
        self._validate_context(context)
        with self._lock:
            if preference_id is None:
                self._counter += 1
                preference_id = f"P{self._counter}"
            elif preference_id in self._by_id:
                raise StoreError(f"duplicate preference id: {preference_id}")
            item = Preference(id=preference_id, owner=owner, kind=kind, order=order, context=context)
            self._items.append(item)
            self._by_id[item.id] = item
            if self.path:
                self._save()
        return item

    def remove(self, preference_id: str):
        item = self.get(preference_id)
        with self._lock:
            self._items.remove(item)
            del self._by_id[preference_id]
            if self.path:
                self._save()

    def by_owner(self, owner: str) -> list[Preference]:
        return [p for p in self._items if p.owner == owner]

    def candidates(self, ctx: AnalysisContext, owner: str | None = None) -> list[Preference]:
        """Preferences whose context is totally covered by ``ctx``, id order."""
        pool = self._items if owner is None else self.by_owner(owner)
        hits = [p for p in pool if covers(p.context, ctx)]
        return sorted(hits, key=lambda p: _id_sort_key(p.id))

    def _validate_context(self, pc: PreferenceContext):
        c = self.constellation
        if pc.fact is not None and c.fact(pc.fact) is None:
            raise UnknownNameError(f"unknown fact in preference context: {pc.fact}")
        for d, h, ps in pc.axes:
            dim = c.dimension(d)
            if dim is None:
                raise UnknownNameError(f"unknown dimension in preference context: {d}")
            hier = None
            if h is not None:
                hier = dim.hierarchy(h)
                if hier is None:
                    raise UnknownNameError(f"unknown hierarchy in preference context: {h}")
            if ps:
                if hier is None:
                    raise StoreError("preference-context parameters need a hierarchy")
                for p in ps:
                    if not hier.has(p):
                        raise UnknownNameError(f"{p} is not a parameter of hierarchy {h}")
        for r in pc.restrictions:
            # Typing was validated at construction; names must still resolve here.
            make_restriction(c, r.target_text, r.op,
                             list(r.value) if isinstance(r.value, tuple) else r.value)

    # -- persistence ---------------------------------------------------------

    def _save(self):
        lines = [json.dumps(p.as_json(), ensure_ascii=False) for p in self._items]
        self.path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    def _load(self):
        c = self.constellation
        for lineno, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreError(f"{self.path}:{lineno}: malformed preference line: {exc}") from exc
            kind = obj["kind"]
            if kind == "structure":
                order = tuple(resolve_structure_ref(c, t) for t in obj["order"])
            else:
                order = tuple(make_restriction(c, r["target"], r["op"], r["value"]) for r in obj["order"])
            pcx = obj.get("context", {})
            context = PreferenceContext(
                fact=pcx.get("fact"),
                axes=tuple(
                    (a["dim"], a.get("hier"), tuple(a.get("params", [])))
                    for a in pcx.get("axes", [])
                ),
                restrictions=frozenset(
                    make_restriction(c, r["target"], r["op"], r["value"])
                    for r in pcx.get("restrictions", [])
                ),
            )
            _validate_order(c, kind, order)
            self._validate_context(context)
            item = Preference(id=obj["id"], owner=obj["owner"], kind=kind, order=order, context=context)
            if item.id in self._by_id:
                raise StoreError(f"{self.path}:{lineno}: duplicate preference id {item.id}")
            self._items.append(item)
            self._by_id[item.id] = item
            if item.id.startswith("P") and item.id[1:].isdigit():
                self._counter = max(self._counter, int(item.id[1:]))


def _id_sort_key(preference_id: str):
    if preference_id.startswith("P") and preference_id[1:].isdigit():
        return (0, int(preference_id[1:]), preference_id)
    return (1, 0, preference_id)
