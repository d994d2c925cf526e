"""Analysis contexts and the navigation operations that transform them.

A context is an immutable value: the analyzed fact with its displayed
measures, one or two dimension axes, and a set of restriction predicates.
Every operation returns a fresh context with a new id drawn from a
:class:`ContextIds` counter; inputs are never mutated.

Contexts render as labeled trees (``to_tree``). Tree equality is the identity
notion used throughout (ids excluded); the edge set of a tree is the coverage
currency shared with preference contexts.
"""

from __future__ import annotations

import datetime as _dt
import itertools
import threading
from dataclasses import dataclass, field, replace
from decimal import Decimal

from .errors import OperationError, PredicateTypeError, UnknownNameError
from .schema import Constellation, Dimension, Hierarchy

AGGREGATIONS = ("SUM", "AVG", "MIN", "MAX", "COUNT")
COMPARATORS = ("=", "!=", "<", "<=", ">", ">=", "IN")

# Accepted spellings for comparator input; canonical form is ASCII.
_COMPARATOR_ALIASES = {"≠": "!=", "≤": "<=", "≥": ">=", "in": "IN"}


class ContextIds:
    """Monotonic ``CA<n>`` id source; one per session, updated atomically."""

    def __init__(self, start: int = 1):
        self._counter = itertools.count(start)
        self._lock = threading.Lock()

    def next(self) -> str:
        with self._lock:
            return f"CA{next(self._counter)}"


@dataclass(frozen=True)
class DisplayedMeasure:
    agg: str
    measure: str

    @property
    def label(self) -> str:
        return f"{self.agg}({self.measure})"


@dataclass(frozen=True)
class AxisSpec:
    """One analysis axis: a hierarchy of a dimension with the displayed levels.

    ``params`` is ordered coarse to fine (the outermost header level first);
    ``weak`` pairs each displayed parameter with the weak attributes shown
    next to it.
    """

    dimension: str
    hierarchy: str
    params: tuple[str, ...]
    weak: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def weak_of(self, param: str) -> tuple[str, ...]:
        for p, attrs in self.weak:
            if p == param:
                return attrs
        return ()

    @property
    def finest(self) -> str:
        return self.params[-1]


@dataclass(frozen=True)
class Restriction:
    """A typed predicate on a measure (owner = fact) or attribute (owner = dimension)."""

    owner: str
    prop: str
    is_measure: bool
    op: str
    value: object

    @property
    def target_text(self) -> str:
        sep = "/" if self.is_measure else "."
        return f"{self.owner}{sep}{self.prop}"

    @property
    def canonical_text(self) -> str:
        return f"{self.prop} {self.op} {format_literal(self.value)}"

    def as_json(self) -> dict:
        return {"target": self.target_text, "op": self.op, "value": _json_literal(self.value)}


def format_literal(value: object) -> str:
    if isinstance(value, tuple):
        return "(" + ", ".join(format_literal(v) for v in value) + ")"
    if isinstance(value, str):
        return f"'{value}'"
    if isinstance(value, _dt.date):
        return value.isoformat()
    if isinstance(value, Decimal):
        return str(value)
    return repr(value)


def _json_literal(value: object) -> object:
    if isinstance(value, tuple):
        return [_json_literal(v) for v in value]
    if isinstance(value, _dt.date):
        return value.isoformat()
    if isinstance(value, Decimal):
        return float(value)
    return value


def _coerce_decimal(v: object):
    if isinstance(v, Decimal):
        return v
    if isinstance(v, (int, float)) and not isinstance(v, bool):
        return Decimal(str(v))
    return None


_KIND_COERCERS = {
    "string": lambda v: v if isinstance(v, str) else None,
    "integer": lambda v: v if isinstance(v, int) and not isinstance(v, bool) else None,
    "decimal": _coerce_decimal,
    "date": lambda v: _coerce_date(v),
}


def _coerce_date(v: object):
    if isinstance(v, _dt.date):
        return v
    if isinstance(v, str):
        try:
            return _dt.date.fromisoformat(v)
        except ValueError:
            return None
    return None


def coerce_value(kind: str, value: object):
    """Coerce a raw literal to the attribute/measure kind, or raise."""
    coerced = _KIND_COERCERS[kind](value)
    if coerced is None:
        raise PredicateTypeError(f"value {value!r} does not match kind {kind}")
    return coerced


def make_restriction(c: Constellation, target: str, op: str, value: object) -> Restriction:
    """Build a typed restriction from its wire form.

    ``target`` is ``FACT/MEASURE`` or ``DIMENSION.ATTRIBUTE``; the operand is
    coerced to the declared kind (a list for ``IN``).
    """
    op = _COMPARATOR_ALIASES.get(op, op)
    if op not in COMPARATORS:
        raise OperationError(f"unknown comparator: {op}")
    if "/" in target:
        owner, prop = target.split("/", 1)
        fact = c.fact(owner)
        if fact is None:
            raise UnknownNameError(f"unknown fact: {owner}")
        measure = fact.measure(prop)
        if measure is None:
            raise UnknownNameError(f"unknown measure: {prop} of {owner}")
        kind, is_measure = measure.kind, True
    elif "." in target:
        owner, prop = target.split(".", 1)
        dim = c.dimension(owner)
        if dim is None:
            raise UnknownNameError(f"unknown dimension: {owner}")
        attr = dim.attribute(prop)
        if attr is None:
            raise UnknownNameError(f"unknown attribute: {prop} of {owner}")
        kind, is_measure = attr.kind, False
    else:
        raise OperationError(f"restriction target must be FACT/MEASURE or DIM.ATTR, got {target!r}")

    if op == "IN":
        if not isinstance(value, (list, tuple, set, frozenset)) or not value:
            raise PredicateTypeError("IN needs a non-empty list of values")
        coerced = tuple(sorted((coerce_value(kind, v) for v in value), key=lambda x: (str(type(x)), x)))
    else:
        coerced = coerce_value(kind, value)
    return Restriction(owner=owner, prop=prop, is_measure=is_measure, op=op, value=coerced)


@dataclass(frozen=True)
class AnalysisContext:
    constellation: Constellation = field(compare=False, repr=False)
    context_id: str = field(compare=False)
    fact: str = ""
    measures: tuple[DisplayedMeasure, ...] = ()
    axes: tuple[AxisSpec, ...] = ()
    restrictions: frozenset[Restriction] = frozenset()
    # Index of the axis touched by the latest axis-changing operation; used
    # when a preference must pick an axis to replace.
    last_axis: int = field(default=0, compare=False)
    ids: ContextIds = field(default=None, compare=False, repr=False)

    def axis_index(self, dimension: str) -> int | None:
        for i, axis in enumerate(self.axes):
            if axis.dimension == dimension:
                return i
        return None

    def axis_for(self, dimension: str) -> AxisSpec:
        i = self.axis_index(dimension)
        if i is None:
            raise OperationError(f"dimension {dimension} is not on an axis")
        return self.axes[i]

    def as_json(self) -> dict:
        return {
            "id": self.context_id,
            "fact": self.fact,
            "measures": [{"agg": m.agg, "measure": m.measure} for m in self.measures],
            "axes": [
                {
                    "dim": a.dimension,
                    "hier": a.hierarchy,
                    "params": list(a.params),
                    "weak": {p: list(attrs) for p, attrs in a.weak if attrs},
                }
                for a in self.axes
            ],
            "restrictions": [r.as_json() for r in sorted(self.restrictions, key=lambda r: (r.target_text, r.op, str(r.value)))],
        }


# ---------------------------------------------------------------------------
# Operations


def _displayed_axis(dim: Dimension, hier: Hierarchy, params: tuple[str, ...]) -> AxisSpec:
    # Whenever a parameter becomes displayed, all its weak attributes come along.
    return AxisSpec(
        dimension=dim.name,
        hierarchy=hier.name,
        params=params,
        weak=tuple((p, hier.weak_of(p)) for p in params),
    )


def display(
    c: Constellation,
    fact: str,
    measures: list[tuple[str, str]],
    axes: list[tuple[str, str]],
    ids: ContextIds | None = None,
) -> AnalysisContext:
    """Open a fresh context: each axis starts at its coarsest stored level."""
    f = c.fact(fact)
    if f is None:
        raise UnknownNameError(f"unknown fact: {fact}")
    if not measures:
        raise OperationError("display needs at least one measure")
    seen: set[tuple[str, str]] = set()
    displayed = []
    for agg, m in measures:
        if agg not in AGGREGATIONS:
            raise OperationError(f"unknown aggregation: {agg}")
        if f.measure(m) is None:
            raise UnknownNameError(f"unknown measure: {m} of {fact}")
        if (agg, m) in seen:
            raise OperationError(f"duplicate measure {agg}({m})")
        seen.add((agg, m))
        displayed.append(DisplayedMeasure(agg, m))
    if not 1 <= len(axes) <= 2:
        raise OperationError("display needs one or two axes")
    star = c.star_of(fact)
    specs = []
    used_dims: set[str] = set()
    for dim_name, hier_name in axes:
        dim = c.dimension(dim_name)
        if dim is None:
            raise UnknownNameError(f"unknown dimension: {dim_name}")
        if dim_name not in star:
            raise OperationError(f"dimension {dim_name} is not linked to fact {fact}")
        if dim_name in used_dims:
            raise OperationError(f"dimension {dim_name} appears on two axes")
        used_dims.add(dim_name)
        hier = dim.hierarchy(hier_name)
        if hier is None:
            raise UnknownNameError(f"unknown hierarchy: {hier_name} of {dim_name}")
        specs.append(_displayed_axis(dim, hier, (hier.coarsest(),)))
    ids = ids or ContextIds()
    return AnalysisContext(
        constellation=c,
        context_id=ids.next(),
        fact=fact,
        measures=tuple(displayed),
        axes=tuple(specs),
        restrictions=frozenset(),
        last_axis=len(specs) - 1,
        ids=ids,
    )


def drilldown(ctx: AnalysisContext, dim: str, param: str) -> AnalysisContext:
    """Append a strictly finer level (and its weak attributes) to an axis."""
    i = ctx.axis_index(dim)
    if i is None:
        raise OperationError(f"dimension {dim} is not on an axis")
    axis = ctx.axes[i]
    d = ctx.constellation.dimension(dim)
    hier = d.hierarchy(axis.hierarchy)
    if not hier.has(param):
        raise OperationError(f"parameter {param} is not in hierarchy {hier.name}")
    if not hier.finer(param, axis.finest):
        raise OperationError(f"parameter {param} is not finer than {axis.finest}")
    new_axis = _displayed_axis(d, hier, axis.params + (param,))
    axes = ctx.axes[:i] + (new_axis,) + ctx.axes[i + 1 :]
    return replace(ctx, context_id=ctx.ids.next(), axes=axes, last_axis=i)


def rollup(ctx: AnalysisContext, dim: str, param: str) -> AnalysisContext:
    """Remove every displayed level strictly finer than ``param``."""
    i = ctx.axis_index(dim)
    if i is None:
        raise OperationError(f"dimension {dim} is not on an axis")
    axis = ctx.axes[i]
    d = ctx.constellation.dimension(dim)
    hier = d.hierarchy(axis.hierarchy)
    if param in axis.params:
        kept = tuple(p for p in axis.params if not hier.finer(p, param))
    elif hier.has(param) and param == hier.coarsest():
        # Rolling past everything displayed lands back on the coarsest level.
        kept = (param,)
    else:
        raise OperationError(f"parameter {param} is not displayed on axis {dim}")
    new_axis = _displayed_axis(d, hier, kept)
    axes = ctx.axes[:i] + (new_axis,) + ctx.axes[i + 1 :]
    return replace(ctx, context_id=ctx.ids.next(), axes=axes, last_axis=i)


def rotate(ctx: AnalysisContext, dim_old: str, dim_new: str, hier_new: str) -> AnalysisContext:
    """Swap one axis for another dimension, restarting at its coarsest level.

    Restrictions on the outgoing dimension are dropped: they reference
    attributes no longer reachable from the context.
    """
    i = ctx.axis_index(dim_old)
    if i is None:
        raise OperationError(f"dimension {dim_old} is not on an axis")
    c = ctx.constellation
    if dim_new not in c.star_of(ctx.fact):
        raise OperationError(f"dimension {dim_new} is not linked to fact {ctx.fact}")
    j = ctx.axis_index(dim_new)
    if j is not None and j != i:
        raise OperationError(f"dimension {dim_new} is already displayed")
    d = c.dimension(dim_new)
    if d is None:
        raise UnknownNameError(f"unknown dimension: {dim_new}")
    hier = d.hierarchy(hier_new)
    if hier is None:
        raise UnknownNameError(f"unknown hierarchy: {hier_new} of {dim_new}")
    new_axis = _displayed_axis(d, hier, (hier.coarsest(),))
    axes = ctx.axes[:i] + (new_axis,) + ctx.axes[i + 1 :]
    restrictions = frozenset(r for r in ctx.restrictions if r.is_measure or r.owner != dim_old)
    return replace(ctx, context_id=ctx.ids.next(), axes=axes, restrictions=restrictions, last_axis=i)


def add_measure(ctx: AnalysisContext, agg: str, measure: str, position: int) -> AnalysisContext:
    f = ctx.constellation.fact(ctx.fact)
    if agg not in AGGREGATIONS:
        raise OperationError(f"unknown aggregation: {agg}")
    if f.measure(measure) is None:
        raise UnknownNameError(f"unknown measure: {measure} of {ctx.fact}")
    if any(m.agg == agg and m.measure == measure for m in ctx.measures):
        raise OperationError(f"duplicate measure {agg}({measure})")
    measures = list(ctx.measures)
    measures.insert(position, DisplayedMeasure(agg, measure))
    return replace(ctx, context_id=ctx.ids.next(), measures=tuple(measures))


def restrict(ctx: AnalysisContext, predicate: Restriction) -> AnalysisContext:
    """Add a predicate; any star dimension of the fact is a legal target."""
    c = ctx.constellation
    if predicate.is_measure:
        if predicate.owner != ctx.fact:
            raise OperationError(f"measure restriction targets {predicate.owner}, context analyzes {ctx.fact}")
    else:
        if predicate.owner not in c.star_of(ctx.fact):
            raise OperationError(f"dimension {predicate.owner} is not linked to fact {ctx.fact}")
    # Re-validate typing against this constellation (predicates travel as values).
    make_restriction(c, predicate.target_text, predicate.op,
                     list(predicate.value) if isinstance(predicate.value, tuple) else predicate.value)
    return replace(ctx, context_id=ctx.ids.next(), restrictions=ctx.restrictions | {predicate})


# ---------------------------------------------------------------------------
# Tree rendering


@dataclass
class TreeNode:
    label: str
    children: list["TreeNode"] = field(default_factory=list)

    def child(self, label: str) -> "TreeNode":
        node = TreeNode(label)
        self.children.append(node)
        return node

    def as_json(self) -> dict:
        return {"label": self.label, "children": [c.as_json() for c in self.children]}


def tree_equal(a: TreeNode, b: TreeNode) -> bool:
    if a.label != b.label or len(a.children) != len(b.children):
        return False
    return all(tree_equal(x, y) for x, y in zip(a.children, b.children))


def tree_edges(t: TreeNode) -> set[tuple[str, str]]:
    """Every parent-to-child pair as qualified labels, set semantics."""
    edges: set[tuple[str, str]] = set()
    stack = [t]
    while stack:
        node = stack.pop()
        for child in node.children:
            edges.add((node.label, child.label))
            stack.append(child)
    return edges


def tree_nodes(t: TreeNode) -> list[str]:
    out = [t.label]
    for child in t.children:
        out.extend(tree_nodes(child))
    return out


def _attr_node_kind(dim: Dimension, attr: str) -> str:
    return "weak" if attr in dim.weak_names() else "param"


def _attach_predicates(parent: TreeNode, dim: Dimension | None, restrictions: list[Restriction]):
    """Predicates hang off a bare property node, independent of what is displayed.

    The same rule applies to analysis contexts and preference contexts, so a
    predicate contributes identical edges on both sides of a coverage test.
    """
    by_prop: dict[str, list[Restriction]] = {}
    for r in restrictions:
        by_prop.setdefault(r.prop, []).append(r)
    for prop in sorted(by_prop):
        if dim is None:
            holder = parent.child(f"measure:{prop}")
        else:
            holder = parent.child(f"{_attr_node_kind(dim, prop)}:{prop}")
        for r in sorted(by_prop[prop], key=lambda r: r.canonical_text):
            holder.child(f"pred:{r.canonical_text}")


def build_context_tree(
    c: Constellation,
    fact: str | None,
    measures: tuple[DisplayedMeasure, ...],
    axes: tuple,
    restrictions,
) -> TreeNode:
    """Shared tree builder for analysis contexts and preference contexts.

    Axis entries are ``(dimension, hierarchy | None, params, weak_of)`` where
    ``weak_of`` maps a parameter to the weak attributes shown with it.
    """
    root = TreeNode("root")
    measure_preds = [r for r in restrictions if r.is_measure]
    dim_preds: dict[str, list[Restriction]] = {}
    for r in restrictions:
        if not r.is_measure:
            dim_preds.setdefault(r.owner, []).append(r)

    if fact is not None:
        fact_node = root.child(f"fact:{fact}")
        for m in measures:
            fact_node.child(f"measure:{m.label}")
        _attach_predicates(fact_node, None, measure_preds)

    axis_dims: set[str] = set()
    for dim_name, hier_name, params, weak_of in axes:
        axis_dims.add(dim_name)
        dim = c.dimension(dim_name)
        dim_node = root.child(f"dim:{dim_name}")
        if hier_name is not None:
            hier_node = dim_node.child(f"hier:{hier_name}")
            parent = hier_node
            for p in params:
                parent = parent.child(f"param:{p}")
                for w in weak_of(p):
                    parent.child(f"weak:{w}")
        _attach_predicates(dim_node, dim, dim_preds.get(dim_name, []))

    # Dimensions referenced only by predicates still contribute their nodes.
    for dim_name in sorted(set(dim_preds) - axis_dims):
        dim_node = root.child(f"dim:{dim_name}")
        _attach_predicates(dim_node, c.dimension(dim_name), dim_preds[dim_name])
    return root


def to_tree(ctx: AnalysisContext) -> TreeNode:
    """Deterministic tree rendering of a context (the context id is not a node)."""
    axes = [
        (a.dimension, a.hierarchy, a.params, a.weak_of)
        for a in ctx.axes
    ]
    return build_context_tree(ctx.constellation, ctx.fact, ctx.measures, axes, ctx.restrictions)


def contexts_tree_equal(a: AnalysisContext, b: AnalysisContext) -> bool:
    return tree_equal(to_tree(a), to_tree(b))
