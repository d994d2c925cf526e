"""Alternative-context recommendations.

After the user's operation produces a new context, every candidate
preference is integrated into it; results that actually change the context
become recommendations, each enriched with the annotations that resolve
against it. Integration rules by preference category:

* measure order: the listed measures lead, most preferred first, keeping the
  aggregations already displayed (SUM for newcomers), then the remaining
  displayed measures;
* parameter order (one dimension): that dimension's axis displays exactly the
  listed parameters, most preferred outermost; if the dimension is absent it
  replaces the most recently modified axis first;
* value preference: the top-ranked predicate is added as a restriction;
* fact / dimension / hierarchy order: the top-ranked element replaces the
  current subject / an axis dimension / an axis hierarchy.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .annotations import Annotation, AnnotationStore
from .context import (
    AnalysisContext,
    AxisSpec,
    ContextIds,
    DisplayedMeasure,
    add_measure,
    contexts_tree_equal,
    display,
    drilldown,
    make_restriction,
    restrict,
    rollup,
    rotate,
)
from .errors import CubenavError, OperationError
from .preferences import Preference, PreferenceStore, covers
from .schema import Constellation


@dataclass(frozen=True)
class OlapOperation:
    """One navigation step in wire form; ``params`` depend on the kind."""

    kind: str
    params: dict = field(default_factory=dict)

    def as_json(self) -> dict:
        return {"op": self.kind, **self.params}


OPERATION_KINDS = ("display", "drilldown", "rollup", "rotate", "add_measure", "restrict")


def operation_from_json(obj: dict) -> OlapOperation:
    if not isinstance(obj, dict) or "op" not in obj:
        raise OperationError("an operation needs an 'op' field")
    kind = obj["op"]
    if kind not in OPERATION_KINDS:
        raise OperationError(f"unknown operation: {kind}")
    params = {k: v for k, v in obj.items() if k != "op"}
    required = {
        "display": ("fact", "measures", "axes"),
        "drilldown": ("dim", "param"),
        "rollup": ("dim", "param"),
        "rotate": ("dimOld", "dimNew", "hierNew"),
        "add_measure": ("agg", "measure"),
        "restrict": ("target", "comparator", "value"),
    }[kind]
    missing = [k for k in required if k not in params]
    if missing:
        raise OperationError(f"operation {kind} is missing parameters: {missing}")
    return OlapOperation(kind=kind, params=params)


def apply_operation(
    c: Constellation,
    ctx: AnalysisContext | None,
    op: OlapOperation,
    ids: ContextIds | None = None,
) -> AnalysisContext:
    """Run one operation; everything except ``display`` needs a current context."""
    p = op.params
    if op.kind == "display":
        measures = [(m["agg"], m["measure"]) for m in p["measures"]]
        axes = [(a["dim"], a["hier"]) for a in p["axes"]]
        return display(c, p["fact"], measures, axes, ids=ids)
    if ctx is None:
        raise OperationError("no current context: the first operation must be display")
    if op.kind == "drilldown":
        return drilldown(ctx, p["dim"], p["param"])
    if op.kind == "rollup":
        return rollup(ctx, p["dim"], p["param"])
    if op.kind == "rotate":
        return rotate(ctx, p["dimOld"], p["dimNew"], p["hierNew"])
    if op.kind == "add_measure":
        return add_measure(ctx, p["agg"], p["measure"], p.get("position", len(ctx.measures)))
    if op.kind == "restrict":
        return restrict(ctx, make_restriction(c, p["target"], p["comparator"], p["value"]))
    raise OperationError(f"unknown operation: {op.kind}")


@dataclass(frozen=True)
class Recommendation:
    context: AnalysisContext
    sources: tuple[str, ...]
    annotations: tuple[Annotation, ...]
    origin: str

    def as_json(self) -> dict:
        return {
            "context": self.context.as_json(),
            "preference": self.sources[0],
            "preferences": list(self.sources),
            "annotations": [a.as_json() for a in self.annotations],
        }


def integrate(ctx: AnalysisContext, p: Preference) -> AnalysisContext:
    """Fold a covering preference into a context (fresh id, may be a no-op)."""
    if not covers(p.context, ctx):
        raise OperationError(f"preference {p.id} does not cover context {ctx.context_id}")
    role = p.role
    if role == "measure":
        return _integrate_measures(ctx, p)
    if role == "parameter":
        return _integrate_parameters(ctx, p)
    if role == "predicate":
        return restrict(ctx, p.order[0])
    if role == "fact":
        return _integrate_fact(ctx, p.order[0].name)
    if role == "dimension":
        return _integrate_dimension(ctx, p.order[0].name)
    if role == "hierarchy":
        return _integrate_hierarchy(ctx, p.order[0])
    raise OperationError(f"cannot integrate preference role {role}")


def _integrate_measures(ctx: AnalysisContext, p: Preference) -> AnalysisContext:
    fact = ctx.constellation.fact(ctx.fact)
    listed = [e.name for e in p.order]
    for name in listed:
        if fact.measure(name) is None:
            raise OperationError(f"measure {name} does not belong to fact {ctx.fact}")
    ordered: list[DisplayedMeasure] = []
    for name in listed:
        shown = [m for m in ctx.measures if m.measure == name]
        ordered.extend(shown if shown else [DisplayedMeasure("SUM", name)])
    ordered.extend(m for m in ctx.measures if m.measure not in listed)
    return replace(ctx, context_id=ctx.ids.next(), measures=tuple(ordered))


def _pick_hierarchy(dim, params: list[str]):
    for h in dim.hierarchies:
        if all(h.has(p) for p in params):
            return h
    raise OperationError(f"no hierarchy of {dim.name} contains all of {params}")


def _integrate_parameters(ctx: AnalysisContext, p: Preference) -> AnalysisContext:
    c = ctx.constellation
    dim_name = p.order[0].owner
    listed = [e.name for e in p.order]
    target = ctx
    i = target.axis_index(dim_name)
    if i is None:
        dim = c.dimension(dim_name)
        hier = _pick_hierarchy(dim, listed)
        target = rotate(target, target.axes[target.last_axis].dimension, dim_name, hier.name)
        i = target.axis_index(dim_name)
    axis = target.axes[i]
    dim = c.dimension(dim_name)
    hier = dim.hierarchy(axis.hierarchy)
    if not all(hier.has(q) for q in listed):
        hier = _pick_hierarchy(dim, listed)
    # Most preferred parameter becomes the outermost level; the result must
    # still read coarse to fine along the hierarchy.
    for a, b in zip(listed, listed[1:]):
        if not hier.finer(b, a):
            raise OperationError(
                f"preference order {listed} conflicts with hierarchy {hier.name} level order"
            )
    new_axis = AxisSpec(
        dimension=dim_name,
        hierarchy=hier.name,
        params=tuple(listed),
        weak=tuple((q, hier.weak_of(q)) for q in listed),
    )
    axes = target.axes[:i] + (new_axis,) + target.axes[i + 1 :]
    return replace(target, context_id=target.ids.next(), axes=axes, last_axis=i)


def _integrate_fact(ctx: AnalysisContext, fact_name: str) -> AnalysisContext:
    c = ctx.constellation
    fact = c.fact(fact_name)
    if fact is None:
        raise OperationError(f"unknown fact: {fact_name}")
    star = c.star_of(fact_name)
    for axis in ctx.axes:
        if axis.dimension not in star:
            raise OperationError(f"axis {axis.dimension} is not linked to fact {fact_name}")
    kept = tuple(m for m in ctx.measures if fact.measure(m.measure) is not None)
    if not kept:
        kept = (DisplayedMeasure("SUM", fact.measures[0].name),)
    restrictions = frozenset(r for r in ctx.restrictions if not r.is_measure)
    return replace(
        ctx,
        context_id=ctx.ids.next(),
        fact=fact_name,
        measures=kept,
        restrictions=restrictions,
    )


def _integrate_dimension(ctx: AnalysisContext, dim_name: str) -> AnalysisContext:
    if ctx.axis_index(dim_name) is not None:
        return replace(ctx, context_id=ctx.ids.next())
    dim = ctx.constellation.dimension(dim_name)
    if dim is None:
        raise OperationError(f"unknown dimension: {dim_name}")
    return rotate(ctx, ctx.axes[ctx.last_axis].dimension, dim_name, dim.hierarchies[0].name)


def _integrate_hierarchy(ctx: AnalysisContext, ref) -> AnalysisContext:
    dim_name, hier_name = ref.owner, ref.name
    if ctx.axis_index(dim_name) is not None:
        return rotate(ctx, dim_name, dim_name, hier_name)
    return rotate(ctx, ctx.axes[ctx.last_axis].dimension, dim_name, hier_name)


class _DerivedIds:
    """Ids for recommendation contexts: ``<origin>R<n>``.

    Recommendations never consume the session counter; the paper-style
    sequence CA1, CA2, ... stays reserved for the contexts the user actually
    navigates (local anchors reference those ids). An adopted recommendation
    is re-stamped with the next session id.
    """

    def __init__(self, origin: str):
        self._origin = origin
        self._n = 0

    def next(self) -> str:
        self._n += 1
        return f"{self._origin}R{self._n}"


def recommend_for_context(
    ctx: AnalysisContext,
    prefs: PreferenceStore,
    annos: AnnotationStore,
    owner: str | None = None,
) -> list[Recommendation]:
    """Integrate every candidate preference into ``ctx``; keep the results
    that differ from it. Tree-equal results from different preferences merge
    into one recommendation carrying all source ids."""
    recs: list[Recommendation] = []
    scratch = replace(ctx, ids=_DerivedIds(ctx.context_id))
    for p in prefs.candidates(ctx, owner=owner):
        try:
            derived = integrate(scratch, p)
        except CubenavError:
            # A candidate whose integration cannot produce a valid context
            # yields no recommendation.
            continue
        if contexts_tree_equal(derived, ctx):
            continue
        merged = False
        for i, existing in enumerate(recs):
            if contexts_tree_equal(existing.context, derived):
                recs[i] = replace(existing, sources=existing.sources + (p.id,))
                merged = True
                break
        if not merged:
            recs.append(
                Recommendation(
                    context=derived,
                    sources=(p.id,),
                    annotations=tuple(annos.resolve(derived)),
                    origin=ctx.context_id,
                )
            )
    return recs


def recommend(
    ctx_i: AnalysisContext | None,
    op: OlapOperation,
    prefs: PreferenceStore,
    annos: AnnotationStore,
    owner: str | None = None,
    ids: ContextIds | None = None,
) -> tuple[AnalysisContext, list[Recommendation]]:
    """Apply the user's operation, then derive alternative recommendations."""
    c = prefs.constellation
    ctx_next = apply_operation(c, ctx_i, op, ids=ids)
    return ctx_next, recommend_for_context(ctx_next, prefs, annos, owner=owner)


def recommendations_json(origin: str, recs: list[Recommendation]) -> dict:
    return {"origin": origin, "items": [r.as_json() for r in recs]}
