import random

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from cubenav import (
    OperationError,
    PredicateTypeError,
    add_measure,
    contexts_tree_equal,
    display,
    drilldown,
    make_restriction,
    restrict,
    rollup,
    rotate,
    to_tree,
    tree_edges,
    tree_equal,
)
from cubenav.context import tree_nodes

from oracles import random_context


def ca1(c):
    return display(c, "FVENTES", [("SUM", "REMISE")], [("DCLIENTS", "HGEOFR"), ("DTEMPS", "HTEMPS")])


# -- display ------------------------------------------------------------------


def test_display_starts_at_coarsest_levels(constellation):
    ctx = ca1(constellation)
    assert [a.params for a in ctx.axes] == [("REGION",), ("ANNEE",)]
    assert ctx.restrictions == frozenset()
    assert ctx.context_id == "CA1"


def test_display_single_level_hierarchy():
    from cubenav import load_schema

    c = load_schema(
        {
            "facts": [{"name": "F", "measures": [{"name": "M", "kind": "decimal"}]}],
            "dimensions": [
                {
                    "name": "D",
                    "id": "ID",
                    "attributes": [{"name": "ID", "kind": "string"}],
                    "hierarchies": [{"name": "H", "params": ["ID"], "weak": {}}],
                }
            ],
            "star": {"F": ["D"]},
        }
    )
    ctx = display(c, "F", [("SUM", "M")], [("D", "H")])
    assert ctx.axes[0].params == ("ID",)


def test_display_products_axis_shows_gamme(constellation):
    ctx = display(constellation, "FVENTES", [("SUM", "REMISE")], [("DPRODUITS", "HPROD")])
    assert ctx.axes[0].params == ("GAMME",)


def test_display_errors(constellation):
    with pytest.raises(Exception):
        display(constellation, "FGHOST", [("SUM", "REMISE")], [("DCLIENTS", "HGEOFR")])
    with pytest.raises(OperationError):
        display(constellation, "FVENTES", [("SUM", "REMISE")],
                [("DCLIENTS", "HGEOFR"), ("DCLIENTS", "HGEOUS")])
    with pytest.raises(OperationError):
        display(constellation, "FVENTES", [], [("DCLIENTS", "HGEOFR")])
    with pytest.raises(OperationError):
        display(constellation, "FVENTES", [("SUM", "REMISE")], [])


# -- drilldown ----------------------------------------------------------------


def test_drilldown_ndept_shows_weak(constellation):
    ctx2 = drilldown(ca1(constellation), "DCLIENTS", "NDEPT")
    axis = ctx2.axis_for("DCLIENTS")
    assert axis.params == ("REGION", "NDEPT")
    assert axis.weak_of("NDEPT") == ("NOMDEPT",)
    assert ctx2.axis_for("DTEMPS").params == ("ANNEE",)


def test_drilldown_coarser_rejected(constellation):
    ctx2 = drilldown(ca1(constellation), "DCLIENTS", "NDEPT")
    with pytest.raises(OperationError, match="not finer"):
        drilldown(ctx2, "DCLIENTS", "REGION")


def test_drilldown_time_to_month(constellation):
    ctx = drilldown(ca1(constellation), "DTEMPS", "MOIS")
    assert ctx.axis_for("DTEMPS").params == ("ANNEE", "MOIS")


def test_drilldown_errors(constellation):
    ctx = ca1(constellation)
    with pytest.raises(OperationError):
        drilldown(ctx, "DPRODUITS", "CODEP")  # not on an axis
    with pytest.raises(OperationError):
        drilldown(ctx, "DCLIENTS", "GAMME")  # not in hierarchy


# -- rollup --------------------------------------------------------------------


def test_rollup_inverts_drilldown(constellation):
    ctx1 = ca1(constellation)
    ctx2 = drilldown(ctx1, "DCLIENTS", "NDEPT")
    back = rollup(ctx2, "DCLIENTS", "REGION")
    assert contexts_tree_equal(back, ctx1)
    assert back.context_id != ctx1.context_id


def test_rollup_at_finest_is_content_noop(constellation):
    ctx2 = drilldown(ca1(constellation), "DCLIENTS", "NDEPT")
    same = rollup(ctx2, "DCLIENTS", "NDEPT")
    assert contexts_tree_equal(same, ctx2)


def test_rollup_undisplayed_must_be_coarsest(constellation):
    ctx2 = drilldown(ca1(constellation), "DCLIENTS", "NDEPT")
    with pytest.raises(OperationError):
        rollup(ctx2, "DCLIENTS", "VILLE")  # finer than displayed, not displayed


def test_rollup_inverse_exhaustive(constellation):
    """Every legal (ctx, dim, param) drilldown over Fig 1 inverts by rollup."""
    c = constellation
    checked = 0
    for axes in (
        [("DCLIENTS", "HGEOFR"), ("DTEMPS", "HTEMPS")],
        [("DCLIENTS", "HGEOUS"), ("DPRODUITS", "HPROD")],
        [("DPRODUITS", "HPROD")],
        [("DTEMPS", "HTEMPS"), ("DPRODUITS", "HPROD")],
    ):
        base = display(c, "FVENTES", [("SUM", "REMISE")], axes)
        frontier = [base]
        while frontier:
            ctx = frontier.pop()
            for axis in ctx.axes:
                hier = c.dimension(axis.dimension).hierarchy(axis.hierarchy)
                finest_idx = hier.index(axis.finest)
                for param in hier.params:
                    if hier.index(param) >= finest_idx:
                        continue
                    finer = drilldown(ctx, axis.dimension, param)
                    back = rollup(finer, axis.dimension, axis.finest)
                    assert contexts_tree_equal(back, ctx)
                    checked += 1
                    frontier.append(finer)
    assert checked > 20


# -- rotate ---------------------------------------------------------------------


def test_rotate_to_products(constellation):
    ctx2 = drilldown(ca1(constellation), "DCLIENTS", "NDEPT")
    ctx3 = rotate(ctx2, "DCLIENTS", "DPRODUITS", "HPROD")
    assert [a.dimension for a in ctx3.axes] == ["DPRODUITS", "DTEMPS"]
    assert ctx3.axis_for("DPRODUITS").params == ("GAMME",)


def test_rotate_duplicate_axis_rejected(constellation):
    ctx = ca1(constellation)
    with pytest.raises(OperationError):
        rotate(ctx, "DCLIENTS", "DTEMPS", "HTEMPS")


def test_rotate_round_trip(constellation):
    ctx = ca1(constellation)
    away = rotate(ctx, "DTEMPS", "DPRODUITS", "HPROD")
    back = rotate(away, "DPRODUITS", "DTEMPS", "HTEMPS")
    assert contexts_tree_equal(back, ctx)


def test_rotate_drops_outgoing_restrictions(constellation):
    ctx = restrict(
        ca1(constellation),
        make_restriction(constellation, "DCLIENTS.REGION", "=", "M-Pyrenees"),
    )
    ctx3 = rotate(ctx, "DCLIENTS", "DPRODUITS", "HPROD")
    assert ctx3.restrictions == frozenset()


# -- add_measure -----------------------------------------------------------------


def test_add_measure_front(constellation):
    ctx = ca1(constellation)
    out = add_measure(ctx, "SUM", "MONTANT", 0)
    assert [(m.agg, m.measure) for m in out.measures] == [("SUM", "MONTANT"), ("SUM", "REMISE")]


def test_add_measure_duplicate(constellation):
    with pytest.raises(OperationError, match="duplicate"):
        add_measure(ca1(constellation), "SUM", "REMISE", 0)


def test_add_measure_middle(constellation):
    ctx = add_measure(ca1(constellation), "AVG", "MONTANT", 1)
    ctx = add_measure(ctx, "MAX", "MONTANT", 1)
    assert [m.label for m in ctx.measures] == ["SUM(REMISE)", "MAX(MONTANT)", "AVG(MONTANT)"]


# -- restrict ---------------------------------------------------------------------


def test_restrict_any_star_dimension(constellation):
    ctx = display(constellation, "FVENTES", [("SUM", "REMISE")], [("DPRODUITS", "HPROD")])
    out = restrict(ctx, make_restriction(constellation, "DCLIENTS.REGION", "=", "M-Pyrenees"))
    assert len(out.restrictions) == 1  # allowed: it constrains the fact slice


def test_restrict_is_idempotent(constellation):
    r = make_restriction(constellation, "DTEMPS.ANNEE", "=", 2009)
    once = restrict(ca1(constellation), r)
    twice = restrict(once, r)
    assert twice.restrictions == once.restrictions
    assert contexts_tree_equal(once, twice)


def test_restrict_type_mismatch(constellation):
    with pytest.raises(PredicateTypeError):
        make_restriction(constellation, "DTEMPS.ANNEE", "=", "abc")


def test_restriction_value_coercion(constellation):
    r = make_restriction(constellation, "DTEMPS.IdT", "=", "2009-06-18")
    import datetime

    assert r.value == datetime.date(2009, 6, 18)
    r = make_restriction(constellation, "FVENTES/REMISE", ">=", 100)
    from decimal import Decimal

    assert r.value == Decimal("100")
    r = make_restriction(constellation, "DTEMPS.ANNEE", "IN", [2009, 2008])
    assert r.value == (2008, 2009)


# -- trees --------------------------------------------------------------------------


def test_tree_of_ca2_matches_figure(constellation):
    ctx2 = drilldown(ca1(constellation), "DCLIENTS", "NDEPT")
    edges = tree_edges(to_tree(ctx2))
    assert ("fact:FVENTES", "measure:SUM(REMISE)") in edges
    assert ("dim:DCLIENTS", "hier:HGEOFR") in edges
    assert ("hier:HGEOFR", "param:REGION") in edges
    assert ("param:REGION", "param:NDEPT") in edges
    assert ("param:NDEPT", "weak:NOMDEPT") in edges
    assert ("dim:DTEMPS", "hier:HTEMPS") in edges
    assert ("hier:HTEMPS", "param:ANNEE") in edges


def test_minimal_context_tree_shape():
    from cubenav import load_schema

    c = load_schema(
        {
            "facts": [{"name": "F", "measures": [{"name": "M", "kind": "decimal"}]}],
            "dimensions": [
                {
                    "name": "D",
                    "id": "ID",
                    "attributes": [{"name": "ID", "kind": "string"}],
                    "hierarchies": [{"name": "H", "params": ["ID"], "weak": {}}],
                }
            ],
            "star": {"F": ["D"]},
        }
    )
    tree = to_tree(display(c, "F", [("SUM", "M")], [("D", "H")]))
    labels = tree_nodes(tree)
    # root, fact, measure, dimension, hierarchy, parameter
    assert labels == ["root", "fact:F", "measure:SUM(M)", "dim:D", "hier:H", "param:ID"]
    assert len(tree_edges(tree)) == len(labels) - 1


def test_tree_edge_count_is_nodes_minus_one(constellation):
    rng = random.Random(7)
    for _ in range(50):
        ctx = random_context(constellation, rng)
        tree = to_tree(ctx)
        assert len(tree_edges(tree)) == len(tree_nodes(tree)) - 1


def test_single_node_tree_has_no_edges():
    from cubenav.context import TreeNode

    assert tree_edges(TreeNode("root")) == set()


def test_to_tree_injective_up_to_id(constellation):
    rng = random.Random(21)
    contexts = [random_context(constellation, rng) for _ in range(120)]
    for i, a in enumerate(contexts):
        for b in contexts[i + 1 :]:
            same_content = (
                a.fact == b.fact
                and a.measures == b.measures
                and a.axes == b.axes
                and a.restrictions == b.restrictions
            )
            assert contexts_tree_equal(a, b) == same_content


def test_tree_serialization_shape(constellation):
    node = to_tree(ca1(constellation)).as_json()
    assert set(node) == {"label", "children"}
    assert node["label"] == "root"


# -- operation hygiene ------------------------------------------------------------


@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(seed=st.integers(0, 2**32 - 1))
def test_operations_never_mutate_inputs(constellation, seed):
    rng = random.Random(seed)
    ctx = ca1(constellation)
    before = to_tree(ctx)
    ops = [
        lambda: drilldown(ctx, "DCLIENTS", rng.choice(["VILLE", "NDEPT", "CODEC"])),
        lambda: rollup(ctx, "DTEMPS", "ANNEE"),
        lambda: rotate(ctx, "DCLIENTS", "DPRODUITS", "HPROD"),
        lambda: add_measure(ctx, "AVG", "MONTANT", rng.randint(0, 1)),
        lambda: restrict(ctx, make_restriction(constellation, "DTEMPS.ANNEE", "=", rng.choice([2008, 2009]))),
    ]
    out = rng.choice(ops)()
    assert tree_equal(to_tree(ctx), before)
    assert out is not ctx and out.context_id != ctx.context_id


def test_every_operation_output_satisfies_invariants(constellation):
    rng = random.Random(3)
    c = constellation
    for _ in range(80):
        ctx = ca1(c)
        for _ in range(rng.randint(1, 5)):
            ctx = _random_step(c, ctx, rng)
        _assert_invariants(ctx)


def _random_step(c, ctx, rng):
    choices = []
    for axis in ctx.axes:
        hier = c.dimension(axis.dimension).hierarchy(axis.hierarchy)
        finer = [p for p in hier.params if hier.index(p) < hier.index(axis.finest)]
        if finer:
            choices.append(lambda a=axis, p=rng.choice(finer): drilldown(ctx, a.dimension, p))
        choices.append(lambda a=axis: rollup(ctx, a.dimension, rng.choice(a.params)))
    shown = {a.dimension for a in ctx.axes}
    free = [d for d in c.star_of(ctx.fact) if d not in shown]
    if free:
        new_dim = rng.choice(free)
        hier = rng.choice(c.dimension(new_dim).hierarchies)
        old = rng.choice([a.dimension for a in ctx.axes])
        choices.append(lambda: rotate(ctx, old, new_dim, hier.name))
    pairs = {(m.agg, m.measure) for m in ctx.measures}
    candidates = [
        (agg, m.name)
        for m in c.fact(ctx.fact).measures
        for agg in ("SUM", "AVG", "COUNT")
        if (agg, m.name) not in pairs
    ]
    if candidates:
        agg, m = rng.choice(candidates)
        choices.append(lambda: add_measure(ctx, agg, m, rng.randint(0, len(ctx.measures))))
    choices.append(
        lambda: restrict(ctx, make_restriction(c, "DTEMPS.ANNEE", rng.choice(["=", ">="]), 2009))
    )
    return rng.choice(choices)()


def _assert_invariants(ctx):
    c = ctx.constellation
    star = c.star_of(ctx.fact)
    assert 1 <= len(ctx.axes) <= 2
    dims = [a.dimension for a in ctx.axes]
    assert len(set(dims)) == len(dims)
    for axis in ctx.axes:
        assert axis.dimension in star
        hier = c.dimension(axis.dimension).hierarchy(axis.hierarchy)
        indices = [hier.index(p) for p in axis.params]
        assert indices == sorted(indices, reverse=True)  # coarse to fine
    assert ctx.measures
    pairs = [(m.agg, m.measure) for m in ctx.measures]
    assert len(set(pairs)) == len(pairs)
