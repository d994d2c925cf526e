"""Independent oracles the engine is checked against.

Everything here recomputes results from first principles: the group-by oracle
reads the CSV files directly, the edge oracle walks serialized tree JSON, the
annotation oracle re-derives required node labels from anchor fields. None of
it shares code with the paths under test.
"""

import csv
import random
from decimal import Decimal
from pathlib import Path

from cubenav import AnalysisContext, AxisSpec, ContextIds, DisplayedMeasure, Restriction
from cubenav.preferences import PreferenceContext

# ---------------------------------------------------------------------------
# Naive group-by oracle over the fixture CSVs


def _read_csv(path: Path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def flat_fact_rows(data_dir: Path) -> list[dict]:
    """Join every fact row with its three dimension rows; typed columns."""
    clients = {r["CODEC"]: r for r in _read_csv(data_dir / "dclients.csv")}
    produits = {r["CODEP"]: r for r in _read_csv(data_dir / "dproduits.csv")}
    temps = {r["IdT"]: r for r in _read_csv(data_dir / "dtemps.csv")}
    rows = []
    for r in _read_csv(data_dir / "fventes.csv"):
        rec = {}
        rec.update(clients[r["CODEC"]])
        rec.update(produits[r["CODEP"]])
        rec.update(temps[r["IdT"]])
        rec["ANNEE"] = int(rec["ANNEE"])
        rec["REMISE"] = Decimal(r["REMISE"])
        rec["MONTANT"] = Decimal(r["MONTANT"])
        rows.append(rec)
    return rows


def naive_group_by(rows, group_attrs, agg, measure, predicate=None):
    """Group flat rows by attribute values and aggregate one measure.

    Returns ``{group key tuple: value}``; SUM/AVG/MIN/MAX skip empty groups by
    construction, COUNT counts members.
    """
    groups = {}
    for row in rows:
        if predicate is not None and not predicate(row):
            continue
        key = tuple(row[a] for a in group_attrs)
        groups.setdefault(key, []).append(row[measure])
    out = {}
    for key, values in groups.items():
        if agg == "SUM":
            out[key] = sum(values)
        elif agg == "COUNT":
            out[key] = len(values)
        elif agg == "MIN":
            out[key] = min(values)
        elif agg == "MAX":
            out[key] = max(values)
        elif agg == "AVG":
            out[key] = sum(values) / len(values)
    return out


def table_cells_by_values(ctx, table):
    """Re-key evaluated cells by (row param values..., col param values...) per measure."""
    out = {m: {} for m in table.measures}
    row_params = [p for p in ctx.axes[0].params]
    col_params = [p for p in ctx.axes[1].params] if len(ctx.axes) == 2 else []
    for (r, c, m), v in table.cells.items():
        rh = dict(table.row_headers[r])
        ch = dict(table.col_headers[c]) if col_params else {}
        key = tuple(rh[p] for p in row_params) + tuple(ch[p] for p in col_params)
        out[table.measures[m]][key] = v
    return out


# ---------------------------------------------------------------------------
# Edge-subset coverage oracle


def edges_from_json(tree_json: dict) -> set:
    """Enumerate labeled edges by recursive walk of serialized tree JSON."""
    edges = set()

    def walk(node):
        for child in node["children"]:
            edges.add((node["label"], child["label"]))
            walk(child)

    walk(tree_json)
    return edges


def covers_oracle(pc_tree_json: dict, ctx_tree_json: dict) -> bool:
    return edges_from_json(pc_tree_json) <= edges_from_json(ctx_tree_json)


# ---------------------------------------------------------------------------
# Node-scan annotation resolution oracle


def node_labels_from_json(tree_json: dict) -> set:
    labels = set()

    def walk(node):
        labels.add(node["label"])
        for child in node["children"]:
            walk(child)

    walk(tree_json)
    return labels


def resolve_oracle(constellation, annotations, ctx, tree_json: dict) -> list:
    """Re-derive which annotations apply to ``ctx`` by scanning tree labels."""
    labels = node_labels_from_json(tree_json)
    out = []
    for a in annotations:
        anchor = a.anchor
        if anchor.subject is not None and anchor.subject.context_ref is not None:
            if anchor.subject.context_ref == ctx.context_id:
                out.append(a)
            continue
        if _anchor_concepts_present(constellation, anchor, labels):
            out.append(a)
    return out


def _anchor_concepts_present(c, anchor, labels) -> bool:
    def schema_name(names, written):
        for n in names:
            if n == written:
                return n
        for n in names:
            if n.lower() == written.lower():
                return n
        return written

    if anchor.subject is not None:
        fact_name = schema_name([f.name for f in c.facts], anchor.subject.fact)
        if f"fact:{fact_name}" not in labels:
            return False
        if anchor.subject.measure is not None:
            fact = c.fact(fact_name)
            m = schema_name([x.name for x in fact.measures], anchor.subject.measure)
            if anchor.subject.agg is not None:
                if f"measure:{anchor.subject.agg}({m})" not in labels:
                    return False
            elif not any(
                lab.startswith("measure:") and lab.endswith(f"({m})") for lab in labels
            ):
                return False
            if anchor.subject.value is not None:
                return False  # no table in this resolution path
    for ref in (anchor.dim1, anchor.dim2):
        if ref is None:
            continue
        dim_name = schema_name([d.name for d in c.dimensions], ref.dimension)
        if f"dim:{dim_name}" not in labels:
            return False
        dim = c.dimension(dim_name)
        if ref.hierarchy is not None:
            hier_name = schema_name([h.name for h in dim.hierarchies], ref.hierarchy)
            if f"hier:{hier_name}" not in labels:
                return False
            for param, _pos in ref.levels:
                pname = schema_name([a.name for a in dim.attributes], param)
                if f"param:{pname}" not in labels:
                    return False
    return True


# ---------------------------------------------------------------------------
# Random generators over the Fig 1 schema


def mangle_case(rng: random.Random, name: str) -> str:
    pick = rng.random()
    if pick < 0.4:
        return name
    if pick < 0.6:
        return name.lower()
    if pick < 0.8:
        return name.capitalize()
    return "".join(ch.upper() if rng.random() < 0.5 else ch.lower() for ch in name)


def random_anchor_text(c, rng: random.Random) -> str:
    """A random valid anchor expression with mangled casing and spacing."""
    parts = []
    lam = lambda: rng.choice(["λ", "lambda"])
    if rng.random() < 0.55:
        fact = c.facts[0]
        text = ""
        if rng.random() < 0.4:
            text += f"CA{rng.randint(1, 30)}."
        text += mangle_case(rng, fact.name)
        if rng.random() < 0.7:
            m = rng.choice(fact.measures)
            if rng.random() < 0.25:
                text += f"/{rng.choice(['SUM', 'AVG', 'MAX'])}({mangle_case(rng, m.name)})"
            else:
                text += f"/{mangle_case(rng, m.name)}"
            if rng.random() < 0.3:
                text += f"={rng.choice(['75', '120.5', chr(39) + 'big' + chr(39)])}"
        parts.append(text)
    else:
        parts.append(lam())
    for _ in range(2):
        if rng.random() < 0.5:
            parts.append(lam())
            continue
        dim = rng.choice(c.dimensions)
        text = mangle_case(rng, dim.name)
        if rng.random() < 0.65:
            hier = rng.choice(dim.hierarchies)
            text += f".{mangle_case(rng, hier.name)}"
            for param in rng.sample(hier.params, rng.randint(0, min(2, len(hier.params)))):
                text += f"/{mangle_case(rng, param)}"
                if rng.random() < 0.4:
                    kind = dim.attribute(param).kind
                    if kind == "integer":
                        text += f"={rng.randint(1990, 2020)}"
                    elif kind == "date":
                        text += f"='2009-0{rng.randint(1, 9)}-10'"
                    else:
                        text += f"='{rng.choice(['M-Pyrenees', 'Toulouse', 'x1'])}'"
        parts.append(text)
    if all(p in ("λ", "lambda") for p in parts):
        parts[1] = "DPRODUITS"
    sep1 = " " * rng.randint(0, 2)
    return f"({sep1}{parts[0]} ,{sep1}{parts[1]},{sep1} {parts[2]}{sep1})"

_LITERALS = {
    "REGION": ["M-Pyrenees", "Aquitaine"],
    "VILLE": ["Toulouse", "Bordeaux"],
    "NDEPT": ["D31", "D33"],
    "ETAT": ["Texas", "California"],
    "GAMME": ["Premium", "Eco"],
    "ANNEE": [2008, 2009],
    "MOIS": ["2009-02", "2008-06"],
}


def random_context(c, rng: random.Random, max_tree_nodes: int | None = None) -> AnalysisContext:
    """A random valid analysis context over the constellation."""
    while True:
        ctx = _random_context_once(c, rng)
        if max_tree_nodes is None:
            return ctx
        from cubenav.context import to_tree, tree_nodes

        if len(tree_nodes(to_tree(ctx))) <= max_tree_nodes:
            return ctx


def _random_context_once(c, rng: random.Random) -> AnalysisContext:
    fact = c.facts[0]
    n_measures = rng.choice([1, 1, 2])
    pool = [(agg, m.name) for m in fact.measures for agg in ("SUM", "AVG", "MIN", "MAX", "COUNT")]
    measures = tuple(DisplayedMeasure(a, m) for a, m in rng.sample(pool, n_measures))
    dims = list(c.star_of(fact.name))
    rng.shuffle(dims)
    axes = []
    for dim_name in dims[: rng.choice([1, 2])]:
        dim = c.dimension(dim_name)
        hier = rng.choice(dim.hierarchies)
        count = rng.randint(1, min(2, len(hier.params)))
        indices = sorted(rng.sample(range(len(hier.params)), count), reverse=True)
        params = tuple(hier.params[i] for i in indices)
        axes.append(
            AxisSpec(
                dimension=dim_name,
                hierarchy=hier.name,
                params=params,
                weak=tuple((p, hier.weak_of(p)) for p in params),
            )
        )
    restrictions = set()
    if rng.random() < 0.4:
        restrictions.add(random_restriction(c, rng))
    return AnalysisContext(
        constellation=c,
        context_id=f"CA{rng.randint(1, 99)}",
        fact=fact.name,
        measures=measures,
        axes=tuple(axes),
        restrictions=frozenset(restrictions),
        ids=ContextIds(100),
    )


def random_restriction(c, rng: random.Random) -> Restriction:
    if rng.random() < 0.25:
        measure = rng.choice(c.facts[0].measures)
        return Restriction(
            owner=c.facts[0].name,
            prop=measure.name,
            is_measure=True,
            op=rng.choice(["<", ">=", "="]),
            value=Decimal(rng.choice([50, 100])),
        )
    attr = rng.choice(sorted(_LITERALS))
    dim = c.owner_dimension_of(attr)
    op = rng.choice(["=", "!=", "IN"])
    if op == "IN":
        value = tuple(sorted(_LITERALS[attr], key=str))
    else:
        value = rng.choice(_LITERALS[attr])
    return Restriction(owner=dim.name, prop=attr, is_measure=False, op=op, value=value)


def random_preference_context(c, rng: random.Random) -> PreferenceContext:
    fact = c.facts[0].name if rng.random() < 0.5 else None
    axes = []
    dims = list(c.star_of(c.facts[0].name))
    rng.shuffle(dims)
    for dim_name in dims[: rng.choice([0, 1, 1, 2])]:
        dim = c.dimension(dim_name)
        if rng.random() < 0.4:
            axes.append((dim_name, None, ()))
            continue
        hier = rng.choice(dim.hierarchies)
        if rng.random() < 0.4:
            axes.append((dim_name, hier.name, ()))
            continue
        count = rng.randint(1, min(2, len(hier.params)))
        indices = sorted(rng.sample(range(len(hier.params)), count), reverse=True)
        axes.append((dim_name, hier.name, tuple(hier.params[i] for i in indices)))
    restrictions = set()
    if rng.random() < 0.35:
        restrictions.add(random_restriction(c, rng))
    return PreferenceContext(fact=fact, axes=tuple(axes), restrictions=frozenset(restrictions))
