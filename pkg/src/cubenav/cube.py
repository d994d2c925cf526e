"""CSV instance loading and evaluation of contexts into multidimensional tables.

Loaded data is immutable and ``evaluate`` is pure, so concurrent evaluations
need no coordination. Empty groups stay empty (COUNT excepted, which is 0):
an absent aggregate is not a zero.
"""

from __future__ import annotations

import csv
import datetime as _dt
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from pathlib import Path

from .context import AnalysisContext, Restriction
from .errors import DataError
from .schema import Constellation


def _decimal(text: str) -> Decimal:
    # Exact decimal arithmetic keeps SUM associative, so coarse cells equal
    # the sums of their drill-down sub-cells exactly.
    try:
        return Decimal(text)
    except InvalidOperation as exc:
        raise ValueError(str(exc)) from exc


_CSV_COERCERS = {
    "string": lambda s: s,
    "integer": int,
    "decimal": _decimal,
    "date": _dt.date.fromisoformat,
}


@dataclass(frozen=True)
class DimensionData:
    """Typed dimension rows keyed by the id attribute value."""

    dimension: str
    rows: dict

    def row_of(self, id_value) -> dict | None:
        return self.rows.get(id_value)


@dataclass(frozen=True)
class FactData:
    """Typed fact rows: one foreign key per star dimension plus the measures."""

    fact: str
    rows: tuple


@dataclass(frozen=True)
class MultidimensionalTable:
    """Aggregated cells under lexicographically ordered header tuples.

    Headers are tuples of ``(attribute, value)`` per displayed level,
    weak-attribute display values included. ``cells`` maps
    ``(row_index, col_index, measure_index)`` to a number; missing keys are
    empty cells.
    """

    row_headers: tuple
    col_headers: tuple
    measures: tuple[str, ...]
    cells: dict

    def as_json(self) -> dict:
        return {
            "rowHeaders": [[[a, _json_value(v)] for a, v in h] for h in self.row_headers],
            "colHeaders": [[[a, _json_value(v)] for a, v in h] for h in self.col_headers],
            "measures": list(self.measures),
            "cells": [
                {"r": r, "c": c, "m": m, "v": _json_value(v)}
                for (r, c, m), v in sorted(self.cells.items())
            ],
        }


def _json_value(v):
    if isinstance(v, _dt.date):
        return v.isoformat()
    if isinstance(v, Decimal):
        return float(v)
    return v


def load_dimension_csv(c: Constellation, dim_name: str, path: str | Path) -> DimensionData:
    """Load one dimension table; enforces typing, unique ids and roll-up
    functional dependencies along every hierarchy."""
    dim = c.dimension(dim_name)
    if dim is None:
        raise DataError(f"unknown dimension: {dim_name}")
    expected = {a.name for a in dim.attributes}
    rows: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = set(reader.fieldnames or [])
        if header != expected:
            missing = sorted(expected - header)
            extra = sorted(header - expected)
            raise DataError(
                f"{dim_name} csv header mismatch: missing {missing}, unexpected {extra}"
            )
        for lineno, raw in enumerate(reader, start=2):
            row = {}
            for attr in dim.attributes:
                try:
                    row[attr.name] = _CSV_COERCERS[attr.kind](raw[attr.name])
                except (ValueError, TypeError) as exc:
                    raise DataError(
                        f"{dim_name} row {lineno}, column {attr.name}: cannot read {raw[attr.name]!r} as {attr.kind}"
                    ) from exc
            key = row[dim.id_attr]
            if key in rows:
                raise DataError(f"{dim_name} row {lineno}: duplicate id {key!r}")
            rows[key] = row

    _check_rollup_dependencies(dim, rows)
    return DimensionData(dimension=dim_name, rows=rows)


def _check_rollup_dependencies(dim, rows: dict):
    """Adjacent-level checks imply every finer-to-coarser dependency by
    transitivity; weak attributes must also be functions of their parameter,
    otherwise headers would be ambiguous."""
    for hier in dim.hierarchies:
        pairs = list(zip(hier.params, hier.params[1:]))
        pairs += [(p, w) for p, attrs in hier.weak for w in attrs]
        for finer, coarser in pairs:
            seen: dict = {}
            for row in rows.values():
                fine_v, coarse_v = row[finer], row[coarser]
                if fine_v in seen and seen[fine_v] != coarse_v:
                    raise DataError(
                        f"{dim.name}: {finer}={fine_v!r} maps to both "
                        f"{coarser}={seen[fine_v]!r} and {coarser}={coarse_v!r} (hierarchy {hier.name})"
                    )
                seen[fine_v] = coarse_v


def load_fact_csv(
    c: Constellation,
    fact_name: str,
    dims: dict[str, DimensionData],
    path: str | Path,
) -> FactData:
    """Load fact rows with referential integrity against loaded dimensions."""
    fact = c.fact(fact_name)
    if fact is None:
        raise DataError(f"unknown fact: {fact_name}")
    star = c.star_of(fact_name)
    for dn in star:
        if dn not in dims:
            raise DataError(f"dimension {dn} of {fact_name} has no loaded data")
    fk_cols = {c.dimension(dn).id_attr: dn for dn in star}
    expected = set(fk_cols) | {m.name for m in fact.measures}

    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = set(reader.fieldnames or [])
        if header != expected:
            missing = sorted(expected - header)
            extra = sorted(header - expected)
            raise DataError(f"{fact_name} csv header mismatch: missing {missing}, unexpected {extra}")
        for lineno, raw in enumerate(reader, start=2):
            row = {}
            for col, dn in fk_cols.items():
                dim = c.dimension(dn)
                kind = dim.attribute(dim.id_attr).kind
                try:
                    key = _CSV_COERCERS[kind](raw[col])
                except (ValueError, TypeError) as exc:
                    raise DataError(
                        f"{fact_name} row {lineno}, column {col}: cannot read {raw[col]!r} as {kind}"
                    ) from exc
                if dims[dn].row_of(key) is None:
                    raise DataError(f"{fact_name} row {lineno}: {col}={key!r} not found in {dn}")
                row[col] = key
            for m in fact.measures:
                try:
                    row[m.name] = _CSV_COERCERS[m.kind](raw[m.name])
                except (ValueError, TypeError) as exc:
                    raise DataError(
                        f"{fact_name} row {lineno}, column {m.name}: cannot read {raw[m.name]!r} as {m.kind}"
                    ) from exc
            rows.append(row)
    return FactData(fact=fact_name, rows=tuple(rows))


# ---------------------------------------------------------------------------
# Evaluation

_PREDICATE_OPS = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
    "IN": lambda a, b: a in b,
}


def predicate_holds(r: Restriction, value) -> bool:
    return _PREDICATE_OPS[r.op](value, r.value)


def evaluate(
    ctx: AnalysisContext,
    facts: FactData,
    dims: dict[str, DimensionData],
) -> MultidimensionalTable:
    """Aggregate the fact rows of ``facts`` into the table described by ``ctx``.

    Headers enumerate the dimension data (filtered by that dimension's
    restrictions), so axis values with no facts still appear, with empty cells.
    """
    c = ctx.constellation
    fact = c.fact(ctx.fact)
    star = c.star_of(ctx.fact)
    fk_col = {dn: c.dimension(dn).id_attr for dn in star}

    measure_preds = [r for r in ctx.restrictions if r.is_measure]
    dim_preds: dict[str, list[Restriction]] = {}
    for r in ctx.restrictions:
        if not r.is_measure:
            dim_preds.setdefault(r.owner, []).append(r)

    def dim_row_passes(dn: str, row: dict) -> bool:
        return all(predicate_holds(r, row[r.prop]) for r in dim_preds.get(dn, []))

    # Axis headers from dimension data, keyed by the finest displayed value.
    axis_headers = []
    axis_keys = []
    for axis in ctx.axes:
        data = dims.get(axis.dimension)
        if data is None:
            raise DataError(f"dimension {axis.dimension} has no loaded data")
        by_key: dict = {}
        for row in data.rows.values():
            if not dim_row_passes(axis.dimension, row):
                continue
            header = []
            for p in axis.params:
                header.append((p, row[p]))
                for w in axis.weak_of(p):
                    header.append((w, row[w]))
            by_key[row[axis.finest]] = tuple(header)
        headers = sorted(by_key.values(), key=lambda h: tuple(v for _, v in h))
        axis_headers.append(headers)
        axis_keys.append({h: i for i, h in enumerate(headers)})

    row_headers = tuple(axis_headers[0])
    col_headers = tuple(axis_headers[1]) if len(ctx.axes) == 2 else ((),)
    col_keys = axis_keys[1] if len(ctx.axes) == 2 else {(): 0}

    # Filter fact rows, then group by the finest displayed level per axis.
    def fact_row_passes(row: dict) -> bool:
        for r in measure_preds:
            if not predicate_holds(r, row[r.prop]):
                return False
        for dn, preds in dim_preds.items():
            dim_row = dims[dn].row_of(row[fk_col[dn]])
            for r in preds:
                if not predicate_holds(r, dim_row[r.prop]):
                    return False
        return True

    def header_of(row: dict, axis_idx: int):
        axis = ctx.axes[axis_idx]
        dim_row = dims[axis.dimension].row_of(row[fk_col[axis.dimension]])
        header = []
        for p in axis.params:
            header.append((p, dim_row[p]))
            for w in axis.weak_of(p):
                header.append((w, dim_row[w]))
        return tuple(header)

    groups: dict[tuple[int, int], list[dict]] = {}
    for row in facts.rows:
        if not fact_row_passes(row):
            continue
        r_idx = axis_keys[0][header_of(row, 0)]
        c_idx = col_keys[header_of(row, 1)] if len(ctx.axes) == 2 else 0
        groups.setdefault((r_idx, c_idx), []).append(row)

    cells: dict = {}
    for m_idx, dm in enumerate(ctx.measures):
        for r_idx in range(len(row_headers)):
            for c_idx in range(len(col_headers)):
                group = groups.get((r_idx, c_idx), [])
                value = _aggregate(dm.agg, [row[dm.measure] for row in group])
                if value is not None:
                    cells[(r_idx, c_idx, m_idx)] = value

    return MultidimensionalTable(
        row_headers=row_headers,
        col_headers=col_headers,
        measures=tuple(m.label for m in ctx.measures),
        cells=cells,
    )


def _aggregate(agg: str, values: list):
    if agg == "COUNT":
        return len(values)
    if not values:
        return None
    if agg == "SUM":
        return sum(values)
    if agg == "MIN":
        return min(values)
    if agg == "MAX":
        return max(values)
    if agg == "AVG":
        # Exact sum over exact count at output time, for reproducibility.
        return sum(values) / len(values)
    raise DataError(f"unknown aggregation: {agg}")
