/** Where annotation badges land on the rendered table. */

import { measureNameOf, splitAnchor } from "./anchors.js";
import type { AnnotationJson, ContextJson, TableJson } from "./types.js";

export type MarkerTarget =
  | { type: "measure"; m: number }
  | { type: "cell"; r: number; c: number; m: number }
  | { type: "level"; axis: 0 | 1; attr: string }
  | { type: "context" };

export interface Marker {
  target: MarkerTarget;
  annotationIds: string[];
}

const sameName = (a: string, b: string) => a.toLowerCase() === b.toLowerCase();

function measureIndices(table: TableJson, measure: string): number[] {
  return table.measures
    .map((label, i) => [label, i] as const)
    .filter(([label]) => sameName(measureNameOf(label), measure))
    .map(([, i]) => i);
}

function headerIndexFor(
  table: TableJson,
  axis: 0 | 1,
  levels: { param: string; pos?: string | number }[],
): number | null {
  const headers = axis === 0 ? table.rowHeaders : table.colHeaders;
  const positioned = levels.filter((l) => l.pos !== undefined);
  if (!positioned.length) return null;
  for (let i = 0; i < headers.length; i += 1) {
    const header = headers[i]!;
    const all = positioned.every((level) =>
      header.some(([attr, value]) => sameName(attr, level.param) && value === level.pos),
    );
    if (all) return i;
  }
  return null;
}

function targetKey(t: MarkerTarget): string {
  switch (t.type) {
    case "measure":
      return `measure:${t.m}`;
    case "cell":
      return `cell:${t.r}:${t.c}:${t.m}`;
    case "level":
      return `level:${t.axis}:${t.attr}`;
    case "context":
      return "context";
  }
}

function axisOf(ctx: ContextJson, dim: string): 0 | 1 | null {
  const index = ctx.axes.findIndex((a) => sameName(a.dim, dim));
  return index === 0 || index === 1 ? index : null;
}

/** One target per annotation; annotations sharing a target merge into one badge. */
export function computeMarkers(
  annotations: AnnotationJson[],
  ctx: ContextJson,
  table: TableJson,
): Marker[] {
  const byKey = new Map<string, Marker>();
  for (const annotation of annotations) {
    const target = targetOf(annotation, ctx, table);
    const key = targetKey(target);
    const existing = byKey.get(key);
    if (existing) {
      existing.annotationIds.push(annotation.id);
    } else {
      byKey.set(key, { target, annotationIds: [annotation.id] });
    }
  }
  return [...byKey.values()];
}

function targetOf(annotation: AnnotationJson, ctx: ContextJson, table: TableJson): MarkerTarget {
  const parts = splitAnchor(annotation.anchor);

  if (parts.contextRef !== null && parts.contextRef === ctx.id && parts.measure) {
    const ms = measureIndices(table, parts.measure);
    const byDim = new Map<0 | 1, number>();
    for (const ref of parts.dims) {
      const axis = axisOf(ctx, ref.dim);
      if (axis === null) continue;
      const index = headerIndexFor(table, axis, ref.levels);
      if (index !== null) byDim.set(axis, index);
    }
    const r = byDim.get(0);
    const c = byDim.get(1);
    if (ms.length && r !== undefined && (ctx.axes.length < 2 || c !== undefined)) {
      return { type: "cell", r, c: c ?? 0, m: ms[0]! };
    }
    if (ms.length) return { type: "measure", m: ms[0]! };
    return { type: "context" };
  }

  // global anchors: most specific displayed concept wins
  if (parts.measure) {
    const ms = measureIndices(table, parts.measure);
    if (ms.length) return { type: "measure", m: ms[0]! };
  }
  for (const ref of parts.dims) {
    const axis = axisOf(ctx, ref.dim);
    if (axis === null) continue;
    const spec = ctx.axes[axis]!;
    for (const level of ref.levels) {
      const shown = spec.params.find((p) => sameName(p, level.param));
      if (shown) return { type: "level", axis, attr: shown };
    }
    const coarsest = spec.params[0];
    if (coarsest) return { type: "level", axis, attr: coarsest };
  }
  return { type: "context" };
}
