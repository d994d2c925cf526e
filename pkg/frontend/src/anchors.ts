/** Client-side anchor construction and display-time splitting.
 *
 * The server is the sole parsing authority; this module only builds anchor
 * text from table selections (a cell selection yields a local anchor, a
 * schema concept a global one) and splits the canonical text the server
 * returns, just enough to place markers.
 */

import type { ContextJson, TableJson } from "./types.js";

export type Selection =
  | { kind: "measure"; m: number }
  | { kind: "cell"; r: number; c: number; m: number }
  | { kind: "level"; axis: 0 | 1; attr: string }
  | { kind: "dimension"; dim: string };

const LAMBDA = "λ";

function literal(value: string | number): string {
  return typeof value === "number" ? String(value) : `'${value}'`;
}

/** The bare measure name inside an "AGG(NAME)" column label. */
export function measureNameOf(label: string): string {
  const open = label.indexOf("(");
  return open >= 0 ? label.slice(open + 1, -1) : label;
}

function axisPart(ctx: ContextJson, table: TableJson, axis: 0 | 1, headerIndex: number): string {
  const spec = ctx.axes[axis];
  if (!spec) return LAMBDA;
  const headers = axis === 0 ? table.rowHeaders : table.colHeaders;
  const header = headers[headerIndex];
  if (!header) return LAMBDA;
  const finest = spec.params[spec.params.length - 1];
  const entry = header.find(([attr]) => attr === finest);
  if (!finest || !entry) return LAMBDA;
  return `${spec.dim}.${spec.hier}/${finest}=${literal(entry[1])}`;
}

/** Build the canonical anchor text for a selection in the current view. */
export function buildAnchor(sel: Selection, ctx: ContextJson, table: TableJson): string {
  switch (sel.kind) {
    case "measure": {
      const name = measureNameOf(table.measures[sel.m] ?? "");
      return `(${ctx.fact}/${name}, ${LAMBDA}, ${LAMBDA})`;
    }
    case "cell": {
      const name = measureNameOf(table.measures[sel.m] ?? "");
      const d1 = axisPart(ctx, table, 0, sel.r);
      const d2 = axisPart(ctx, table, 1, sel.c);
      return `(${ctx.id}.${ctx.fact}/${name}, ${d1}, ${d2})`;
    }
    case "level": {
      const spec = ctx.axes[sel.axis];
      if (!spec) return `(${LAMBDA}, ${LAMBDA}, ${LAMBDA})`;
      return `(${LAMBDA}, ${spec.dim}.${spec.hier}/${sel.attr}, ${LAMBDA})`;
    }
    case "dimension":
      return `(${LAMBDA}, ${sel.dim}, ${LAMBDA})`;
  }
}

export interface AnchorDimRef {
  dim: string;
  hier?: string;
  levels: { param: string; pos?: string | number }[];
}

export interface AnchorParts {
  contextRef: string | null;
  fact?: string;
  measure?: string;
  dims: AnchorDimRef[];
}

function splitLevels(text: string): { head: string; levels: AnchorDimRef["levels"] } {
  const [head, ...rest] = text.split("/");
  const levels = rest.map((chunk) => {
    const eq = chunk.indexOf("=");
    if (eq < 0) return { param: chunk };
    const raw = chunk.slice(eq + 1);
    const pos = raw.startsWith("'") ? raw.slice(1, -1) : Number(raw);
    return { param: chunk.slice(0, eq), pos };
  });
  return { head: head ?? "", levels };
}

/** Split canonical anchor text into its three parts (display only). */
export function splitAnchor(text: string): AnchorParts {
  const inner = text.trim().replace(/^\(/, "").replace(/\)$/, "");
  const parts: string[] = [];
  let depth = 0;
  let current = "";
  for (const ch of inner) {
    if (ch === "(") depth += 1;
    if (ch === ")") depth -= 1;
    if (ch === "," && depth === 0) {
      parts.push(current.trim());
      current = "";
    } else {
      current += ch;
    }
  }
  parts.push(current.trim());

  const out: AnchorParts = { contextRef: null, dims: [] };
  const [subject, ...dimParts] = parts;
  if (subject && subject !== LAMBDA && subject.toLowerCase() !== "lambda") {
    let rest = subject;
    const dot = rest.indexOf(".");
    const slash = rest.indexOf("/");
    if (dot >= 0 && (slash < 0 || dot < slash)) {
      out.contextRef = rest.slice(0, dot);
      rest = rest.slice(dot + 1);
    }
    const [factPart, measurePart] = rest.split("/");
    out.fact = factPart;
    if (measurePart) {
      const eq = measurePart.indexOf("=");
      const ref = eq >= 0 ? measurePart.slice(0, eq) : measurePart;
      const open = ref.indexOf("(");
      out.measure = open >= 0 ? ref.slice(open + 1, -1) : ref;
    }
  }
  for (const part of dimParts) {
    if (!part || part === LAMBDA || part.toLowerCase() === "lambda") continue;
    const dot = part.indexOf(".");
    if (dot < 0) {
      out.dims.push({ dim: part, levels: [] });
      continue;
    }
    const dim = part.slice(0, dot);
    const { head, levels } = splitLevels(part.slice(dot + 1));
    out.dims.push({ dim, hier: head, levels });
  }
  return out;
}
