"""Batch command line: validate schemas, replay operation scripts, serve, annotate.

Scripts are line-oriented, one operation per line, ``#`` comments::

    DISPLAY(FVENTES, SUM(REMISE), DCLIENTS.HGEOFR, DTEMPS.HTEMPS)
    DRILLDOWN(DCLIENTS, NDEPT)
    ROTATE(DCLIENTS, DPRODUITS.HPROD)
    RESTRICT(DTEMPS.ANNEE = 2009)
    ADDMEASURE(SUM(MONTANT))          # appends; optional index argument
    ROLLUP(DCLIENTS, REGION)

Every path flag falls back to a ``CUBENAV_*`` environment variable.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from pathlib import Path

from .annotations import AnnotationStore
from .errors import CubenavError, ScriptError
from .recommend import OlapOperation
from .schema import load_schema, validate_constellation
from .session import SessionEngine, Workspace

_OP_LINE_RE = re.compile(r"^\s*([A-Za-z_]+)\s*\((.*)\)\s*$")
_MEASURE_RE = re.compile(r"^([A-Za-z]+)\s*\(\s*([A-Za-z][A-Za-z0-9_]*)\s*\)$")
_RESTRICT_RE = re.compile(r"^\s*([A-Za-z][A-Za-z0-9_./]*)\s*(=|!=|<=|>=|<|>|IN)\s*(.+?)\s*$", re.IGNORECASE)


def _split_args(text: str) -> list[str]:
    """Split on top-level commas only (parentheses may nest)."""
    parts, depth, current = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    tail = "".join(current).strip()
    if tail:
        parts.append(tail)
    return parts


def _parse_literal(text: str):
    text = text.strip()
    if text.startswith("'") and text.endswith("'") and len(text) >= 2:
        return text[1:-1]
    if text.startswith("(") and text.endswith(")"):
        return [_parse_literal(t) for t in _split_args(text[1:-1])]
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text  # bare word: treated as a string value


def parse_script(text: str) -> list[OlapOperation]:
    """Parse an operation script; the first operation must be a display."""
    ops: list[OlapOperation] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _OP_LINE_RE.match(line)
        if not m:
            raise ScriptError(f"line {lineno}: cannot parse operation: {line!r}")
        keyword, argtext = m.group(1).upper(), m.group(2)
        args = _split_args(argtext)
        try:
            ops.append(_build_op(keyword, args))
        except ScriptError as exc:
            raise ScriptError(f"line {lineno}: {exc}") from None
    if not ops:
        raise ScriptError("empty script: first operation must be display")
    if ops[0].kind != "display":
        raise ScriptError("first operation must be display")
    return ops


def _build_op(keyword: str, args: list[str]) -> OlapOperation:
    if keyword == "DISPLAY":
        if len(args) < 3:
            raise ScriptError("DISPLAY needs a fact, measures and axes")
        fact = args[0]
        measures, axes = [], []
        for arg in args[1:]:
            m = _MEASURE_RE.match(arg)
            if m:
                measures.append({"agg": m.group(1).upper(), "measure": m.group(2)})
            elif "." in arg:
                dim, hier = arg.split(".", 1)
                axes.append({"dim": dim.strip(), "hier": hier.strip()})
            else:
                raise ScriptError(f"DISPLAY argument {arg!r} is neither AGG(MEASURE) nor DIM.HIER")
        return OlapOperation("display", {"fact": fact, "measures": measures, "axes": axes})
    if keyword in ("DRILLDOWN", "ROLLUP"):
        if len(args) != 2:
            raise ScriptError(f"{keyword} needs a dimension and a parameter")
        return OlapOperation(keyword.lower(), {"dim": args[0], "param": args[1]})
    if keyword == "ROTATE":
        if len(args) != 2 or "." not in args[1]:
            raise ScriptError("ROTATE needs DIMOLD, DIMNEW.HIERNEW")
        dim_new, hier_new = args[1].split(".", 1)
        return OlapOperation("rotate", {"dimOld": args[0], "dimNew": dim_new, "hierNew": hier_new})
    if keyword == "ADDMEASURE":
        if not args:
            raise ScriptError("ADDMEASURE needs AGG(MEASURE)")
        m = _MEASURE_RE.match(args[0])
        if not m:
            raise ScriptError(f"ADDMEASURE argument {args[0]!r} is not AGG(MEASURE)")
        params = {"agg": m.group(1).upper(), "measure": m.group(2)}
        if len(args) > 1:
            params["position"] = int(args[1])
        return OlapOperation("add_measure", params)
    if keyword == "RESTRICT":
        m = _RESTRICT_RE.match(", ".join(args) if len(args) > 1 else args[0])
        if not m:
            raise ScriptError("RESTRICT needs TARGET op VALUE")
        op = m.group(2).upper() if m.group(2).lower() == "in" else m.group(2)
        return OlapOperation(
            "restrict",
            {"target": m.group(1), "comparator": op, "value": _parse_literal(m.group(3))},
        )
    raise ScriptError(f"unknown operation keyword: {keyword}")


# ---------------------------------------------------------------------------
# Subcommands


def _env_default(name: str):
    return os.environ.get(f"CUBENAV_{name}")


def _add_workspace_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--schema", default=_env_default("SCHEMA"), help="schema JSON path")
    parser.add_argument("--data-dir", default=_env_default("DATA_DIR"), help="CSV directory")
    parser.add_argument("--preferences", default=_env_default("PREFERENCES"), help="preference JSONL path")
    parser.add_argument("--annotations", default=_env_default("ANNOTATIONS"), help="annotation JSONL path")


def _load_workspace(args) -> Workspace:
    if not args.schema or not args.data_dir:
        raise CubenavError("--schema and --data-dir are required (or CUBENAV_SCHEMA / CUBENAV_DATA_DIR)")
    return Workspace.load(
        args.schema,
        args.data_dir,
        annotations_path=args.annotations,
        preferences_path=args.preferences,
    )


def _cmd_validate(args) -> int:
    try:
        c = load_schema(Path(args.schema))
    except CubenavError as exc:
        findings = getattr(exc, "findings", None)
        if findings:
            for f in findings:
                print(f"{f.path}: {f.rule}: {f.message}")
        else:
            print(str(exc))
        return 1
    findings = validate_constellation(c)
    for f in findings:
        print(f"{f.path}: {f.rule}: {f.message}")
    if findings:
        return 1
    print(f"schema ok: {len(c.facts)} fact(s), {len(c.dimensions)} dimension(s)")
    return 0


def render_table_text(table_json: dict) -> str:
    """Fixed-width rendering of a table payload; empty cells stay blank."""
    rows = table_json["rowHeaders"]
    cols = table_json["colHeaders"]
    measures = table_json["measures"]
    cell = {(c["r"], c["c"], c["m"]): c["v"] for c in table_json["cells"]}

    def header_text(h):
        return " / ".join(str(v) for _, v in h) if h else "ALL"

    col_titles = [f"{header_text(h)} {m}" if h else m for h in cols for m in measures]
    grid = [[""] + col_titles]
    for r, rh in enumerate(rows):
        line = [header_text(rh)]
        for c in range(len(cols)):
            for m in range(len(measures)):
                v = cell.get((r, c, m), "")
                line.append("" if v == "" else str(v))
        grid.append(line)
    widths = [max(len(row[i]) for row in grid) for i in range(len(grid[0]))]
    return "\n".join("  ".join(val.ljust(w) for val, w in zip(row, widths)).rstrip() for row in grid)


def _cmd_replay(args) -> int:
    try:
        workspace = _load_workspace(args)
        script = Path(args.script).read_text(encoding="utf-8")
        ops = parse_script(script)
    except CubenavError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    engine = SessionEngine(workspace=workspace, user=args.user)
    steps = []
    for number, op in enumerate(ops, start=1):
        try:
            payload = engine.apply(op)
        except CubenavError as exc:
            print(f"error at step {number}: {exc}", file=sys.stderr)
            return 2
        steps.append({"step": number, "operation": op.as_json(), **payload})
    if args.output == "json":
        print(json.dumps(steps, indent=2, sort_keys=True, ensure_ascii=False))
    else:
        for entry in steps:
            print(f"== step {entry['step']}: {entry['operation']['op']} -> {entry['context']['id']}")
            print(render_table_text(entry["table"]))
            for item in entry["recommendations"]["items"]:
                badges = ",".join(a["id"] for a in item["annotations"])
                print(f"  recommendation from {item['preference']}: context {item['context']['id']}"
                      + (f" [annotations {badges}]" if badges else ""))
            for a in entry["annotations"]:
                print(f"  annotation {a['id']} ({a['kind']}) on {a['anchor']}: {a['content']}")
            print()
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    workspace = _load_workspace(args)
    app = create_app(workspace)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def _cmd_annotate(args) -> int:
    try:
        c = load_schema(Path(args.schema))
        store = AnnotationStore(c, args.annotations) if args.annotations else AnnotationStore(c)
        item = store.add(content=args.text, kind=args.kind, author=args.author, anchor=args.anchor,
                         parent=args.parent)
    except CubenavError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(item.as_json(), indent=2, sort_keys=True, ensure_ascii=False))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cubenav", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a schema document")
    p.add_argument("schema", help="schema JSON path")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("replay", help="replay an operation script")
    _add_workspace_flags(p)
    p.add_argument("--script", required=True, help="operation script path")
    p.add_argument("--user", default=_env_default("USER") or "U1", help="session user id")
    p.add_argument("--output", choices=("json", "text"), default="json")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("serve", help="run the HTTP session service")
    _add_workspace_flags(p)
    p.add_argument("--host", default=_env_default("HOST") or "127.0.0.1")
    p.add_argument("--port", type=int, default=int(_env_default("PORT") or "8350"))
    p.set_defaults(func=_cmd_serve)

    p = sub.add_parser("annotate", help="append an annotation to a store file")
    p.add_argument("anchor", help="anchor expression, e.g. \"(FVENTES/REMISE, λ, λ)\"")
    p.add_argument("kind", choices=("comment", "question", "answer", "conclusion"))
    p.add_argument("text", help="annotation content")
    p.add_argument("--author", default=_env_default("USER") or "U1")
    p.add_argument("--parent", default=None, help="parent annotation id")
    p.add_argument("--schema", default=_env_default("SCHEMA"), required=False)
    p.add_argument("--annotations", default=_env_default("ANNOTATIONS"), required=False)
    p.set_defaults(func=_cmd_annotate)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
