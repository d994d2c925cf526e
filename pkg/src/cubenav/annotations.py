"""Threaded annotations anchored on schema concepts or context elements.

The store assigns ids and creation timestamps at insertion (monotonic within
a store) so threads always order chronologically. Persistence is an
append-only JSON-lines file with anchors kept in canonical text form.
"""

from __future__ import annotations

import datetime as _dt
import json
import threading
from dataclasses import dataclass
from pathlib import Path

from .anchors import Anchor, anchor_concepts, format_anchor, parse_anchor
from .context import AnalysisContext, to_tree, tree_nodes
from .errors import StoreError
from .schema import Constellation

KINDS = ("comment", "question", "answer", "conclusion")


@dataclass(frozen=True)
class Annotation:
    id: str
    kind: str
    content: str
    author: str
    created_at: _dt.datetime
    anchor: Anchor
    parent: str | None = None

    def as_json(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "content": self.content,
            "author": self.author,
            "createdAt": self.created_at.isoformat(),
            "parent": self.parent,
            "anchor": format_anchor(self.anchor),
        }


class AnnotationStore:
    """Single-writer annotation log over one constellation."""

    def __init__(self, constellation: Constellation, path: str | Path | None = None):
        self.constellation = constellation
        self.path = Path(path) if path else None
        self._items: list[Annotation] = []
        self._by_id: dict[str, Annotation] = {}
        self._counter = 0
        self._last_ts: _dt.datetime | None = None
        self._lock = threading.Lock()
        if self.path and self.path.exists():
            self._load()

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def get(self, annotation_id: str) -> Annotation:
        try:
            return self._by_id[annotation_id]
        except KeyError:
            raise StoreError(f"unknown annotation: {annotation_id}") from None

    def add(
        self,
        content: str,
        kind: str,
        author: str,
        anchor: Anchor | str,
        parent: str | None = None,
    ) -> Annotation:
        """Insert one annotation; id and timestamp are assigned here."""
        if kind not in KINDS:
            raise StoreError(f"unknown annotation kind: {kind}")
        if isinstance(anchor, str):
            anchor = parse_anchor(self.constellation, anchor)
        if parent is not None and parent not in self._by_id:
            raise StoreError(f"parent annotation {parent} does not exist")
        if kind == "answer" and parent is None:
            raise StoreError("an answer needs a parent annotation")
        with self._lock:
            self._counter += 1
            now = _dt.datetime.now(_dt.timezone.utc)
            if self._last_ts is not None and now <= self._last_ts:
                now = self._last_ts + _dt.timedelta(microseconds=1)
            self._last_ts = now
            item = Annotation(
                id=f"A{self._counter}",
                kind=kind,
                content=content,
                author=author,
                created_at=now,
                anchor=anchor,
                parent=parent,
            )
            self._items.append(item)
            self._by_id[item.id] = item
            if self.path:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(json.dumps(item.as_json(), ensure_ascii=False) + "\n")
        return item

    def resolve(self, ctx: AnalysisContext, table=None) -> list[Annotation]:
        """Annotations that apply to ``ctx``: local ones anchored to its id,
        global ones whose anchored concepts all appear in the context tree.

        A measure-value clause on a global anchor only matches when ``table``
        is supplied and contains that exact cell value for the measure.
        """
        labels = set(tree_nodes(to_tree(ctx)))
        out = []
        for a in self._items:
            if a.anchor.is_local:
                if a.anchor.subject.context_ref == ctx.context_id:
                    out.append(a)
                continue
            if self._global_matches(a.anchor, labels, table):
                out.append(a)
        return out

    def _global_matches(self, anchor: Anchor, labels: set[str], table) -> bool:
        concepts = anchor_concepts(self.constellation, anchor)
        for node in concepts["nodes"]:
            if node not in labels:
                return False
        measure = concepts["measure"]
        if measure is not None:
            agg = concepts["measure_agg"]
            if agg is not None:
                if f"measure:{agg}({measure})" not in labels:
                    return False
            else:
                # A bare measure name matches any displayed aggregation of it.
                if not any(
                    label.startswith("measure:") and label.endswith(f"({measure})")
                    for label in labels
                ):
                    return False
            value = concepts["measure_value"]
            if value is not None:
                if table is None:
                    return False
                wanted = [i for i, label in enumerate(table.measures)
                          if label.endswith(f"({measure})") and (agg is None or label == f"{agg}({measure})")]
                if not any(m in wanted and v == value for (_, _, m), v in table.cells.items()):
                    return False
        return True

    def thread(self, annotation_id: str) -> list[Annotation]:
        """The whole discussion containing ``annotation_id``: root ancestor
        first, then every descendant in creation order."""
        node = self.get(annotation_id)
        seen = {node.id}
        while node.parent is not None:
            node = self.get(node.parent)
            if node.id in seen:
                raise StoreError(f"parent cycle at annotation {node.id}")
            seen.add(node.id)
        members = {node.id}
        # Items are chronological, so one forward pass collects all descendants.
        thread = [node]
        for item in self._items:
            if item.parent in members and item.id not in members:
                members.add(item.id)
                thread.append(item)
        return thread

    # -- persistence --------------------------------------------------------

    def _load(self):
        for lineno, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise StoreError(f"{self.path}:{lineno}: malformed annotation line: {exc}") from exc
            item = Annotation(
                id=obj["id"],
                kind=obj["kind"],
                content=obj["content"],
                author=obj["author"],
                created_at=_dt.datetime.fromisoformat(obj["createdAt"]),
                anchor=parse_anchor(self.constellation, obj["anchor"]),
                parent=obj.get("parent"),
            )
            if item.kind not in KINDS:
                raise StoreError(f"{self.path}:{lineno}: unknown annotation kind {item.kind!r}")
            if item.parent is not None and item.parent not in self._by_id:
                raise StoreError(f"{self.path}:{lineno}: parent {item.parent} not seen yet")
            if item.id in self._by_id:
                raise StoreError(f"{self.path}:{lineno}: duplicate annotation id {item.id}")
            self._items.append(item)
            self._by_id[item.id] = item
            self._last_ts = item.created_at if self._last_ts is None else max(self._last_ts, item.created_at)
            if item.id.startswith("A") and item.id[1:].isdigit():
                self._counter = max(self._counter, int(item.id[1:]))
