"""Workspace loading and the session engine shared by the CLI and the service.

A workspace bundles one loaded constellation with its instance data and the
two personalization stores. A session engine owns the navigation state of one
decision-maker: current context, operation history, and the recommendations
returned by the latest step. Both the CLI replay and the HTTP service run
every operation through :meth:`SessionEngine.apply_json`, so their outputs
are identical for identical inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .annotations import AnnotationStore
from .context import AnalysisContext, ContextIds
from .cube import DimensionData, FactData, evaluate, load_dimension_csv, load_fact_csv
from .errors import DataError, OperationError
from .preferences import PreferenceStore
from .recommend import (
    OlapOperation,
    Recommendation,
    operation_from_json,
    recommend,
    recommend_for_context,
    recommendations_json,
)
from .schema import Constellation, load_schema


@dataclass
class Workspace:
    constellation: Constellation
    dims: dict[str, DimensionData]
    facts: dict[str, FactData]

    @property
    def annotations(self) -> AnnotationStore:
        return self.constellation.annotations

    @property
    def preferences(self) -> PreferenceStore:
        return self.constellation.preferences

    @classmethod
    def load(
        cls,
        schema_path: str | Path,
        data_dir: str | Path,
        annotations_path: str | Path | None = None,
        preferences_path: str | Path | None = None,
    ) -> "Workspace":
        """Load schema plus one ``<name, lowercased>.csv`` per dimension and fact."""
        c = load_schema(Path(schema_path))
        data_dir = Path(data_dir)
        dims: dict[str, DimensionData] = {}
        for d in c.dimensions:
            path = data_dir / f"{d.name.lower()}.csv"
            if not path.exists():
                raise DataError(f"missing dimension data file: {path}")
            dims[d.name] = load_dimension_csv(c, d.name, path)
        facts: dict[str, FactData] = {}
        for f in c.facts:
            path = data_dir / f"{f.name.lower()}.csv"
            if not path.exists():
                raise DataError(f"missing fact data file: {path}")
            facts[f.name] = load_fact_csv(c, f.name, dims, path)
        if annotations_path is not None:
            c.annotations = AnnotationStore(c, annotations_path)
        if preferences_path is not None:
            c.preferences = PreferenceStore(c, preferences_path)
        return cls(constellation=c, dims=dims, facts=facts)


@dataclass
class SessionEngine:
    """Navigation state of one user over a workspace."""

    workspace: Workspace
    user: str = "U1"
    session_id: str = "S1"
    ids: ContextIds = field(default_factory=ContextIds)
    context: AnalysisContext | None = None
    history: list = field(default_factory=list)
    last_recs: list[Recommendation] = field(default_factory=list)
    step: int = 0

    def apply(self, op: OlapOperation) -> dict:
        """Run one operation: new context, table, recommendations, annotations."""
        ctx_next, recs = recommend(
            self.context,
            op,
            self.workspace.preferences,
            self.workspace.annotations,
            owner=self.user,
            ids=self.ids,
        )
        self.context = ctx_next
        self.last_recs = recs
        self.history.append(op.as_json())
        self.step += 1
        return self._payload()

    def accept(self, index: int) -> dict:
        """Adopt one of the recommendations returned by the previous step."""
        if not 0 <= index < len(self.last_recs):
            raise OperationError(
                f"recommendation index {index} out of range (have {len(self.last_recs)})"
            )
        from dataclasses import replace

        # Adoption promotes the recommendation into the session's own
        # context sequence, so it gets the next session id.
        self.context = replace(
            self.last_recs[index].context, context_id=self.ids.next(), ids=self.ids
        )
        self.last_recs = recommend_for_context(
            self.context,
            self.workspace.preferences,
            self.workspace.annotations,
            owner=self.user,
        )
        self.history.append({"op": "adopt", "index": index})
        self.step += 1
        return self._payload()

    def apply_json(self, obj: dict) -> dict:
        if isinstance(obj, dict) and obj.get("op") == "adopt":
            return self.accept(obj["index"])
        return self.apply(operation_from_json(obj))

    def replay(self) -> "SessionEngine":
        """Fresh engine re-running this session's history (determinism check)."""
        fresh = SessionEngine(workspace=self.workspace, user=self.user, session_id=self.session_id)
        for entry in self.history:
            fresh.apply_json(entry)
        return fresh

    def _payload(self) -> dict:
        ctx = self.context
        table = evaluate(ctx, self.workspace.facts[ctx.fact], self.workspace.dims)
        resolved = self.workspace.annotations.resolve(ctx, table)
        return {
            "context": ctx.as_json(),
            "table": table.as_json(),
            "recommendations": recommendations_json(ctx.context_id, self.last_recs),
            "annotations": [a.as_json() for a in resolved],
        }
