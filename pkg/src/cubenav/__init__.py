"""cubenav: an in-memory annotated, personalized OLAP engine.

Model a constellation of facts and dimensions, navigate analysis contexts
with OLAP operations, evaluate them into multidimensional tables, anchor
threaded annotations on schema or context elements, and derive alternative
analysis contexts from contextually covered user preferences.
"""

from .annotations import Annotation, AnnotationStore
from .anchors import Anchor, DimAnchor, SubjectAnchor, format_anchor, parse_anchor
from .context import (
    AnalysisContext,
    AxisSpec,
    ContextIds,
    DisplayedMeasure,
    Restriction,
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
from .cube import (
    DimensionData,
    FactData,
    MultidimensionalTable,
    evaluate,
    load_dimension_csv,
    load_fact_csv,
)
from .errors import (
    AnchorSyntaxError,
    CubenavError,
    DataError,
    OperationError,
    PredicateTypeError,
    SchemaError,
    SchemaValidationError,
    ScriptError,
    StoreError,
    UnknownNameError,
)
from .preferences import (
    Preference,
    PreferenceContext,
    PreferenceStore,
    StructureRef,
    covers,
    resolve_structure_ref,
)
from .recommend import (
    OlapOperation,
    Recommendation,
    apply_operation,
    integrate,
    operation_from_json,
    recommend,
    recommend_for_context,
)
from .schema import (
    Constellation,
    Dimension,
    Fact,
    Finding,
    Hierarchy,
    Measure,
    load_schema,
    serialize_constellation,
    validate_constellation,
)
from .session import SessionEngine, Workspace

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
