"""Exception types shared across the engine.

Every error carries a stable ``code`` so the HTTP layer and the CLI can map
failures to structured responses without string matching.
"""

from __future__ import annotations


class CubenavError(Exception):
    """Base class for all engine errors."""

    code = "error"

    def __init__(self, message: str, detail: object = None):
        super().__init__(message)
        self.detail = detail


class SchemaError(CubenavError):
    """Malformed schema document (structure or syntax)."""

    code = "schema_parse_error"


class SchemaValidationError(SchemaError):
    """A structurally well-formed schema that violates a model invariant."""

    code = "schema_validation_error"

    def __init__(self, findings):
        first = findings[0]
        super().__init__(
            f"invalid schema: {first.rule} at {first.path}: {first.message}",
            detail=[f.as_dict() for f in findings],
        )
        self.findings = list(findings)


class UnknownNameError(CubenavError):
    """A fact, dimension, hierarchy, attribute or measure name did not resolve."""

    code = "unknown_name"


class OperationError(CubenavError):
    """A navigation operation was applied outside its preconditions."""

    code = "invalid_operation"


class PredicateTypeError(CubenavError):
    """Restriction operand does not match the target attribute or measure kind."""

    code = "type_mismatch"


class AnchorSyntaxError(CubenavError):
    """Anchor text that does not parse; ``position`` is a 0-based offset."""

    code = "anchor_syntax_error"

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})", detail={"position": position})
        self.position = position


class DataError(CubenavError):
    """CSV instance data that violates typing, keys or roll-up dependencies."""

    code = "data_error"


class StoreError(CubenavError):
    """Annotation or preference store constraint violation."""

    code = "store_error"


class ScriptError(CubenavError):
    """Operation script that cannot be parsed or starts illegally."""

    code = "script_error"
