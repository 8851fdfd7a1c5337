"""Exception taxonomy. Every error carries a stable machine-readable code."""


class CinegradeError(Exception):
    """Base class for all engine errors."""

    code = "internal_error"

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class InputError(CinegradeError):
    code = "input_error"


class ColorimetryMismatchError(InputError):
    code = "colorimetry_mismatch"


class UnknownCurveError(InputError):
    code = "unknown_curve"


class DegenerateWhitepointError(InputError):
    code = "degenerate_whitepoint"


class ConfigurationError(CinegradeError):
    code = "configuration_error"


class ParamValidationError(InputError):
    code = "param_validation"

    def __init__(self, violations):
        self.violations = list(violations)
        detail = "; ".join(str(v) for v in self.violations)
        super().__init__(f"invalid CDL parameters: {detail}")


class CubeFormatError(InputError):
    code = "cube_format"

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InsufficientDataError(InputError):
    code = "insufficient_data"


class StoreLoadError(InputError):
    code = "store_load"


class EmptyStoreError(InputError):
    code = "empty_store"


class StaleEmbeddingError(InputError):
    code = "stale_embedding"


class DegenerateTextError(InputError):
    code = "degenerate_text"


class BackendError(CinegradeError):
    code = "backend_error"


class FixtureExhaustedError(BackendError):
    code = "fixture_exhausted"


class SemanticStreamError(BackendError):
    code = "semantic_stream_failure"


class ExpansionError(BackendError):
    code = "expansion_failure"


class SearchError(BackendError):
    code = "search_failure"


class ReflectionParseError(BackendError):
    code = "reflection_parse_failure"


class SessionStateError(CinegradeError):
    code = "session_state"


class SessionNotFoundError(InputError):
    code = "session_not_found"
