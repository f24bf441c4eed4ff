"""
Exception hierarchy.

Every failure the library raises on purpose is an ErpxError. Like an
HTTPException it carries a human-readable `detail` and a numeric code, here
the process exit status the CLI uses when the error reaches the top level.
None of them is a ValueError, so they pass through pydantic validators
unchanged instead of becoming a ValidationError.
"""


class ErpxError(Exception):
    """Base class for all intentional erpx failures."""

    exit_code: int = 1

    def __init__(self, detail: str):
        super().__init__(detail)
        self.detail = detail


class DataError(ErpxError):
    """The data cannot support the requested computation (missing cells, n too small, ...)."""

    exit_code = 1


class ConfigError(ErpxError):
    """A run configuration failed validation."""

    exit_code = 2


class ContractViolation(ErpxError):
    """A caller broke an operation's precondition."""

    exit_code = 3
