"""Exception hierarchy shared by all micose modules."""


class MicoseError(Exception):
    """Base class for every error raised by the package."""


class LexError(MicoseError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.message = message
        self.line = line


class ParseError(MicoseError):
    def __init__(self, message: str, line: int = 0):
        super().__init__(f"line {line}: {message}" if line else message)
        self.message = message
        self.line = line


class MultiplePouError(ParseError):
    """Raised when a text holds more than one POU; split it with ``split_pous``."""


class CatalogError(MicoseError):
    """Catalog config failed validation. ``offenders`` lists the bad entries."""

    def __init__(self, message: str, offenders=()):
        detail = f": {', '.join(map(str, offenders))}" if offenders else ""
        super().__init__(message + detail)
        self.offenders = list(offenders)


class ConfigError(MicoseError):
    pass


class ConsistencyError(MicoseError):
    pass


class StoreError(MicoseError):
    pass


class DuplicateRecordError(StoreError):
    def __init__(self, changeset_id: str):
        super().__init__(f"changeset {changeset_id!r} already stored")
        self.changeset_id = changeset_id


class SchemaError(StoreError):
    pass


class StoreLockedError(StoreError):
    pass


class AdapterError(MicoseError):
    """VCS client missing or failing; ``diagnostics`` carries captured stderr."""

    def __init__(self, message: str, diagnostics: str = ""):
        super().__init__(message + (f"\n{diagnostics}" if diagnostics else ""))
        self.diagnostics = diagnostics


class NotFoundError(AdapterError):
    pass


class SourceEncodingError(AdapterError):
    pass
