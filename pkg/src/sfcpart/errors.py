"""Exception hierarchy. Each class carries the CLI exit code it maps to."""


class SfcPartError(Exception):
    exit_code = 2


class ConfigError(SfcPartError, ValueError):
    """Bad parameters: level, epsilon, rank count, inconsistent sizes."""

    exit_code = 1


class DomainError(SfcPartError, ValueError):
    """A point outside the open unit cube."""

    exit_code = 2


class ParseError(SfcPartError, ValueError):
    """Malformed input file or stdin line."""

    exit_code = 2

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}" if where else f"line {lineno}"
        super().__init__(f"{where}: {message}" if where else message)
