class ConfigurationError(ValueError):
    """Model or run configuration is inconsistent (shapes, variants, flags)."""


class InputError(ValueError):
    """Data handed to an operation does not satisfy its preconditions."""


class CorpusFormatError(InputError):
    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)
