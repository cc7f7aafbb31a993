class NestexError(Exception):
    """Base class for every error raised by nestex."""


class ConfigError(NestexError):
    pass


class CorpusError(NestexError):
    pass


class ParseError(CorpusError):
    def __init__(self, line_no: int, message: str):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class ValidationError(CorpusError):
    def __init__(self, sentence_id: str, field: str, message: str):
        self.sentence_id = sentence_id
        self.field = field
        super().__init__(f"sentence {sentence_id!r}, {field}: {message}")


class ShapeError(NestexError):
    pass


class CrfError(NestexError):
    pass


class NumericError(NestexError):
    pass


class CheckpointError(NestexError):
    pass


class UsageError(NestexError):
    pass


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INVALID = 2
EXIT_NUMERIC = 3


def exit_code(error: BaseException) -> int:
    """Process exit status for an error raised while running a command."""
    if isinstance(error, (UsageError, ConfigError)):
        return EXIT_USAGE
    if isinstance(error, (NumericError, CrfError, ShapeError)):
        return EXIT_NUMERIC
    if isinstance(error, (CorpusError, CheckpointError, OSError)):
        return EXIT_INVALID
    return EXIT_USAGE
