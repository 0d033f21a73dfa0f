class EmbclustError(Exception):
    """Base class of every error raised by embclust."""

    def __init__(self, message: str = ""):
        super().__init__(message)
        self.message = message


class ConfigError(EmbclustError):
    """Invalid configuration or input. The CLI exits with code 2."""


class StageError(EmbclustError):
    """A pipeline stage failed. The CLI exits with code 3."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause
