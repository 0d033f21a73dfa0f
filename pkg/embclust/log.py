import logging

LEVEL_FORMATS = {
    logging.DEBUG: "DBG: %(module)s: %(lineno)d: %(msg)s",
    logging.INFO: "%(msg)s",
    logging.WARNING: "WARN: %(msg)s",
    logging.ERROR: "ERROR: %(msg)s",
}


class StageFormatter(logging.Formatter):
    """Prefix records by severity; plain INFO lines carry the stage progress."""

    def __init__(self):
        super().__init__(fmt="%(levelno)d: %(msg)s", datefmt=None, style="%")
        self._styles = {level: logging.PercentStyle(fmt) for level, fmt in LEVEL_FORMATS.items()}

    def _style_for(self, levelno: int) -> logging.PercentStyle:
        if levelno >= logging.ERROR:
            return self._styles[logging.ERROR]
        return self._styles.get(levelno, self._style)

    def format(self, record):
        default = self._style
        self._style = self._style_for(record.levelno)
        try:
            return super().format(record)
        finally:
            self._style = default


_handler = None


def setup_logging(level: int = logging.INFO) -> None:
    """Attach the stage formatter to the root logger. Calling it again only changes the level."""
    global _handler
    if _handler is None:
        _handler = logging.StreamHandler()
        _handler.setFormatter(StageFormatter())
        logging.root.addHandler(_handler)
    logging.root.setLevel(level)
