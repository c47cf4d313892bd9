"""
Error types shared by the solver, simulator, harness and CLI
"""


class CorrodeError(Exception):
    """Base class for every error raised by this package"""


class InvalidInputError(CorrodeError, ValueError):
    """Invalid argument passed to a model, solver or simulator operation"""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class ConfigError(InvalidInputError):
    """Invalid experiment config, CLI override or environment setting

    The message always starts with the dotted path of the offending field.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}", field=field)


class IllegalTransitionError(CorrodeError, RuntimeError):
    """An edge changed state along an arc the corruption model forbids"""

    def __init__(self, source, target, time=None, edge=None):
        where = f" on edge {edge}" if edge is not None else ""
        when = f" at t={time:.6g}s" if time is not None else ""
        super().__init__(f"illegal transition {int(source)}->{int(target)}{where}{when}")
        self.source = source
        self.target = target
        self.time = time
        self.edge = edge
