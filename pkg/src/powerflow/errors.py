"""Exception hierarchy.

The CLI maps :class:`DataError` to exit status 2 and every other
:class:`PowerflowError` to exit status 1.
"""


class PowerflowError(Exception):
    """Base class for domain errors."""


class ModelError(PowerflowError):
    """Invalid model state, parameters or registry lookup."""


class CalibrationError(PowerflowError):
    """A calibration routine cannot produce an estimate from its inputs."""


class ScenarioError(PowerflowError):
    """A scenario edit is malformed or references unknown countries."""


class DataError(PowerflowError):
    """Unreadable or malformed input file."""

    def __init__(self, message: str, path: object = None, line: int | None = None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
