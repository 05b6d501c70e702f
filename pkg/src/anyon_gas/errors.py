"""Exception types shared across anyon-gas modules."""

from typing import Any, Dict, Optional

# exit status per configuration error kind; 3 and 4 belong to computation and output
CONFIG_EXIT_CODES: Dict[str, int] = {
    "missing_key": 2,
    "bad_value": 2,
    "unknown_subcommand": 5,
    "unknown_key": 6,
    "type_mismatch": 7,
}


class AnyonGasError(Exception):
    """Base class for errors raised by anyon-gas."""


class ConfigError(AnyonGasError, ValueError):
    """Bad, missing or unknown configuration value.

    ``kind`` is one of the CONFIG_EXIT_CODES keys and picks the process exit status.
    """

    def __init__(self, message: str, key: Optional[str] = None, kind: str = "bad_value"):
        if kind not in CONFIG_EXIT_CODES:
            raise ValueError(f"unknown config error kind {kind!r}")
        super().__init__(message)
        self.key = key
        self.kind = kind

    @property
    def exit_code(self) -> int:
        return CONFIG_EXIT_CODES[self.kind]


class ConvergenceError(AnyonGasError, RuntimeError):
    """An iterative solver failed to converge.

    ``result`` holds the last available partial result, if any.
    """

    def __init__(self, message: str, result: Any = None):
        super().__init__(message)
        self.result = result
