"""Exceptions shared by the simulator modules.

Three families, matching the three exit paths of the CLI:
- ``DomainError``: the physics or structure asked for does not exist (bad site labels,
  basis mismatch, unequal defect offsets, ...). CLI exit code 2, HTTP 422.
- ``ConfigError``: the run document itself is malformed. CLI exit code 2, HTTP 422.
- ``NumericalError``: a well-posed request the numerics could not finish. CLI exit code 3, HTTP 500.
"""
from typing import Optional


class DomainError(ValueError):
    pass


class ConfigError(ValueError):
    pass


class NumericalError(RuntimeError):
    def __init__(self, message: str, *, last_step: Optional[float] = None, condition: Optional[float] = None):
        super().__init__(message)
        self.last_step = last_step
        self.condition = condition
