"""Exception types shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, NumericsError
(including CflError) -> 2.
"""

from __future__ import annotations


class SpplabError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SpplabError):
    """Invalid or inconsistent configuration input."""


class NumericsError(SpplabError):
    """A solver or estimator failed numerically (NaN, divergence, ...)."""


class CflError(NumericsError):
    """Explicit time step exceeds the stable face-velocity bound."""

    def __init__(self, dt: float, dt_max: float, velocity: float, face_index: int):
        self.dt = dt
        self.dt_max = dt_max
        self.velocity = velocity
        self.face_index = face_index
        super().__init__(
            f"time step {dt:g} violates the CFL bound {dt_max:g}: "
            f"limiting face velocity {velocity:g} at face {face_index}"
        )
