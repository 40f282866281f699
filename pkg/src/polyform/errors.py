"""Shared exception and warning types."""

from __future__ import annotations


class ScenarioError(ValueError):
    """Invalid scenario document. ``path`` names the offending key."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class IntegrationDiverged(RuntimeError):
    """The integrated state left the finite floats. ``time`` is the step time."""

    def __init__(self, time: float | None = None):
        self.time = time
        stamp = "unknown time" if time is None else f"t={time:g}"
        super().__init__(f"integration diverged ({stamp})")


class DegenerateConfigurationWarning(RuntimeWarning):
    """A geometric quantity is undefined at this configuration (e.g. all
    agents coincident); the caller received a neutral fallback value."""
