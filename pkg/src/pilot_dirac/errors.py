"""Exception hierarchy shared by every module."""


class PilotDiracError(Exception):
    """Base class for all package errors."""


class ModelError(PilotDiracError):
    """The physical model cannot proceed (CLI exit code 3)."""


class NodeError(ModelError):
    """A guidance or source term divides by a vanishing current magnitude."""

    def __init__(self, message, position=None, rho0=None):
        super().__init__(message)
        self.position = position
        self.rho0 = rho0


class SpacelikeCurrentError(ModelError):
    """A current with j.j < 0 beyond tolerance: the magnitude rho0 is not real."""


class ConfigError(PilotDiracError):
    """Malformed or out-of-range run configuration (CLI exit code 2)."""

    def __init__(self, message, line=None, key=None, source=None):
        loc = [] if source is None else [str(source)]
        if line is not None:
            loc.append(f"line {line}")
        if key is not None:
            loc.append(f"key '{key}'")
        super().__init__(f"{': '.join([', '.join(loc), message]) if loc else message}")
        self.line = line
        self.key = key
        self.source = source
