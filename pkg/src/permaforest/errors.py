"""Exception types shared across the simulator, environment, and CLI."""


class ConfigError(Exception):
    """Bad or unknown configuration key/value. CLI exit code 2."""


class PhysicsFault(Exception):
    """The simulator produced an unphysical state (temperature outside the
    sanity clamp or an unsolvable canopy balance). Carries enough context to
    reproduce the failing timestep. CLI exit code 3."""

    def __init__(self, message: str, **context):
        super().__init__(message)
        self.context = dict(context)

    def __str__(self):
        base = super().__str__()
        if self.context:
            ctx = ", ".join(f"{k}={v!r}" for k, v in sorted(self.context.items()))
            return f"{base} [{ctx}]"
        return base


class ReplayMismatch(Exception):
    """A replayed episode diverged from its stored record. CLI exit code 4."""


class ContractViolation(ValueError):
    """A caller broke a documented precondition (bad action index,
    out-of-range parameter, stepping a finished episode, ...)."""
