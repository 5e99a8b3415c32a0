"""Exception types shared by the flows, the splitting engine and the CLI."""


class FlowError(ArithmeticError):
    """A sub-flow could not produce a finite state."""


class BlowUpError(FlowError):
    """The solution of a sub-equation blows up (or is about to) within the requested time."""


class SplittingFailure(RuntimeError):
    """A splitting run aborted; ``step`` is the index of the step that failed."""

    def __init__(self, step, cause):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step} failed: {cause}")


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""
