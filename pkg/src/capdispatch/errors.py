"""Exception types shared across the package."""


class ConfigError(ValueError):
    """A capacitor configuration or model parameter violates its bounds."""


class ContractError(ValueError):
    """An operation received an input it is not defined for (e.g. an unconverged solution)."""


class SolverError(RuntimeError):
    """The Newton linear system could not be solved."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration
