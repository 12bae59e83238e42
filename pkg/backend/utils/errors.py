"""Exception types shared across the optimizer."""


class ContractError(RuntimeError):
    """An operation was called while its precondition does not hold."""


class SpaceValidationError(ValueError):
    """An external value lies outside its parameter's declared domain."""

    def __init__(self, parameter: str, message: str):
        self.parameter = parameter
        super().__init__(f"{parameter}: {message}")
