class ParameterError(ValueError):
    """A parameter violates a documented constraint."""


class ContractError(ValueError):
    """Inputs are inconsistent with each other (e.g. sizes do not match)."""


class FormatError(ValueError):
    """Malformed edge-list input."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
