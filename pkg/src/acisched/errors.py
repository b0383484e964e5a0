class ConfigurationError(ValueError):
    """Raised for invalid problem parameters or configuration files."""


class SearchTooLarge(RuntimeError):
    """Raised by the exhaustive oracles when an instance exceeds the size caps."""

    def __init__(self, what, size, cap):
        super().__init__(f"{what}: search space {size:.3g} exceeds cap {cap:.3g}")
        self.size = size
        self.cap = cap
