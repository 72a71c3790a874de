"""Exception types shared across the package."""


class NumericContractError(RuntimeError):
    """A computed quantity violated a stated numerical tolerance.

    The CLI maps this to exit code 3 so pipelines can distinguish numeric
    failures from usage errors.
    """


class DimensionCapError(ValueError):
    """Requested dense computation exceeds the configured dimension cap."""


class PoleBudgetError(RuntimeError):
    """A pole-sum operation would exceed the configured term budget."""
