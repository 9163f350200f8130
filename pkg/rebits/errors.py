"""
Error types for the REBits toolkit

IEEE-754 conditions never raise; they surface as flags on results.
These exceptions cover misuse and poisoned state.
"""


class RebitsError(Exception):
    """Base class for every error raised by this package"""


class FormatMismatchError(RebitsError, ValueError):
    """Operands belong to different floating-point formats"""


class NonFiniteInputError(RebitsError, ValueError):
    """An infinity or NaN reached an operation that needs finite input"""


class AccumulatorOverflowError(RebitsError, OverflowError):
    """The exact accumulator exceeded its declared width"""


class PoisonedAccumulatorError(RebitsError, ArithmeticError):
    """A running sum went non-finite; carries the index of the first bad element"""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(f"Accumulator poisoned at element {index} (value {value!r})")


class UsageError(RebitsError):
    """Invalid combination of run options"""
