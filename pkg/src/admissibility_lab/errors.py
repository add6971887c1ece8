"""Exception types shared across the lab.

Input validation problems raise plain ``ValueError``. Failures that come from
the numerics themselves (singular solves, truncation guards) derive from
``NumericalFailure`` so callers such as the CLI can tell the two apart.
"""


class NumericalFailure(RuntimeError):
    pass


class SingularSystemError(NumericalFailure):
    pass


class TruncationError(NumericalFailure):
    pass
