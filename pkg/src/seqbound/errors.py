class SeqboundError(Exception):
    pass


class ValidationError(SeqboundError, ValueError):
    pass


class SolverFailure(SeqboundError):
    """Eigensolver did not reach the off-diagonal tolerance."""

    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


class ConvergenceError(SeqboundError):
    """An iterative optimizer hit its cap before closing the gap.

    ``bound`` (when set) is still a valid certified bound; ``result`` carries
    whatever partial solution the solver had.
    """

    def __init__(self, msg, gap=None, bound=None, result=None):
        super().__init__(msg)
        self.gap = gap
        self.bound = bound
        self.result = result


class StructuralError(SeqboundError):
    pass


class UnsupportedCase(SeqboundError):
    pass
