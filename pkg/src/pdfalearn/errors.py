"""Exception types shared across the package."""


class PdfaError(Exception):
    """Base class for all package-specific errors."""


class AllZeroError(PdfaError):
    """Every weight handed to normalize() was zero (dead composition state)."""


class UnknownSymbolError(PdfaError):
    """A symbol name or index does not belong to the alphabet."""


class AlphabetMismatchError(PdfaError):
    """Two components were combined over different alphabets."""


class NonConvergenceError(PdfaError):
    """Fixed-point iteration did not reach tolerance within the budget."""

    def __init__(self, residual, iterations):
        super().__init__(f"no convergence after {iterations} iterations (residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


class UndefinedStartError(PdfaError):
    """The model is undefined at the empty string; nothing can be sampled."""


class NotACounterexampleError(PdfaError):
    """A string presented as a counterexample does not actually distinguish the models."""


class TeacherUndefinedError(PdfaError):
    """The teacher reported an access-string query as undefined; a tree invariant is broken."""


class ModelFailureError(PdfaError):
    """The backing model failed while answering a query."""

    def __init__(self, prefix, cause):
        super().__init__(f"model failure at prefix {prefix!r}: {cause}")
        self.prefix = prefix
        self.cause = cause


class QueryBudgetExceededError(PdfaError):
    """A learner guard (query count or query length) was exceeded."""


class VocabMismatchError(PdfaError):
    """A symbol map references tokens outside the token model's vocabulary."""


class TransportError(PdfaError):
    """A network request to a remote model failed after retries."""


class ProtocolError(PdfaError):
    """A remote model answered with a malformed or invalid payload."""


class NondeterministicSpecError(PdfaError):
    """A guide specification defines two targets for the same (state, symbol)."""


class ParseFailureError(PdfaError):
    """A file or string could not be parsed in the expected format."""
