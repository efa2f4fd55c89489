"""Exception types shared across the package."""


class SmmError(Exception):
    """Base class for all errors raised by this package."""


class NotPositiveDefinite(SmmError):
    """Cholesky factorization failed, even after the single jitter retry."""


class InvalidShape(SmmError, ValueError):
    """Distribution shape parameter outside its admissible range."""


class InvalidRate(SmmError, ValueError):
    """Nonpositive rate parameter."""


class InvalidConcentration(SmmError, ValueError):
    """Nonpositive Dirichlet concentration entry."""


class InvalidParams(SmmError, ValueError):
    """Invalid parameter combination for a distribution sampler."""


class DegenerateData(SmmError, ValueError):
    """Data unusable for fitting (too few rows, non-finite or constant column)."""


class InvalidCount(SmmError, ValueError):
    """Allocation count outside its admissible range."""


class InvalidLabel(SmmError, ValueError):
    """Label vector entry outside {1..K}."""


class LengthMismatch(SmmError, ValueError):
    """Paired label vectors of different lengths."""


class AllZeroLikelihood(SmmError):
    """Every mixture component has zero posterior mass for some observation."""


class NoMatchingDraws(SmmError):
    """No stored iteration has the requested number of non-empty clusters."""


class NotAPermutation(SmmError):
    """A classification sequence used for relabeling is not a permutation."""


class SamplerError(SmmError):
    """Gibbs sweep failed; carries the failing iteration index."""

    def __init__(self, iteration, cause):
        self.iteration = iteration
        self.cause = cause
        super().__init__(f"sweep {iteration} failed: {cause!r}")
