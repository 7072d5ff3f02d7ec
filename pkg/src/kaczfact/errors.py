"""Exception types raised across the package."""


class KaczfactError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(KaczfactError, ValueError):
    pass


class IndexOutOfRange(KaczfactError, IndexError):
    pass


class ZeroDataMatrix(KaczfactError, ValueError):
    """The data matrix has zero Frobenius norm, so relative error is undefined."""


class ZeroMatrix(KaczfactError, ValueError):
    pass


class BlockTooLarge(KaczfactError, ValueError):
    pass


class DegenerateWeights(KaczfactError, ValueError):
    """Fewer strictly positive sampling weights than requested indices."""


class RankTooLarge(KaczfactError, ValueError):
    pass


class InvalidRecipe(KaczfactError, ValueError):
    pass


class ParseError(KaczfactError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyFile(KaczfactError, ValueError):
    pass


class InvalidRating(ParseError):
    pass


class GridMismatch(KaczfactError, ValueError):
    pass
