"""Exception types shared across the package."""


class ExplabError(Exception):
    """Base class for all errors raised by explab."""


class SizeCapExceeded(ExplabError):
    pass


class NodeCountMismatch(ExplabError):
    pass


class InvalidSize(ExplabError):
    pass


class ExplainerUndefined(ExplabError):
    pass


class Condition1Violated(ExplabError):
    pass


class MissingExplanation(ExplabError):
    pass


class BudgetTooLarge(ExplabError):
    pass


class SearchSpaceTooLarge(ExplabError):
    pass


class InvalidRange(ExplabError):
    pass


class ShapeMismatch(ExplabError):
    pass


class ExplanationNotInGraph(ExplabError):
    pass


class NotEnoughAbsentPairs(ExplabError):
    pass


class EmptyGraphAfterDrop(ExplabError):
    pass


class ConfigError(ExplabError):
    pass
