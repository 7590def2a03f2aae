"""Exception hierarchy shared across the package."""


class LexGuideError(Exception):
    """Base class for all package-specific errors."""


# corpus
class MalformedInput(LexGuideError):
    pass


class EmptyCorpus(LexGuideError):
    pass


# providers
class ProviderUnavailable(LexGuideError):
    pass


class EmptyCompletion(LexGuideError):
    pass


# retrieval
class DimensionMismatch(LexGuideError):
    pass


class DuplicateFragmentId(LexGuideError):
    pass


class ZeroVector(LexGuideError):
    pass


# topics
class EmptyInput(LexGuideError):
    pass


# navigator
class NoParent(LexGuideError):
    pass


class UnknownNode(LexGuideError):
    pass


class BadBacktrack(LexGuideError):
    pass


# engine
class SessionTerminated(LexGuideError):
    pass


class SessionBusy(LexGuideError):
    pass


# dataset builder
class NoQuestionInferred(LexGuideError):
    pass


class EmptyDataset(LexGuideError):
    pass


class IOFailure(LexGuideError):
    pass


# evaluation
class EmptyGold(LexGuideError):
    pass


class EmptyText(LexGuideError):
    pass


class NoTree(LexGuideError):
    pass
