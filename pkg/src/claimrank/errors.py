"""Exception hierarchy shared by every claimrank module.

All library errors derive from :class:`ClaimRankError` so the CLI can map
them to the "data/contract error" exit code in one place.
"""


class ClaimRankError(Exception):
    """Base class for data and contract errors raised by claimrank."""


class ParseError(ClaimRankError):
    def __init__(self, line_no, reason):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class SplitError(ClaimRankError):
    pass


class VocabError(ClaimRankError):
    def __init__(self, line_no, reason):
        self.line_no = line_no
        self.reason = reason
        where = f"line {line_no}: " if line_no is not None else ""
        super().__init__(f"{where}{reason}")


class EmptyCorpus(ClaimRankError):
    pass


class InvalidTopK(ClaimRankError, ValueError):
    pass


class ScorerError(ClaimRankError):
    """Failure of a candidate scorer (built-in or external process)."""


class ProtocolError(ScorerError):
    pass


class ScorerTimeout(ScorerError, TimeoutError):
    pass


class MissingLexicon(ClaimRankError):
    pass


class TranslatorError(ClaimRankError):
    pass


class NoPositives(ClaimRankError):
    pass


class NoNegatives(ClaimRankError):
    pass


class DegenerateData(ClaimRankError):
    pass


class IdMismatch(ClaimRankError):
    """Run/score ids do not line up with the gold dataset."""

    def __init__(self, missing=(), extra=(), message=None):
        self.missing = sorted(missing)
        self.extra = sorted(extra)
        if message is None:
            parts = []
            if self.missing:
                parts.append("missing ids: " + ", ".join(self.missing))
            if self.extra:
                parts.append("unexpected ids: " + ", ".join(self.extra))
            message = "IdMismatch: " + ("; ".join(parts) or "id sets differ")
        super().__init__(message)


class MissingId(IdMismatch):
    def __init__(self, tweet_id):
        self.tweet_id = tweet_id
        super().__init__(missing=[tweet_id], message=f"MissingId: no score for tweet_id {tweet_id}")


class DuplicateId(IdMismatch):
    def __init__(self, tweet_id, line_no=None):
        self.tweet_id = tweet_id
        where = f" (line {line_no})" if line_no is not None else ""
        super().__init__(message=f"DuplicateId: tweet_id {tweet_id} scored twice{where}")


class ScoreFileError(ClaimRankError):
    def __init__(self, line_no, reason):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {reason}")


class ModelFileError(ClaimRankError):
    pass


class ExperimentError(ClaimRankError):
    """Wraps a module error with the sweep cell that raised it."""
