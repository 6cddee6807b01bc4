"""Exception hierarchy for the retrieval engine.

Every data-level failure raises a subclass of :class:`DocfuseError`; the CLI
maps these to exit code 2 (usage errors exit 1).
"""

from __future__ import annotations


class DocfuseError(Exception):
    """Base class for all engine errors."""


# -- corpus ------------------------------------------------------------------

class MissingFile(DocfuseError):
    pass


class ParseError(DocfuseError):
    pass


class DanglingReference(DocfuseError):
    pass


class DuplicateId(DocfuseError):
    pass


class UnknownId(DocfuseError):
    pass


# -- embedding store ---------------------------------------------------------

class DimMismatch(DocfuseError):
    pass


class NonFiniteValue(DocfuseError):
    pass


class DuplicateKey(DocfuseError):
    pass


class ZeroVector(DocfuseError):
    pass


class NotFound(DocfuseError):
    pass


class IoError(DocfuseError):
    pass


# -- similarity --------------------------------------------------------------

class EmptyMatrix(DocfuseError):
    pass


class UnknownChannel(DocfuseError):
    pass


# -- fusion ------------------------------------------------------------------

class MissingWeight(DocfuseError):
    pass


class ConfigError(DocfuseError):
    pass


# -- verification ------------------------------------------------------------

class BadTemplate(DocfuseError):
    pass


class UnknownItem(DocfuseError):
    pass


class VerifierError(DocfuseError):
    """Transport-level verifier failure (timeout, non-200, connection)."""


# -- pipelines / evaluation --------------------------------------------------

class MissingQueryEmbedding(DocfuseError):
    pass


class EmptyRelevantSet(DocfuseError):
    pass


class MissingGroundTruth(DocfuseError):
    pass
