"""Exception hierarchy shared across the pipeline.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
BackendError -> 3.
"""


class KgwalkError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(KgwalkError):
    """Invalid configuration or usage (bad regime, missing index, bad flag)."""


class DataError(KgwalkError):
    """Broken input data: dumps, datasets, vector files, journals."""


class VectorFileError(DataError):
    """Malformed vector file (bad magic, truncated, duplicate id, ...)."""


class GraphError(DataError):
    """Graph-level failure such as an unknown node."""


class UnknownRelationError(DataError):
    """A triple's relation has no verbalization template."""

    def __init__(self, relation_name: str):
        super().__init__(f"no verbalization template for relation {relation_name!r}")
        self.relation_name = relation_name


class StrandedAnchorError(KgwalkError):
    """Anchor node has no one-hop edges at all."""


class BackendError(KgwalkError):
    """Fatal generation-backend failure (replay miss, unusable endpoint)."""


class ReplayMissError(BackendError):
    """An item id is absent from the replay recording."""
