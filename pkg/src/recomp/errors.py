"""Exception hierarchy shared by every stage of the codec."""


class RecompError(Exception):
    """Base class for all codec errors."""


class ConfigError(RecompError, ValueError):
    """Invalid parameters supplied by the caller."""


class DataError(RecompError, ValueError):
    """Input data that cannot be ingested or processed."""


class CorruptionError(RecompError):
    """A serialized or intermediate representation failed validation.

    ``offset`` is the byte offset into the container where the problem was
    detected and ``cluster`` the cluster record being decoded, when known.
    """

    def __init__(self, message, *, offset=None, cluster=None):
        self.offset = offset
        self.cluster = cluster
        details = []
        if cluster is not None:
            details.append(f"cluster {cluster}")
        if offset is not None:
            details.append(f"byte offset {offset}")
        if details:
            message = f"{message} ({', '.join(details)})"
        super().__init__(message)
