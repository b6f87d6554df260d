class IcnSimError(Exception):
    """Base class for all simulator errors."""


class InvalidChunkId(IcnSimError, ValueError):
    pass


class MalformedPacket(IcnSimError, ValueError):
    pass


class NoRoute(IcnSimError, LookupError):
    pass


class TopologyError(IcnSimError, ValueError):
    pass


class SelfLoop(TopologyError):
    pass


class Disconnected(TopologyError):
    pass


class TopologyParseError(TopologyError):
    pass


class GenerationFailed(TopologyError):
    pass


class EmptyLog(IcnSimError, ValueError):
    pass


class ConfigError(IcnSimError, ValueError):
    """Invalid run or experiment configuration.

    ``line`` is the 1-based line in the source document, when known.
    """

    def __init__(self, message, *, field=None, line=None):
        self.field = field
        self.line = line
        prefix = ""
        if line is not None:
            prefix += f"line {line}: "
        if field is not None:
            prefix += f"{field}: "
        super().__init__(prefix + message)
