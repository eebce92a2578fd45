"""Exception types. Every documented failure raises a ``TinyNoseError``."""


class TinyNoseError(ValueError):
    pass


class SensorDomainError(TinyNoseError):
    pass


class ProtocolError(TinyNoseError):
    pass


class MalformedDatasetError(TinyNoseError):
    """Dataset is unusable for training (missing class, empty, ...)."""


class DatasetFormatError(TinyNoseError):
    pass


class ModelFormatError(TinyNoseError):
    pass


class StreamOrderError(TinyNoseError):
    pass
