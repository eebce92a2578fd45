"""Training, inference and firmware export for a 5-sensor electronic nose."""

from .labels import CompoundLabel
from .net_core import NetworkParams, forward, logsig
from .sensing import AcquisitionProtocol, LabeledDataset, Normalizer, SensorFrame
from .training import TrainConfig, TrainReport, train

__version__ = "0.1.0"

__all__ = [
    "AcquisitionProtocol",
    "CompoundLabel",
    "LabeledDataset",
    "NetworkParams",
    "Normalizer",
    "SensorFrame",
    "TrainConfig",
    "TrainReport",
    "forward",
    "logsig",
    "train",
]
