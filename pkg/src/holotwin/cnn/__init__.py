from ..fieldcore import CountError
from .network import NetworkSpec, NetworkWeights, forward, init_weights, loss_and_grad, zero_weights
from .training import TrainConfig, TrainingError, dataset_loss, fit, gradient_check, train
from .weights_io import WeightsFormatError, load_weights, save_weights

__all__ = [
    "CountError",
    "NetworkSpec",
    "NetworkWeights",
    "TrainConfig",
    "TrainingError",
    "WeightsFormatError",
    "dataset_loss",
    "fit",
    "forward",
    "gradient_check",
    "init_weights",
    "load_weights",
    "loss_and_grad",
    "save_weights",
    "train",
    "zero_weights",
]
