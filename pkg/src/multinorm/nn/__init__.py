from .autograd import (
    Parameter,
    Tensor,
    no_grad,
    parameters_in_graph,
    softmax_array,
    log_softmax_array,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .gradcheck import grad_check
from .layers import GATE_ORDER, LstmCell, ParameterStore, bilstm, lstm_step
from .optim import SgdConfig, global_norm, sgd_step

__all__ = [
    "GATE_ORDER",
    "LstmCell",
    "Parameter",
    "ParameterStore",
    "SgdConfig",
    "Tensor",
    "bilstm",
    "global_norm",
    "grad_check",
    "load_checkpoint",
    "log_softmax_array",
    "lstm_step",
    "no_grad",
    "parameters_in_graph",
    "save_checkpoint",
    "sgd_step",
    "softmax_array",
]
