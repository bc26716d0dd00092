"""Hand-written differentiable core: layers, recurrent cells, BPTT, and the
finite-difference gradient checker."""

from .checkpoint import Checkpoint, CheckpointError, FORMAT_VERSION
from .gradcheck import GradCheckReport, gradient_check
from .layers import (
    EVAL,
    TRAIN,
    dropout_backward,
    dropout_forward,
    embed_concat,
    embed_concat_backward,
    softmax_xent,
)
from .network import (
    NetworkConfig,
    SequenceBatch,
    init_params,
    network_forward,
    network_forward_backward,
)
from .params import DTYPES, ParamStore, orthogonal, resolve_dtype, xavier_uniform
from .recurrent import (
    LSTM,
    RNN,
    bidirectional_backward,
    bidirectional_forward,
    lstm_backward,
    lstm_forward,
    rnn_backward,
    rnn_forward,
)
