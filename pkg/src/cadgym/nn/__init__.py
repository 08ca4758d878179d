from .layers import (Embedding, GraphConv, GraphEncoder, LayerNorm, Linear,
                     Module, MultiHeadAttention, TransformerBlock,
                     sinusoidal_encoding)
from .policy import (Adam, PolicyConfig, PolicyNet, checkpoint_load,
                     checkpoint_save)
from .tensor import (Tensor, as_tensor, concat, dropout, gather_rows,
                     get_default_dtype, log_softmax, set_default_dtype,
                     softmax, stack)

__all__ = [
    "Tensor", "as_tensor", "concat", "stack", "softmax", "log_softmax",
    "dropout", "gather_rows", "set_default_dtype", "get_default_dtype",
    "Module", "Linear", "LayerNorm", "GraphConv", "GraphEncoder",
    "MultiHeadAttention", "TransformerBlock", "Embedding",
    "sinusoidal_encoding",
    "PolicyNet", "PolicyConfig", "Adam", "checkpoint_save", "checkpoint_load",
]
