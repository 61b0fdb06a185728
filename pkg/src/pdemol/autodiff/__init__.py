from .tensor import (
    ContractViolation,
    Tape,
    Tensor,
    add,
    backward,
    concat,
    constant,
    cross_entropy_loss,
    embedding_lookup,
    gelu,
    layer_norm,
    matmul,
    mse_loss,
    parameter,
    reshape,
    scale,
    slice_axis,
    softmax,
    transpose,
)
from .optim import AdamW, clip_grad_norm, lr_schedule
from .checkpoint import CKPT_VERSION, load_checkpoint, save_checkpoint
