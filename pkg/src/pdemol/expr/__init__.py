from .tree import (
    ARITY,
    BINARY_OPS,
    DERIV_ORDERS,
    ExprError,
    FIELD_SYMBOLS,
    LEAF_KINDS,
    Node,
    POW_EXPONENTS,
    UNARY_OPS,
    VARIABLES,
    add,
    cmul,
    div,
    mul,
    skeletonize,
    sub,
    trees_equal,
    unary,
)
from .vocab import (
    COEFF,
    COEFF_ID,
    EOS,
    EOS_ID,
    MAX_SEQ_LEN,
    PAD,
    PAD_ID,
    SOS,
    SOS_ID,
    TOKENS,
    TOKEN_TO_ID,
    VOCAB_SIZE,
    ids_to_tokens,
    load_vocab,
    save_vocab,
    tokens_to_ids,
    vocab_hash,
    vocab_text,
)
from .codec import (
    ConstantRangeError,
    InvalidExpression,
    decode_polish,
    dequantize,
    encode_polish,
    is_valid_polish,
    quantize,
    quantized_value,
)
from .polyeval import (
    DegenerateMetric,
    EvaluationError,
    PolyTestFn,
    eval_grid,
    eval_operator_on_poly,
    symbol_error,
)
