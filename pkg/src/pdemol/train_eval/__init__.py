from .normalize import NormStats, denormalize, normalize_batch
from .metrics import (
    MetricReport,
    r2_score,
    r2_score_detail,
    relative_l2,
    relative_l2_detail,
    strip_generated,
    symbol_metrics,
    try_decode,
)
from .data import Dataset, build_dataset, input_stamp_indices, make_batch, \
    pad_stack, tokenize_tree
from .training import LossWeights, TrainResult, compute_loss, evaluate, train
from .studies import (
    DESK_N_TEST,
    DESK_N_TRAIN,
    DESK_TABLE1_FAMILIES,
    ROLLOUT_FAMILIES,
    StudySpec,
    run_illposed_comparison,
    run_input_class,
    run_input_size_ablation,
    run_ood,
    run_table1,
    run_temporal_grid,
    run_time_marching,
    run_transfer_study,
    run_unseen_operator,
    run_weight_ablation,
    shared_ic_dataset,
    similarity,
    study_spec,
)
