"""seqsim: learned similarity for variable-length multivariate time series.

Recurrent siamese models (last-step or average pooling), a feedforward
ablation, and classical baselines (frame-mean logistic, dynamic time warping,
HMM Fisher scores) behind one scorer interface, evaluated by pair-ranking AUC
and one-shot classification accuracy.
"""

from .data import (
    Dataset,
    PairSet,
    SplitSpec,
    TimeSeries,
    build_pairs,
    load_jsonl,
    make_split,
    sample_pair_batch,
    save_jsonl,
    synth_distractor,
    synth_generate,
    synth_reversal,
    window,
    window_dataset,
    zscore_dataset,
)
from .dtw import DtwResult, dtw, dtw_similarity
from .evaluation import (
    EvalReport,
    Scorer,
    auc,
    build_fisher_references,
    dtw_scorer,
    evaluate_pairs,
    export_embeddings,
    fisher_kernel_scorer,
    fisher_vector_scorer,
    load_report,
    logistic_scorer,
    one_shot,
    save_report,
    srn_scorer,
)
from .fisher import (
    HmmParams,
    baum_welch,
    em_step,
    fisher_kernel,
    fisher_score,
    fisher_vector_score,
    forward_backward,
    hmm_loglik,
    hmm_sample,
    load_hmm,
    save_hmm,
    score_scales,
)
from .model import (
    LogisticParams,
    SrnParams,
    embed,
    init_srn,
    load_checkpoint,
    logistic_score,
    rnn_forward,
    save_checkpoint,
    score_pair,
    similarity,
)
from .numerics import Rng, derive_seed, finite_diff_grad, stable_sigmoid
from .training import (
    Gradients,
    TrainConfig,
    TrainResult,
    load_train_log,
    pair_backward,
    pair_loss,
    rmsprop_step,
    save_train_log,
    train,
    train_logistic,
)

__version__ = "0.1.0"
