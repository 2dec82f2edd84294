"""Training-dynamics-weighted co-training for noisy-label classification."""

from .dataset import (
    Dataset,
    Example,
    NoiseSpec,
    carve_human_set,
    generate_synthetic,
    inject_noise,
    load_dataset,
    save_dataset,
    split_halves,
)
from .model import (
    Batch,
    ClassifierState,
    OptimizerState,
    init_classifier,
    load_checkpoint,
    predict_proba,
    save_checkpoint,
    step,
    train_epoch,
    weighted_ce_loss,
)
from .cartography import (
    CartographyStats,
    DynamicsRecord,
    append_observation,
    confidence,
    correctness,
    export_map,
    stats,
    variability,
)
from .weighting import WeightTable, normalize, raw_weights
from .cotrain import (
    CoTrainResult,
    RunConfig,
    ensemble_predict,
    run_wct,
    step1_initial_weights,
    step2_cotrain,
    step3_finetune,
)
from .baselines import (
    CoTeachingConfig,
    run_coteaching,
    run_ds_baseline,
    run_simple_ft,
    run_wst_ensembled,
    run_wst_r,
)
from .evaluation import MetricsReport, aggregate_seeds, confusion, evaluate, macro_f1

__version__ = "0.1.0"
