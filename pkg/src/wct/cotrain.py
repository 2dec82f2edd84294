"""Three-step weighted co-training with weight exchange and ensembling.

Step 1 trains each classifier on its own half of the human set while recording
per-epoch probabilities over the auto set; those histories yield the initial
importance weights. Step 2 re-initializes both classifiers and co-trains them
on the auto set, each classifier's loss scaled by the weights computed from
the *other* classifier's dynamics, with raw weights refreshed per batch and
normalization bounds frozen per epoch. Step 3 fine-tunes each classifier on
its human half at a lower learning rate with early stopping on dev macro-F1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cartography import DynamicsRecord, append_observation, stats
from .dataset import split_halves
from .errors import ConfigError
from .evaluation import confusion, macro_f1
from .model import (
    Batch,
    OptimizerState,
    init_classifier,
    predict_proba,
    step,
    train_epoch,
    weighted_ce_loss,
)
from .weighting import WeightTable

VARIANTS = ("wct-cv", "wct-cc", "wct-cvh", "wct-both")

# offset between the Step-1 and Step-2 init seeds; keeps the re-initialized
# classifiers independent of the Step-1 parameters without extra config
REINIT_SEED_OFFSET = 1000


@dataclass
class RunConfig:
    hidden_sizes: tuple = (64,)
    activation: str = "relu"
    optimizer: str = "adam"
    learning_rate: float = 1e-3
    finetune_rate: float = 1e-4
    batch_size: int = 64
    epochs_step1: int = 10
    epochs_step2: int = 5
    epochs_step3: int = 10
    patience: int = 2
    dev_fraction: float = 0.15
    variant: str = "wct-cv"
    init_seed1: int = 11
    init_seed2: int = 22
    split_seed: int = 33
    shuffle_seed: int = 44
    coin_seed: int = 55
    resplit_step3: bool = False

    def __post_init__(self):
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning rate must be positive")
        if not 0 <= self.finetune_rate < self.learning_rate:
            raise ConfigError("fine-tune rate must satisfy 0 <= lr_ft < lr")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant: {self.variant}")
        if not 0 < self.dev_fraction < 1:
            raise ConfigError("dev fraction must be in (0,1)")
        if self.patience < 0:
            raise ConfigError("patience must be non-negative")
        if min(self.epochs_step1, self.epochs_step2, self.epochs_step3) < 1:
            raise ConfigError("epoch counts must be positive")

    def layer_sizes(self, dim, num_classes):
        return [dim, *self.hidden_sizes, num_classes]


@dataclass
class CoTrainResult:
    state1: object
    state2: object
    table: WeightTable
    dynamics1: dict
    dynamics2: dict
    step1_dynamics1: dict
    step1_dynamics2: dict
    metrics_log: list
    config: RunConfig


def carve_dev(ids, fraction, seed):
    """Split ids into (train, dev); dev may be empty for tiny sets."""
    ids = sorted(ids)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ids))
    dev_count = int(len(ids) * fraction)
    dev = frozenset(ids[i] for i in perm[:dev_count])
    train = frozenset(ids[i] for i in perm[dev_count:])
    return train, dev


def make_batches(dataset, ids, batch_size, weights=None):
    """Batches over ids in the given order with unit weights by default."""
    ids = list(ids)
    if weights is None:
        weights = np.ones(len(ids))
    batches = []
    for start in range(0, len(ids), batch_size):
        chunk = ids[start : start + batch_size]
        batches.append(
            Batch(
                ids=chunk,
                features=dataset.features_matrix(chunk),
                labels=dataset.labels(chunk),
                weights=np.asarray(weights[start : start + batch_size]),
            )
        )
    return batches


def observe(state, dataset, ids):
    """Assigned-label probability and argmax-correctness per id (one forward pass)."""
    probs = predict_proba(state, dataset.features_matrix(ids))
    labels = dataset.labels(ids)
    p_assigned = probs[np.arange(len(ids)), labels]
    correct = probs.argmax(axis=1) == labels
    return p_assigned, correct


def dev_macro_f1(state, dataset, dev_ids):
    dev_ids = sorted(dev_ids)
    probs = predict_proba(state, dataset.features_matrix(dev_ids))
    preds = probs.argmax(axis=1)
    return macro_f1(confusion(preds, dataset.labels(dev_ids), dataset.num_classes))


def train_supervised(
    dataset,
    train_ids,
    cfg,
    *,
    init_seed,
    epochs,
    learning_rate,
    shuffle_rng,
    state=None,
    dev_ids=None,
    monitor_ids=None,
    log=None,
    phase="",
    classifier=0,
):
    """Plain supervised training with optional early stopping and monitoring.

    Early stopping tracks dev macro-F1 with the configured patience, starting
    from the untrained model's score, and restores the best parameters.
    When ``monitor_ids`` is given, a (probability, correctness) snapshot over
    those ids is recorded after every epoch and returned as the history.
    """
    if not train_ids:
        raise ConfigError(f"{phase}: empty training set")
    if state is None:
        state = init_classifier(
            cfg.layer_sizes(dataset.dim, dataset.num_classes),
            cfg.activation,
            init_seed,
        )
    opt = OptimizerState(kind=cfg.optimizer, learning_rate=learning_rate)
    train_ids = sorted(train_ids)
    monitor_ids = sorted(monitor_ids) if monitor_ids else None
    history = []
    use_dev = bool(dev_ids)
    best_f1 = dev_macro_f1(state, dataset, dev_ids) if use_dev else None
    best_params = state.copy() if use_dev else None
    bad_epochs = 0
    for epoch in range(epochs):
        order = [train_ids[i] for i in shuffle_rng.permutation(len(train_ids))]
        batches = make_batches(dataset, order, cfg.batch_size)
        state, opt, mean_loss, _ = train_epoch(state, opt, batches)
        if monitor_ids:
            history.append(observe(state, dataset, monitor_ids))
        f1 = dev_macro_f1(state, dataset, dev_ids) if use_dev else None
        if log is not None:
            log.append(
                {
                    "phase": phase,
                    "classifier": classifier,
                    "epoch": epoch,
                    "train_loss": mean_loss,
                    "dev_f1": f1,
                }
            )
        if use_dev:
            if f1 > best_f1:
                best_f1 = f1
                best_params = state.copy()
                bad_epochs = 0
            else:
                bad_epochs += 1
                if bad_epochs > cfg.patience:
                    break
    if use_dev and best_params is not None:
        state = best_params
    return state, history, monitor_ids


def _records_from_history(monitor_ids, history):
    records = {ex_id: DynamicsRecord(ex_id) for ex_id in monitor_ids}
    for p_assigned, correct in history:
        for j, ex_id in enumerate(monitor_ids):
            append_observation(records[ex_id], p_assigned[j], correct[j])
    return records


def human_halves(dataset, cfg):
    """The two human subsets used in Steps 1 and 3."""
    human_ids = dataset.human_ids
    if len(human_ids) < 2:
        raise ConfigError("human set must contain at least 2 examples")
    if cfg.variant == "wct-both":
        return frozenset(human_ids), frozenset(human_ids)
    return split_halves(human_ids, cfg.split_seed)


def step1_initial_weights(dataset, cfg, log=None):
    """Train on human halves, record auto-set dynamics, compute initial weights.

    Returns (table, records1, records2) where the records hold the full Step-1
    probability histories; their last entries seed the Step-2 dynamics.
    """
    if not dataset.auto_ids:
        raise ConfigError("auto set is empty: nothing to weight")
    half1, half2 = human_halves(dataset, cfg)
    auto_ids = sorted(dataset.auto_ids)
    records = []
    for classifier, (half, init_seed) in enumerate(
        [(half1, cfg.init_seed1), (half2, cfg.init_seed2)], start=1
    ):
        train_ids, dev_ids = carve_dev(
            half, cfg.dev_fraction, cfg.split_seed + classifier
        )
        if not train_ids:
            train_ids, dev_ids = half, frozenset()
        shuffle_rng = np.random.default_rng([cfg.shuffle_seed, 1, classifier])
        _, history, monitor = train_supervised(
            dataset,
            train_ids,
            cfg,
            init_seed=init_seed,
            epochs=cfg.epochs_step1,
            learning_rate=cfg.learning_rate,
            shuffle_rng=shuffle_rng,
            dev_ids=dev_ids,
            monitor_ids=auto_ids,
            log=log,
            phase="step1",
            classifier=classifier,
        )
        records.append(_records_from_history(monitor, history))
    records1, records2 = records
    table = WeightTable.from_stats(
        auto_ids,
        [stats(records1[i]) for i in auto_ids],
        [stats(records2[i]) for i in auto_ids],
        confidence_only=(cfg.variant == "wct-cc"),
    )
    return table, records1, records2


def step2_cotrain(
    dataset,
    cfg,
    table,
    step1_records1,
    step1_records2,
    log=None,
    record_states=False,
    weight_mode="cross",
):
    """Co-training epochs over the auto set with exchanged weights.

    Dynamics restart from the last Step-1 probabilities; raw weights are
    updated per batch, normalization bounds per epoch. With ``record_states``
    the pre-batch parameters are captured for replay audits.
    """
    auto_ids = sorted(dataset.auto_ids)
    missing = [i for i in auto_ids if i not in table._index]
    if missing:
        raise ConfigError(f"weight table does not cover auto ids, e.g. {missing[0]}")
    sizes = cfg.layer_sizes(dataset.dim, dataset.num_classes)
    state1 = init_classifier(sizes, cfg.activation, cfg.init_seed1 + REINIT_SEED_OFFSET)
    state2 = init_classifier(sizes, cfg.activation, cfg.init_seed2 + REINIT_SEED_OFFSET)
    opt1 = OptimizerState(kind=cfg.optimizer, learning_rate=cfg.learning_rate)
    opt2 = OptimizerState(kind=cfg.optimizer, learning_rate=cfg.learning_rate)

    def _seeded(step1_records):
        out = {}
        for ex_id in auto_ids:
            src = step1_records[ex_id]
            rec = DynamicsRecord(ex_id)
            append_observation(rec, src.probs[-1], src.correct[-1])
            out[ex_id] = rec
        return out

    dyn1 = _seeded(step1_records1)
    dyn2 = _seeded(step1_records2)

    human_pool = sorted(dataset.human_ids) if cfg.variant == "wct-cvh" else []
    rng = np.random.default_rng([cfg.shuffle_seed, 2])
    state_log = [] if record_states else None

    for epoch in range(cfg.epochs_step2):
        table.refresh_bounds()
        pool = auto_ids + human_pool
        order = [pool[i] for i in rng.permutation(len(pool))]
        epoch_losses1, epoch_losses2 = [], []
        for start in range(0, len(order), cfg.batch_size):
            chunk = order[start : start + cfg.batch_size]
            auto_members = [i for i in chunk if i in table._index]
            X = dataset.features_matrix(chunk)
            y = dataset.labels(chunk)
            if record_states:
                state_log.append((epoch, list(chunk), state1.copy(), state2.copy()))

            w1 = np.ones(len(chunk))
            w2 = np.ones(len(chunk))
            if auto_members:
                auto_pos = [j for j, i in enumerate(chunk) if i in table._index]
                if weight_mode == "cross":
                    w1[auto_pos] = table.loss_weights(1, auto_members)
                    w2[auto_pos] = table.loss_weights(2, auto_members)
                else:  # self-weighting ablation: no exchange
                    w1[auto_pos] = table.self_weights(1, auto_members)
                    w2[auto_pos] = table.self_weights(2, auto_members)

            loss1, grads1 = weighted_ce_loss(state1, Batch(chunk, X, y, w1))
            loss2, grads2 = weighted_ce_loss(state2, Batch(chunk, X, y, w2))
            epoch_losses1.append(loss1)
            epoch_losses2.append(loss2)

            if auto_members:
                for st, dyn in ((state1, dyn1), (state2, dyn2)):
                    p_assigned, correct = observe(st, dataset, auto_members)
                    for j, ex_id in enumerate(auto_members):
                        append_observation(dyn[ex_id], p_assigned[j], correct[j])
                table.update_weights(
                    auto_members,
                    [stats(dyn1[i]) for i in auto_members],
                    [stats(dyn2[i]) for i in auto_members],
                )

            step(state1, opt1, grads1)
            step(state2, opt2, grads2)
        if log is not None:
            log.append(
                {
                    "phase": "step2",
                    "epoch": epoch,
                    "train_loss_1": float(np.mean(epoch_losses1)),
                    "train_loss_2": float(np.mean(epoch_losses2)),
                    "dev_f1": None,
                }
            )
    if record_states:
        return state1, state2, table, dyn1, dyn2, state_log
    return state1, state2, table, dyn1, dyn2


def step3_finetune(state1, state2, dataset, cfg, log=None):
    """Low-LR fine-tuning of both classifiers on their human halves."""
    if cfg.resplit_step3:
        half1, half2 = split_halves(dataset.human_ids, cfg.split_seed + 7)
    else:
        half1, half2 = human_halves(dataset, cfg)
    out = []
    for classifier, (state, half) in enumerate(
        [(state1, half1), (state2, half2)], start=1
    ):
        if not half:
            raise ConfigError(f"step3: empty human half for classifier {classifier}")
        train_ids, dev_ids = carve_dev(
            half, cfg.dev_fraction, cfg.split_seed + classifier
        )
        if not train_ids:
            train_ids, dev_ids = half, frozenset()
        shuffle_rng = np.random.default_rng([cfg.shuffle_seed, 3, classifier])
        state, _, _ = train_supervised(
            dataset,
            train_ids,
            cfg,
            init_seed=0,
            epochs=cfg.epochs_step3,
            learning_rate=cfg.finetune_rate,
            shuffle_rng=shuffle_rng,
            state=state,
            dev_ids=dev_ids,
            log=log,
            phase="step3",
            classifier=classifier,
        )
        out.append(state)
    return out[0], out[1]


def ensemble_predict(state1, state2, features):
    """Element-wise mean of the two softmax outputs; argmax with low-index ties.

    Returns (label, distribution) for a single vector or (labels, matrix) for
    a batch.
    """
    if state1.num_classes != state2.num_classes:
        raise ValueError("classifiers disagree on the number of classes")
    p1 = predict_proba(state1, features)
    p2 = predict_proba(state2, features)
    dist = (p1 + p2) / 2.0
    if dist.ndim == 1:
        return int(np.argmax(dist)), dist
    return dist.argmax(axis=1), dist


def run_wct(dataset, cfg):
    """Full pipeline: Steps 1 -> 2 -> 3, retaining all artifacts."""
    if not dataset.human_ids or not dataset.auto_ids:
        raise ConfigError("weighted co-training needs non-empty human and auto sets")
    log = []
    table, rec1, rec2 = step1_initial_weights(dataset, cfg, log=log)
    state1, state2, table, dyn1, dyn2 = step2_cotrain(
        dataset, cfg, table, rec1, rec2, log=log
    )
    state1, state2 = step3_finetune(state1, state2, dataset, cfg, log=log)
    return CoTrainResult(
        state1=state1,
        state2=state2,
        table=table,
        dynamics1=dyn1,
        dynamics2=dyn2,
        step1_dynamics1=rec1,
        step1_dynamics2=rec2,
        metrics_log=log,
        config=cfg,
    )
