"""Reference methods sharing the co-training plumbing.

All baselines consume the same splits and seed conventions as the weighted
co-training pipeline so paired comparisons are meaningful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cartography import DynamicsRecord, append_observation, stats
from .errors import ConfigError
from .model import (
    Batch,
    OptimizerState,
    init_classifier,
    predict_proba,
    step,
    weighted_ce_loss,
)
from .cotrain import (
    REINIT_SEED_OFFSET,
    carve_dev,
    observe,
    step1_initial_weights,
    step2_cotrain,
    step3_finetune,
    train_supervised,
)


@dataclass(frozen=True)
class CoTeachingConfig:
    noise_rate: float = 0.15  # estimated noise rate epsilon
    schedule: str = "linear_first_epoch"  # or "constant"
    epochs: int = 5
    learning_rate: float = 1e-3
    batch_size: int = 64
    optimizer: str = "adam"
    hidden_sizes: tuple = (64,)
    activation: str = "relu"
    init_seed1: int = 11
    init_seed2: int = 22
    shuffle_seed: int = 44

    def __post_init__(self):
        if not 0 <= self.noise_rate < 1:
            raise ConfigError("estimated noise rate must be in [0,1)")
        if self.schedule not in ("linear_first_epoch", "constant"):
            raise ConfigError(f"unknown keep-rate schedule: {self.schedule}")


def run_ds_baseline(dataset, cfg, train_ids=None):
    """Single classifier trained directly on the (noisy) auto labels."""
    if train_ids is None:
        train_ids = dataset.auto_ids
    if not train_ids:
        raise ConfigError("distant-supervision baseline: empty training set")
    log = []
    train, dev = carve_dev(train_ids, cfg.dev_fraction, cfg.split_seed)
    if not train:
        train, dev = train_ids, frozenset()
    shuffle_rng = np.random.default_rng([cfg.shuffle_seed, 10])
    state, _, _ = train_supervised(
        dataset,
        train,
        cfg,
        init_seed=cfg.init_seed1,
        epochs=cfg.epochs_step1,
        learning_rate=cfg.learning_rate,
        shuffle_rng=shuffle_rng,
        dev_ids=dev,
        log=log,
        phase="ds",
        classifier=1,
    )
    return state, log


def run_simple_ft(dataset, cfg):
    """Two classifiers trained on the auto set then fine-tuned on human halves."""
    if not dataset.human_ids or not dataset.auto_ids:
        raise ConfigError("simple-FT needs non-empty human and auto sets")
    log = []
    states = []
    for classifier, init_seed in ((1, cfg.init_seed1), (2, cfg.init_seed2)):
        train, dev = carve_dev(
            dataset.auto_ids, cfg.dev_fraction, cfg.split_seed + classifier
        )
        shuffle_rng = np.random.default_rng([cfg.shuffle_seed, 11, classifier])
        state, _, _ = train_supervised(
            dataset,
            train,
            cfg,
            init_seed=init_seed,
            epochs=cfg.epochs_step2,
            learning_rate=cfg.learning_rate,
            shuffle_rng=shuffle_rng,
            dev_ids=dev,
            log=log,
            phase="simple-ft-train",
            classifier=classifier,
        )
        states.append(state)
    state1, state2 = step3_finetune(states[0], states[1], dataset, cfg, log=log)
    return state1, state2, log


def run_wst_ensembled(dataset, cfg):
    """Weighted self-training twins: the WCT pipeline without weight exchange."""
    log = []
    table, rec1, rec2 = step1_initial_weights(dataset, cfg, log=log)
    state1, state2, table, dyn1, dyn2 = step2_cotrain(
        dataset, cfg, table, rec1, rec2, log=log, weight_mode="self"
    )
    state1, state2 = step3_finetune(state1, state2, dataset, cfg, log=log)
    return state1, state2, table, log


def weight_coin(ids, seed):
    """Seeded fair coin per example id: True picks c+v, False picks c-v."""
    ids = sorted(ids)
    rng = np.random.default_rng(seed)
    flips = rng.integers(0, 2, size=len(ids)).astype(bool)
    return dict(zip(ids, flips))


def run_wst_r(dataset, cfg):
    """Single-classifier self-training with a random per-example weight rule."""
    if not dataset.human_ids or not dataset.auto_ids:
        raise ConfigError("WST-R needs non-empty human and auto sets")
    log = []
    auto_ids = sorted(dataset.auto_ids)
    coin = weight_coin(auto_ids, cfg.coin_seed)

    # step 1: one classifier on the full human set, dynamics over the auto set
    train, dev = carve_dev(dataset.human_ids, cfg.dev_fraction, cfg.split_seed)
    if not train:
        train, dev = dataset.human_ids, frozenset()
    shuffle_rng = np.random.default_rng([cfg.shuffle_seed, 12])
    _, history, monitor = train_supervised(
        dataset,
        train,
        cfg,
        init_seed=cfg.init_seed1,
        epochs=cfg.epochs_step1,
        learning_rate=cfg.learning_rate,
        shuffle_rng=shuffle_rng,
        dev_ids=dev,
        monitor_ids=auto_ids,
        log=log,
        phase="wst-r-step1",
        classifier=1,
    )
    records = {ex_id: DynamicsRecord(ex_id) for ex_id in monitor}
    for p_assigned, correct in history:
        for j, ex_id in enumerate(monitor):
            append_observation(records[ex_id], p_assigned[j], correct[j])

    def raw_weight(rec):
        s = stats(rec)
        return s.confidence + s.variability if coin[rec.example_id] else s.confidence - s.variability

    raw = np.array([raw_weight(records[i]) for i in auto_ids])

    # step 2: weighted self-training with per-batch weight updates
    sizes = cfg.layer_sizes(dataset.dim, dataset.num_classes)
    state = init_classifier(sizes, cfg.activation, cfg.init_seed1 + REINIT_SEED_OFFSET)
    opt = OptimizerState(kind=cfg.optimizer, learning_rate=cfg.learning_rate)
    index = {ex_id: i for i, ex_id in enumerate(auto_ids)}
    dyn = {}
    for ex_id in auto_ids:
        rec = DynamicsRecord(ex_id)
        src = records[ex_id]
        append_observation(rec, src.probs[-1], src.correct[-1])
        dyn[ex_id] = rec
    rng = np.random.default_rng([cfg.shuffle_seed, 13])
    for epoch in range(cfg.epochs_step2):
        lo, hi = float(raw.min()), float(raw.max())
        order = [auto_ids[i] for i in rng.permutation(len(auto_ids))]
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            chunk = order[start : start + cfg.batch_size]
            if hi == lo:
                w = np.ones(len(chunk))
            else:
                w = np.clip(
                    (raw[[index[i] for i in chunk]] - lo) / (hi - lo), 0.0, 1.0
                )
            batch = Batch(
                chunk,
                dataset.features_matrix(chunk),
                dataset.labels(chunk),
                w,
            )
            loss, grads = weighted_ce_loss(state, batch)
            losses.append(loss)
            p_assigned, correct = observe(state, dataset, chunk)
            for j, ex_id in enumerate(chunk):
                append_observation(dyn[ex_id], p_assigned[j], correct[j])
                raw[index[ex_id]] = raw_weight(dyn[ex_id])
            step(state, opt, grads)
        log.append(
            {
                "phase": "wst-r-step2",
                "epoch": epoch,
                "train_loss": float(np.mean(losses)),
                "dev_f1": None,
            }
        )

    # step 3: fine-tune on the full human set
    train, dev = carve_dev(dataset.human_ids, cfg.dev_fraction, cfg.split_seed)
    if not train:
        train, dev = dataset.human_ids, frozenset()
    shuffle_rng = np.random.default_rng([cfg.shuffle_seed, 14])
    state, _, _ = train_supervised(
        dataset,
        train,
        cfg,
        init_seed=0,
        epochs=cfg.epochs_step3,
        learning_rate=cfg.finetune_rate,
        shuffle_rng=shuffle_rng,
        state=state,
        dev_ids=dev,
        log=log,
        phase="wst-r-step3",
        classifier=1,
    )
    return state, log


def small_loss_selection(losses, ids, keep_count):
    """Ids of the keep_count smallest losses, ties broken by id ascending."""
    order = sorted(range(len(ids)), key=lambda j: (losses[j], ids[j]))
    return [ids[j] for j in order[:keep_count]]


def keep_rate(cfg, epoch, batch_index, batches_per_epoch):
    """Fraction of each batch kept for the peer's update."""
    floor = 1.0 - cfg.noise_rate
    if cfg.schedule == "constant" or epoch > 0:
        return floor
    frac = (batch_index + 1) / batches_per_epoch
    return 1.0 - cfg.noise_rate * frac


def run_coteaching(dataset, cfg):
    """Co-teaching: each classifier trains on its peer's small-loss selection."""
    if not dataset.auto_ids:
        raise ConfigError("co-teaching: empty auto set")
    auto_ids = sorted(dataset.auto_ids)
    sizes = [dataset.dim, *cfg.hidden_sizes, dataset.num_classes]
    state1 = init_classifier(sizes, cfg.activation, cfg.init_seed1)
    state2 = init_classifier(sizes, cfg.activation, cfg.init_seed2)
    opt1 = OptimizerState(kind=cfg.optimizer, learning_rate=cfg.learning_rate)
    opt2 = OptimizerState(kind=cfg.optimizer, learning_rate=cfg.learning_rate)
    rng = np.random.default_rng([cfg.shuffle_seed, 20])
    log = []
    # (selector, trainee) batch counts; the diagonal must stay zero
    feed_counts = {(1, 2): 0, (2, 1): 0, (1, 1): 0, (2, 2): 0}
    for epoch in range(cfg.epochs):
        order = [auto_ids[i] for i in rng.permutation(len(auto_ids))]
        n_batches = math.ceil(len(order) / cfg.batch_size)
        losses1, losses2 = [], []
        for b in range(n_batches):
            chunk = order[b * cfg.batch_size : (b + 1) * cfg.batch_size]
            X = dataset.features_matrix(chunk)
            y = dataset.labels(chunk)
            rate = keep_rate(cfg, epoch, b, n_batches)
            keep = min(len(chunk), math.ceil(rate * len(chunk)))
            selections = {}
            for selector, st in ((1, state1), (2, state2)):
                probs = predict_proba(st, X)
                per_example = -np.log(
                    np.maximum(probs[np.arange(len(y)), y], 1e-12)
                )
                selections[selector] = small_loss_selection(per_example, chunk, keep)
            for trainee, st, opt, acc in (
                (1, state1, opt1, losses1),
                (2, state2, opt2, losses2),
            ):
                selector = 2 if trainee == 1 else 1
                feed_counts[(selector, trainee)] += 1
                sel = selections[selector]
                batch = Batch(
                    sel,
                    dataset.features_matrix(sel),
                    dataset.labels(sel),
                    np.ones(len(sel)),
                )
                loss, grads = weighted_ce_loss(st, batch)
                acc.append(loss)
                step(st, opt, grads)
        log.append(
            {
                "phase": "coteaching",
                "epoch": epoch,
                "train_loss_1": float(np.mean(losses1)),
                "train_loss_2": float(np.mean(losses2)),
                "dev_f1": None,
            }
        )
    return state1, state2, log, feed_counts
