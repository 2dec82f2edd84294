"""End-to-end acceptance gate.

Each test covers one release criterion and prints a single PASS/FAIL line
with its wall-clock time. Run with `pytest tests/test_acceptance.py -s` to
see the lines as they complete.
"""

import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from wct.baselines import run_ds_baseline, run_simple_ft, small_loss_selection
from wct.cartography import (
    DynamicsRecord,
    append_observation,
    confidence,
    correctness,
    variability,
)
from wct.cli import main as cli_main
from wct.cotrain import (
    REINIT_SEED_OFFSET,
    RunConfig,
    ensemble_predict,
    run_wct,
    step1_initial_weights,
    step2_cotrain,
)
from wct.dataset import NoiseSpec, carve_human_set, generate_synthetic, inject_noise
from wct.evaluation import confusion, macro_f1
from wct.model import (
    Batch,
    OptimizerState,
    init_classifier,
    predict_proba,
    step,
    weighted_ce_loss,
)
from wct.weighting import WeightTable, normalize, raw_weights


@contextmanager
def criterion(name, limit_s):
    start = time.perf_counter()
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name} ({time.perf_counter() - start:.2f}s)")
        raise
    elapsed = time.perf_counter() - start
    print(f"[PASS] {name} ({elapsed:.2f}s, limit {limit_s}s)")
    assert elapsed < limit_s, f"{name} exceeded {limit_s}s"


class ForcedTable(WeightTable):
    def __init__(self, ids, value):
        super().__init__(ids)
        self.value = value

    def _select(self, weight_set, ids):
        return np.full(len(ids), self.value)


def ensemble_macro_f1(state1, state2, test):
    ids = sorted(ex.id for ex in test.examples)
    preds, _ = ensemble_predict(state1, state2, test.features_matrix(ids))
    return macro_f1(confusion(preds, test.gold_labels(ids), test.num_classes))


def single_macro_f1(state, test):
    ids = sorted(ex.id for ex in test.examples)
    preds = predict_proba(state, test.features_matrix(ids)).argmax(axis=1)
    return macro_f1(confusion(preds, test.gold_labels(ids), test.num_classes))


class TestAcceptance:
    def test_worked_weight_examples(self):
        with criterion("contrasting weights from the worked numbers", 1):
            lam1, lam2 = raw_weights(0.4, 0.3, 0.4, 0.3)
            assert lam1 == pytest.approx(0.7, abs=1e-12)
            assert lam2 == pytest.approx(0.1, abs=1e-12)

    def test_cartography_oracle(self):
        with criterion("training-dynamics stats vs brute-force recomputation", 5):
            rng = np.random.default_rng(0)
            for i in range(1000):
                n = int(rng.integers(1, 21))
                probs = rng.uniform(size=n)
                correct = rng.integers(0, 2, size=n).astype(bool)
                rec = DynamicsRecord(example_id=i)
                for p, c in zip(probs, correct):
                    append_observation(rec, float(p), bool(c))
                c_ref = probs.sum() / n
                v_ref = math.sqrt(((probs - c_ref) ** 2).sum() / n)
                assert confidence(rec) == pytest.approx(c_ref, abs=1e-12)
                assert variability(rec) == pytest.approx(v_ref, abs=1e-12)
                assert correctness(rec) == pytest.approx(correct.mean(), abs=1e-12)

    def test_gradient_check(self):
        with criterion("analytic gradients vs central differences", 30):
            h = 1e-6
            for seed in range(50):
                rng = np.random.default_rng(seed)
                sizes = [
                    int(rng.integers(2, 6)),
                    int(rng.integers(2, 8)),
                    int(rng.integers(2, 5)),
                ]
                act = "tanh" if seed % 2 else "relu"
                s = init_classifier(sizes, act, seed=seed)
                n = int(rng.integers(2, 8))
                batch = Batch(
                    ids=list(range(n)),
                    features=rng.normal(size=(n, sizes[0])),
                    labels=rng.integers(0, sizes[-1], size=n),
                    weights=rng.uniform(size=n),
                )
                _, analytic = weighted_ce_loss(s, batch)
                flat_a = np.concatenate(
                    [g.ravel() for pair in analytic for g in pair]
                )
                numeric = []
                for layer in range(len(s.weights)):
                    for attr in ("weights", "biases"):
                        arr = getattr(s, attr)[layer]
                        g = np.zeros_like(arr)
                        it = np.nditer(arr, flags=["multi_index"])
                        for _ in it:
                            idx = it.multi_index
                            orig = arr[idx]
                            arr[idx] = orig + h
                            lp, _ = weighted_ce_loss(s, batch)
                            arr[idx] = orig - h
                            lm, _ = weighted_ce_loss(s, batch)
                            arr[idx] = orig
                            g[idx] = (lp - lm) / (2 * h)
                        numeric.append(g.ravel())
                flat_n = np.concatenate(numeric)
                denom = np.maximum(np.abs(flat_n), 1e-6)
                assert np.max(np.abs(flat_a - flat_n) / denom) < 1e-4

    def test_degenerate_weight_reductions(self):
        with criterion("all-ones / all-zeros weight reductions over step 2", 10):
            d = generate_synthetic(2, 20, 4, 2.5, 0)
            d = inject_noise(d, NoiseSpec(rate=0.2, seed=1))
            d = carve_human_set(d, 4, seed=2)
            cfg = RunConfig(
                hidden_sizes=(8,),
                batch_size=8,
                epochs_step1=2,
                epochs_step2=2,
                epochs_step3=2,
                optimizer="sgd",
                learning_rate=0.05,
                finetune_rate=0.005,
                dev_fraction=0.25,
            )
            _, rec1, rec2 = step1_initial_weights(d, cfg)
            auto_ids = sorted(d.auto_ids)

            # all-ones must match a plain unweighted loop bit for bit
            s1, s2, _, _, _ = step2_cotrain(
                d, cfg, ForcedTable(auto_ids, 1.0), rec1, rec2
            )
            for which, got in ((1, s1), (2, s2)):
                seed = cfg.init_seed1 if which == 1 else cfg.init_seed2
                ref = init_classifier(
                    cfg.layer_sizes(d.dim, d.num_classes),
                    cfg.activation,
                    seed + REINIT_SEED_OFFSET,
                )
                opt = OptimizerState(kind="sgd", learning_rate=cfg.learning_rate)
                rng = np.random.default_rng([cfg.shuffle_seed, 2])
                for _ in range(cfg.epochs_step2):
                    order = [auto_ids[i] for i in rng.permutation(len(auto_ids))]
                    for lo in range(0, len(order), cfg.batch_size):
                        chunk = order[lo : lo + cfg.batch_size]
                        b = Batch(
                            chunk,
                            d.features_matrix(chunk),
                            d.labels(chunk),
                            np.ones(len(chunk)),
                        )
                        _, grads = weighted_ce_loss(ref, b)
                        step(ref, opt, grads)
                assert np.array_equal(got.flatten(), ref.flatten())

            # all-zeros must leave both classifiers at their fresh init
            z1, z2, _, _, _ = step2_cotrain(
                d, cfg, ForcedTable(auto_ids, 0.0), rec1, rec2
            )
            for which, got in ((1, z1), (2, z2)):
                seed = cfg.init_seed1 if which == 1 else cfg.init_seed2
                fresh = init_classifier(
                    cfg.layer_sizes(d.dim, d.num_classes),
                    cfg.activation,
                    seed + REINIT_SEED_OFFSET,
                )
                assert np.array_equal(got.flatten(), fresh.flatten())

    def test_normalization_properties(self):
        with criterion("min-max normalization over random weight vectors", 2):
            rng = np.random.default_rng(3)
            for _ in range(1000):
                n = int(rng.integers(1, 40))
                values = rng.uniform(-0.5, 1.5, size=n)
                out = normalize(values)
                assert np.all(out >= 0.0) and np.all(out <= 1.0)
                if n > 1 and values.max() > values.min():
                    assert out[np.argmin(values)] == 0.0
                    assert out[np.argmax(values)] == 1.0
                    # rank correlation must be exactly 1
                    assert np.array_equal(
                        np.argsort(values, kind="stable"),
                        np.argsort(out, kind="stable"),
                    )

    def test_cross_scaling_invariant(self):
        with criterion("each classifier scales by its peer's weights only", 5):
            d = generate_synthetic(2, 29, 4, 2.5, 5)  # 58 examples
            d = inject_noise(d, NoiseSpec(rate=0.2, seed=6))
            d = carve_human_set(d, 4, seed=7)  # leaves 50 auto
            assert len(d.auto_ids) == 50
            cfg = RunConfig(
                hidden_sizes=(8,),
                batch_size=8,
                epochs_step1=2,
                epochs_step2=2,
                epochs_step3=2,
                dev_fraction=0.25,
            )
            table, rec1, rec2 = step1_initial_weights(d, cfg)
            step2_cotrain(d, cfg, table, rec1, rec2)
            assert table.read_counts[(1, 1)] == 0
            assert table.read_counts[(2, 2)] == 0
            assert table.read_counts[(1, 2)] > 0
            assert table.read_counts[(2, 1)] > 0

    def test_noise_injector(self):
        with criterion("symmetric noise corrupts exactly rate * n labels", 1):
            d = generate_synthetic(4, 250, 6, 2.0, 8)  # 1000 auto examples
            spec = NoiseSpec(rate=0.15, seed=9)
            noisy = inject_noise(d, spec)
            flipped = [ex for ex in noisy.examples if ex.is_corrupted()]
            assert len(flipped) == 150
            assert all(ex.assigned_label != ex.gold_label for ex in flipped)
            again = inject_noise(d, spec)
            assert [ex.assigned_label for ex in again.examples] == [
                ex.assigned_label for ex in noisy.examples
            ]

    def test_directional_experiment(self):
        with criterion("weighted co-training beats direct noisy training", 180):
            ds_scores, ft_scores, wct_scores = [], [], []
            for seed in (1, 2, 3):
                d = generate_synthetic(4, 1350, 10, 1.5, seed)
                d = carve_human_set(d, 100, seed=seed + 10)  # 400 clean
                d = inject_noise(d, NoiseSpec(rate=0.2, seed=seed + 20))
                test = generate_synthetic(4, 250, 10, 1.5, seed + 500)
                cfg = RunConfig(
                    init_seed1=seed * 1000 + 11,
                    init_seed2=seed * 1000 + 22,
                    split_seed=seed * 1000 + 33,
                    shuffle_seed=seed * 1000 + 44,
                    coin_seed=seed * 1000 + 55,
                )
                s_ds, _ = run_ds_baseline(d, cfg)
                f1, f2, _ = run_simple_ft(d, cfg)
                result = run_wct(d, cfg)
                ds_scores.append(single_macro_f1(s_ds, test))
                ft_scores.append(ensemble_macro_f1(f1, f2, test))
                wct_scores.append(
                    ensemble_macro_f1(result.state1, result.state2, test)
                )
            ds_mean = float(np.mean(ds_scores))
            ft_mean = float(np.mean(ft_scores))
            wct_mean = float(np.mean(wct_scores))
            assert wct_mean >= ft_mean >= ds_mean, (
                f"ordering violated: wct={wct_mean:.4f} "
                f"simple-ft={ft_mean:.4f} ds={ds_mean:.4f}"
            )
            margin = (wct_mean - ds_mean) * 100
            if margin < 1.0:
                # ordering holds; the margin is an expectation, not a hard bound
                print(f"[SOFT-FAIL] margin over direct training {margin:.2f} < 1.0")
            else:
                print(f"  margin over direct training: +{margin:.2f} macro-F1 points")

    def test_coteaching_selection_oracle(self):
        with criterion("small-loss selection vs brute-force sort", 5):
            assert math.ceil(0.85 * 64) == 55
            rng = np.random.default_rng(10)
            for _ in range(500):
                n = int(rng.integers(2, 65))
                losses = rng.uniform(size=n)
                ids = rng.permutation(10_000)[:n].tolist()
                k = int(rng.integers(1, n + 1))
                got = small_loss_selection(losses, ids, k)
                brute = [
                    i
                    for _, i in sorted(
                        zip(losses, ids), key=lambda t: (t[0], t[1])
                    )
                ][:k]
                assert got == brute
            full = rng.uniform(size=64)
            assert len(small_loss_selection(full, list(range(64)), 55)) == 55

    def test_pipeline_determinism(self, tmp_path):
        with criterion("repeated runs produce byte-identical artifacts", 120):
            data = tmp_path / "train.jsonl"
            assert cli_main(
                [
                    "synth", "--classes", "2", "--per-class", "60", "--dim", "4",
                    "--seed", "4", "--out", str(data),
                ]
            ) == 0
            noisy = tmp_path / "noisy.jsonl"
            assert cli_main(
                [
                    "corrupt", "--in", str(data), "--out", str(noisy),
                    "--rate", "0.15", "--noise-seed", "5",
                    "--human-per-class", "10", "--human-seed", "6",
                ]
            ) == 0
            fast = [
                "--epochs-step1", "2", "--epochs-step2", "2",
                "--epochs-step3", "2", "--hidden", "16", "--batch-size", "16",
            ]
            out_a, out_b = tmp_path / "a", tmp_path / "b"
            for out in (out_a, out_b):
                assert cli_main(
                    [
                        "train", "--data", str(noisy), "--method", "wct-cv",
                        "--out-dir", str(out), "--seeds", "1",
                    ]
                    + fast
                ) == 0
            for name in ("metrics.jsonl", "weights.csv"):
                a = (out_a / "seed_1" / name).read_bytes()
                b = (out_b / "seed_1" / name).read_bytes()
                assert a == b, f"{name} differs between identical runs"
