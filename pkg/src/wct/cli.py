"""Command-line entry point.

Subcommands: synth, corrupt, cartography, train, eval. Exit codes: 0 success,
1 runtime failure, 2 bad flags or config. Training hyperparameters may come
from a flat ``key = value`` config file; explicit flags win over the file and
the file wins over built-in defaults. All randomness flows from named seeds.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import (
    CoTeachingConfig,
    run_coteaching,
    run_ds_baseline,
    run_simple_ft,
    run_wst_ensembled,
    run_wst_r,
)
from .cartography import export_map
from .cotrain import RunConfig, ensemble_predict, run_wct, train_supervised, carve_dev
from .cartography import DynamicsRecord, append_observation
from .dataset import (
    NoiseSpec,
    carve_human_set,
    generate_synthetic,
    inject_noise,
    load_dataset,
    save_dataset,
)
from .errors import WctError
from .evaluation import aggregate_seeds, evaluate
from .model import load_checkpoint, predict_proba, save_checkpoint

METHODS = (
    "ds",
    "simple-ft",
    "wst-ensembled",
    "wst-r",
    "coteaching",
    "wct-cv",
    "wct-cc",
    "wct-cvh",
    "wct-both",
)

# config-file keys, their types and defaults; flags mirror these 1:1
TRAIN_DEFAULTS = {
    "hidden": (str, "64"),
    "activation": (str, "relu"),
    "optimizer": (str, "adam"),
    "lr": (float, 1e-3),
    "ft_lr": (float, 1e-4),
    "batch_size": (int, 64),
    "epochs_step1": (int, 10),
    "epochs_step2": (int, 5),
    "epochs_step3": (int, 10),
    "patience": (int, 2),
    "dev_fraction": (float, 0.15),
    "noise_est": (float, 0.15),
    "resplit_step3": (bool, False),
}


def _parse_config_file(path, parser):
    values = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        parser.error(f"cannot read config file: {exc}")
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            parser.error(f"config line {lineno}: expected key = value")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in TRAIN_DEFAULTS:
            parser.error(f"config line {lineno}: unknown key {key!r}")
        typ = TRAIN_DEFAULTS[key][0]
        try:
            if typ is bool:
                if raw.lower() not in ("true", "false"):
                    raise ValueError(raw)
                values[key] = raw.lower() == "true"
            else:
                values[key] = typ(raw)
        except ValueError:
            parser.error(f"config line {lineno}: bad value for {key}: {raw!r}")
    return values


def _merged_train_settings(args, parser):
    settings = {k: default for k, (_, default) in TRAIN_DEFAULTS.items()}
    if args.config:
        settings.update(_parse_config_file(args.config, parser))
    for key in TRAIN_DEFAULTS:
        flag_value = getattr(args, key)
        if flag_value is not None:
            settings[key] = flag_value
    return settings


def _hidden_sizes(spec):
    spec = spec.strip()
    if not spec:
        return ()
    return tuple(int(s) for s in spec.split(","))


def _run_config(settings, seed, method):
    variant = method if method.startswith("wct-") else "wct-cv"
    return RunConfig(
        hidden_sizes=_hidden_sizes(settings["hidden"]),
        activation=settings["activation"],
        optimizer=settings["optimizer"],
        learning_rate=settings["lr"],
        finetune_rate=settings["ft_lr"],
        batch_size=settings["batch_size"],
        epochs_step1=settings["epochs_step1"],
        epochs_step2=settings["epochs_step2"],
        epochs_step3=settings["epochs_step3"],
        patience=settings["patience"],
        dev_fraction=settings["dev_fraction"],
        variant=variant,
        init_seed1=seed * 1000 + 11,
        init_seed2=seed * 1000 + 22,
        split_seed=seed * 1000 + 33,
        shuffle_seed=seed * 1000 + 44,
        coin_seed=seed * 1000 + 55,
        resplit_step3=settings["resplit_step3"],
    )


def _write_metrics(log, path):
    with open(path, "w") as fh:
        for entry in log:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")


def _predict_labels(states, features):
    if len(states) == 1:
        return predict_proba(states[0], features).argmax(axis=1)
    labels, _ = ensemble_predict(states[0], states[1], features)
    return labels


def cmd_synth(args, parser):
    d = generate_synthetic(
        args.classes, args.per_class, args.dim, args.separation, args.seed
    )
    save_dataset(d, args.out)
    print(
        f"wrote {args.out}: K={d.num_classes} n={len(d.human_ids)} "
        f"m={len(d.auto_ids)} dim={d.dim}"
    )
    return 0


def cmd_corrupt(args, parser):
    if not 0.0 <= args.rate <= 1.0:
        parser.error(f"--rate must be in [0,1], got {args.rate}")
    if args.human_per_class < 0:
        parser.error("--human-per-class must be non-negative")
    d = load_dataset(args.infile, num_classes=args.classes)
    noisy = inject_noise(d, NoiseSpec(rate=args.rate, seed=args.noise_seed))
    if args.human_per_class:
        noisy = carve_human_set(noisy, args.human_per_class, args.human_seed)
    corrupted = sum(1 for ex in noisy.examples if ex.is_corrupted())
    save_dataset(noisy, args.out)
    print(
        f"wrote {args.out}: corrupted={corrupted} human={len(noisy.human_ids)} "
        f"auto={len(noisy.auto_ids)}"
    )
    return 0


def cmd_cartography(args, parser):
    d = load_dataset(args.data, num_classes=args.classes)
    if args.train_on == "auto":
        train_ids = sorted(d.auto_ids)
    else:
        train_ids = sorted(ex.id for ex in d.examples)
    if not train_ids:
        print("error: no training examples for the selected split", file=sys.stderr)
        return 1
    cfg = _run_config(_merged_train_settings(args, parser), args.seed, "wct-cv")
    rng = np.random.default_rng([cfg.shuffle_seed, 30])
    _, history, monitor = train_supervised(
        d,
        train_ids,
        cfg,
        init_seed=cfg.init_seed1,
        epochs=cfg.epochs_step1,
        learning_rate=cfg.learning_rate,
        shuffle_rng=rng,
        monitor_ids=train_ids,
        phase="cartography",
    )
    records = {ex_id: DynamicsRecord(ex_id) for ex_id in monitor}
    for p_assigned, correct in history:
        for j, ex_id in enumerate(monitor):
            append_observation(records[ex_id], p_assigned[j], correct[j])
    if args.sample is not None and args.sample < len(records):
        keep_rng = np.random.default_rng(args.sample_seed)
        kept = keep_rng.choice(sorted(records), size=args.sample, replace=False)
        records = {i: records[i] for i in kept.tolist()}
    export_map(records, d, args.out)
    print(f"wrote {args.out}: {len(records)} rows")
    return 0


def cmd_train(args, parser):
    if args.method not in METHODS:
        parser.error(f"unknown method {args.method!r}")
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError:
        parser.error(f"bad --seeds value: {args.seeds!r}")
    if not seeds:
        parser.error("--seeds must name at least one seed")
    settings = _merged_train_settings(args, parser)
    d = load_dataset(args.data, num_classes=args.classes)
    test = load_dataset(args.test, num_classes=d.num_classes) if args.test else None
    out_root = Path(args.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    reports = []
    for seed in seeds:
        cfg = _run_config(settings, seed, args.method)
        run_dir = out_root / f"seed_{seed}"
        run_dir.mkdir(parents=True, exist_ok=True)
        states, log, table, maps = _dispatch(args.method, d, cfg, settings)
        _write_metrics(log, run_dir / "metrics.jsonl")
        if table is not None:
            table.dump_csv(run_dir / "weights.csv")
        if maps is not None:
            export_map(maps[0], d, run_dir / "map_1.csv")
            export_map(maps[1], d, run_dir / "map_2.csv")
        for i, state in enumerate(states, start=1):
            save_checkpoint(state, run_dir / f"checkpoint_{i}.json")
        if test is not None:
            test_ids = sorted(ex.id for ex in test.examples)
            preds = _predict_labels(states, test.features_matrix(test_ids))
            report = evaluate(preds, test.gold_labels(test_ids), test.num_classes)
            (run_dir / "report.json").write_text(report.to_json() + "\n")
            reports.append(report)
            print(
                f"seed {seed}: macro_f1={report.macro_f1:.4f} "
                f"accuracy={report.accuracy:.4f}"
            )
        else:
            print(f"seed {seed}: done")
    if reports:
        agg = aggregate_seeds(reports)
        (out_root / "aggregate.json").write_text(
            json.dumps(agg, sort_keys=True) + "\n"
        )
        print(
            f"aggregate over {len(reports)} seeds: "
            f"macro_f1={agg['macro_f1']['mean']:.4f}±{agg['macro_f1']['std']:.4f}"
        )
    return 0


def _dispatch(method, d, cfg, settings):
    """Run one method; returns (states, log, weight_table_or_None, maps_or_None)."""
    if method == "ds":
        state, log = run_ds_baseline(d, cfg)
        return [state], log, None, None
    if method == "simple-ft":
        s1, s2, log = run_simple_ft(d, cfg)
        return [s1, s2], log, None, None
    if method == "wst-ensembled":
        s1, s2, table, log = run_wst_ensembled(d, cfg)
        return [s1, s2], log, table, None
    if method == "wst-r":
        state, log = run_wst_r(d, cfg)
        return [state], log, None, None
    if method == "coteaching":
        ct_cfg = CoTeachingConfig(
            noise_rate=settings["noise_est"],
            epochs=cfg.epochs_step2,
            learning_rate=cfg.learning_rate,
            batch_size=cfg.batch_size,
            optimizer=cfg.optimizer,
            hidden_sizes=cfg.hidden_sizes,
            activation=cfg.activation,
            init_seed1=cfg.init_seed1,
            init_seed2=cfg.init_seed2,
            shuffle_seed=cfg.shuffle_seed,
        )
        s1, s2, log, _ = run_coteaching(d, ct_cfg)
        return [s1, s2], log, None, None
    result = run_wct(d, cfg)
    return (
        [result.state1, result.state2],
        result.metrics_log,
        result.table,
        (result.dynamics1, result.dynamics2),
    )


def cmd_eval(args, parser):
    try:
        states = [load_checkpoint(args.checkpoint)]
        if args.checkpoint2:
            states.append(load_checkpoint(args.checkpoint2))
        test = load_dataset(args.data, num_classes=args.classes)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for state in states:
        if state.layer_sizes[0] != test.dim:
            print(
                f"error: checkpoint input dim {state.layer_sizes[0]} != "
                f"dataset dim {test.dim}",
                file=sys.stderr,
            )
            return 1
        if state.num_classes < test.num_classes:
            print(
                f"error: checkpoint has {state.num_classes} classes, "
                f"dataset needs {test.num_classes}",
                file=sys.stderr,
            )
            return 1
    test_ids = sorted(ex.id for ex in test.examples)
    preds = _predict_labels(states, test.features_matrix(test_ids))
    report = evaluate(preds, test.gold_labels(test_ids), states[0].num_classes)
    print(report.to_json())
    return 0


def _add_train_flags(p):
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--hidden", help="comma-separated hidden layer sizes")
    p.add_argument("--activation", choices=["relu", "tanh"])
    p.add_argument("--optimizer", choices=["sgd", "adam"])
    p.add_argument("--lr", type=float)
    p.add_argument("--ft-lr", type=float, dest="ft_lr")
    p.add_argument("--batch-size", type=int, dest="batch_size")
    p.add_argument("--epochs-step1", type=int, dest="epochs_step1")
    p.add_argument("--epochs-step2", type=int, dest="epochs_step2")
    p.add_argument("--epochs-step3", type=int, dest="epochs_step3")
    p.add_argument("--patience", type=int)
    p.add_argument("--dev-fraction", type=float, dest="dev_fraction")
    p.add_argument(
        "--noise-est", type=float, dest="noise_est", help="co-teaching noise estimate"
    )
    p.add_argument(
        "--resplit-step3",
        action=argparse.BooleanOptionalAction,
        dest="resplit_step3",
        default=None,
    )


def build_parser():
    parser = argparse.ArgumentParser(
        prog="wct",
        description="Training-dynamics-weighted co-training for noisy labels",
    )
    parser.add_argument("--version", action="version", version=f"wct {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic Gaussian-cluster dataset")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--per-class", type=int, required=True, dest="per_class")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("corrupt", help="inject label noise and carve the human set")
    p.add_argument("--in", required=True, dest="infile")
    p.add_argument("--out", required=True)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--noise-seed", type=int, default=0, dest="noise_seed")
    p.add_argument("--human-per-class", type=int, default=0, dest="human_per_class")
    p.add_argument("--human-seed", type=int, default=0, dest="human_seed")
    p.add_argument("--classes", type=int)
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("cartography", help="train one classifier and export its data map")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--train-on", choices=["auto", "all"], default="auto", dest="train_on")
    p.add_argument("--sample", type=int)
    p.add_argument("--sample-seed", type=int, default=0, dest="sample_seed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--classes", type=int)
    _add_train_flags(p)
    p.set_defaults(func=cmd_cartography)

    p = sub.add_parser("train", help="train a method and write run artifacts")
    p.add_argument("--data", required=True)
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.add_argument("--seeds", default="0")
    p.add_argument("--test", help="held-out test file for per-seed reports")
    p.add_argument("--classes", type=int)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate checkpoint(s) on a test file")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--checkpoint2", help="second checkpoint for ensembling")
    p.add_argument("--data", required=True)
    p.add_argument("--classes", type=int)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except WctError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
