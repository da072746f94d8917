"""Command-line interface: evspike <subcommand>.

Subcommands cover the whole pipeline: synth, encode, analyze, train,
gridsearch, quantize, qinfer, baseline, ttc, experiment. ``--seed`` is a
universal flag; experiment config keys can also be overridden through
EVSPIKE_<KEY> environment variables.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import baselines
from .codec import BinningConfig, EncoderConfig, analyze_encoding, bin_events, encode, input_copies
from .dataset import load_dataset, save_dataset, synth_dataset
from .events_io import write_events_binary, write_events_text
from .gridsearch import grid_search, random_search
from .harness import (
    build_network,
    compute_ttc,
    load_experiment_config,
    prepare_inputs,
    run_experiment,
    train_config_from_hyperparameters,
    write_json,
)
from .model_io import load_network, load_quantized, read_preprocessing, save_network, save_quantized
from .presets import HIDDEN_SIZE_DEFAULT, default_hyperparameters
from .quant import quantize_network, quantized_forward
from .training import evaluate, train, write_metrics_csv


def _parse_floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _parse_ints(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _load_binned(dataset_path, model_path):
    """Rebuild network inputs for a model from its stored preprocessing."""
    prep = read_preprocessing(model_path)
    missing = {"threshold", "time_bin_size_ms", "nb_input_copies"} - set(prep)
    if missing:
        raise SystemExit(f"model lacks preprocessing metadata {sorted(missing)}")
    dataset = load_dataset(dataset_path)
    inputs, labels, _ = prepare_inputs(
        dataset, prep["threshold"], prep["time_bin_size_ms"], int(prep["nb_input_copies"])
    )
    return inputs, labels


def _cmd_synth(args):
    ds = synth_dataset(
        n_classes=args.classes,
        n_repetitions=args.reps,
        seed=args.seed,
        include_blank_class=args.blank_class,
    )
    save_dataset(ds, args.out)
    print(f"wrote {len(ds)} samples, {ds.n_classes} classes -> {args.out}")


def _cmd_encode(args):
    dataset = load_dataset(args.input)
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    cfg = EncoderConfig(threshold=args.threshold)
    writer = write_events_text if args.format == "text" else write_events_binary
    ext = "txt" if args.format == "text" else "evt"
    manifest = {"threshold": args.threshold, "n_taxels": dataset.n_taxels, "samples": []}
    tensors = []
    for i, sample in enumerate(dataset.samples):
        stream = encode(sample, cfg)
        name = f"{i:05d}_{sample.label:03d}.{ext}"
        writer(stream, out / name)
        manifest["samples"].append({"file": name, "label": int(sample.label)})
        if args.bin_size is not None:
            tensors.append(bin_events(stream, BinningConfig(args.bin_size), sample.label))
    write_json(manifest, out / "manifest.json")
    if args.bin_size is not None:
        np.savez_compressed(
            out / "binned.npz",
            inputs=np.stack([t.bits for t in tensors]),
            labels=dataset.labels,
            time_bin_size_ms=args.bin_size,
            threshold=args.threshold,
        )
    print(f"encoded {len(dataset)} samples at threshold {args.threshold} -> {out}")


def _cmd_analyze(args):
    dataset = load_dataset(args.input)
    reports = analyze_encoding(dataset.samples, _parse_floats(args.thresholds),
                               _parse_floats(args.bin_sizes))
    write_json([r.to_dict() for r in reports], args.report)
    for r in reports:
        print(
            f"threshold={r.threshold:<5g} bin={r.time_bin_size_ms:<4g}ms "
            f"events={r.mean_events_per_sample:8.1f} gamma={r.compression_ratio:6.2f} "
            f"mse={r.reconstruction_mse:8.3f} lost={100 * r.events_lost_fraction:5.2f}%"
        )
    print(f"report -> {args.report}")


def _cmd_train(args):
    cfg = load_experiment_config(args.config, seed_override=args.seed)
    dataset = load_dataset(args.data)
    hp = cfg.resolved_hyperparameters()
    inputs, labels, _ = prepare_inputs(
        dataset, cfg.threshold, hp.time_bin_size, hp.nb_input_copies
    )
    net = build_network(
        inputs.shape[2], dataset.n_classes, hp,
        hidden_size=cfg.hidden_size, recurrent=cfg.recurrent, seed=cfg.seed,
    )
    tcfg = train_config_from_hyperparameters(
        hp, cfg.epochs, cfg.seed,
        batch_size=cfg.batch_size,
        learning_rate=cfg.learning_rate,
        stop_at_test_accuracy=cfg.stop_at_test_accuracy,
    )
    result = train(net, (inputs, labels), tcfg)
    prep = {
        "threshold": float(cfg.threshold),
        "time_bin_size_ms": float(hp.time_bin_size),
        "nb_input_copies": int(hp.nb_input_copies),
    }
    save_network(result.net.astype(np.float64), args.out, preprocessing=prep)
    metrics_path = args.metrics or str(Path(args.out).with_suffix(".metrics.csv"))
    write_metrics_csv(result.metrics, metrics_path)
    print(
        f"best test accuracy {result.best_test_accuracy:.4f} at epoch "
        f"{result.best_epoch}; model -> {args.out}"
    )


def _cmd_gridsearch(args):
    dataset = load_dataset(args.data)
    if args.random:
        for th in _parse_floats(args.thresholds):
            trials = random_search(
                dataset, th, args.random, epochs=args.epochs, seed=args.seed,
                hidden_size=args.hidden_size,
            )
            print(f"threshold {th}: best random trial acc={trials[0][1]:.4f}")
            print(json.dumps(trials[0][0], indent=2, sort_keys=True))
        return
    result = grid_search(
        dataset,
        _parse_floats(args.thresholds),
        _parse_floats(args.bin_sizes),
        _parse_ints(args.copies),
        epochs=args.epochs,
        seed=args.seed,
        hidden_size=args.hidden_size,
    )
    result.write_csv(args.out)
    for row in result.rows:
        tag = " *default*" if row.is_default_config else ""
        print(
            f"threshold={row.threshold:<5g} bin={row.time_bin_size:<4g}ms "
            f"copies={row.nb_input_copies} acc={row.best_test_accuracy:.4f}{tag}"
        )
    print(f"best: threshold={result.best.threshold} bin={result.best.time_bin_size} "
          f"copies={result.best.nb_input_copies} acc={result.best.best_test_accuracy:.4f}")
    print(f"table -> {args.out}")


def _cmd_quantize(args):
    net = load_network(args.model)
    qnet = quantize_network(net)
    save_quantized(qnet, args.out, preprocessing=read_preprocessing(args.model))
    print(
        f"quantized: w_scale hidden={qnet.quant_hidden.w_scale} "
        f"out={qnet.quant_out.w_scale} -> {args.out}"
    )


def _cmd_qinfer(args):
    qnet = load_quantized(args.model)
    inputs, labels = _load_binned(args.data, args.model)
    predictions, report, _ = quantized_forward(qnet, inputs, blank_steps=args.blank_steps)
    accuracy = float((predictions == labels).mean())
    payload = {"accuracy": accuracy, **report.to_dict()}
    write_json(payload, args.report)
    print(f"quantized accuracy {accuracy:.4f}; synops/sample "
          f"{report.synops_per_sample:.1f}; report -> {args.report}")


def _cmd_baseline(args):
    dataset = load_dataset(args.data)
    if args.mode == "curve":
        curve = baselines.incremental_frames_curve(
            dataset, k=args.pca_components, n_folds=args.folds, seed=args.seed,
            frame_step=args.frame_step,
        )
        with open(args.report, "w") as fh:
            fh.write("time_s,accuracy_mean,accuracy_std\n")
            for t, mean, std in curve:
                fh.write(f"{t!r},{mean!r},{std!r}\n")
        print(f"curve with {len(curve)} points -> {args.report}")
        return
    X, labels = baselines.feature_matrix(dataset, args.mode, threshold=args.threshold,
                                         time_bin_size_ms=args.bin_size)
    result = baselines.cross_validate(X, labels, n_folds=args.folds, seed=args.seed)
    with open(args.report, "w") as fh:
        fh.write("mode,accuracy_mean,accuracy_std,folds\n")
        fh.write(f"{args.mode},{result.mean_accuracy!r},{result.std_accuracy!r},{args.folds}\n")
    print(
        f"{args.mode}: accuracy {100 * result.mean_accuracy:.2f} "
        f"+/- {100 * result.std_accuracy:.2f} % -> {args.report}"
    )


def _cmd_ttc(args):
    net = load_network(args.model)
    inputs, labels = _load_binned(args.data, args.model)
    result = compute_ttc(net, inputs, labels, fraction_step=args.fraction_step)
    write_json(result.to_dict(), args.report)
    print(f"ttc fraction {result.fraction:.2f} (full accuracy "
          f"{result.full_accuracy:.4f}) -> {args.report}")


def _cmd_experiment(args):
    cfg = load_experiment_config(args.config, seed_override=args.seed)
    if args.dry_run:
        print(json.dumps(run_experiment(cfg, dry_run=True), indent=2, sort_keys=True))
        return
    result = run_experiment(cfg)
    print(
        f"accuracy {100 * result.accuracy_mean:.2f} +/- {100 * result.accuracy_std:.2f} % "
        f"over {len(result.accuracies)} seeds; quantized drop "
        f"{100 * result.quantized_drop:.2f} points; ttc {result.ttc.fraction:.2f}; "
        f"outputs -> {cfg.outdir}"
    )


def build_parser():
    parser = argparse.ArgumentParser(prog="evspike", description=__doc__)
    seed_parent = argparse.ArgumentParser(add_help=False)
    seed_parent.add_argument("--seed", type=int, default=None, help="universal seed override")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=None)

    def add_parser(name, **kwargs):
        return sub.add_parser(name, parents=[seed_parent], **kwargs)

    p = add_parser("synth", help="generate a seeded synthetic dataset")
    p.add_argument("--classes", type=int, default=10)
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--blank-class", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_synth, default_seed=0)

    p = add_parser("encode", help="encode a dataset into event streams")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.add_argument("--bin-size", type=float, default=None, help="also write binned.npz")
    p.add_argument("--format", choices=["binary", "text"], default="binary")
    p.set_defaults(func=_cmd_encode)

    p = add_parser("analyze", help="encoding-quality sweep")
    p.add_argument("--input", required=True)
    p.add_argument("--thresholds", default="1,2,5,10")
    p.add_argument("--bin-sizes", default="1,2,3,5,10,20")
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_analyze)

    p = add_parser("train", help="train a network from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", default=None)
    p.set_defaults(func=_cmd_train)

    p = add_parser("gridsearch", help="grid over bin sizes and input copies")
    p.add_argument("--data", required=True)
    p.add_argument("--thresholds", default="1,2,5,10")
    p.add_argument("--bin-sizes", default="3,5")
    p.add_argument("--copies", default="2,4,8")
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--hidden-size", type=int, default=HIDDEN_SIZE_DEFAULT)
    p.add_argument("--out", default="gridsearch.csv")
    p.add_argument("--random", type=int, default=0,
                   help="instead sample N random configs over the full space")
    p.set_defaults(func=_cmd_gridsearch, default_seed=0)

    p = add_parser("quantize", help="map a float model to fixed point")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_quantize)

    p = add_parser("qinfer", help="integer inference with synop report")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--blank-steps", type=int, default=100)
    p.set_defaults(func=_cmd_qinfer)

    p = add_parser("baseline", help="linear one-vs-rest baselines")
    p.add_argument("--data", required=True)
    p.add_argument("--mode", choices=["raw", "collapsed", "events", "event_bins", "curve"],
                   default="raw")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--threshold", type=float, default=1.0)
    p.add_argument("--bin-size", type=float, default=5.0)
    p.add_argument("--pca-components", type=int, default=12)
    p.add_argument("--frame-step", type=int, default=1)
    p.add_argument("--report", required=True)
    p.set_defaults(func=_cmd_baseline, default_seed=0)

    p = add_parser("ttc", help="time-to-classify of a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--fraction-step", type=float, default=0.05)
    p.set_defaults(func=_cmd_ttc)

    p = add_parser("experiment", help="full pipeline from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is None:
        args.seed = getattr(args, "default_seed", None)
    try:
        args.func(args)
    except (ValueError, FileNotFoundError) as exc:
        raise SystemExit(f"error: {exc}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
