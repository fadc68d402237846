"""Command-line front end: gen-dataset, train, eval, export.

Exit codes are a stable contract for scripting: 0 success, 1 usage error,
2 config/format error, 3 runtime numeric failure. Every command accepts
--seed and all randomness flows from it. RADIO_AE_THREADS caps the worker
threads used for dataset generation.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import RunConfig, apply_overrides, load_config
from .dataset import build_dataset, load_dataset, save_dataset
from .errors import (
    ConfigError,
    FormatError,
    NumericError,
    ParameterError,
    ShapeError,
)
from .model import load_model, param_count, save_model
from .training import (
    evaluate,
    export_weights,
    reconstruct_examples,
    train,
    write_history_csv,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the CLI contract wants 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _workers():
    raw = os.environ.get("RADIO_AE_THREADS")
    if raw is None:
        return 1
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"RADIO_AE_THREADS must be an integer, got {raw!r}") from None


def _run_config(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    return apply_overrides(
        cfg,
        seed=getattr(args, "seed", None),
        epochs=getattr(args, "epochs", None),
        modulation=getattr(args, "mod", None),
        snr_db=getattr(args, "snr_db", None),
    )


def cmd_gen_dataset(args):
    cfg = _run_config(args)
    ds_cfg = cfg.dataset
    kwargs = dict(beta=ds_cfg.rrc_beta, span=ds_cfg.rrc_span,
                  bt=ds_cfg.gfsk_bt, mod_index=ds_cfg.gfsk_mod_index)
    dataset = build_dataset(ds_cfg.modulation, ds_cfg.n_examples,
                            example_len=ds_cfg.example_len, sps=ds_cfg.sps,
                            channel=cfg.channel, seed=ds_cfg.seed,
                            workers=_workers(), **kwargs)
    save_dataset(dataset, args.out)
    print(f"wrote {args.out}: {len(dataset)} {dataset.modulation} examples "
          f"of {dataset.example_len} samples, nominal snr {cfg.channel.snr_db} dB")
    return EXIT_OK


def cmd_train(args):
    cfg = _run_config(args)
    dataset = load_dataset(args.dataset)
    model, state, history = train(dataset, cfg.train)
    save_model(model, state, args.out)
    history_path = args.history or os.path.join(
        os.path.dirname(os.path.abspath(args.out)), "train_history.csv")
    write_history_csv(history, history_path)
    conv, den = param_count(model)
    print(f"parameters: conv={conv} dense={den}")
    print(f"final validation mse: {history.val_mse[-1]:.6e}")
    print(f"wrote {args.out} and {history_path}")
    return EXIT_OK


def cmd_eval(args):
    cfg = _run_config(args)
    dataset = load_dataset(args.dataset)
    model, _ = load_model(args.checkpoint)
    metrics = evaluate(model, dataset, cfg.train.noise_sigma,
                       seed=cfg.train.seed, snr_db=cfg.channel.snr_db)
    lines = [
        ("mean_mse", format(metrics.mean_mse, ".9e")),
        ("saturation_fraction", format(metrics.saturation_fraction, ".9e")),
        ("n_eff_bits", str(metrics.n_eff_bits)),
        ("compression_ratio", str(metrics.compression_ratio)),
    ]
    for key, value in lines:
        print(f"{key}={value}")
    out = args.out or "metrics.csv"
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("metric,value\n")
        for key, value in lines:
            fh.write(f"{key},{value}\n")
    print(f"wrote {out}")
    return EXIT_OK


def cmd_export(args):
    cfg = _run_config(args)
    dataset = load_dataset(args.dataset)
    model, _ = load_model(args.checkpoint)
    os.makedirs(args.out_dir, exist_ok=True)
    written = export_weights(model, args.out_dir)
    recon_path = os.path.join(args.out_dir, "reconstructions.csv")
    reconstruct_examples(model, dataset, args.n, recon_path,
                         noise_sigma=cfg.train.noise_sigma, seed=cfg.train.seed)
    written.append(recon_path)
    manifest = os.path.join(args.out_dir, "MANIFEST")
    with open(manifest, "w", encoding="utf-8", newline="\n") as fh:
        for path in written:
            fh.write(os.path.basename(path) + "\n")
    print(f"wrote {len(written)} files to {args.out_dir} (see MANIFEST)")
    return EXIT_OK


def _build_parser():
    parser = _Parser(prog="radioae",
                     description="Modulated IQ datasets and the conv autoencoder")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="run-config file (key = value sections)")
        p.add_argument("--seed", type=int, help="master seed for all randomness")

    p = sub.add_parser("gen-dataset", help="synthesize a dataset file")
    common(p)
    p.add_argument("--mod", choices=["qpsk", "gfsk"], help="modulation")
    p.add_argument("--snr-db", type=float, dest="snr_db", help="channel SNR in dB")
    p.add_argument("--out", required=True, help="output dataset path (RAED v1)")
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("train", help="train a model on a dataset file")
    common(p)
    p.add_argument("--dataset", required=True, help="input dataset path")
    p.add_argument("--epochs", type=int, help="override epoch count")
    p.add_argument("--out", required=True, help="output checkpoint path (RAEM v1)")
    p.add_argument("--history", help="history CSV path (default next to checkpoint)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="compute metrics for a checkpoint")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--snr-db", type=float, dest="snr_db",
                   help="nominal SNR for effective-bit accounting")
    p.add_argument("--out", help="metrics CSV path (default metrics.csv)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="export weight and reconstruction CSVs")
    common(p)
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--dataset", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--n", type=int, default=2, help="reconstruction examples")
    p.set_defaults(func=cmd_export)
    return parser


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, FormatError, ParameterError, ShapeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: no such file", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
