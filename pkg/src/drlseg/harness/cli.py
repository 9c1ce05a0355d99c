"""Command-line entry point: synth, train, segment, eval, gradcheck, viz.

Exit codes: 0 success, 1 verification or runtime failure, 2 usage or
configuration error. Failures also print one JSON object on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from ..drls import DrlsModel, drls_forward, drls_train
from ..errors import ConfigError, DrlsError, ParseError, StructuralError, UsageError
from ..metrics import EvalReport
from ..neuralnet import init_params, load_checkpoint, save_checkpoint
from .config import load_synth_config, load_train_config, parse_train_config, train_config_to_dict
from .dataset import load_cases, synthesize
from .imageio import load_image, save_image
from .viz import emit_heatmap

log = logging.getLogger("drlseg")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
CHECKPOINT_NAME = "model.ckpt"
CONFIG_NAME = "config.json"
LOSS_NAME = "loss.csv"


class CliError(Exception):
    def __init__(self, code, kind, message):
        super().__init__(message)
        self.code, self.kind = code, kind


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(EXIT_USAGE, "UsageError", f"{self.prog}: {message}")


# -- model bundles -------------------------------------------------------------


def save_bundle(path, model: DrlsModel, config_dict: dict) -> None:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(out / CHECKPOINT_NAME, model.layers, model.params)
    (out / CONFIG_NAME).write_text(json.dumps(config_dict, indent=2) + "\n")


def load_bundle(path) -> DrlsModel:
    root = Path(path)
    if not (root / CHECKPOINT_NAME).exists() or not (root / CONFIG_NAME).exists():
        raise ConfigError(f"{root} is not a model bundle (needs {CHECKPOINT_NAME} and {CONFIG_NAME})")
    cfg = parse_train_config(json.loads((root / CONFIG_NAME).read_text()))
    layers, params = load_checkpoint(root / CHECKPOINT_NAME)
    if tuple(layers) != tuple(cfg.network.layers):
        raise StructuralError("checkpoint layers disagree with the bundled config")
    return DrlsModel(layers, params.astype(cfg.network.dtype), cfg.weights, cfg.evolution, cfg.conversion)


# -- commands ----------------------------------------------------------------


def cmd_synth(args) -> int:
    cfg = load_synth_config(args.spec)
    manifest = synthesize(cfg, args.out, args.count, "." + args.image_format)
    log.info("wrote %d cases, manifest %s", args.count, manifest)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = load_train_config(args.config)
    training = cfg.training
    if args.epochs is not None:
        training = replace(training, epochs=args.epochs)
    cfg = replace(cfg, training=training, seed=cfg.seed if args.seed is None else args.seed)
    cases = load_cases(args.manifest, "train")
    if not cases:
        raise ConfigError("manifest has no training cases")
    layers = cfg.network.layers
    params = init_params(layers, cfg.network.in_channels, cfg.seed).astype(cfg.network.dtype)
    model = DrlsModel(layers, params, cfg.weights, cfg.evolution, cfg.conversion)
    model, history = drls_train(
        model,
        [(img, gt) for _, img, gt in cases],
        training.epochs,
        training.learning_rate,
        seed=cfg.seed,
        patience=training.patience,
        supervision=training.supervision,
    )
    save_bundle(args.out_model, model, train_config_to_dict(cfg))
    with open(Path(args.out_model) / LOSS_NAME, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "loss"])
        for i, loss in enumerate(history):
            writer.writerow([i, repr(float(loss))])
    return EXIT_OK


def cmd_segment(args) -> int:
    model = load_bundle(args.model)
    image = load_image(args.image)
    mask, trace = drls_forward(model, image)
    save_image(args.out_mask, mask)
    if args.trace_dir:
        d = Path(args.trace_dir)
        d.mkdir(parents=True, exist_ok=True)
        for k, phi in enumerate(trace.phis):
            emit_heatmap(phi, d / f"step{k}_phi.png")
        for k, phi in enumerate(trace.evolved, start=1):
            emit_heatmap(phi, d / f"step{k}_evolved.png")
    return EXIT_OK


def evaluate(model: DrlsModel, cases, workers: int = 1, hausdorff: bool = False) -> EvalReport:
    """Segment every ``(id, image, gt)`` case; report rows sorted by case id."""

    def run(case):
        cid, image, gt = case
        return cid, drls_forward(model, image)[0], gt

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, cases))
    else:
        results = [run(c) for c in cases]
    report = EvalReport(with_hausdorff=hausdorff)
    for cid, mask, gt in sorted(results, key=lambda r: r[0]):
        report.add(cid, mask, gt)
    return report


def cmd_eval(args) -> int:
    if args.workers < 1:
        raise ConfigError("--workers must be >= 1")
    model = load_bundle(args.model)
    cases = load_cases(args.manifest, None if args.split == "all" else args.split)
    if not cases:
        raise ConfigError(f"manifest has no {args.split} cases")
    report = evaluate(model, cases, args.workers, args.hausdorff)
    report.write_csv(args.report)
    for c in report.cases:
        for metric, reason in c.skipped.items():
            log.warning("case %s: %s skipped (%s)", c.case, metric, reason)
    log.info("mean dice %.4f over %d cases", report.mean("dice"), len(report.cases))
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    from ..gradcheck import run_suites

    results = run_suites(args.module)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_OK if failed == 0 else EXIT_FAIL


def cmd_viz(args) -> int:
    field = load_image(args.field)
    if not np.all(np.isfinite(field)):
        raise ParseError("field contains non-finite values", 16)
    emit_heatmap(field, args.out)
    return EXIT_OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="drlseg", description="Deep recurrent level-set segmentation")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="generate a phantom dataset")
    s.add_argument("--spec", required=True, help="synthesis config (JSON)")
    s.add_argument("--out", required=True, help="output directory")
    s.add_argument("--count", required=True, type=int)
    s.add_argument("--image-format", choices=("pgm", "png"), default="pgm")
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("train", help="train a model on the manifest's train split")
    s.add_argument("--manifest", required=True)
    s.add_argument("--config", required=True, help="training config (JSON)")
    s.add_argument("--out-model", required=True, help="model bundle directory")
    s.add_argument("--epochs", type=int, help="override training.epochs")
    s.add_argument("--seed", type=int, help="override the config seed")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("segment", help="segment one image")
    s.add_argument("--model", required=True)
    s.add_argument("--image", required=True)
    s.add_argument("--out-mask", required=True)
    s.add_argument("--trace-dir", help="write per-step level-set heatmaps here")
    s.set_defaults(func=cmd_segment)

    s = sub.add_parser("eval", help="score a model on a manifest split")
    s.add_argument("--model", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--report", required=True, help="output CSV")
    s.add_argument("--split", choices=("train", "test", "all"), default="test")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--hausdorff", action="store_true", help="add a hausdorff95 column")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("gradcheck", help="run the finite-difference and oracle checks")
    s.add_argument("--module", choices=("all", "levelset", "disttrans", "neuralnet"), default="all")
    s.set_defaults(func=cmd_gradcheck)

    s = sub.add_parser("viz", help="render an LSF1 field as a heatmap PNG")
    s.add_argument("--field", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_viz)
    return p


def _report(err: CliError) -> int:
    print(json.dumps({"error": err.kind, "message": str(err), "exit_code": err.code}), file=sys.stderr)
    return err.code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        return args.func(args)
    except CliError as err:
        return _report(err)
    except (ConfigError, UsageError, ParseError, StructuralError, FileNotFoundError, IsADirectoryError) as err:
        return _report(CliError(EXIT_USAGE, type(err).__name__, str(err)))
    except (DrlsError, FloatingPointError, OSError, ValueError) as err:
        return _report(CliError(EXIT_FAIL, type(err).__name__, str(err)))


if __name__ == "__main__":
    sys.exit(main())
