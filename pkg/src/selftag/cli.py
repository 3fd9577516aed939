"""Command-line entry point.

Exit codes: 0 success, 2 configuration errors, 3 data errors, 4 model or
runtime errors (argparse usage errors also exit 2).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from typing import Optional

from .config import ExperimentConfig, load_config, parse_policy, resolve_output_dir
from .corpus import BIO_ENTITY, Dataset, LabeledSentence, parse_conll, repair_bio, write_conll
from .errors import DataError, SelftagError
from .evaluation import span_f1, token_accuracy
from .harness import (
    baseline_model,
    evaluate,
    load_seed_data,
    run_ablation,
    run_few_shot,
    run_self_train_grid,
    run_zero_shot,
    self_train_config,
    write_report,
)
from .selftrain import history_to_tsv, self_train
from .synth import generate_benchmark
from .tagger import load_model, predict_with_confidence, save_model


def _read_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _write_text(path: str, text: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    print(f"wrote {path}")


def _out_path(cfg: ExperimentConfig, override: Optional[str], name: str) -> str:
    return override if override else os.path.join(resolve_output_dir(cfg), name)


def _cmd_train(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    data = load_seed_data(cfg, cfg.seeds[0])
    model = baseline_model(data.L, cfg, cfg.seeds[0])
    path = _out_path(cfg, args.model_out, "model.txt")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    save_model(model, path)
    print(f"wrote {path}")
    print(f"dev_metric\t{evaluate(model, data.dev_target)!r}")
    return 0


def _cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    ds = parse_conll(_read_text(args.input), model.scheme, role="U", strip_labels=True)
    out = []
    for sent in ds.sentences:
        pred = predict_with_confidence(model, sent)
        labels = pred.labels
        if model.scheme.kind == BIO_ENTITY:
            labels = repair_bio(labels)
        out.append(LabeledSentence(sent.tokens, labels))
    text = write_conll(Dataset(model.scheme, tuple(out), "test"))
    if args.output:
        _write_text(args.output, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_eval(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    ds = parse_conll(_read_text(args.data), model.scheme, role="test")
    golds = [s.labels for s in ds.sentences]
    preds = [predict_with_confidence(model, s).labels for s in ds.sentences]
    lines = ["metric\tname\tvalue"]
    if model.scheme.kind == BIO_ENTITY:
        report = span_f1(golds, preds)
        for name, score in report.per_type.items():
            lines.append(f"precision\t{name}\t{score.precision!r}")
            lines.append(f"recall\t{name}\t{score.recall!r}")
            lines.append(f"f1\t{name}\t{score.f1!r}")
        lines.append(f"precision\tmicro\t{report.micro.precision!r}")
        lines.append(f"recall\tmicro\t{report.micro.recall!r}")
        lines.append(f"f1\tmicro\t{report.micro.f1!r}")
        lines.append(f"f1\tmacro\t{report.macro_f1!r}")
    lines.append(f"accuracy\ttoken\t{token_accuracy(golds, preds)!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_selftrain(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    seed = cfg.seeds[0]
    data = load_seed_data(cfg, seed)
    policy = parse_policy(args.policy) if args.policy else cfg.grid[0]
    model, history = self_train(
        data.L, data.U, data.dev_target, self_train_config(cfg, policy, seed)
    )
    _write_text(_out_path(cfg, args.history_out, "history.tsv"), history_to_tsv(history))
    path = _out_path(cfg, args.model_out, "model.txt")
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    save_model(model, path)
    print(f"wrote {path}")
    return 0


def _cmd_report(runner, name: str):
    def cmd(args: argparse.Namespace) -> int:
        cfg = load_config(args.config)
        rows = runner(cfg)
        write_report(rows, _out_path(cfg, args.out, name))
        print(f"wrote {_out_path(cfg, args.out, name)}")
        return 0

    return cmd


def _cmd_synth(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if cfg.synthetic is None:
        raise DataError("synth needs a config with data = synthetic")
    bench = generate_benchmark(replace(cfg.synthetic, seed=cfg.seeds[0]))
    out_dir = args.out_dir or os.path.join(resolve_output_dir(cfg), "synth")
    for name in (
        "L",
        "U",
        "dev_target",
        "test_target",
        "gold_target",
        "dev_source",
        "test_source",
        "U_source",
    ):
        _write_text(os.path.join(out_dir, f"{name}.conll"), write_conll(getattr(bench, name)))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="selftag",
        description="Confidence-based self-training for sequence labeling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="supervised training on the labeled split")
    p.add_argument("--config", required=True)
    p.add_argument("--model-out")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="label a file with a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="score a saved model on labeled data")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("selftrain", help="one self-training run")
    p.add_argument("--config", required=True)
    p.add_argument("--policy", help="threshold=0.9 or fixed=100; default: first grid entry")
    p.add_argument("--model-out")
    p.add_argument("--history-out")
    p.set_defaults(func=_cmd_selftrain)

    for name, runner, rep in (
        ("zeroshot", run_zero_shot, "zeroshot.tsv"),
        ("grid", run_self_train_grid, "grid.tsv"),
        ("fewshot", run_few_shot, "fewshot.tsv"),
        ("ablate", run_ablation, "ablation.tsv"),
    ):
        p = sub.add_parser(name, help=f"run the {name} protocol")
        p.add_argument("--config", required=True)
        p.add_argument("--out")
        p.set_defaults(func=_cmd_report(runner, rep))

    p = sub.add_parser("synth", help="write the synthetic benchmark splits")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir")
    p.set_defaults(func=_cmd_synth)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SelftagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
