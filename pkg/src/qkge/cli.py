"""Command line interface.

Subcommands: ``train``, ``eval``, ``classify``, ``sweep``. Exit codes:
0 success, 1 usage error, 2 unreadable or malformed data, 3 numeric
failure (degenerate embeddings).
"""

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .checkpoint import load_checkpoint, save_checkpoint
from .data import (
    INDEXED_FILES,
    RAW_FILES,
    load_dataset,
    relation_stats,
)
from .errors import DataFormatError, ZeroNormError
from .evaluation import (
    RankingReport,
    classify,
    evaluate,
    generate_classification_negatives,
    learn_thresholds,
    report_to_json,
    report_to_tsv,
)
from .model import score_batch
from .training import BernoulliStats, TrainConfig, train
from .data import build_filter_index

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

CHECKPOINT_NAME = "model.ckpt"
MANIFEST_NAME = "manifest.json"
TRAINING_LOG_NAME = "training_log.tsv"


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; this interface reserves 2 for data
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_train_options(parser, with_dim=True):
    parser.add_argument("--data", required=True, help="dataset directory")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--variant", choices=("quate", "quatde"),
                        default="quatde")
    if with_dim:
        parser.add_argument("--dim", type=int, default=100,
                            help="embedding dimension per component")
    parser.add_argument("--epochs", type=int, default=3000)
    parser.add_argument("--nbatches", type=int, default=100,
                        help="mini batches per epoch")
    parser.add_argument("--lr", type=float, default=0.1, help="learning rate")
    parser.add_argument("--reg", type=float, default=0.1,
                        help="regularization weight")
    parser.add_argument("--neg", type=int, default=10,
                        help="negatives per positive")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--validation-interval", type=int, default=300,
                        help="epochs between validation passes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qkge",
                     description="quaternion knowledge-graph embeddings")
    parser.add_argument("--quiet", action="store_true",
                        help="suppress progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model")
    _add_train_options(p_train)
    p_train.set_defaults(func=cmd_train)

    p_eval = sub.add_parser("eval", help="filtered link-prediction metrics")
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--checkpoint", required=True)
    p_eval.add_argument("--split", choices=("valid", "test"), default="test")
    p_eval.add_argument("--tie-policy", choices=("optimistic", "pessimistic"),
                        default="optimistic")
    p_eval.add_argument("--breakdown", choices=("relation", "category"),
                        default=None)
    p_eval.add_argument("--format", choices=("json", "tsv"), default="json")
    p_eval.set_defaults(func=cmd_eval)

    p_cls = sub.add_parser("classify", help="triple classification accuracy")
    p_cls.add_argument("--data", required=True)
    p_cls.add_argument("--checkpoint", required=True)
    p_cls.add_argument("--seed", type=int, default=0,
                       help="seed for negative generation")
    p_cls.set_defaults(func=cmd_classify)

    p_sweep = sub.add_parser(
        "sweep", help="train at several dimensions, report validation metrics"
    )
    _add_train_options(p_sweep, with_dim=False)
    p_sweep.add_argument("--dims", required=True,
                         help="comma-separated dimensions, e.g. 50,100,200")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def _config_from_args(args, dim: int) -> TrainConfig:
    return TrainConfig(
        variant=args.variant,
        dim=dim,
        epochs=args.epochs,
        nbatches=args.nbatches,
        learning_rate=args.lr,
        regularization=args.reg,
        negatives=args.neg,
        validation_interval=args.validation_interval,
        seed=args.seed,
    )


def dataset_digest(directory) -> str:
    """SHA-256 over the dataset files, bound to their names."""
    directory = Path(directory)
    digest = hashlib.sha256()
    for name in INDEXED_FILES + RAW_FILES:
        path = directory / name
        if not path.exists():
            continue
        digest.update(name.encode())
        digest.update(b"\0")
        digest.update(path.read_bytes())
    return digest.hexdigest()


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _write_training_log(path, log):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch\tloss\tvalid_mrr\tvalid_hit10\n")
        for entry in log:
            mrr = "" if entry.valid_mrr is None else f"{entry.valid_mrr:.6f}"
            hit = "" if entry.valid_hit10 is None else f"{entry.valid_hit10:.6f}"
            fh.write(f"{entry.epoch}\t{entry.loss:.6f}\t{mrr}\t{hit}\n")


def _run_training(dataset, config: TrainConfig, out_dir: Path, data_path):
    out_dir.mkdir(parents=True, exist_ok=True)
    started = _utc_now()
    result = train(dataset, config)
    finished = _utc_now()
    checkpoint_path = out_dir / CHECKPOINT_NAME
    save_checkpoint(checkpoint_path, result.params, config.variant)
    _write_training_log(out_dir / TRAINING_LOG_NAME, result.log)
    manifest = {
        "command": "train",
        "config": asdict(config),
        "dataset": {
            "path": str(data_path),
            "sha256": dataset_digest(data_path),
            "n_entities": dataset.n_entities,
            "n_relations": dataset.n_relations,
            "n_train": len(dataset.train),
            "n_valid": len(dataset.valid),
            "n_test": len(dataset.test),
        },
        "checkpoint": str(checkpoint_path),
        "started": started,
        "finished": finished,
        "best_epoch": result.best_epoch,
        "best_valid_hit10": result.best_hit10,
        "final_loss": result.log[-1].loss if result.log else None,
    }
    with open(out_dir / MANIFEST_NAME, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return result


def cmd_train(args) -> int:
    dataset = load_dataset(args.data)
    config = _config_from_args(args, args.dim)
    result = _run_training(dataset, config, Path(args.out), args.data)
    if result.best_epoch is not None:
        print(f"best epoch {result.best_epoch}: "
              f"valid Hit@10 {result.best_hit10:.4f}")
    print(f"checkpoint written to {Path(args.out) / CHECKPOINT_NAME}")
    return EXIT_OK


def cmd_eval(args) -> int:
    dataset = load_dataset(args.data)
    params, variant = load_checkpoint(args.checkpoint)
    if params.n_entities != dataset.n_entities \
            or params.n_relations != dataset.n_relations:
        raise DataFormatError(
            f"checkpoint was trained on {params.n_entities} entities / "
            f"{params.n_relations} relations but the dataset has "
            f"{dataset.n_entities} / {dataset.n_relations}"
        )
    filter_index = build_filter_index(dataset)
    categories = None
    if args.breakdown == "category":
        categories = {
            r: s.category for r, s in relation_stats(dataset).items()
        }
    report = evaluate(
        dataset.split(args.split), params, variant, filter_index,
        tie_policy=args.tie_policy, categories=categories,
    )
    if args.breakdown != "relation":
        report = RankingReport(
            overall=report.overall, per_relation={},
            per_category=report.per_category,
        )
    if args.format == "json":
        print(report_to_json(report, dataset.relations))
    else:
        sys.stdout.write(report_to_tsv(report, dataset.relations))
    return EXIT_OK


def cmd_classify(args) -> int:
    dataset = load_dataset(args.data)
    params, variant = load_checkpoint(args.checkpoint)
    filter_index = build_filter_index(dataset)
    stats = BernoulliStats.from_dataset(dataset)
    rng = np.random.default_rng(args.seed)

    def scored_pairs(split):
        pos = dataset.split(split)
        neg = generate_classification_negatives(pos, stats, filter_index, rng)
        triples = np.concatenate([pos, neg], axis=0)
        labels = np.concatenate([np.ones(len(pos)), -np.ones(len(neg))])
        scores = score_batch(
            triples[:, 0], triples[:, 1], triples[:, 2], params, variant
        )
        return triples, labels, scores

    v_triples, v_labels, v_scores = scored_pairs("valid")
    thresholds = learn_thresholds(v_scores, v_labels, v_triples[:, 1])
    t_triples, t_labels, t_scores = scored_pairs("test")
    pred = classify(t_scores, t_triples[:, 1], thresholds)
    v_pred = classify(v_scores, v_triples[:, 1], thresholds)
    print(json.dumps({
        "valid_accuracy": float(np.mean(v_pred == v_labels)),
        "test_accuracy": float(np.mean(pred == t_labels)),
        "n_valid": int(len(v_labels)),
        "n_test": int(len(t_labels)),
    }, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        dims = [int(d) for d in args.dims.split(",") if d.strip()]
    except ValueError:
        raise DataFormatError(f"--dims must be comma-separated integers, "
                              f"got {args.dims!r}")
    if not dims:
        raise DataFormatError("--dims is empty")
    dataset = load_dataset(args.data)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for dim in dims:
        try:
            config = _config_from_args(args, dim)
            result = _run_training(
                dataset, config, out_dir / f"dim-{dim}", args.data
            )
            if len(dataset.valid):
                filter_index = build_filter_index(dataset)
                report = evaluate(
                    dataset.valid, result.params, config.variant, filter_index
                )
                m = report.overall.both
                rows.append((dim, f"{m.mrr:.6f}", f"{m.hit10:.6f}", "ok"))
            else:
                rows.append((dim, "", "", "ok"))
        except (DataFormatError, ZeroNormError, ValueError) as exc:
            # one bad dimension must not kill the rest of the sweep
            logger.warning("dim %d failed: %s", dim, exc)
            rows.append((dim, "", "", f"error:{type(exc).__name__}"))
    sweep_path = out_dir / "sweep.tsv"
    with open(sweep_path, "w", encoding="utf-8") as fh:
        fh.write("dim\tvalid_mrr\tvalid_hit10\tstatus\n")
        for row in rows:
            fh.write("\t".join(str(x) for x in row) + "\n")
    sys.stdout.write(open(sweep_path, encoding="utf-8").read())
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except (DataFormatError, FileNotFoundError, NotADirectoryError) as exc:
        print(f"qkge: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ZeroNormError as exc:
        print(f"qkge: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
