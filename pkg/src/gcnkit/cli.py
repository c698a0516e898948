"""Experiment command line.

``gcnkit run`` trains one of the four model variants on a dataset directory
over a list of seeds and prints a result table (tsv or markdown) to stdout
or --out; per-epoch training logs go to stderr. ``gcnkit sbm`` writes a
synthetic stochastic-block-model dataset directory for smoke tests.

Exit codes: 0 success, 1 runtime failure (including training divergence),
2 usage error.
"""

import argparse
import sys
from dataclasses import dataclass

from .data import generate_sbm, load_dataset, save_dataset
from .errors import GcnkitError, TrainingDiverged
from .model import LossConfig
from .training import TrainConfig, build_operators, run_repeated

MODELS = ("gcn", "pgcn", "rgcn", "prgcn")
DEFAULT_WEIGHT_DECAY = 5e-4
DEFAULT_REG_WEIGHT = 1e-3


@dataclass(frozen=True)
class ResultRow:
    model_label: str
    dataset: str
    mean_accuracy: float  # percent
    std_accuracy: float   # percent
    mean_epochs: float
    n_runs: int


def parse_seeds(text):
    """Accept 'a..b' (inclusive), a comma list, or a single integer."""
    text = text.strip()
    if ".." in text:
        lo_s, hi_s = text.split("..", 1)
        lo, hi = int(lo_s), int(hi_s)
        if hi < lo:
            raise ValueError(f"empty seed range {text!r}")
        return list(range(lo, hi + 1))
    if "," in text:
        return [int(part) for part in text.split(",") if part.strip()]
    return [int(text)]


def parse_k_list(text):
    ks = sorted(int(part) for part in str(text).split(",") if part.strip())
    if not ks or any(k < 1 for k in ks):
        raise ValueError(f"invalid k list {text!r}")
    return ks


def model_label(model, k=None):
    base = model.upper()
    return f"{base} ({k})" if model in ("pgcn", "prgcn") else base


def build_train_config(args, model, k, seed):
    if model in ("pgcn", "prgcn"):
        propagator_kind = "transition"
    else:
        propagator_kind = "normalized_adjacency"
    if model == "rgcn":
        reg_kind = "laplacian"
    elif model == "prgcn":
        reg_kind = "transition"
    else:
        reg_kind = "none"
    min_epochs = args.min_epochs
    if min_epochs is None:
        min_epochs = 1500 if model in ("rgcn", "prgcn") else 30
    loss = LossConfig(
        weight_decay_lambda=args.weight_decay,
        graph_reg_weight=args.reg_weight if reg_kind != "none" else 0.0,
        graph_reg_kind=reg_kind,
        graph_reg_k=k if reg_kind == "transition" else None,
    )
    return TrainConfig(
        learning_rate=args.learning_rate,
        max_epochs=args.max_epochs,
        min_epochs_before_stop=min_epochs,
        patience=args.patience,
        seed=seed,
        hidden_dim=args.hidden_dim,
        dropout_rate=args.dropout,
        loss=loss,
        propagator_kind=propagator_kind,
        k=k,
        n_walks=args.n_walks,
        prune_threshold=args.prune,
    )


def run_experiment(args, dataset, operators=None, log=None):
    """Train every requested (model, k) combination; returns ResultRows."""
    if operators is None:
        operators = build_operators(dataset.adjacency)
    ks = args.k if args.model in ("pgcn", "prgcn") else [None]
    rows = []
    for k in ks:
        config = build_train_config(args, args.model, k, args.seeds[0])
        result = _run_seeds(config, dataset, args.seeds, operators, log)
        rows.append(ResultRow(
            model_label=model_label(args.model, k),
            dataset=dataset.name,
            mean_accuracy=100.0 * result.mean_accuracy,
            std_accuracy=100.0 * result.std_accuracy,
            mean_epochs=result.mean_epochs,
            n_runs=result.n_runs,
        ))
    return rows


def _run_seeds(config, dataset, seeds, operators, log):
    # Contiguous seed lists run through run_repeated; arbitrary lists loop.
    if seeds == list(range(seeds[0], seeds[0] + len(seeds))):
        return run_repeated(config, dataset, len(seeds), seeds[0],
                            operators=operators, log=log)
    from dataclasses import replace

    from .training import RepeatedResult, train
    import numpy as np

    runs = tuple(
        train(replace(config, seed=s), dataset, operators=operators, log=log)
        for s in seeds
    )
    accs = np.array([r.test_accuracy for r in runs])
    epochs = np.array([r.epochs_run for r in runs], dtype=np.float64)
    return RepeatedResult(runs=runs, mean_accuracy=float(accs.mean()),
                          std_accuracy=float(accs.std()),
                          mean_epochs=float(epochs.mean()))


HEADER = ("model", "dataset", "accuracy", "std", "epochs", "runs")


def render_table(rows, fmt="tsv"):
    """Stable column order; accuracy and std carry one decimal place."""
    body = [
        (
            row.model_label,
            row.dataset,
            f"{row.mean_accuracy:.1f}",
            f"{row.std_accuracy:.1f}",
            f"{row.mean_epochs:.1f}",
            str(row.n_runs),
        )
        for row in rows
    ]
    if fmt == "tsv":
        lines = ["\t".join(HEADER)] + ["\t".join(cells) for cells in body]
        return "\n".join(lines) + "\n"
    if fmt == "markdown":
        lines = [
            "| " + " | ".join(HEADER) + " |",
            "|" + "|".join(" --- " for _ in HEADER) + "|",
        ]
        lines += ["| " + " | ".join(cells) + " |" for cells in body]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


def _add_run_parser(subparsers):
    p = subparsers.add_parser("run", help="train a model variant and print a result table")
    p.add_argument("--dataset", required=True, help="dataset directory")
    p.add_argument("--model", required=True, choices=MODELS)
    p.add_argument("--k", help="transition order(s), e.g. 2 or 1,2,3 (pgcn/prgcn)")
    p.add_argument("--n-walks", type=int, default=10000, dest="n_walks")
    p.add_argument("--prune", type=float, default=0.0,
                   help="drop estimated transition entries below this probability")
    p.add_argument("--reg-weight", type=float, dest="reg_weight",
                   help="graph regularizer weight (rgcn/prgcn)")
    p.add_argument("--seeds", default="0..9", help="'a..b', comma list, or single seed")
    p.add_argument("--format", choices=("tsv", "markdown"), default="tsv")
    p.add_argument("--out", help="write the table here instead of stdout")
    p.add_argument("--max-epochs", type=int, default=5000, dest="max_epochs")
    p.add_argument("--min-epochs", type=int, default=None, dest="min_epochs",
                   help="minimum epochs before early stopping (default 30, 1500 for rgcn/prgcn)")
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--learning-rate", type=float, default=0.01, dest="learning_rate")
    p.add_argument("--hidden-dim", type=int, default=16, dest="hidden_dim")
    p.add_argument("--dropout", type=float, default=0.5)
    p.add_argument("--weight-decay", type=float, default=DEFAULT_WEIGHT_DECAY,
                   dest="weight_decay")
    p.add_argument("--quiet", action="store_true", help="suppress per-epoch logs")
    return p


def _add_sbm_parser(subparsers):
    p = subparsers.add_parser("sbm", help="write a synthetic SBM dataset directory")
    p.add_argument("--out", required=True)
    p.add_argument("--per-block", type=int, default=50, dest="per_block")
    p.add_argument("--blocks", type=int, default=2)
    p.add_argument("--p-in", type=float, default=0.1, dest="p_in")
    p.add_argument("--p-out", type=float, default=0.01, dest="p_out")
    p.add_argument("--feature-noise", type=float, default=0.5, dest="feature_noise")
    p.add_argument("--seed", type=int, default=7)
    return p


def build_parser():
    parser = argparse.ArgumentParser(prog="gcnkit", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    subparsers = parser.add_subparsers(dest="command", required=True)
    _add_run_parser(subparsers)
    _add_sbm_parser(subparsers)
    return parser


def _validate_run_args(parser, args):
    if args.model in ("pgcn", "prgcn"):
        if args.k is None:
            parser.error(f"--k is required for model {args.model}")
        try:
            args.k = parse_k_list(args.k)
        except ValueError as exc:
            parser.error(str(exc))
    elif args.k is not None:
        parser.error(f"--k is only valid for pgcn/prgcn, not {args.model}")
    if args.model in ("rgcn", "prgcn"):
        if args.reg_weight is None:
            parser.error(f"--reg-weight is required for model {args.model}")
    elif args.reg_weight is not None:
        parser.error(f"--reg-weight is only valid for rgcn/prgcn, not {args.model}")
    if args.reg_weight is None:
        args.reg_weight = DEFAULT_REG_WEIGHT
    try:
        args.seeds = parse_seeds(args.seeds)
    except ValueError as exc:
        parser.error(f"bad --seeds value: {exc}")
    if not (0.0 <= args.prune < 1.0):
        parser.error("--prune must be in [0, 1)")


def _epoch_logger(stream):
    def log(record):
        stream.write(
            f"epoch={record.epoch}\tce={record.cross_entropy:.6f}"
            f"\twd={record.weight_decay:.6f}\treg={record.graph_reg:.6f}"
            f"\ttotal={record.train_loss:.6f}\tval_loss={record.val_loss:.6f}"
            f"\tval_acc={record.val_accuracy:.4f}\n"
        )
    return log


def _cmd_run(args):
    dataset = load_dataset(args.dataset)
    log = None if args.quiet else _epoch_logger(sys.stderr)
    rows = run_experiment(args, dataset, log=log)
    table = render_table(rows, args.format)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(table)
    else:
        sys.stdout.write(table)
    return 0


def _cmd_sbm(args):
    dataset = generate_sbm(args.per_block, args.blocks, args.p_in, args.p_out,
                           args.feature_noise, args.seed)
    save_dataset(dataset, args.out)
    sys.stdout.write(f"wrote {dataset.num_nodes}-node SBM dataset to {args.out}\n")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            _validate_run_args(parser, args)
            return _cmd_run(args)
        return _cmd_sbm(args)
    except TrainingDiverged as exc:
        sys.stderr.write(f"error: training diverged: {exc}\n")
        return 1
    except (GcnkitError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
