"""Command-line entry point.

Subcommands: train, eval, ablate, coldstart, stats, synth.  Every config
key has a matching flag; precedence is preset < config file < flag.
"""

import argparse
import os
import sys

from . import corpus, pipeline, social

# (flag dest, config key); flags are the keys' CLI spelling
_CONFIG_FLAGS = [
    ("train", "data.train", "training corpus (JSON lines)"),
    ("test", "data.test", "test corpus (JSON lines)"),
    ("embeddings", "data.embeddings", "word embeddings (text layout)"),
    ("publishers", "data.publishers", "user_id<TAB>follower_count table"),
    ("edges", "data.edges", "follower edge list (follower followed)"),
    ("variant", "model.variant", "slcnn | slcnn_c | slcnn_i | full"),
    ("filters", "model.filters", "filters per convolution"),
    ("dense_width", "model.dense_width", "hidden layer width"),
    ("dropout", "model.dropout", "dropout rate"),
    ("t_s", "model.t_s", "max words per sentence"),
    ("t_d", "model.t_d", "max body sentences (0 = derive from train)"),
    ("lr", "train.lr", "Adam learning rate"),
    ("epochs", "train.epochs", "fixed epoch count (-1 = early stopping)"),
    ("max_epochs", "train.max_epochs", "early-stopping epoch cap"),
    ("patience", "train.patience", "early-stopping patience"),
    ("val_fraction", "train.val_fraction", "validation slice of train"),
    ("batch_size", "train.batch_size", "mini-batch size"),
    ("stop_at_train_acc", "train.stop_at_train_acc", "stop once train accuracy reached"),
    ("seed", "train.seed", "master RNG seed"),
    ("influence_mode", "influence.mode", "exact | follower_count"),
    ("influence_p", "influence.p", "per-level share probability"),
    ("influence_d_max", "influence.d_max", "influence depth bound (0 = none)"),
    ("fraction", "coldstart.fraction", "cold-start perturbation fraction"),
]


def _add_config_flags(parser):
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument("--preset", help="dataset preset: politifact | gossipcop")
    parser.add_argument("--out", default="run", help="run directory (default: run)")
    for dest, key, help_text in _CONFIG_FLAGS:
        flag = "--" + dest.replace("_", "-")
        parser.add_argument(flag, dest=dest, help=f"{help_text} [{key}]")


def _config_from_args(args) -> pipeline.RunConfig:
    overrides = {}
    for dest, key, _ in _CONFIG_FLAGS:
        val = getattr(args, dest)
        if val is not None:
            overrides[key] = val
    if args.preset:
        overrides["data.preset"] = args.preset
    return pipeline.load_config(path=args.config, overrides=overrides)


def _cmd_train(args):
    config = _config_from_args(args)
    result = pipeline.train(config, out_dir=args.out)
    last = result.history[-1] if result.history else None
    print(f"trained {config.variant} for {result.epochs_run} epochs")
    if last:
        print(f"final train accuracy {last['train_acc']:.4f}")
    print(f"checkpoint: {result.checkpoint_path}")
    return 0


def _cmd_eval(args):
    config = _config_from_args(args)
    checkpoint = args.checkpoint or os.path.join(args.out, "checkpoint.bin")
    report = pipeline.evaluate(config, checkpoint, out_dir=args.out)
    print("\n".join(pipeline._report_text(report)))
    return 0


def _cmd_ablate(args):
    config = _config_from_args(args)
    results = pipeline.ablate(config, out_dir=args.out)
    print(f"{'variant':>10}  accuracy      f1")
    for variant, report in results.items():
        print(f"{variant:>10}  {report.accuracy:8.4f}  {report.f1:6.4f}")
    return 0


def _cmd_coldstart(args):
    config = _config_from_args(args)
    results = pipeline.coldstart_experiment(config, out_dir=args.out)
    print(f"{'fraction':>10}  accuracy      f1")
    for fraction, report in results.items():
        print(f"{fraction:>10g}  {report.accuracy:8.4f}  {report.f1:6.4f}")
    return 0


def _cmd_stats(args):
    config = _config_from_args(args)
    if not config.train_path:
        print("stats needs --train (or data.train in the config)", file=sys.stderr)
        return 2
    articles = corpus.load_corpus(config.train_path)
    ledger = social.tally_credit(articles)
    graph = pipeline.load_graph(config)
    stats = pipeline.export_stats(articles, ledger, graph, mode=config.influence_mode)
    pipeline.write_stats(stats, args.out)
    print(f"{'feature':>14}  {'real mean':>12}  {'fake mean':>12}")
    for feat in pipeline.STAT_FEATURES:
        print(f"{feat:>14}  {stats.means['real'][feat]:12.4f}  "
              f"{stats.means['fake'][feat]:12.4f}")
    return 0


def _cmd_synth(args):
    spec = pipeline.SynthSpec(
        n_real=args.n_real,
        n_fake=args.n_fake,
        n_users=args.n_users,
        vocab_size=args.vocab_size,
        embed_dim=args.embed_dim,
        publisher_signal=args.signal,
        text_signal=args.text_signal,
    )
    data = pipeline.gen_synthetic(spec, args.seed)
    paths = pipeline.write_synthetic(data, args.out, test_fraction=args.test_fraction)
    for name in ("train", "test", "publishers", "edges", "embeddings"):
        print(f"{name}: {paths[name]}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="fakereal",
        description="Fake/real news classification from article text and publisher history")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, help_text in (
            ("train", _cmd_train, "train a model and write a checkpoint"),
            ("ablate", _cmd_ablate, "train and evaluate all four variants"),
            ("coldstart", _cmd_coldstart, "retrain at perturbation fractions 0/0.1/0.2/0.3"),
            ("stats", _cmd_stats, "per-class publisher feature statistics"),
    ):
        p = sub.add_parser(name, help=help_text)
        _add_config_flags(p)
        p.set_defaults(fn=fn)

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test corpus")
    _add_config_flags(p)
    p.add_argument("--checkpoint", help="checkpoint path (default: <out>/checkpoint.bin)")
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic corpus with controllable signal")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n-real", type=int, default=50)
    p.add_argument("--n-fake", type=int, default=50)
    p.add_argument("--n-users", type=int, default=40)
    p.add_argument("--vocab-size", type=int, default=150)
    p.add_argument("--embed-dim", type=int, default=16)
    p.add_argument("--signal", type=float, default=1.0,
                   help="publisher signal strength in [0, 1]")
    p.add_argument("--text-signal", type=float, default=0.3,
                   help="text marker signal strength in [0, 1]")
    p.add_argument("--test-fraction", type=float, default=0.5)
    p.set_defaults(fn=_cmd_synth)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (pipeline.ConfigError, corpus.CorpusError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
