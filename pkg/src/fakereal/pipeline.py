"""Training, evaluation, experiments, and run-directory plumbing.

A run is driven by a RunConfig (flat `key = value` file, every key
overridable from the CLI), trains with mini-batch Adam under per-purpose
RNG streams, and leaves behind a run directory: config.snapshot,
train.log, checkpoint.bin, report.txt, report.tsv.  Reports carry the
full config so any number can be traced back to its settings; nothing
time- or path-dependent is written, so identical (config, seed) runs
produce byte-identical reports.

Also here: the confusion-matrix metrics, the cold-start perturbation,
the ablation and cold-start experiment drivers, per-class publisher
statistics, and a synthetic corpus generator with controllable publisher
and text signal for desk-scale experiments.
"""

import os
from dataclasses import dataclass, field

import numpy as np

from . import corpus, fusion, nncore, social
from .corpus import DATASET_PRESETS, Label
from .fusion import EXPLICIT_ORDER, VARIANTS
from .seeds import rng_for

CHECKPOINT_FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# configuration


# key -> (attribute, type, default)
CONFIG_SCHEMA = {
    "data.train": ("train_path", str, ""),
    "data.test": ("test_path", str, ""),
    "data.embeddings": ("embeddings_path", str, ""),
    "data.publishers": ("publishers_path", str, ""),
    "data.edges": ("edges_path", str, ""),
    "data.preset": ("preset", str, ""),
    "model.variant": ("variant", str, "full"),
    "model.filters": ("filters", int, 8),
    "model.dense_width": ("dense_width", int, 64),
    "model.dropout": ("dropout", float, 0.5),
    "model.t_s": ("t_s", int, 46),
    "model.t_d": ("t_d", int, 0),
    "train.lr": ("lr", float, 0.001),
    "train.epochs": ("epochs", int, -1),
    "train.max_epochs": ("max_epochs", int, 200),
    "train.patience": ("patience", int, 10),
    "train.val_fraction": ("val_fraction", float, 0.1),
    "train.batch_size": ("batch_size", int, 32),
    "train.stop_at_train_acc": ("stop_at_train_acc", float, 0.0),
    "train.seed": ("seed", int, 0),
    "influence.mode": ("influence_mode", str, "follower_count"),
    "influence.p": ("influence_p", float, 0.5),
    "influence.d_max": ("influence_d_max", int, 0),
    "coldstart.fraction": ("coldstart_fraction", float, 0.0),
}

_ATTR_TO_KEY = {attr: key for key, (attr, _, _) in CONFIG_SCHEMA.items()}

# presets carry only the published dataset shape statistics
PRESET_CONFIG = {
    name: {"model.t_s": str(stats["t_s"]), "model.t_d": str(stats["t_d"])}
    for name, stats in DATASET_PRESETS.items()
}


class ConfigError(ValueError):
    pass


def _parse_value(key, raw):
    _, typ, _ = CONFIG_SCHEMA[key]
    if isinstance(raw, str):
        try:
            return typ(raw)
        except ValueError:
            raise ConfigError(f"config key {key}: cannot parse {raw!r} as {typ.__name__}") from None
    return typ(raw)


class RunConfig:
    """Typed view over the flat config keys; immutable by convention."""

    def __init__(self, values=None):
        self._values = {key: default for key, (_, _, default) in CONFIG_SCHEMA.items()}
        for key, val in (values or {}).items():
            if key not in CONFIG_SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            self._values[key] = _parse_value(key, val)
        self._validate()

    def __getattr__(self, name):
        try:
            return self._values[_ATTR_TO_KEY[name]]
        except KeyError:
            raise AttributeError(name) from None

    def _validate(self):
        v = self._values
        if v["model.variant"] not in VARIANTS:
            raise ConfigError(f"model.variant must be one of {sorted(VARIANTS)}, "
                              f"got {v['model.variant']!r}")
        if v["influence.mode"] not in ("exact", "follower_count"):
            raise ConfigError(f"influence.mode must be 'exact' or 'follower_count', "
                              f"got {v['influence.mode']!r}")
        if v["data.preset"] and v["data.preset"] not in DATASET_PRESETS:
            raise ConfigError(f"unknown preset {v['data.preset']!r}")
        if not 0.0 <= v["model.dropout"] < 1.0:
            raise ConfigError("model.dropout must be in [0, 1)")
        if not 0.0 <= v["coldstart.fraction"] <= 1.0:
            raise ConfigError("coldstart.fraction must be in [0, 1]")
        if not 0.0 <= v["train.val_fraction"] < 1.0:
            raise ConfigError("train.val_fraction must be in [0, 1)")
        if not 0.0 <= v["influence.p"] <= 1.0:
            raise ConfigError("influence.p must be in [0, 1]")
        for key in ("model.filters", "model.dense_width", "model.t_s", "train.batch_size"):
            if v[key] < 1:
                raise ConfigError(f"{key} must be >= 1")
        for key in ("model.t_d", "train.max_epochs", "train.patience",
                    "influence.d_max"):
            if v[key] < 0:
                raise ConfigError(f"{key} must be >= 0")
        if v["train.epochs"] < -1:
            raise ConfigError("train.epochs must be >= -1 (-1 selects early stopping)")
        if v["train.lr"] <= 0.0:
            raise ConfigError("train.lr must be > 0")

    def with_overrides(self, overrides) -> "RunConfig":
        merged = dict(self._values)
        for key, val in overrides.items():
            if key not in CONFIG_SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            merged[key] = _parse_value(key, val)
        return RunConfig(merged)

    def to_pairs(self):
        """Sorted (key, formatted value) pairs; the snapshot/report form."""
        out = []
        for key in sorted(self._values):
            val = self._values[key]
            out.append((key, repr(val) if isinstance(val, float) else str(val)))
        return out


def _read_config_file(path):
    pairs = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, raw = line.partition("=")
            key = key.strip()
            if key not in CONFIG_SCHEMA:
                raise ConfigError(f"{path}: line {lineno}: unknown config key {key!r}")
            pairs[key] = raw.strip()
    return pairs


def load_config(path=None, preset=None, overrides=None) -> RunConfig:
    """Assemble a RunConfig with precedence preset < file < overrides."""
    overrides = dict(overrides or {})
    file_pairs = _read_config_file(path) if path else {}
    preset_name = overrides.get("data.preset") or file_pairs.get("data.preset") or preset or ""
    merged = {}
    if preset_name:
        if preset_name not in PRESET_CONFIG:
            raise ConfigError(f"unknown preset {preset_name!r}")
        merged.update(PRESET_CONFIG[preset_name])
        merged["data.preset"] = preset_name
    merged.update(file_pairs)
    merged.update(overrides)
    return RunConfig(merged)


def write_config_snapshot(config: RunConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        for key, val in config.to_pairs():
            fh.write(f"{key} = {val}\n")


# ---------------------------------------------------------------------------
# metrics


@dataclass
class EvalReport:
    """Confusion counts and derived metrics; fake is the positive class."""
    tp: int
    fp: int
    tn: int
    fn: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    precision_undefined: bool = False
    recall_undefined: bool = False
    f1_undefined: bool = False

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn


def eval_report(y_true, y_pred) -> EvalReport:
    """Metrics from parallel 0/1 (real/fake) label arrays.

    Undefined ratios (empty denominator) are reported as 0 and flagged
    rather than raising, so degenerate predictors still get a report.
    """
    t = np.asarray(y_true, dtype=np.int64)
    p = np.asarray(y_pred, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError(f"label arrays must be parallel vectors, got {t.shape} vs {p.shape}")
    if t.size == 0:
        raise ValueError("empty test set")
    tp = int(np.sum((t == 1) & (p == 1)))
    fp = int(np.sum((t == 0) & (p == 1)))
    tn = int(np.sum((t == 0) & (p == 0)))
    fn = int(np.sum((t == 1) & (p == 0)))
    accuracy = (tp + tn) / t.size
    precision_undefined = (tp + fp) == 0
    recall_undefined = (tp + fn) == 0
    precision = 0.0 if precision_undefined else tp / (tp + fp)
    recall = 0.0 if recall_undefined else tp / (tp + fn)
    f1_undefined = (precision + recall) == 0.0
    f1 = 0.0 if f1_undefined else 2.0 * precision * recall / (precision + recall)
    return EvalReport(tp=tp, fp=fp, tn=tn, fn=fn, accuracy=accuracy,
                      precision=precision, recall=recall, f1=f1,
                      precision_undefined=precision_undefined,
                      recall_undefined=recall_undefined,
                      f1_undefined=f1_undefined)


# ---------------------------------------------------------------------------
# data preparation


@dataclass
class DataBundle:
    """Everything a training or evaluation pass needs, fully materialized."""
    thresholds: corpus.Thresholds
    embed_dim: int
    train_ids: list
    train_x: np.ndarray
    train_y: np.ndarray
    test_ids: list
    test_x: np.ndarray
    test_y: np.ndarray
    explicit_train: np.ndarray   # (n, 5) normalized, EXPLICIT_ORDER columns
    explicit_test: np.ndarray
    cold_train: np.ndarray       # bool: article had no publishers
    cold_test: np.ndarray
    scaler: social.MinMaxScaler
    ledger: social.CreditLedger
    graph: social.FollowerGraph
    train_articles: list = field(default_factory=list)
    test_articles: list = field(default_factory=list)


# credit columns inside the full explicit row; the cold-start experiment
# zeroes exactly these
_CREDIT_COLS = (EXPLICIT_ORDER.index("nct"), EXPLICIT_ORDER.index("ncf"))


def _variant_columns(variant):
    return [EXPLICIT_ORDER.index(name) for name in VARIANTS[variant]]


def _raw_explicit_rows(articles, ledger, graph, mode):
    rows = np.zeros((len(articles), 5))
    cold = np.zeros(len(articles), dtype=bool)
    for i, art in enumerate(articles):
        cv = social.raw_article_credit(art, ledger)
        iv = social.raw_article_influence(art, graph, mode)
        rows[i] = (cv.nct, cv.ncf, cv.num_p, iv.ni, iv.num_p)
        cold[i] = cv.cold
    return rows, cold


def load_graph(config) -> social.FollowerGraph:
    d_max = config.influence_d_max if config.influence_d_max > 0 else None
    if config.edges_path:
        return social.load_edge_list(config.edges_path, p=config.influence_p, d_max=d_max)
    if config.publishers_path:
        return social.load_follower_counts(config.publishers_path, p=config.influence_p,
                                           d_max=d_max)
    return social.FollowerGraph(p=config.influence_p, d_max=d_max)


def prepare_data(config: RunConfig) -> DataBundle:
    """Load corpora and side files, tensorize, and build normalized
    explicit features (min-max fitted on the training split only)."""
    if not config.train_path or not config.test_path:
        raise ConfigError("data.train and data.test must be set")
    if not config.embeddings_path:
        raise ConfigError("data.embeddings must be set")

    train_articles = corpus.load_corpus(config.train_path)
    test_articles = corpus.load_corpus(config.test_path)
    if not train_articles:
        raise ValueError("empty corpus")
    table = corpus.load_embeddings(config.embeddings_path, oov_seed=config.seed)

    train_tok = [corpus.split_article(a) for a in train_articles]
    test_tok = [corpus.split_article(a) for a in test_articles]
    if config.t_d > 0:
        th = corpus.Thresholds(t_s=config.t_s, t_d=config.t_d)
    else:
        th = corpus.compute_thresholds(train_tok, t_s_fixed=config.t_s)

    def tensorize(toks):
        if not toks:
            return np.zeros((0, th.t_d + 1, th.t_s, table.dimension))
        return np.stack([corpus.build_tensor(t, th, table).data for t in toks])

    ledger = social.tally_credit(train_articles)
    graph = load_graph(config)
    raw_train, cold_train = _raw_explicit_rows(train_articles, ledger, graph,
                                               config.influence_mode)
    raw_test, cold_test = _raw_explicit_rows(test_articles, ledger, graph,
                                             config.influence_mode)
    scaler = social.fit_minmax(raw_train)

    return DataBundle(
        thresholds=th,
        embed_dim=table.dimension,
        train_ids=[a.id for a in train_articles],
        train_x=tensorize(train_tok),
        train_y=np.array([a.label.value for a in train_articles], dtype=np.int64),
        test_ids=[a.id for a in test_articles],
        test_x=tensorize(test_tok),
        test_y=np.array([a.label.value for a in test_articles], dtype=np.int64),
        explicit_train=social.apply_minmax(scaler, raw_train),
        explicit_test=social.apply_minmax(scaler, raw_test),
        cold_train=cold_train,
        cold_test=cold_test,
        scaler=scaler,
        ledger=ledger,
        graph=graph,
        train_articles=train_articles,
        test_articles=test_articles,
    )


def cold_start_perturb(ids, features, fraction, rng, columns=_CREDIT_COLS):
    """Zero the credit columns for round(fraction*n) uniformly chosen rows.

    Returns (perturbed copy, affected ids in row order).  Other columns,
    including the publisher counts, stay untouched.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    rng = np.random.default_rng(rng)
    out = np.array(features, dtype=np.float64)
    n = len(ids)
    if out.shape[0] != n:
        raise ValueError(f"feature rows {out.shape[0]} != id count {n}")
    count = int(round(fraction * n))
    if count == 0:
        return out, []
    picked = np.sort(rng.choice(n, size=count, replace=False))
    out[np.ix_(picked, columns)] = 0.0
    return out, [ids[int(i)] for i in picked]


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainResult:
    model: fusion.Model
    bundle: DataBundle
    history: list           # per epoch: {epoch, loss, train_acc, val_acc}
    log_lines: list
    epochs_run: int
    checkpoint_path: str = ""


def _predict_all(model, x, explicit, batch_size):
    preds = []
    for start in range(0, x.shape[0], batch_size):
        sl = slice(start, start + batch_size)
        ex = explicit[sl] if explicit is not None else None
        _, p = fusion.predict_batch(model, x[sl], ex)
        preds.append(p)
    return np.concatenate(preds) if preds else np.zeros(0, dtype=np.int64)


def _variant_explicit(explicit_full, variant):
    cols = _variant_columns(variant)
    if not cols:
        return None
    return explicit_full[:, cols]


def train(config: RunConfig, out_dir=None, bundle: DataBundle = None) -> TrainResult:
    """Mini-batch Adam training of the configured variant.

    epochs >= 0 trains that exact count (0 leaves the checkpoint at its
    initialization); epochs = -1 uses early stopping on a held-out
    validation slice of the training split (patience on accuracy, best
    weights restored).  Deterministic for a fixed config: init, dropout,
    shuffling, the validation split, and the cold-start perturbation each
    draw from their own seeded stream.
    """
    if bundle is None:
        bundle = prepare_data(config)
    th = bundle.thresholds

    explicit_full, _ = cold_start_perturb(
        bundle.train_ids, bundle.explicit_train, config.coldstart_fraction,
        rng_for(config.seed, "perturb_train"))
    explicit = _variant_explicit(explicit_full, config.variant)

    model = fusion.init_model(config.variant, th.t_s, th.t_d, bundle.embed_dim,
                              rng_for(config.seed, "init"), k=config.filters,
                              dense_width=config.dense_width,
                              dropout_rate=config.dropout)
    tensors = model.param_tensors()
    state = nncore.AdamState([t.data for t in tensors], lr=config.lr)
    rng_shuffle = rng_for(config.seed, "shuffle")
    rng_dropout = rng_for(config.seed, "dropout")

    n = bundle.train_x.shape[0]
    y = bundle.train_y
    early_stopping = config.epochs < 0
    if early_stopping:
        if n < 2:
            raise ValueError("early stopping needs at least 2 training articles")
        val_count = max(1, int(round(config.val_fraction * n)))
        if val_count >= n:
            raise ValueError("training split too small for validation")
        perm = rng_for(config.seed, "valsplit").permutation(n)
        val_idx, fit_idx = perm[:val_count], perm[val_count:]
        max_epochs = config.max_epochs
    else:
        val_idx, fit_idx = np.zeros(0, dtype=np.int64), np.arange(n)
        max_epochs = config.epochs

    def slice_ex(idx):
        return explicit[idx] if explicit is not None else None

    history = []
    log_lines = [f"variant {config.variant} articles {n} "
                 f"(fit {len(fit_idx)} val {len(val_idx)}) seed {config.seed}"]
    best_val, best_epoch, best_params = -1.0, 0, None
    epochs_run = 0
    stop_reason = "max epochs reached" if max_epochs > 0 else "no epochs requested"

    for epoch in range(1, max_epochs + 1):
        epochs_run = epoch
        order = fit_idx[rng_shuffle.permutation(len(fit_idx))]
        loss_sum = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            nncore.zero_grads(tensors)
            _, loss = fusion.loss_batch(model, bundle.train_x[idx], slice_ex(idx),
                                        y[idx], "train", rng_dropout)
            loss.backward()
            grads = [t.grad if t.grad is not None else np.zeros_like(t.data)
                     for t in tensors]
            nncore.adam_step([t.data for t in tensors], grads, state)
            loss_sum += float(loss.data) * len(idx)
        epoch_loss = loss_sum / len(order)

        train_acc = float(np.mean(
            _predict_all(model, bundle.train_x[fit_idx], slice_ex(fit_idx),
                         config.batch_size) == y[fit_idx]))
        entry = {"epoch": epoch, "loss": epoch_loss, "train_acc": train_acc, "val_acc": None}
        line = f"epoch {epoch:4d} loss {epoch_loss:.6f} train_acc {train_acc:.4f}"
        if early_stopping:
            val_acc = float(np.mean(
                _predict_all(model, bundle.train_x[val_idx], slice_ex(val_idx),
                             config.batch_size) == y[val_idx]))
            entry["val_acc"] = val_acc
            line += f" val_acc {val_acc:.4f}"
            if val_acc > best_val:
                best_val, best_epoch = val_acc, epoch
                best_params = [t.data.copy() for t in tensors]
            elif epoch - best_epoch >= config.patience:
                history.append(entry)
                log_lines.append(line)
                stop_reason = f"no val improvement for {config.patience} epochs"
                break
        history.append(entry)
        log_lines.append(line)
        if config.stop_at_train_acc > 0.0 and train_acc >= config.stop_at_train_acc:
            stop_reason = f"train accuracy reached {config.stop_at_train_acc!r}"
            break

    if early_stopping and best_params is not None:
        for t, saved in zip(tensors, best_params):
            t.data[...] = saved
        log_lines.append(f"stopped: {stop_reason}; restored epoch {best_epoch} "
                         f"(val_acc {best_val:.4f})")
    else:
        log_lines.append(f"stopped: {stop_reason}")

    result = TrainResult(model=model, bundle=bundle, history=history,
                         log_lines=log_lines, epochs_run=epochs_run)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_config_snapshot(config, os.path.join(out_dir, "config.snapshot"))
        with open(os.path.join(out_dir, "train.log"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(log_lines) + "\n")
        result.checkpoint_path = os.path.join(out_dir, "checkpoint.bin")
        save_model(result.checkpoint_path, model, bundle, config)
    return result


def save_model(path, model: fusion.Model, bundle: DataBundle, config: RunConfig):
    arrays = {name: t.data for name, t in model.parameters().items()}
    meta = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "variant": model.variant,
        "t_s": bundle.thresholds.t_s,
        "t_d": bundle.thresholds.t_d,
        "embed_dim": bundle.embed_dim,
        "k": model.k,
        "dense_width": config.dense_width,
        "dropout": model.dropout_rate,
        "seed": config.seed,
        "scaler_mins": bundle.scaler.mins.tolist(),
        "scaler_maxs": bundle.scaler.maxs.tolist(),
    }
    nncore.save_checkpoint(path, arrays, meta)


def load_model(path):
    """Rebuild a model from a checkpoint; returns (model, meta)."""
    arrays, meta = nncore.load_checkpoint(path)
    if meta.get("format_version") != CHECKPOINT_FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint version {meta.get('format_version')!r}")
    model = fusion.init_model(meta["variant"], meta["t_s"], meta["t_d"],
                              meta["embed_dim"], np.random.default_rng(0),
                              k=meta["k"], dense_width=meta["dense_width"],
                              dropout_rate=meta["dropout"])
    params = model.parameters()
    if set(params) != set(arrays):
        raise ValueError("checkpoint parameters do not match the model layout")
    for name, t in params.items():
        if arrays[name].shape != t.data.shape:
            raise ValueError(f"checkpoint array {name} has shape {arrays[name].shape}, "
                             f"expected {t.data.shape}")
        t.data[...] = arrays[name]
    return model, meta


# ---------------------------------------------------------------------------
# evaluation


def evaluate_model(model: fusion.Model, bundle: DataBundle, config: RunConfig) -> EvalReport:
    """Test-set metrics, applying the configured cold-start fraction to
    the test features (its own RNG stream, independent of training)."""
    if bundle.test_x.shape[0] == 0:
        raise ValueError("empty test set")
    explicit_full, _ = cold_start_perturb(
        bundle.test_ids, bundle.explicit_test, config.coldstart_fraction,
        rng_for(config.seed, "perturb_test"))
    explicit = _variant_explicit(explicit_full, config.variant)
    preds = _predict_all(model, bundle.test_x, explicit, config.batch_size)
    return eval_report(bundle.test_y, preds)


def evaluate(config: RunConfig, checkpoint_path, out_dir=None) -> EvalReport:
    """Evaluate a stored checkpoint against the configured test data."""
    bundle = prepare_data(config)
    model, meta = load_model(checkpoint_path)
    if meta["variant"] != config.variant:
        raise ValueError(f"checkpoint is for variant {meta['variant']!r}, "
                         f"config says {config.variant!r}")
    if (meta["t_s"], meta["t_d"]) != (bundle.thresholds.t_s, bundle.thresholds.t_d):
        raise ValueError("checkpoint thresholds do not match the prepared data")
    if meta["embed_dim"] != bundle.embed_dim:
        raise ValueError("checkpoint embedding dimension does not match")
    if (not np.array_equal(np.array(meta["scaler_mins"]), bundle.scaler.mins)
            or not np.array_equal(np.array(meta["scaler_maxs"]), bundle.scaler.maxs)):
        raise ValueError("checkpoint was trained against different training data "
                         "(normalization ranges differ)")
    report = evaluate_model(model, bundle, config)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_report_files(out_dir, config, report)
    return report


def _report_rows(report: EvalReport):
    return [
        ("count.tp", str(report.tp)),
        ("count.fp", str(report.fp)),
        ("count.tn", str(report.tn)),
        ("count.fn", str(report.fn)),
        ("metric.accuracy", repr(report.accuracy)),
        ("metric.precision", repr(report.precision)),
        ("metric.recall", repr(report.recall)),
        ("metric.f1", repr(report.f1)),
        ("flag.precision_undefined", str(int(report.precision_undefined))),
        ("flag.recall_undefined", str(int(report.recall_undefined))),
        ("flag.f1_undefined", str(int(report.f1_undefined))),
    ]


def _report_text(report: EvalReport):
    lines = [
        f"test articles: {report.total}",
        f"confusion (fake = positive): tp={report.tp} fp={report.fp} "
        f"tn={report.tn} fn={report.fn}",
        f"accuracy:  {report.accuracy:.4f}",
        f"precision: {report.precision:.4f}",
        f"recall:    {report.recall:.4f}",
        f"f1:        {report.f1:.4f}",
    ]
    for name, flagged in (("precision", report.precision_undefined),
                          ("recall", report.recall_undefined),
                          ("f1", report.f1_undefined)):
        if flagged:
            lines.append(f"note: {name} undefined (empty denominator), reported as 0")
    return lines


def write_report_files(out_dir, config: RunConfig, report: EvalReport):
    with open(os.path.join(out_dir, "report.tsv"), "w", encoding="utf-8") as fh:
        for key, val in config.to_pairs():
            fh.write(f"config.{key}\t{val}\n")
        for key, val in _report_rows(report):
            fh.write(f"{key}\t{val}\n")
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write("\n".join(_report_text(report)) + "\n")


# ---------------------------------------------------------------------------
# experiments


ABLATION_VARIANTS = ("slcnn", "slcnn_c", "slcnn_i", "full")


def ablate(config: RunConfig, out_dir=None) -> dict:
    """Train and evaluate all four variants on one prepared dataset
    (tokenized once); returns variant -> EvalReport."""
    bundle = prepare_data(config)
    results = {}
    for variant in ABLATION_VARIANTS:
        cfg = config.with_overrides({"model.variant": variant})
        sub = os.path.join(out_dir, variant) if out_dir else None
        res = train(cfg, out_dir=sub, bundle=bundle)
        report = evaluate_model(res.model, bundle, cfg)
        if sub:
            write_report_files(sub, cfg, report)
        results[variant] = report
    if out_dir:
        _write_grid_report(out_dir, config, results,
                           ("variant", list(ABLATION_VARIANTS)))
    return results


COLDSTART_FRACTIONS = (0.0, 0.1, 0.2, 0.3)


def coldstart_experiment(config: RunConfig, out_dir=None, fractions=COLDSTART_FRACTIONS) -> dict:
    """Retrain the configured variant at each perturbation level (the
    perturbation hits train and test features); returns fraction -> report."""
    bundle = prepare_data(config)
    results = {}
    for fraction in fractions:
        cfg = config.with_overrides({"coldstart.fraction": fraction})
        sub = os.path.join(out_dir, f"frac_{fraction:g}") if out_dir else None
        res = train(cfg, out_dir=sub, bundle=bundle)
        report = evaluate_model(res.model, bundle, cfg)
        if sub:
            write_report_files(sub, cfg, report)
        results[fraction] = report
    if out_dir:
        _write_grid_report(out_dir, config, results,
                           ("fraction", [f"{f:g}" for f in fractions]))
    return results


def _write_grid_report(out_dir, config, results, axis):
    axis_name, axis_values = axis
    keys = list(results)
    with open(os.path.join(out_dir, "report.tsv"), "w", encoding="utf-8") as fh:
        for key, val in config.to_pairs():
            fh.write(f"config.{key}\t{val}\n")
        for label, key in zip(axis_values, keys):
            for row_key, val in _report_rows(results[key]):
                fh.write(f"{axis_name}.{label}\t{row_key}\t{val}\n")
    with open(os.path.join(out_dir, "report.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"{axis_name:>10}  accuracy  precision  recall      f1\n")
        for label, key in zip(axis_values, keys):
            r = results[key]
            fh.write(f"{label:>10}  {r.accuracy:8.4f}  {r.precision:9.4f}  "
                     f"{r.recall:6.4f}  {r.f1:6.4f}\n")


# ---------------------------------------------------------------------------
# publisher statistics


STAT_FEATURES = ("nct", "ncf", "ncf_over_nct", "ni", "num_p")


@dataclass
class PublisherStats:
    """Per-class means of the raw (pre-normalization) publisher features."""
    means: dict   # class name -> {feature -> mean}


def export_stats(articles, ledger: social.CreditLedger, graph: social.FollowerGraph,
                 mode="follower_count") -> PublisherStats:
    per_class = {"real": [], "fake": []}
    for art in articles:
        cv = social.raw_article_credit(art, ledger)
        iv = social.raw_article_influence(art, graph, mode)
        ratio = cv.ncf / cv.nct if cv.nct > 0 else 0.0
        per_class["fake" if art.label is Label.FAKE else "real"].append(
            (cv.nct, cv.ncf, ratio, iv.ni, cv.num_p))
    means = {}
    for cls, rows in per_class.items():
        if rows:
            arr = np.array(rows)
            means[cls] = {feat: float(arr[:, i].mean()) for i, feat in enumerate(STAT_FEATURES)}
        else:
            means[cls] = {feat: 0.0 for feat in STAT_FEATURES}
    return PublisherStats(means=means)


def write_stats(stats: PublisherStats, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "stats.tsv"), "w", encoding="utf-8") as fh:
        for cls in ("real", "fake"):
            for feat in STAT_FEATURES:
                fh.write(f"{cls}\t{feat}\t{repr(stats.means[cls][feat])}\n")
    with open(os.path.join(out_dir, "stats.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"{'feature':>14}  {'real mean':>12}  {'fake mean':>12}\n")
        for feat in STAT_FEATURES:
            fh.write(f"{feat:>14}  {stats.means['real'][feat]:12.4f}  "
                     f"{stats.means['fake'][feat]:12.4f}\n")


# ---------------------------------------------------------------------------
# synthetic corpus


@dataclass
class SynthSpec:
    """Knobs for the synthetic corpus.

    publisher_signal s: a publisher comes from the article's own class
    pool with probability (1+s)/2, so 0 makes publishers uninformative
    and 1 makes them fully determine the label.  text_signal works the
    same way on marker words, which replace filler words at marker_rate.
    """
    n_real: int = 50
    n_fake: int = 50
    n_users: int = 40
    vocab_size: int = 150
    n_markers: int = 8
    embed_dim: int = 16
    publisher_signal: float = 1.0
    text_signal: float = 0.3
    marker_rate: float = 0.25
    sents_min: int = 3
    sents_max: int = 6
    words_min: int = 5
    words_max: int = 9
    pubs_min: int = 1
    pubs_max: int = 3
    followers_real: tuple = (10, 30)
    followers_fake: tuple = (0, 8)


@dataclass
class SynthData:
    articles: list
    follower_counts: dict
    edges: list
    embeddings: dict
    real_pool: list
    fake_pool: list


def _check_synth_spec(spec: SynthSpec):
    if spec.n_real < 0 or spec.n_fake < 0 or spec.n_real + spec.n_fake < 1:
        raise ValueError("class sizes must be non-negative and sum to >= 1")
    for name in ("publisher_signal", "text_signal", "marker_rate"):
        val = getattr(spec, name)
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {val}")
    if spec.n_users < 2 or spec.n_users % 2 != 0:
        raise ValueError("n_users must be an even number >= 2")
    if spec.vocab_size < 1 or spec.n_markers < 1 or spec.embed_dim < 1:
        raise ValueError("vocab_size, n_markers, and embed_dim must be >= 1")
    for lo, hi, name in ((spec.sents_min, spec.sents_max, "sents"),
                         (spec.words_min, spec.words_max, "words"),
                         (spec.pubs_min, spec.pubs_max, "pubs"),
                         (spec.followers_real[0], spec.followers_real[1], "followers_real"),
                         (spec.followers_fake[0], spec.followers_fake[1], "followers_fake")):
        if lo < 0 or hi < lo:
            raise ValueError(f"{name} range must satisfy 0 <= min <= max")
    if spec.words_min < 1 or spec.sents_min < 1:
        raise ValueError("articles need at least one word per sentence and one sentence")
    if spec.pubs_max > spec.n_users // 2:
        raise ValueError("pubs_max cannot exceed the per-class user pool size")


def gen_synthetic(spec: SynthSpec, seed: int) -> SynthData:
    """Desk-scale corpus with controllable label signal.

    Users split into a real-leaning and a fake-leaning pool; publisher
    choice leaks the label at strength publisher_signal, marker words at
    text_signal.  Real-pool users get follower counts from the higher
    range, so influence features separate classes exactly as the credit
    ones do.  Also emits embeddings covering the whole vocabulary.
    """
    _check_synth_spec(spec)
    rng = rng_for(seed, "synth")

    users = [f"u{i:04d}" for i in range(spec.n_users)]
    half = spec.n_users // 2
    real_pool, fake_pool = users[:half], users[half:]

    counts = {}
    for pool, (lo, hi) in ((real_pool, spec.followers_real), (fake_pool, spec.followers_fake)):
        for u in pool:
            counts[u] = min(int(rng.integers(lo, hi + 1)), spec.n_users - 1)
    edges = []
    for u in users:
        others = [v for v in users if v != u]
        for follower in rng.choice(others, size=counts[u], replace=False):
            edges.append((str(follower), u))

    fillers = [f"w{i:04d}" for i in range(spec.vocab_size)]
    markers = {
        Label.REAL: [f"realmark{i}" for i in range(spec.n_markers)],
        Label.FAKE: [f"fakemark{i}" for i in range(spec.n_markers)],
    }
    embeddings = {}
    for word in fillers + markers[Label.REAL] + markers[Label.FAKE]:
        embeddings[word] = rng.uniform(-0.5, 0.5, spec.embed_dim)

    def sentence(label):
        own_p = (1.0 + spec.text_signal) / 2.0
        words = []
        for _ in range(int(rng.integers(spec.words_min, spec.words_max + 1))):
            if rng.random() < spec.marker_rate:
                cls = label if rng.random() < own_p else _other(label)
                pool = markers[cls]
                words.append(pool[int(rng.integers(len(pool)))])
            else:
                words.append(fillers[int(rng.integers(len(fillers)))])
        return " ".join(words)

    def publishers(label):
        own_p = (1.0 + spec.publisher_signal) / 2.0
        own = real_pool if label is Label.REAL else fake_pool
        other = fake_pool if label is Label.REAL else real_pool
        want = int(rng.integers(spec.pubs_min, spec.pubs_max + 1))
        chosen = []
        attempts = 0
        while len(chosen) < want and attempts < 100 * (want + 1):
            pool = own if rng.random() < own_p else other
            pick = pool[int(rng.integers(len(pool)))]
            if pick not in chosen:
                chosen.append(pick)
            attempts += 1
        return chosen

    labels = []
    remaining = {Label.REAL: spec.n_real, Label.FAKE: spec.n_fake}
    while remaining[Label.REAL] or remaining[Label.FAKE]:
        for lab in (Label.REAL, Label.FAKE):
            if remaining[lab]:
                labels.append(lab)
                remaining[lab] -= 1

    articles = []
    for i, label in enumerate(labels):
        body = ". ".join(sentence(label)
                         for _ in range(int(rng.integers(spec.sents_min, spec.sents_max + 1))))
        articles.append(corpus.NewsArticle(
            id=f"a{i:04d}",
            headline=sentence(label),
            body=body + ".",
            label=label,
            publisher_ids=publishers(label),
        ))
    return SynthData(articles=articles, follower_counts=counts, edges=edges,
                     embeddings=embeddings, real_pool=real_pool, fake_pool=fake_pool)


def _other(label):
    return Label.FAKE if label is Label.REAL else Label.REAL


def split_corpus(articles, test_fraction):
    """Stratified deterministic split; the leading slice of each class
    becomes the test set (article order is already i.i.d.)."""
    if not 0.0 <= test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in [0, 1), got {test_fraction}")
    reals = [a for a in articles if a.label is Label.REAL]
    fakes = [a for a in articles if a.label is Label.FAKE]
    n_r = int(round(test_fraction * len(reals)))
    n_f = int(round(test_fraction * len(fakes)))
    test = sorted(reals[:n_r] + fakes[:n_f], key=lambda a: a.id)
    train = sorted(reals[n_r:] + fakes[n_f:], key=lambda a: a.id)
    return train, test


def write_synthetic(data: SynthData, out_dir, test_fraction=0.5) -> dict:
    """Write the full file layout a run needs; returns the path map."""
    os.makedirs(out_dir, exist_ok=True)
    train, test = split_corpus(data.articles, test_fraction)
    paths = {
        "train": os.path.join(out_dir, "train.jsonl"),
        "test": os.path.join(out_dir, "test.jsonl"),
        "publishers": os.path.join(out_dir, "publishers.tsv"),
        "edges": os.path.join(out_dir, "edges.txt"),
        "embeddings": os.path.join(out_dir, "embeddings.txt"),
    }
    corpus.write_corpus(train, paths["train"])
    corpus.write_corpus(test, paths["test"])
    with open(paths["publishers"], "w", encoding="utf-8") as fh:
        for user in sorted(data.follower_counts):
            fh.write(f"{user}\t{data.follower_counts[user]}\n")
    with open(paths["edges"], "w", encoding="utf-8") as fh:
        for follower, followed in data.edges:
            fh.write(f"{follower} {followed}\n")
    corpus.write_embeddings(data.embeddings, paths["embeddings"])
    return paths


def synth_config(paths, overrides=None) -> RunConfig:
    """RunConfig pointing at a write_synthetic() layout."""
    base = {
        "data.train": paths["train"],
        "data.test": paths["test"],
        "data.embeddings": paths["embeddings"],
        "data.publishers": paths["publishers"],
        "model.t_s": "10",
    }
    base.update(overrides or {})
    return RunConfig(base)
