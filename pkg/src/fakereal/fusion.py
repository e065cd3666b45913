"""Feature integration and classification head.

The integrator appends the article's explicit publisher features (credit
and influence vectors) to every row of the latent matrix, then reduces
each widened row back to k values with its own HCB stack, treating the
row as depth-1 input.  The head flattens the matrix row-major and applies
dense(64)+ReLU, dropout, dense(64)+ReLU, dropout, dense(2), softmax.

Variants select which explicit features exist:
  slcnn    - none; the integrator is skipped entirely
  slcnn_c  - credit only (nct, ncf, num_p)
  slcnn_i  - influence only (ni, num_p)
  full     - all five
num_p rides along in both source vectors, so the full row width is k+5.
"""

from dataclasses import dataclass

import numpy as np

from . import nncore
from .corpus import Label
from .nncore import Tensor
from .slcnn import SlcnnModel, init_hcb_stack, init_slcnn, required_hcbs, slcnn_apply, stack_apply

EXPLICIT_ORDER = ("nct", "ncf", "num_p_credit", "ni", "num_p_influence")

VARIANTS = {
    "slcnn": (),
    "slcnn_c": ("nct", "ncf", "num_p_credit"),
    "slcnn_i": ("ni", "num_p_influence"),
    "full": EXPLICIT_ORDER,
}


def credit_columns(variant: str):
    """Indices of the nct/ncf columns inside the variant's explicit row
    (the columns the cold-start perturbation zeroes)."""
    names = VARIANTS[variant]
    return tuple(i for i, name in enumerate(names) if name in ("nct", "ncf"))


def explicit_row(credit, influence, variant: str) -> np.ndarray:
    """The explicit feature values a variant appends, in column order."""
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    pool = {
        "nct": credit.nct if credit else 0.0,
        "ncf": credit.ncf if credit else 0.0,
        "num_p_credit": credit.num_p if credit else 0.0,
        "ni": influence.ni if influence else 0.0,
        "num_p_influence": influence.num_p if influence else 0.0,
    }
    return np.array([pool[name] for name in VARIANTS[variant]], dtype=np.float64)


def integrate(latent, credit, influence) -> np.ndarray:
    """Append the 5 explicit features to every latent row: (rows, k) ->
    (rows, k+5).  The suffix is identical down the matrix by construction."""
    lat = np.asarray(latent, dtype=np.float64)
    if lat.ndim != 2:
        raise ValueError(f"latent must be (rows, k), got shape {lat.shape}")
    ex = explicit_row(credit, influence, "full")
    return np.concatenate([lat, np.tile(ex, (lat.shape[0], 1))], axis=1)


def integrate_batch(latent: Tensor, explicit: np.ndarray) -> Tensor:
    """Graph form: latent (B, R, k) + explicit (B, m) -> (B, R, k+m)."""
    b, rows, _ = latent.data.shape
    if explicit.shape[0] != b:
        raise ValueError(f"explicit batch {explicit.shape[0]} != latent batch {b}")
    tiled = np.repeat(explicit[:, None, :], rows, axis=1)
    return nncore.concat(latent, Tensor(tiled), axis=2)


def integrator_apply(blocks: list, x: Tensor) -> Tensor:
    """Reduce integrated rows back to k-vectors: (B, R, W) -> (B, R, k).
    The widened row is treated as depth-1 input to a fresh HCB stack."""
    b, rows, width = x.data.shape
    return stack_apply(blocks, nncore.reshape(x, (b, rows, width, 1)))


def integrator_reduce(x, blocks: list) -> np.ndarray:
    """Plain-array form for one article: (rows, width) -> (rows, k)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"input must be (rows, width), got shape {arr.shape}")
    out = integrator_apply(blocks, Tensor(arr[None, :, :]))
    return out.data[0]


@dataclass
class ClassifierHead:
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    w3: Tensor
    b3: Tensor

    def tensors(self):
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]


def init_head(in_dim: int, hidden: int, rng) -> ClassifierHead:
    def he(shape, fan_in):
        return rng.uniform(-np.sqrt(6.0 / fan_in), np.sqrt(6.0 / fan_in), shape)

    return ClassifierHead(
        w1=Tensor(he((in_dim, hidden), in_dim), requires_grad=True),
        b1=Tensor(np.zeros(hidden), requires_grad=True),
        w2=Tensor(he((hidden, hidden), hidden), requires_grad=True),
        b2=Tensor(np.zeros(hidden), requires_grad=True),
        w3=Tensor(he((hidden, 2), hidden), requires_grad=True),
        b3=Tensor(np.zeros(2), requires_grad=True),
    )


def head_apply(head: ClassifierHead, flat: Tensor, dropout_rate: float,
               mode: str, rng=None) -> Tensor:
    """(B, in_dim) flattened features -> (B, 2) logits."""
    h = nncore.relu(nncore.linear(flat, head.w1, head.b1))
    h = nncore.dropout_t(h, dropout_rate, mode, rng)
    h = nncore.relu(nncore.linear(h, head.w2, head.b2))
    h = nncore.dropout_t(h, dropout_rate, mode, rng)
    return nncore.linear(h, head.w3, head.b3)


def classify(head: ClassifierHead, features, mode: str = "eval", rng=None,
             dropout_rate: float = 0.5):
    """One flattened feature vector -> (class probabilities, label).

    Class order is (Real, Fake); a tie predicts Real, so a fake verdict
    needs strictly greater probability.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError(f"features must be a vector, got shape {x.shape}")
    logits = head_apply(head, Tensor(x[None, :]), dropout_rate, mode, rng)
    probs = nncore.softmax(logits.data[0])
    label = Label.FAKE if probs[1] > probs[0] else Label.REAL
    return probs, label


# ---------------------------------------------------------------------------
# the assembled model


@dataclass
class Model:
    variant: str
    slcnn: SlcnnModel
    integrator: list
    head: ClassifierHead
    rows: int
    k: int
    dropout_rate: float

    @property
    def explicit_width(self):
        return len(VARIANTS[self.variant])

    def parameters(self) -> dict:
        """Name -> leaf Tensor, in a stable order (drives Adam slots and
        checkpoints)."""
        params = {}
        for i, blk in enumerate(self.slcnn.blocks):
            params[f"slcnn.b{i}.conv1.w"] = blk.conv1_w
            params[f"slcnn.b{i}.conv1.b"] = blk.conv1_b
            params[f"slcnn.b{i}.conv2.w"] = blk.conv2_w
            params[f"slcnn.b{i}.conv2.b"] = blk.conv2_b
        for i, blk in enumerate(self.integrator):
            params[f"integrator.b{i}.conv1.w"] = blk.conv1_w
            params[f"integrator.b{i}.conv1.b"] = blk.conv1_b
            params[f"integrator.b{i}.conv2.w"] = blk.conv2_w
            params[f"integrator.b{i}.conv2.b"] = blk.conv2_b
        for name, t in zip(("w1", "b1", "w2", "b2", "w3", "b3"), self.head.tensors()):
            params[f"head.{name}"] = t
        return params

    def param_tensors(self) -> list:
        return list(self.parameters().values())


def init_model(variant: str, t_s: int, t_d: int, embed_dim: int, rng,
               k: int = 8, dense_width: int = 64, dropout_rate: float = 0.5) -> Model:
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    rows = t_d + 1
    net = init_slcnn(t_s, embed_dim, k, rng)
    m = len(VARIANTS[variant])
    if m:
        integrator = init_hcb_stack(k + m, 1, k, rng)
    else:
        integrator = []
    head = init_head(rows * k, dense_width, rng)
    return Model(variant=variant, slcnn=net, integrator=integrator, head=head,
                 rows=rows, k=k, dropout_rate=dropout_rate)


def forward_batch(model: Model, x: np.ndarray, explicit, mode: str, rng=None) -> Tensor:
    """Batched articles (B, rows, t_s, E) (+ explicit (B, m)) -> logits (B, 2)."""
    if x.shape[1] != model.rows:
        raise ValueError(f"batch has {x.shape[1]} rows, model expects {model.rows}")
    latent = slcnn_apply(model.slcnn, Tensor(x))
    if model.integrator:
        if explicit is None or explicit.shape[1] != model.explicit_width:
            raise ValueError(f"variant {model.variant!r} needs explicit width {model.explicit_width}")
        reduced = integrator_apply(model.integrator, integrate_batch(latent, explicit))
    else:
        reduced = latent
    flat = nncore.reshape(reduced, (x.shape[0], model.rows * model.k))
    return head_apply(model.head, flat, model.dropout_rate, mode, rng)


def loss_batch(model: Model, x, explicit, labels, mode: str, rng=None):
    """Forward plus softmax cross-entropy; labels are 0=Real / 1=Fake ints.
    Returns (probs ndarray, scalar loss Tensor)."""
    logits = forward_batch(model, x, explicit, mode, rng)
    return nncore.softmax_xent_batch(logits, labels)


def predict_batch(model: Model, x, explicit):
    """Eval-mode predictions: (probs (B, 2), int labels (B,)); ties go Real."""
    logits = forward_batch(model, x, explicit, "eval")
    probs = nncore.softmax(logits.data)
    preds = (probs[:, 1] > probs[:, 0]).astype(np.int64)
    return probs, preds
